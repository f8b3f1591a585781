//! Seeded synthetic box rooms with posed objects, observed depth, soft maps
//! and a candidate pool.

use std::path::Path;

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alignment::{fitting_cost, FitWeights};
use crate::composition::{CandidateSpec, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::geometry::{render_depth, CameraIntrinsics, DepthImage, Mask, PoseTransform, ProbMap, TriangleMesh};
use crate::io::{
    save_labels, save_pool, save_scene, write_pfm_depth, write_pfm_prob, CandidatePool, PoolEntry, SceneFile,
    SceneObject,
};
use crate::layout::{render_layouts, Category, LayoutPlane, PixelLabelProbs, Rect2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    Box,
    Cylinder,
    LShape,
    Chair,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 4] = [ShapeKind::Box, ShapeKind::Cylinder, ShapeKind::LShape, ShapeKind::Chair];

    pub fn class_id(self) -> usize {
        match self {
            ShapeKind::Box => 1,
            ShapeKind::Cylinder => 2,
            ShapeKind::LShape => 3,
            ShapeKind::Chair => 4,
        }
    }

    fn sample(self, rng: &mut ChaCha8Rng) -> TriangleMesh {
        match self {
            ShapeKind::Box => TriangleMesh::standing_box(
                rng.gen_range(0.4..1.2),
                rng.gen_range(0.3..0.8),
                rng.gen_range(0.4..1.2),
            ),
            ShapeKind::Cylinder => {
                TriangleMesh::standing_cylinder(rng.gen_range(0.15..0.35), rng.gen_range(0.4..1.0), 16)
            }
            ShapeKind::LShape => TriangleMesh::standing_l_shape(
                rng.gen_range(0.5..1.0),
                rng.gen_range(0.4..0.7),
                rng.gen_range(0.4..0.9),
                rng.gen_range(0.3..0.6),
            ),
            ShapeKind::Chair => TriangleMesh::standing_chair(
                rng.gen_range(0.4..0.55),
                rng.gen_range(0.4..0.55),
                rng.gen_range(0.4..0.5),
                rng.gen_range(0.35..0.5),
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub hfov_deg: f64,
    /// Room extent along x, z (front wall distance) and y, in meters.
    pub room_width: [f64; 2],
    pub room_depth: [f64; 2],
    pub room_height: [f64; 2],
    /// Camera height above the floor.
    pub camera_height: [f64; 2],
    pub object_count: [usize; 2],
    pub shapes: Vec<ShapeKind>,
    /// Largest yaw error of a ground-truth candidate, degrees.
    pub yaw_perturb_deg: f64,
    /// Largest translation error of a ground-truth candidate, meters.
    pub translation_perturb: f64,
    /// A candidate's scale is the true scale divided by one of these.
    pub scale_ratios: Vec<f64>,
    pub distractors: usize,
    /// Fraction of pixels whose observed depth is dropped.
    pub missing_fraction: f64,
    /// Box filter width applied to the object mask to get the object
    /// probability map.
    pub pobject_blur: usize,
    pub pobject_clamp: [f64; 2],
    /// Range of the probability given to a candidate's own class.
    pub true_class_prob: [f64; 2],
    /// Probability given to the true surface label of each pixel.
    pub label_confidence: f64,
    /// Cut a door into the front wall, with a corridor wall behind it.
    pub doorway: bool,
    pub max_retries: usize,
    /// Every object and layout surface must show at least this many pixels.
    pub min_visible_pixels: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            seed: 0,
            width: 160,
            height: 120,
            hfov_deg: 70.0,
            room_width: [3.5, 5.0],
            room_depth: [4.5, 6.0],
            room_height: [2.5, 3.0],
            camera_height: [1.2, 1.6],
            object_count: [1, 4],
            shapes: ShapeKind::ALL.to_vec(),
            yaw_perturb_deg: 20.0,
            translation_perturb: 0.2,
            scale_ratios: vec![1.0, 0.9],
            distractors: 2,
            missing_fraction: 0.02,
            pobject_blur: 5,
            pobject_clamp: [0.05, 0.95],
            true_class_prob: [0.5, 0.95],
            label_confidence: 0.85,
            doorway: false,
            max_retries: 100,
            min_visible_pixels: 30,
        }
    }
}

impl SynthParams {
    /// Ground-truth candidates only, placed exactly.
    pub fn unperturbed(mut self) -> Self {
        self.yaw_perturb_deg = 0.0;
        self.translation_perturb = 0.0;
        self.scale_ratios = vec![1.0];
        self.distractors = 0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("synth: {what}")));
        for (name, r) in [
            ("room_width", self.room_width),
            ("room_depth", self.room_depth),
            ("room_height", self.room_height),
            ("camera_height", self.camera_height),
            ("pobject_clamp", self.pobject_clamp),
            ("true_class_prob", self.true_class_prob),
        ] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                return bad(&format!("{name} must be an ordered finite range"));
            }
        }
        if self.object_count[0] > self.object_count[1] {
            return bad("object_count must be an ordered range");
        }
        if self.room_width[0] < 1.5 || self.room_depth[0] < 3.0 {
            return bad("room too small for placing objects");
        }
        if self.camera_height[1] >= self.room_height[0] || self.camera_height[0] <= 0.0 {
            return bad("camera must sit between floor and ceiling");
        }
        if self.doorway && self.room_height[0] < 2.2 {
            return bad("doorway needs a room at least 2.2 m high");
        }
        if self.shapes.is_empty() && (self.object_count[1] > 0 || self.distractors > 0) {
            return bad("shape vocabulary is empty");
        }
        if self.scale_ratios.is_empty() || self.scale_ratios.iter().any(|r| !(*r > 0.0)) {
            return bad("scale ratios must be positive");
        }
        if !(0.0..1.0).contains(&self.missing_fraction) {
            return bad("missing_fraction must be in [0, 1)");
        }
        if !(0.0 < self.pobject_clamp[0] && self.pobject_clamp[1] < 1.0) {
            return bad("pobject_clamp must lie inside (0, 1)");
        }
        if !(0.0 < self.true_class_prob[0] && self.true_class_prob[1] <= 1.0) {
            return bad("true_class_prob must lie in (0, 1]");
        }
        if !(0.25..=1.0).contains(&self.label_confidence) {
            return bad("label_confidence must be in [0.25, 1]");
        }
        if self.yaw_perturb_deg < 0.0 || self.translation_perturb < 0.0 {
            return bad("perturbations must be non-negative");
        }
        CameraIntrinsics::from_fov(self.width, self.height, self.hfov_deg).map(|_| ())
    }
}

/// Everything generated for one synthetic scene.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthScene {
    /// Ground truth, with references to the files written by [`SynthScene::write`].
    pub scene: SceneFile,
    /// Observed depth, with missing pixels.
    pub depth: DepthImage,
    /// Noise-free depth.
    pub clean_depth: DepthImage,
    pub p_object: ProbMap,
    pub labels: PixelLabelProbs,
    pub pool: CandidatePool,
    /// Surface behind the doorway, which is not part of the room layout.
    pub corridor: Option<LayoutPlane>,
}

pub const SCENE_FILE: &str = "scene.json";
pub const POOL_FILE: &str = "pool.json";
pub const DEPTH_FILE: &str = "depth.pfm";
pub const POBJECT_FILE: &str = "p_object.pfm";
pub const LABELS_FILE: &str = "labels.json";

impl SynthScene {
    /// Writes the scene, pool, depth, object probability and label files
    /// (plus mesh and mask side files) into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_scene(&self.scene, &dir.join(SCENE_FILE))?;
        save_pool(&self.pool, &dir.join(POOL_FILE))?;
        write_pfm_depth(&self.depth, &dir.join(DEPTH_FILE))?;
        write_pfm_prob(&self.p_object, &dir.join(POBJECT_FILE))?;
        save_labels(&self.labels, &dir.join(LABELS_FILE))
    }
}

struct Room {
    left: f64,
    right: f64,
    front: f64,
    floor: f64,
    ceiling: f64,
}

const BACK: f64 = -0.5;
const DOOR_WIDTH: f64 = 0.9;
const DOOR_HEIGHT: f64 = 2.0;
const CORRIDOR_DEPTH: f64 = 1.5;

impl Room {
    fn sample(p: &SynthParams, rng: &mut ChaCha8Rng) -> Room {
        let width = uniform(rng, p.room_width);
        let left = -width * rng.gen_range(0.4..=0.6);
        let front = uniform(rng, p.room_depth);
        let height = uniform(rng, p.room_height);
        let floor = uniform(rng, p.camera_height);
        Room {
            left,
            right: left + width,
            front,
            floor,
            ceiling: floor - height,
        }
    }

    fn layouts(&self) -> Vec<LayoutPlane> {
        let plane = |category, offset, min, max| LayoutPlane {
            category,
            offset,
            extent: Rect2::new(min, max),
            holes: Vec::new(),
            score: 0.0,
        };
        vec![
            plane(Category::Floor, self.floor, [self.left, BACK], [self.right, self.front]),
            plane(
                Category::Ceiling,
                self.ceiling,
                [self.left, BACK],
                [self.right, self.front],
            ),
            plane(
                Category::LeftWall,
                self.left,
                [self.ceiling, BACK],
                [self.floor, self.front],
            ),
            plane(
                Category::RightWall,
                self.right,
                [self.ceiling, BACK],
                [self.floor, self.front],
            ),
            plane(
                Category::FrontWall,
                self.front,
                [self.left, self.ceiling],
                [self.right, self.floor],
            ),
        ]
    }
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.gen_range(r[0]..r[1])
    }
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T]) -> T {
    items[rng.gen_range(0..items.len())]
}

struct Placed {
    kind: ShapeKind,
    mesh: TriangleMesh,
    pose: PoseTransform,
}

fn footprint_radius(mesh: &TriangleMesh, scale: f64) -> f64 {
    mesh.vertices().iter().map(|v| v.x.hypot(v.z)).fold(0.0, f64::max) * scale
}

/// Samples a shape standing on the floor somewhere in view, away from the
/// walls.
fn sample_standing(p: &SynthParams, room: &Room, k: &CameraIntrinsics, rng: &mut ChaCha8Rng) -> Option<Placed> {
    let kind = pick(rng, &p.shapes);
    let mesh = kind.sample(rng);
    let yaw = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    let r = footprint_radius(&mesh, 1.0);
    let (x0, x1) = (room.left + r + 0.1, room.right - r - 0.1);
    let (z0, z1) = (1.2 + r, room.front - r - 0.1);
    if x0 >= x1 || z0 >= z1 {
        return None;
    }
    let x = rng.gen_range(x0..x1);
    let z = rng.gen_range(z0..z1);
    let (lo, hi) = mesh.bounds();
    let mid = Vector3::new(x, room.floor + (lo.y + hi.y) / 2.0, z);
    let (u, v) = k.project(&mid)?;
    let margin = 0.1 * k.width as f64;
    if u < margin || u > k.width as f64 - 1.0 - margin || v < 0.0 || v > k.height as f64 - 1.0 {
        return None;
    }
    let pose = PoseTransform::new(yaw, 1.0, Vector3::new(x, room.floor, z)).ok()?;
    Some(Placed { kind, mesh, pose })
}

/// Class distribution with `true_p` on `class` and the rest spread evenly.
fn confusion(class: usize, true_p: f64) -> Vec<f64> {
    let rest = (1.0 - true_p) / (NUM_CLASSES - 1) as f64;
    (0..NUM_CLASSES)
        .map(|c| if c == class { true_p } else { rest })
        .collect()
}

struct Composite {
    depth: DepthImage,
    /// `Some(Ok(i))` for object `i`, `Some(Err(l))` for layout `l`.
    owner: Vec<Option<std::result::Result<usize, usize>>>,
}

fn composite(objects: &[Placed], layouts: &[LayoutPlane], k: &CameraIntrinsics) -> Composite {
    let lr = render_layouts(layouts, k);
    let mut depth = lr.depth.clone();
    let mut owner: Vec<_> = lr.owner.iter().map(|o| o.map(Err)).collect();
    for (i, o) in objects.iter().enumerate() {
        let r = render_depth(&o.mesh, &o.pose, k);
        for j in 0..depth.len() {
            if let Some(d) = r.depth.at(j) {
                if depth.at(j).is_none_or(|cur| d < cur) {
                    depth.set_at(j, Some(d));
                    owner[j] = Some(Ok(i));
                }
            }
        }
    }
    Composite { depth, owner }
}

/// Generates a room with objects on the floor, the observed depth, the
/// object probability and surface label maps, and a candidate pool of the
/// perturbed ground-truth objects followed by distractors.
///
/// The camera looks along +z with the room axes aligned to the camera frame.
/// Identical parameters give bit-identical output.
pub fn synth_scene(p: &SynthParams) -> Result<SynthScene> {
    p.validate()?;
    let k = CameraIntrinsics::from_fov(p.width, p.height, p.hfov_deg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    for _ in 0..p.max_retries.max(1) {
        if let Some(scene) = attempt(p, &k, &mut rng)? {
            return Ok(scene);
        }
    }
    Err(Error::InfeasibleScene(format!(
        "no valid placement for seed {} after {} attempts",
        p.seed, p.max_retries
    )))
}

fn attempt(p: &SynthParams, k: &CameraIntrinsics, rng: &mut ChaCha8Rng) -> Result<Option<SynthScene>> {
    let room = Room::sample(p, rng);
    let mut layouts = room.layouts();

    let mut corridor = None;
    let mut door_px = None;
    if p.doorway {
        let half_view = room.front * (p.hfov_deg.to_radians() / 2.0).tan() * 0.6;
        let lo = (room.left + 0.3 + DOOR_WIDTH / 2.0).max(-half_view + DOOR_WIDTH / 2.0);
        let hi = (room.right - 0.3 - DOOR_WIDTH / 2.0).min(half_view - DOOR_WIDTH / 2.0);
        if lo >= hi {
            return Ok(None);
        }
        let xc = rng.gen_range(lo..hi);
        let hole = Rect2::new(
            [xc - DOOR_WIDTH / 2.0, room.floor - DOOR_HEIGHT],
            [xc + DOOR_WIDTH / 2.0, room.floor],
        );
        layouts[4].holes.push(hole);
        corridor = Some(LayoutPlane {
            category: Category::FrontWall,
            offset: room.front + CORRIDOR_DEPTH,
            extent: Rect2::new(
                [hole.min[0] - 2.0, room.floor - 3.0],
                [hole.max[0] + 2.0, room.floor + 1.5],
            ),
            holes: Vec::new(),
            score: 0.0,
        });
        door_px = Some(hole);
    }

    let n = if p.object_count[0] == p.object_count[1] {
        p.object_count[0]
    } else {
        rng.gen_range(p.object_count[0]..=p.object_count[1])
    };
    let mut objects: Vec<Placed> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut placed = None;
        for _ in 0..50 {
            let Some(c) = sample_standing(p, &room, k, rng) else {
                continue;
            };
            let r = footprint_radius(&c.mesh, 1.0);
            let clear = objects.iter().all(|o| {
                let d = (o.pose.t() - c.pose.t()).xz().norm();
                d > r + footprint_radius(&o.mesh, o.pose.scale) + 0.05
            });
            if clear {
                placed = Some(c);
                break;
            }
        }
        match placed {
            Some(c) => objects.push(c),
            None => return Ok(None),
        }
    }

    let mut all_layouts = layouts.clone();
    all_layouts.extend(corridor.clone());
    let comp = composite(&objects, &all_layouts, k);

    let mut visible = vec![0usize; objects.len()];
    let mut layout_visible = vec![0usize; all_layouts.len()];
    for o in comp.owner.iter().flatten() {
        match o {
            Ok(i) => visible[*i] += 1,
            Err(l) => layout_visible[*l] += 1,
        }
    }
    if visible
        .iter()
        .chain(&layout_visible[..layouts.len()])
        .any(|&c| c < p.min_visible_pixels)
    {
        return Ok(None);
    }
    if let Some(hole) = door_px {
        // keep the doorway clear of objects
        for v in 0..k.height {
            for u in 0..k.width {
                let ray = k.ray(u as f64, v as f64);
                let Some((_, c)) = layouts[4].ray_hit_unbounded(&ray) else {
                    continue;
                };
                if hole.contains(c) && matches!(comp.owner[v * k.width + u], Some(Ok(_))) {
                    return Ok(None);
                }
            }
        }
    }

    let clean_depth = comp.depth.map(|d| d as f32 as f64);
    let mut depth = clean_depth.clone();
    if p.missing_fraction > 0.0 {
        for j in 0..depth.len() {
            if rng.gen_bool(p.missing_fraction) {
                depth.set_at(j, None);
            }
        }
    }

    let object_mask: Vec<bool> = comp.owner.iter().map(|o| matches!(o, Some(Ok(_)))).collect();
    let p_object = blur_mask(&object_mask, k.width, k.height, p.pobject_blur, p.pobject_clamp)?;
    let labels = surface_labels(&comp, &all_layouts, k, p.label_confidence)?;

    let mut scene = SceneFile::new(*k);
    scene.layouts = layouts;
    scene.depth_ref = Some(DEPTH_FILE.into());
    scene.p_object_ref = Some(POBJECT_FILE.into());
    scene.labels_ref = Some(LABELS_FILE.into());

    let mut entries = Vec::new();
    for (i, o) in objects.iter().enumerate() {
        let region = Mask::from_vec(
            k.width,
            k.height,
            comp.owner.iter().map(|w| *w == Some(Ok(i))).collect(),
        )?;
        scene.objects.push(SceneObject {
            id: i as u64,
            mesh_ref: format!("meshes/gt_{i}.obj"),
            mesh: o.mesh.clone(),
            pose: o.pose,
            class_id: o.kind.class_id(),
            region_ref: Some(format!("masks/gt_{i}.png")),
            region: Some(region.clone()),
        });

        let pose = perturb(p, &o.pose, rng)?;
        let true_p = uniform(rng, p.true_class_prob);
        let non_object = rng.gen_range(0.02..0.2);
        entries.push(pool_entry(i as u64, o, pose, region, true_p, non_object, &depth, k)?);
    }

    for d in 0..p.distractors {
        let id = (objects.len() + d) as u64;
        let mut made = None;
        for _ in 0..50 {
            let Some(c) = sample_standing(p, &room, k, rng) else {
                continue;
            };
            let region = render_depth(&c.mesh, &c.pose, k).mask;
            if region.count() > 0 {
                made = Some((c, region));
                break;
            }
        }
        let Some((c, region)) = made else {
            return Ok(None);
        };
        let true_p = uniform(rng, p.true_class_prob);
        let non_object = rng.gen_range(0.1..0.6);
        let pose = c.pose;
        entries.push(pool_entry(id, &c, pose, region, true_p, non_object, &depth, k)?);
    }

    Ok(Some(SynthScene {
        scene,
        depth,
        clean_depth,
        p_object,
        labels,
        pool: CandidatePool { entries },
        corridor,
    }))
}

fn perturb(p: &SynthParams, gt: &PoseTransform, rng: &mut ChaCha8Rng) -> Result<PoseTransform> {
    let dyaw = if p.yaw_perturb_deg > 0.0 {
        rng.gen_range(-p.yaw_perturb_deg..=p.yaw_perturb_deg).to_radians()
    } else {
        0.0
    };
    let dt = if p.translation_perturb > 0.0 {
        let dir = loop {
            let v = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let n: f64 = v.norm();
            if n > 1e-3 && n <= 1.0 {
                break v / n;
            }
        };
        dir * rng.gen_range(0.0..=p.translation_perturb)
    } else {
        Vector3::zeros()
    };
    let ratio = pick(rng, &p.scale_ratios);
    PoseTransform::new(gt.yaw + dyaw, gt.scale / ratio, gt.t() + dt)
}

#[allow(clippy::too_many_arguments)]
fn pool_entry(
    id: u64,
    shape: &Placed,
    pose: PoseTransform,
    region: Mask,
    true_p: f64,
    non_object_prob: f64,
    observed: &DepthImage,
    k: &CameraIntrinsics,
) -> Result<PoolEntry> {
    let render = render_depth(&shape.mesh, &pose, k);
    let fitting_energy = fitting_cost(&render, observed, &region, &FitWeights::RETRIEVAL)?;
    let class_id = shape.kind.class_id();
    Ok(PoolEntry {
        spec: CandidateSpec {
            id,
            mesh: shape.mesh.clone(),
            pose,
            region,
            class_id,
            class_probs: confusion(class_id, true_p),
            non_object_prob,
            fitting_energy,
            support_height: Some(shape.pose.translation[1]),
        },
        mesh_ref: format!("meshes/cand_{id}.obj"),
        region_ref: format!("masks/cand_{id}.png"),
    })
}

/// Box-filtered mask, averaged over the in-image part of each window,
/// clamped and rounded to single precision.
fn blur_mask(mask: &[bool], w: usize, h: usize, size: usize, clamp: [f64; 2]) -> Result<ProbMap> {
    let r = (size.max(1) - 1) / 2;
    let data = (0..w * h)
        .map(|j| {
            let (u, v) = (j % w, j / w);
            let (mut on, mut n) = (0usize, 0usize);
            for vv in v.saturating_sub(r)..=(v + r).min(h - 1) {
                for uu in u.saturating_sub(r)..=(u + r).min(w - 1) {
                    n += 1;
                    on += mask[vv * w + uu] as usize;
                }
            }
            (on as f64 / n as f64).clamp(clamp[0], clamp[1]) as f32 as f64
        })
        .collect();
    ProbMap::from_vec(w, h, data)
}

fn surface_labels(
    comp: &Composite,
    layouts: &[LayoutPlane],
    k: &CameraIntrinsics,
    confidence: f64,
) -> Result<PixelLabelProbs> {
    let rest = (1.0 - confidence) / 3.0;
    let probs = comp
        .owner
        .iter()
        .map(|o| {
            let label = match o {
                Some(Ok(_)) => PixelLabelProbs::OBJECT,
                Some(Err(l)) => match layouts[*l].category {
                    Category::Floor => PixelLabelProbs::FLOOR,
                    Category::Ceiling => PixelLabelProbs::CEILING,
                    _ => PixelLabelProbs::WALL,
                },
                None => return [0.25; 4],
            };
            let mut p = [rest; 4];
            p[label] = confidence;
            p
        })
        .collect();
    PixelLabelProbs::new(k.width, k.height, probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthParams {
        SynthParams {
            width: 64,
            height: 48,
            min_visible_pixels: 8,
            ..SynthParams::default()
        }
    }

    #[test]
    fn same_seed_same_scene() {
        let p = SynthParams { seed: 7, ..small() };
        let a = synth_scene(&p).unwrap();
        let b = synth_scene(&p).unwrap();
        assert!(a.depth.bit_eq(&b.depth));
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let a = synth_scene(&SynthParams { seed: 1, ..small() }).unwrap();
        let b = synth_scene(&SynthParams { seed: 2, ..small() }).unwrap();
        assert_ne!(a.scene, b.scene);
    }

    #[test]
    fn pool_lists_truth_then_distractors() {
        let p = SynthParams { seed: 3, ..small() };
        let s = synth_scene(&p).unwrap();
        assert_eq!(s.pool.entries.len(), s.scene.objects.len() + p.distractors);
        for (i, e) in s.pool.entries.iter().enumerate() {
            assert_eq!(e.spec.id, i as u64);
            e.spec.validate().unwrap();
        }
    }

    #[test]
    fn unperturbed_candidates_match_truth() {
        let s = synth_scene(&SynthParams { seed: 4, ..small() }.unperturbed()).unwrap();
        for (o, e) in s.scene.objects.iter().zip(&s.pool.entries) {
            assert_eq!(o.pose, e.spec.pose);
            assert_eq!(o.mesh, e.spec.mesh);
        }
    }

    #[test]
    fn maps_are_in_range() {
        let p = SynthParams { seed: 5, ..small() };
        let s = synth_scene(&p).unwrap();
        assert!(s.p_object.as_slice().iter().all(|v| (0.05..=0.95).contains(v)));
        s.labels.validate().unwrap();
    }

    #[test]
    fn doorway_cuts_the_front_wall() {
        let s = synth_scene(&SynthParams {
            seed: 6,
            doorway: true,
            ..small()
        })
        .unwrap();
        assert_eq!(s.scene.layouts[4].holes.len(), 1);
        assert!(s.corridor.is_some());
    }

    #[test]
    fn impossible_rooms_fail() {
        let p = SynthParams {
            object_count: [40, 40],
            max_retries: 3,
            ..small()
        };
        assert!(matches!(synth_scene(&p), Err(Error::InfeasibleScene(_))));
    }

    #[test]
    fn inverted_ranges_are_rejected() {
        let p = SynthParams {
            room_width: [5.0, 4.0],
            ..small()
        };
        assert!(p.validate().is_err());
    }
}
