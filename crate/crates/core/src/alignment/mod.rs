//! Depth fitting cost and grid-plus-ICP pose search for candidate shapes.

mod cost;
mod icp;

pub use cost::{fit_terms, fitting_cost, FitTerms, FitWeights};
pub use icp::{icp_translation, IcpParams};

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    backproject, backproject_masked, render_depth, CameraIntrinsics, DepthImage, Mask, PoseTransform, RenderResult,
    TriangleMesh,
};
use crate::kdtree::KdTree;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignParams {
    /// Number of equally spaced yaw offsets over the full turn, starting at
    /// -180 degrees. A value of 1 keeps the initial yaw.
    pub yaw_steps: usize,
    /// Scale revision ratios applied to the initial scale, in search order.
    pub scales: Vec<f64>,
    pub icp: IcpParams,
    /// Rendered model points are subsampled to at most this many for ICP.
    pub max_model_points: usize,
    /// Spacing of the mesh surface samples used to refine the translation.
    pub surface_spacing: f64,
    /// Halvings of the yaw step searched around the best grid branch. Zero
    /// keeps the plain grid.
    pub yaw_refine_levels: usize,
    /// First step (meters) of the pattern search on the fitting cost that
    /// polishes the best branch of each scale. Zero turns it off.
    pub polish_step: f64,
    /// The pattern search stops once its step falls below this.
    pub polish_min_step: f64,
}

impl Default for AlignParams {
    fn default() -> Self {
        AlignParams {
            yaw_steps: 16,
            scales: vec![1.0, 0.9],
            icp: IcpParams::default(),
            max_model_points: 400,
            surface_spacing: 0.01,
            yaw_refine_levels: 0,
            polish_step: 0.008,
            polish_min_step: 0.0005,
        }
    }
}

impl AlignParams {
    /// Yaw offsets (radians) in grid order.
    pub fn yaw_offsets(&self) -> Vec<f64> {
        if self.yaw_steps <= 1 {
            return vec![0.0];
        }
        (0..self.yaw_steps)
            .map(|i| (-180.0 + 360.0 * i as f64 / self.yaw_steps as f64).to_radians())
            .collect()
    }

    /// `(yaw offset, scale ratio)` pairs: yaw ascending, scales in the
    /// configured order within each yaw.
    pub fn grid(&self) -> Vec<(f64, f64)> {
        self.yaw_offsets()
            .into_iter()
            .flat_map(|y| self.scales.iter().map(move |&s| (y, s)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentResult {
    pub pose: PoseTransform,
    pub cost: f64,
    pub render: RenderResult,
}

/// Observation shared by every alignment against one region.
struct RegionTarget<'a> {
    observed: &'a DepthImage,
    region: &'a Mask,
    k: &'a CameraIntrinsics,
    centroid: Vector3<f64>,
    tree: KdTree,
    points: Vec<Vector3<f64>>,
}

impl<'a> RegionTarget<'a> {
    fn new(observed: &'a DepthImage, region: &'a Mask, k: &'a CameraIntrinsics) -> Result<Self> {
        let cloud = backproject_masked(observed, k, Some(region))?;
        let centroid = cloud.centroid().ok_or(Error::EmptyRegion)?;
        Ok(RegionTarget {
            observed,
            region,
            k,
            centroid,
            tree: KdTree::new(cloud.points.clone()),
            points: cloud.points,
        })
    }

    fn evaluate(&self, mesh: &TriangleMesh, pose: PoseTransform, w: &FitWeights) -> Result<AlignmentResult> {
        let render = render_depth(mesh, &pose, self.k);
        let cost = fitting_cost(&render, self.observed, self.region, w)?;
        Ok(AlignmentResult { pose, cost, render })
    }

    /// Translation that moves the visible model's point mass center onto the
    /// region's.
    fn seed_translation(&self, mesh: &TriangleMesh, pose: &PoseTransform) -> Result<Vector3<f64>> {
        let render = render_depth(mesh, pose, self.k);
        let cloud = backproject(&render.depth, self.k)?;
        let model_centroid = match cloud.centroid() {
            Some(c) => c,
            None => {
                let verts = pose.apply_all(mesh.vertices());
                verts.iter().sum::<Vector3<f64>>() / verts.len() as f64
            }
        };
        Ok(pose.t() + (self.centroid - model_centroid))
    }

    fn branch(
        &self,
        mesh: &TriangleMesh,
        pose: PoseTransform,
        params: &AlignParams,
        w: &FitWeights,
    ) -> Result<AlignmentResult> {
        let seed = pose.with_translation(self.seed_translation(mesh, &pose)?);
        let render = render_depth(mesh, &seed, self.k);
        let cloud = backproject(&render.depth, self.k)?;
        if cloud.is_empty() {
            return self.evaluate(mesh, seed, w);
        }
        let stride = cloud.len().div_ceil(params.max_model_points.max(1));
        let pts: Vec<Vector3<f64>> = cloud.points.iter().step_by(stride).copied().collect();
        let delta = icp::icp_with_tree(&pts, &self.tree, Vector3::zeros(), &params.icp);
        let coarse = seed.t() + delta;
        // refine against the dense model surface, moving the region points;
        // the pixel-sampled solution is kept when it fits better
        let posed = PoseTransform {
            translation: [0.0; 3],
            ..seed
        };
        let surface = KdTree::new(surface_samples(mesh, &posed, params.surface_spacing));
        let back = icp::icp_with_tree(&self.points, &surface, -coarse, &params.icp);
        let a = self.evaluate(mesh, seed.with_translation(coarse), w)?;
        let b = self.evaluate(mesh, seed.with_translation(-back), w)?;
        Ok(if b.cost < a.cost { b } else { a })
    }

    /// Compass search over the translation: moves along the best of the six
    /// axis directions while that lowers the cost, halving the step when none
    /// does.
    fn polish(
        &self,
        mesh: &TriangleMesh,
        start: AlignmentResult,
        params: &AlignParams,
        w: &FitWeights,
    ) -> Result<AlignmentResult> {
        let mut best = start;
        let mut step = params.polish_step;
        while step >= params.polish_min_step && step > 0.0 && best.cost > 0.0 {
            let moves: Vec<Vector3<f64>> = (0..6)
                .map(|i| {
                    let mut d = Vector3::zeros();
                    d[i / 2] = if i % 2 == 0 { step } else { -step };
                    d
                })
                .collect();
            let tries = moves
                .iter()
                .map(|d| self.evaluate(mesh, best.pose.with_translation(best.pose.t() + d), w))
                .collect::<Result<Vec<_>>>()?;
            let next = argmin_first(tries);
            if next.cost < best.cost {
                best = next;
            } else {
                step /= 2.0;
            }
        }
        Ok(best)
    }
}

/// Searches yaw offsets times scale ratios around `init`, solving the
/// translation of each branch with ICP seeded from the offset between the
/// region's and the rendered model's point mass centers, and returns the
/// branch with the lowest fitting cost. `init` itself is evaluated as a final
/// fallback so the result never costs more than the starting pose.
///
/// The best branch of each scale is then polished by a compass search on the
/// fitting cost over the translation, which pins down directions that
/// point-to-point ICP only slides along.
///
/// Ties go to the earliest branch in grid order. With
/// `params.yaw_refine_levels > 0` the winner is then searched again at
/// half, quarter, ... of the grid yaw step on either side, over every scale,
/// keeping the incumbent on ties.
pub fn align_model(
    mesh: &TriangleMesh,
    region: &Mask,
    observed: &DepthImage,
    k: &CameraIntrinsics,
    w: &FitWeights,
    init: &PoseTransform,
    params: &AlignParams,
) -> Result<AlignmentResult> {
    init.validate()?;
    w.validate()?;
    k.check_size(observed.width(), observed.height())?;
    let target = RegionTarget::new(observed, region, k)?;
    let grid = params.grid();
    let mut results: Vec<AlignmentResult> = grid
        .par_iter()
        .map(|&(dyaw, s)| {
            let pose = PoseTransform::new(init.yaw + dyaw, init.scale * s, init.t())?;
            target.branch(mesh, pose, params, w)
        })
        .collect::<Result<_>>()?;
    let polished = params
        .scales
        .par_iter()
        .map(|&s| {
            let start = results
                .iter()
                .zip(&grid)
                .filter(|(_, g)| g.1 == s)
                .map(|(r, _)| r.clone())
                .reduce(|a, b| if b.cost < a.cost { b } else { a });
            start.map(|r| target.polish(mesh, r, params, w)).transpose()
        })
        .collect::<Result<Vec<_>>>()?;
    results.extend(polished.into_iter().flatten());
    results.push(target.evaluate(mesh, *init, w)?);
    let mut best = argmin_first(results);
    let mut step = std::f64::consts::TAU / params.yaw_steps.max(1) as f64;
    for _ in 0..params.yaw_refine_levels {
        step /= 2.0;
        let centre = best.pose;
        let mut tries: Vec<AlignmentResult> = [-step, 0.0, step]
            .iter()
            .flat_map(|&dy| params.scales.iter().map(move |&s| (dy, s)))
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&(dy, s)| {
                let pose = PoseTransform::new(centre.yaw + dy, init.scale * s, centre.t())?;
                target.polish(mesh, target.branch(mesh, pose, params, w)?, params, w)
            })
            .collect::<Result<_>>()?;
        tries.insert(0, best);
        best = argmin_first(tries);
    }
    Ok(best)
}

/// Points on every triangle of the posed mesh, about `spacing` apart.
fn surface_samples(mesh: &TriangleMesh, pose: &PoseTransform, spacing: f64) -> Vec<Vector3<f64>> {
    let verts = pose.apply_all(mesh.vertices());
    let mut out = Vec::new();
    for t in mesh.triangles() {
        let [a, b, c] = t.map(|i| verts[i as usize]);
        let longest = (b - a).norm().max((c - a).norm()).max((c - b).norm());
        let n = ((longest / spacing).ceil() as usize).max(1);
        for i in 0..=n {
            for j in 0..=n - i {
                let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                out.push(a + (b - a) * u + (c - a) * v);
            }
        }
    }
    out
}

fn argmin_first(results: Vec<AlignmentResult>) -> AlignmentResult {
    let mut best: Option<AlignmentResult> = None;
    for r in results {
        if best.as_ref().is_none_or(|b| r.cost < b.cost) {
            best = Some(r);
        }
    }
    best.expect("non-empty grid")
}

/// Pre-ICP cost of a mesh: the best fitting cost over the yaw grid at the
/// mass-center seed translation, initial scale.
pub fn orientation_cost(
    mesh: &TriangleMesh,
    region: &Mask,
    observed: &DepthImage,
    k: &CameraIntrinsics,
    w: &FitWeights,
    init: &PoseTransform,
    params: &AlignParams,
) -> Result<f64> {
    let target = RegionTarget::new(observed, region, k)?;
    let costs: Vec<f64> = params
        .yaw_offsets()
        .par_iter()
        .map(|&dyaw| {
            let pose = PoseTransform::new(init.yaw + dyaw, init.scale, init.t())?;
            let seed = pose.with_translation(target.seed_translation(mesh, &pose)?);
            Ok(target.evaluate(mesh, seed, w)?.cost)
        })
        .collect::<Result<_>>()?;
    Ok(costs.into_iter().fold(f64::INFINITY, f64::min))
}

/// Aligns several shapes to one region and returns `(shape index, result)`
/// sorted by cost, then index. With `prune_top = Some(n)` only the `n` shapes
/// with the lowest [`orientation_cost`] receive the full search.
#[allow(clippy::too_many_arguments)]
pub fn align_batch(
    meshes: &[TriangleMesh],
    region: &Mask,
    observed: &DepthImage,
    k: &CameraIntrinsics,
    w: &FitWeights,
    init: &PoseTransform,
    params: &AlignParams,
    prune_top: Option<usize>,
) -> Result<Vec<(usize, AlignmentResult)>> {
    let mut chosen: Vec<usize> = (0..meshes.len()).collect();
    if let Some(n) = prune_top {
        let mut scored: Vec<(f64, usize)> = chosen
            .iter()
            .map(|&i| Ok((orientation_cost(&meshes[i], region, observed, k, w, init, params)?, i)))
            .collect::<Result<_>>()?;
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        chosen = scored.into_iter().take(n).map(|(_, i)| i).collect();
    }
    let mut out: Vec<(usize, AlignmentResult)> = chosen
        .into_iter()
        .map(|i| Ok((i, align_model(&meshes[i], region, observed, k, w, init, params)?)))
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| a.1.cost.total_cmp(&b.1.cost).then(a.0.cmp(&b.0)));
    Ok(out)
}
