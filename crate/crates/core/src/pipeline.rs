//! The end-to-end stages over scene files: align a candidate pool, propose a
//! layout, compose a scene and evaluate it. The command-line tool runs the
//! same functions one stage per invocation.

use std::collections::BTreeMap;

use crate::alignment::{align_model, fitting_cost, FitWeights};
use crate::composition::{
    compose_scene_traced, prune_proposals, Candidate, PruneParams, SceneHypothesis, SearchTrace, SelectionProblem,
    SelectionWeights,
};
use crate::config::EvalParams;
use crate::error::{Error, Result};
use crate::evaluation::{
    coverage_metrics, layout_depth_error, layout_pixel_error, occupancy_metrics, relative_depth_error, voxelize_scene,
    GridFrame, InstanceLabels, MetricReport,
};
use crate::geometry::{render_depth, render_depth_range, CameraIntrinsics, DepthImage, ProbMap};
use crate::io::{CandidatePool, SceneFile, SceneObject};
use crate::layout::{propose_layout, render_layouts, LayoutParams, LayoutPlane, PixelLabelProbs};

/// Aligns every pool entry to its own region, starting from its pose.
/// Entries whose region has no observed depth keep their pose; every entry's
/// fitting energy is recomputed under `w`.
pub fn align_pool(
    pool: &CandidatePool,
    observed: &DepthImage,
    k: &CameraIntrinsics,
    w: &FitWeights,
    params: &crate::alignment::AlignParams,
) -> Result<CandidatePool> {
    let mut out = pool.clone();
    for e in &mut out.entries {
        let s = &mut e.spec;
        match align_model(&s.mesh, &s.region, observed, k, w, &s.pose, params) {
            Ok(r) => {
                s.pose = r.pose;
                s.fitting_energy = r.cost;
            }
            Err(Error::EmptyRegion) => {
                s.fitting_energy = fitting_cost(&render_depth(&s.mesh, &s.pose, k), observed, &s.region, w)?;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

pub fn detect_layout(
    depth: &DepthImage,
    k: &CameraIntrinsics,
    labels: &PixelLabelProbs,
    params: &LayoutParams,
) -> Result<Vec<LayoutPlane>> {
    propose_layout(depth, k, labels, params)
}

#[derive(Clone, Debug)]
pub struct Composition {
    /// Selected objects and layouts, carrying over the input's references.
    pub scene: SceneFile,
    pub hypothesis: SceneHypothesis,
    pub trace: SearchTrace,
    /// Ids of the pool entries that entered the search.
    pub considered: Vec<u64>,
}

/// Chooses objects from `pool` and layouts from `base.layouts` to explain
/// the observed depth. With `prune` the pool is first reduced per region.
pub fn compose(
    base: &SceneFile,
    pool: &CandidatePool,
    observed: &DepthImage,
    p_object: &ProbMap,
    w: &SelectionWeights,
    prune: Option<&PruneParams>,
) -> Result<Composition> {
    let k = base.camera;
    let specs = pool.specs();
    let specs = match prune {
        Some(p) => prune_proposals(&specs, p, w),
        None => specs,
    };
    let candidates: Vec<Candidate> = specs
        .into_iter()
        .map(|s| Candidate::new(s, &k))
        .collect::<Result<_>>()?;
    let problem = SelectionProblem::new(&candidates, &base.layouts, observed, p_object, &k, w)?;
    let (hypothesis, trace) = compose_scene_traced(&problem, w.greedy_depth_factor, w.swap_subset);

    let refs: BTreeMap<u64, (&str, &str)> = pool
        .entries
        .iter()
        .map(|e| (e.spec.id, (e.mesh_ref.as_str(), e.region_ref.as_str())))
        .collect();
    let mut scene = SceneFile {
        layouts: Vec::new(),
        objects: Vec::new(),
        ..base.clone()
    };
    for (c, _) in candidates.iter().zip(hypothesis.objects()).filter(|(_, s)| **s) {
        let (mesh_ref, region_ref) = refs[&c.id()];
        scene.objects.push(SceneObject {
            id: c.id(),
            mesh_ref: mesh_ref.to_string(),
            mesh: c.spec.mesh.clone(),
            pose: c.spec.pose,
            class_id: c.spec.class_id,
            region_ref: Some(region_ref.to_string()),
            region: Some(c.spec.region.clone()),
        });
    }
    for (l, _) in base.layouts.iter().zip(hypothesis.layouts()).filter(|(_, s)| **s) {
        scene.layouts.push(l.clone());
    }
    Ok(Composition {
        scene,
        hypothesis,
        trace,
        considered: candidates.iter().map(|c| c.id()).collect(),
    })
}

/// Front-most object per pixel as instance labels, instance `i + 1` for
/// object `i`.
pub fn instance_labels(scene: &SceneFile) -> InstanceLabels {
    let k = &scene.camera;
    let mut depth = vec![f64::INFINITY; k.num_pixels()];
    let mut instance = vec![0u32; k.num_pixels()];
    let mut classes = BTreeMap::new();
    for (i, o) in scene.objects.iter().enumerate() {
        let id = i as u32 + 1;
        classes.insert(id, o.class_id);
        let r = render_depth(&o.mesh, &o.pose, k);
        for j in 0..depth.len() {
            if let Some(d) = r.depth.at(j) {
                if d < depth[j] {
                    depth[j] = d;
                    instance[j] = id;
                }
            }
        }
    }
    InstanceLabels {
        width: k.width,
        height: k.height,
        instance,
        classes,
    }
}

/// Depth render of all objects and layouts of a scene.
pub fn scene_depth(scene: &SceneFile) -> DepthImage {
    let k = &scene.camera;
    let mut depth = render_layouts(&scene.layouts, k).depth;
    for o in &scene.objects {
        let r = render_depth(&o.mesh, &o.pose, k);
        for j in 0..depth.len() {
            if let Some(d) = r.depth.at(j) {
                if depth.at(j).is_none_or(|cur| d < cur) {
                    depth.set_at(j, Some(d));
                }
            }
        }
    }
    depth
}

/// Voxel occupancy, layout, segmentation and depth metrics of `pred`
/// against `gt`. The evaluated volume is bounded by the ground-truth layout.
pub fn evaluate(
    pred: &SceneFile,
    gt: &SceneFile,
    observed: Option<&DepthImage>,
    params: &EvalParams,
) -> Result<MetricReport> {
    params.validate()?;
    if pred.camera != gt.camera {
        return Err(Error::InvalidInput("predicted and ground-truth cameras differ".into()));
    }
    let k = &gt.camera;
    let mut report = MetricReport::default();

    let frame = GridFrame::enclosing(&gt.layouts, k, params.voxel_resolution, params.max_depth)?;
    let ranges = |s: &SceneFile| -> Vec<_> {
        s.objects
            .iter()
            .map(|o| render_depth_range(&o.mesh, &o.pose, k))
            .collect()
    };
    let pred_grid = voxelize_scene(&ranges(pred), &pred.layouts, k, &frame, &gt.layouts)?;
    let gt_grid = voxelize_scene(&ranges(gt), &gt.layouts, k, &frame, &gt.layouts)?;
    report.merge("voxel", &occupancy_metrics(&pred_grid, &gt_grid, params.tolerance)?);

    report.merge("layout", &layout_pixel_error(&pred.layouts, &gt.layouts, observed, k)?);
    report.merge("layout", &layout_depth_error(&pred.layouts, &gt.layouts, observed, k)?);
    report.merge(
        "segmentation",
        &coverage_metrics(&instance_labels(pred), &instance_labels(gt))?,
    );

    let pred_depth = scene_depth(pred);
    match relative_depth_error(&pred_depth, &scene_depth(gt)) {
        Ok(e) => report.insert("depth.relative_error", e),
        Err(Error::NoValidPixels) => {}
        Err(e) => return Err(e),
    }
    if let Some(obs) = observed {
        match relative_depth_error(&pred_depth, obs) {
            Ok(e) => report.insert("depth.relative_error_observed", e),
            Err(Error::NoValidPixels) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}
