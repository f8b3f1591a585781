use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{
    gaussian_ratio, plane_features, point_plane_probability, PerCategory, PixelLabelProbs, PlaneFeatures,
    PlaneProbParams, PositionPrior,
};
use super::plane::{plane_axes, Category, LayoutPlane, Rect2};
use crate::error::{Error, Result};
use crate::geometry::{backproject, CameraIntrinsics, DepthImage, PointCloud};

/// Linear score `weights . features + bias`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneScorer {
    pub weights: [f64; 12],
    pub bias: f64,
}

impl PlaneScorer {
    pub fn score(&self, f: &PlaneFeatures) -> f64 {
        self.weights.iter().zip(f.0.iter()).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }

    /// Hand-set weights: support (f1) and own-label support count for the
    /// plane, object-labelled support and points seen through the plane count
    /// against it, and the position prior gates implausible offsets.
    pub fn hand_set(category: Category) -> Self {
        let mut weights = [0.0; 12];
        weights[0] = 0.2;
        weights[1 + category.label_index()] = 1.0;
        weights[4] = -1.5;
        weights[5] = -0.5;
        weights[11] = 50.0;
        PlaneScorer { weights, bias: -50.0 }
    }
}

pub type LayoutScorers = PerCategory<PlaneScorer>;

impl Default for LayoutScorers {
    fn default() -> Self {
        PerCategory::from_fn(PlaneScorer::hand_set)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutParams {
    pub prob: PlaneProbParams,
    /// Offset sweep spacing along each axis (meters).
    pub sweep_step: f64,
    /// Same-category planes closer than this to a stronger one are dropped.
    pub nms_radius: f64,
    /// Minimum score for a plane to be kept.
    pub score_threshold: f64,
    /// Probability above which a point counts as a plane inlier when
    /// measuring the observed plane bounds.
    pub inlier_prob: f64,
    /// Relative depth margin for hole evidence behind a surface.
    pub hole_ratio: f64,
    /// Hole components smaller than this many pixels are discarded.
    pub min_hole_pixels: usize,
    pub scorers: LayoutScorers,
    pub prior: PositionPrior,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            prob: PlaneProbParams::default(),
            sweep_step: 0.05,
            nms_radius: 0.15,
            score_threshold: 50.0,
            inlier_prob: 0.5,
            hole_ratio: 0.05,
            min_hole_pixels: 50,
            scorers: LayoutScorers::default(),
            prior: PositionPrior::indoor_default(),
        }
    }
}

/// Detects axis-aligned layout planes in a depth image whose camera frame is
/// already aligned with the room's Manhattan axes.
pub fn detect_planes(
    depth: &DepthImage,
    k: &CameraIntrinsics,
    labels: &PixelLabelProbs,
    params: &LayoutParams,
) -> Result<Vec<LayoutPlane>> {
    if labels.width != k.width || labels.height != k.height {
        return Err(Error::size((k.width, k.height), (labels.width, labels.height)));
    }
    let cloud = backproject(depth, k)?;
    detect_planes_in_cloud(&cloud, labels, params)
}

/// Sweeps plane offsets along each axis, refines each peak of the support
/// profile, scores the refined planes with their category's scorer, and
/// returns the survivors of [`nms_planes`] above the score threshold, best
/// first.
pub fn detect_planes_in_cloud(
    cloud: &PointCloud,
    labels: &PixelLabelProbs,
    params: &LayoutParams,
) -> Result<Vec<LayoutPlane>> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let proposals: Vec<LayoutPlane> = (0..3usize)
        .into_par_iter()
        .map(|axis| sweep_axis(cloud, axis, params))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let mut scored = Vec::with_capacity(proposals.len());
    for mut plane in proposals {
        let f = plane_features(&plane, cloud, labels, &params.prior, &params.prob)?;
        plane.score = params.scorers.get(plane.category).score(&f);
        plane.extent = inlier_bounds(&plane, cloud, params);
        scored.push(plane);
    }
    Ok(nms_planes(scored, params.nms_radius)
        .into_iter()
        .filter(|p| p.score >= params.score_threshold)
        .collect())
}

/// Peaks of the support profile `sum_i p(p_i; P)` over offsets along `axis`.
fn sweep_axis(cloud: &PointCloud, axis: usize, params: &LayoutParams) -> Vec<LayoutPlane> {
    let sp = params.prob.sigma_p;
    let sn = params.prob.sigma_n;
    // (coordinate, angular factor for a plane at negative offset, at positive offset)
    let mut support: Vec<(f64, f64, f64)> = Vec::new();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (p, n) in cloud.points.iter().zip(&cloud.normals) {
        lo = lo.min(p[axis]);
        hi = hi.max(p[axis]);
        let Some(n) = n else { continue };
        // plane normals face the camera: +axis for negative offsets
        let c = n[axis].clamp(-1.0, 1.0);
        let neg = gaussian_ratio(c.acos(), sn);
        let pos = gaussian_ratio((-c).acos(), sn);
        if neg > 1e-12 || pos > 1e-12 {
            support.push((p[axis], neg, pos));
        }
    }
    if !(lo <= hi) || support.is_empty() {
        return Vec::new();
    }
    let step = params.sweep_step;
    // pad so a plane at the extreme coordinate still has samples on both sides
    let lo = lo - 2.0 * step;
    let count = ((hi + 2.0 * step - lo) / step).floor() as usize + 1;
    let offsets: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();
    let profile: Vec<f64> = offsets
        .iter()
        .map(|&o| {
            support
                .iter()
                .map(|&(x, neg, pos)| gaussian_ratio(x - o, sp) * if o < 0.0 { neg } else { pos })
                .sum()
        })
        .collect();

    let mut planes = Vec::new();
    for i in 0..count {
        let here = profile[i];
        let left = if i > 0 { profile[i - 1] } else { 0.0 };
        let right = if i + 1 < count { profile[i + 1] } else { 0.0 };
        if !(here > 0.0 && here >= left && here > right) {
            continue;
        }
        let mut offset = offsets[i];
        if left > 0.0 && right > 0.0 {
            // the profile of a single plane is Gaussian, so its log is an
            // exact parabola through the three samples
            let (l, c, r) = (left.ln(), here.ln(), right.ln());
            let denom = l - 2.0 * c + r;
            if denom < 0.0 {
                let delta = (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
                let refined = offset + delta * step;
                if refined.signum() == offset.signum() {
                    offset = refined;
                }
            }
        }
        if let Some(category) = Category::from_axis_offset(axis, offset) {
            planes.push(LayoutPlane {
                category,
                offset,
                extent: Rect2::new([0.0; 2], [0.0; 2]),
                holes: Vec::new(),
                score: 0.0,
            });
        }
    }
    planes
}

/// Bounds, in plane coordinates, of the points likely to lie on `plane`.
fn inlier_bounds(plane: &LayoutPlane, cloud: &PointCloud, params: &LayoutParams) -> Rect2 {
    let [a, b] = plane_axes(plane.axis());
    let inliers = cloud.points.iter().zip(&cloud.normals).filter_map(|(p, n)| {
        let n = n.as_ref()?;
        let prob = point_plane_probability(p, n, plane, params.prob.sigma_p, params.prob.sigma_n);
        (prob >= params.inlier_prob).then(|| [p[a], p[b]])
    });
    Rect2::bounding(inliers).unwrap_or(Rect2::new([0.0; 2], [0.0; 2]))
}

fn by_score_desc(a: &LayoutPlane, b: &LayoutPlane) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.category.cmp(&b.category))
        .then(a.offset.total_cmp(&b.offset))
}

/// Greedy non-maximum suppression: repeatedly keeps the highest-scoring plane
/// and drops remaining planes of the same category within `radius` of its
/// offset.
pub fn nms_planes(mut planes: Vec<LayoutPlane>, radius: f64) -> Vec<LayoutPlane> {
    planes.sort_by(by_score_desc);
    let mut kept: Vec<LayoutPlane> = Vec::new();
    for p in planes {
        let suppressed = kept
            .iter()
            .any(|k| k.category == p.category && (k.offset - p.offset).abs() <= radius);
        if !suppressed {
            kept.push(p);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wall(offset: f64, score: f64) -> LayoutPlane {
        LayoutPlane {
            score,
            ..LayoutPlane::unbounded(Category::FrontWall, offset)
        }
    }

    #[test]
    fn nms_inside_radius() {
        let out = nms_planes(vec![wall(3.0, 2.0), wall(3.1, 1.0)], 0.15);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].offset, 3.0);
    }

    #[test]
    fn nms_outside_radius() {
        let out = nms_planes(vec![wall(3.0, 2.0), wall(3.2, 1.0)], 0.15);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn nms_ignores_other_categories() {
        let floor = LayoutPlane {
            score: 1.0,
            ..LayoutPlane::unbounded(Category::Floor, 3.05)
        };
        let out = nms_planes(vec![wall(3.0, 2.0), floor], 0.15);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn empty_cloud_is_an_error() {
        let labels = PixelLabelProbs::uniform(2, 2);
        assert!(detect_planes_in_cloud(&PointCloud::default(), &labels, &LayoutParams::default()).is_err());
    }
}
