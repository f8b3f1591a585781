//! Manhattan layout proposals: plane sweep, scoring, suppression, extents
//! and openings.

mod detect;
mod extent;
mod features;
mod plane;
mod support;

pub use detect::{detect_planes, detect_planes_in_cloud, nms_planes, LayoutParams, LayoutScorers, PlaneScorer};
pub use extent::plane_extent;
pub use features::{
    plane_features, point_plane_probability, PerCategory, PixelLabelProbs, PlaneFeatures, PlaneProbParams,
    PositionPrior, PriorBins,
};
pub use plane::{plane_axes, render_layouts, Category, LayoutPlane, LayoutRender, Rect2};
pub use support::{support_height_candidates, SupportParams};

use crate::error::Result;
use crate::geometry::{CameraIntrinsics, DepthImage};

/// Detected planes with extents and openings.
pub fn propose_layout(
    depth: &DepthImage,
    k: &CameraIntrinsics,
    labels: &PixelLabelProbs,
    params: &LayoutParams,
) -> Result<Vec<LayoutPlane>> {
    let planes = detect_planes(depth, k, labels, params)?;
    planes
        .iter()
        .map(|p| plane_extent(p, &planes, depth, k, params))
        .collect()
}
