use super::detect::LayoutParams;
use super::plane::{plane_axes, LayoutPlane, Rect2};
use crate::error::Result;
use crate::geometry::{CameraIntrinsics, DepthImage};

/// Bounds a detected plane by its perpendicular neighbors and cuts out
/// openings.
///
/// Along each in-plane axis the surface runs to the innermost perpendicular
/// plane on that side of the camera that still contains the plane's observed
/// inliers (within the suppression radius); with no such plane the inlier
/// bound is kept. Openings are connected components of pixels whose observed
/// depth is at least `hole_ratio` behind the plane. Each component's pixel
/// rays are intersected with the plane and its bounding box, clipped to the
/// extent, becomes a hole.
pub fn plane_extent(
    plane: &LayoutPlane,
    all_planes: &[LayoutPlane],
    depth: &DepthImage,
    k: &CameraIntrinsics,
    params: &LayoutParams,
) -> Result<LayoutPlane> {
    k.check_size(depth.width(), depth.height())?;
    let mut out = plane.clone();
    out.extent = clipped_extent(plane, all_planes, params.nms_radius);
    out.holes = find_holes(&out, depth, k, params);
    Ok(out)
}

fn clipped_extent(plane: &LayoutPlane, all_planes: &[LayoutPlane], tol: f64) -> Rect2 {
    let axes = plane_axes(plane.axis());
    let mut extent = plane.extent;
    for (c, &axis) in axes.iter().enumerate() {
        let perpendicular = || all_planes.iter().filter(move |p| p.axis() == axis);
        let inlier_lo = plane.extent.min[c];
        let inlier_hi = plane.extent.max[c];
        if let Some(hi) = perpendicular()
            .map(|p| p.offset)
            .filter(|&o| o > 0.0 && o >= inlier_hi - tol)
            .min_by(f64::total_cmp)
        {
            extent.max[c] = hi;
        }
        if let Some(lo) = perpendicular()
            .map(|p| p.offset)
            .filter(|&o| o < 0.0 && o <= inlier_lo + tol)
            .max_by(f64::total_cmp)
        {
            extent.min[c] = lo;
        }
        if extent.min[c] > extent.max[c] {
            extent.min[c] = extent.max[c];
        }
    }
    extent
}

fn find_holes(plane: &LayoutPlane, depth: &DepthImage, k: &CameraIntrinsics, params: &LayoutParams) -> Vec<Rect2> {
    let (w, h) = (k.width, k.height);
    // plane coordinates of every pixel that looks through the surface
    let mut through: Vec<Option<[f64; 2]>> = vec![None; w * h];
    for v in 0..h {
        for u in 0..w {
            let idx = v * w + u;
            let Some(observed) = depth.at(idx) else {
                continue;
            };
            let Some((plane_depth, c)) = plane.ray_hit_unbounded(&k.ray(u as f64, v as f64)) else {
                continue;
            };
            if plane.extent.contains(c) && observed - plane_depth >= params.hole_ratio * plane_depth {
                through[idx] = Some(c);
            }
        }
    }

    let mut seen = vec![false; w * h];
    let mut holes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if seen[start] || through[start].is_none() {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut members = Vec::new();
        while let Some(idx) = stack.pop() {
            members.push(idx);
            let (u, v) = (idx % w, idx / w);
            let mut visit = |n: usize| {
                if !seen[n] && through[n].is_some() {
                    seen[n] = true;
                    stack.push(n);
                }
            };
            if u > 0 {
                visit(idx - 1);
            }
            if u + 1 < w {
                visit(idx + 1);
            }
            if v > 0 {
                visit(idx - w);
            }
            if v + 1 < h {
                visit(idx + w);
            }
        }
        if members.len() < params.min_hole_pixels {
            continue;
        }
        let bbox = Rect2::bounding(members.iter().filter_map(|&i| through[i]));
        if let Some(hole) = bbox.and_then(|b| b.intersect(&plane.extent)) {
            holes.push(hole);
        }
    }
    holes
}
