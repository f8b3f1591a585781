use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{ratio_or, MetricReport};
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthRange, NEAR_CLIP};
use crate::kdtree::KdTree;
use crate::layout::{Category, LayoutPlane};

/// Axis-aligned voxel lattice in the camera frame. Voxel `(i, j, k)` spans
/// `origin + [i, i+1) * resolution` along x, and likewise for y and z.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFrame {
    pub origin: [f64; 3],
    pub resolution: f64,
    pub dims: [usize; 3],
}

impl GridFrame {
    pub fn new(origin: [f64; 3], resolution: f64, dims: [usize; 3]) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "voxel resolution {resolution} must be > 0"
            )));
        }
        Ok(GridFrame {
            origin,
            resolution,
            dims,
        })
    }

    /// Lattice covering the room bounded by `layouts`. Axes without a bounding
    /// plane fall back to the view frustum out to `max_depth` (or to the front
    /// wall when there is one). The origin is snapped to a multiple of the
    /// resolution.
    pub fn enclosing(layouts: &[LayoutPlane], k: &CameraIntrinsics, resolution: f64, max_depth: f64) -> Result<Self> {
        let offset = |c: Category| {
            layouts
                .iter()
                .filter(|l| l.category == c)
                .map(|l| l.offset)
                .fold(None, |acc: Option<f64>, o| {
                    Some(acc.map_or(o, |a| if o.abs() > a.abs() { o } else { a }))
                })
        };
        let zmax = offset(Category::FrontWall).unwrap_or(max_depth);
        let corners = [k.ray(0.0, 0.0), k.ray((k.width - 1) as f64, (k.height - 1) as f64)];
        let half = |axis: usize| {
            let (a, b) = (corners[0][axis] * zmax, corners[1][axis] * zmax);
            (a.min(b).min(0.0), a.max(b).max(0.0))
        };
        let (x0, x1) = half(0);
        let (y0, y1) = half(1);
        let lo = [
            offset(Category::LeftWall).unwrap_or(x0),
            offset(Category::Ceiling).unwrap_or(y0),
            0.0,
        ];
        let hi = [
            offset(Category::RightWall).unwrap_or(x1),
            offset(Category::Floor).unwrap_or(y1),
            zmax,
        ];
        let mut origin = [0.0; 3];
        let mut dims = [0usize; 3];
        for a in 0..3 {
            origin[a] = (lo[a] / resolution).floor() * resolution;
            dims[a] = ((hi[a] - origin[a]) / resolution).ceil().max(1.0) as usize;
        }
        Self::new(origin, resolution, dims)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center(&self, idx: usize) -> Vector3<f64> {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        Vector3::new(
            self.origin[0] + (i as f64 + 0.5) * self.resolution,
            self.origin[1] + (j as f64 + 0.5) * self.resolution,
            self.origin[2] + (k as f64 + 0.5) * self.resolution,
        )
    }
}

/// Solid occupancy with the set of voxels that are evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub frame: GridFrame,
    pub occupied: Vec<bool>,
    /// In view and on the camera side of every scope layout plane.
    pub in_scope: Vec<bool>,
}

impl VoxelGrid {
    pub fn occupied_count(&self) -> usize {
        self.occupied
            .iter()
            .zip(&self.in_scope)
            .filter(|(o, s)| **o && **s)
            .count()
    }
}

/// Voxelizes rendered solids and layout surfaces.
///
/// Each voxel center is projected to its nearest pixel; it is occupied when
/// its depth lies within some object's `(near, far)` interval at that pixel.
/// Layout planes occupy the voxels whose centers are within half a voxel of
/// the bounded surface. Objects are rendered separately, so parts hidden
/// behind other models still fill.
pub fn voxelize_scene(
    objects: &[DepthRange],
    layouts: &[LayoutPlane],
    k: &CameraIntrinsics,
    frame: &GridFrame,
    scope_layouts: &[LayoutPlane],
) -> Result<VoxelGrid> {
    for r in objects {
        k.check_size(r.width(), r.height())?;
    }
    let half = frame.resolution / 2.0;
    let n = frame.len();
    let mut occupied = vec![false; n];
    let mut in_scope = vec![false; n];
    for idx in 0..n {
        let c = frame.center(idx);
        if c.z <= NEAR_CLIP {
            continue;
        }
        let Some((u, v)) = k.project_to_pixel(&c) else {
            continue;
        };
        let pix = v * k.width + u;
        in_scope[idx] = scope_layouts.iter().all(|l| {
            let x = c[l.axis()];
            if l.offset > 0.0 {
                x <= l.offset
            } else {
                x >= l.offset
            }
        });
        occupied[idx] = objects
            .iter()
            .any(|r| r.at(pix).is_some_and(|(near, far)| near <= c.z && c.z <= far))
            || layouts.iter().any(|l| {
                let p = l.plane_coords(&c);
                (c[l.axis()] - l.offset).abs() <= half && l.extent.contains(p) && !l.holes.iter().any(|h| h.contains(p))
            });
    }
    Ok(VoxelGrid {
        frame: frame.clone(),
        occupied,
        in_scope,
    })
}

/// Strict and depth-tolerant precision/recall of occupied and of free
/// voxels, evaluated inside the ground truth's scope.
///
/// A predicted voxel is tolerantly correct when a ground-truth voxel of the
/// same kind lies within `tolerance_factor * depth` of it (depth of the
/// predicted voxel); a ground-truth voxel is tolerantly recalled when a
/// predicted voxel lies within `tolerance_factor * depth` of it (depth of the
/// ground-truth voxel). Empty denominators give 1.
pub fn occupancy_metrics(pred: &VoxelGrid, gt: &VoxelGrid, tolerance_factor: f64) -> Result<MetricReport> {
    if pred.frame != gt.frame || pred.occupied.len() != gt.occupied.len() {
        return Err(Error::FrameMismatch);
    }
    let mut report = MetricReport::default();
    for (name, want) in [("occupancy", true), ("freespace", false)] {
        let in_set = |g: &VoxelGrid, i: usize| gt.in_scope[i] && g.occupied[i] == want;
        let p: Vec<usize> = (0..gt.occupied.len()).filter(|&i| in_set(pred, i)).collect();
        let g: Vec<usize> = (0..gt.occupied.len()).filter(|&i| in_set(gt, i)).collect();
        let both = p.iter().filter(|&&i| in_set(gt, i)).count();

        let tolerant = |from: &[usize], into: &VoxelGrid, other: &[usize]| -> usize {
            let mut tree: Option<KdTree> = None;
            from.iter()
                .filter(|&&i| {
                    if in_set(into, i) {
                        return true;
                    }
                    let tree =
                        tree.get_or_insert_with(|| KdTree::new(other.iter().map(|&o| gt.frame.center(o)).collect()));
                    let c = gt.frame.center(i);
                    tree.any_within(&c, tolerance_factor * c.z)
                })
                .count()
        };
        let tp_pred = tolerant(&p, gt, &g);
        let tp_gt = tolerant(&g, pred, &p);

        report.insert(format!("{name}.precision"), ratio_or(both, p.len(), 1.0));
        report.insert(format!("{name}.recall"), ratio_or(both, g.len(), 1.0));
        report.insert(format!("{name}.tolerant_precision"), ratio_or(tp_pred, p.len(), 1.0));
        report.insert(format!("{name}.tolerant_recall"), ratio_or(tp_gt, g.len(), 1.0));
    }
    Ok(report)
}
