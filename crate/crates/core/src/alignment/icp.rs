use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::kdtree::KdTree;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcpParams {
    pub max_iters: usize,
    /// Stop once an update moves the translation less than this (meters).
    pub tol: f64,
    /// Correspondences farther apart than this are ignored (meters).
    pub rejection_radius: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        IcpParams {
            max_iters: 30,
            tol: 1e-4,
            rejection_radius: 0.25,
        }
    }
}

/// Translation-only point-to-point ICP.
///
/// `model` is moved by the returned translation (relative to its stored
/// coordinates) onto `target`. An update is accepted only if it does not
/// increase the mean nearest-neighbor distance; the first rejected update
/// ends the iteration.
pub fn icp_translation(
    model: &PointCloud,
    target: &PointCloud,
    init_t: Vector3<f64>,
    params: &IcpParams,
) -> Result<Vector3<f64>> {
    if model.is_empty() || target.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let tree = KdTree::new(target.points.clone());
    Ok(icp_with_tree(&model.points, &tree, init_t, params))
}

pub(crate) fn icp_with_tree(
    model: &[Vector3<f64>],
    tree: &KdTree,
    init_t: Vector3<f64>,
    params: &IcpParams,
) -> Vector3<f64> {
    let r2 = params.rejection_radius * params.rejection_radius;
    let mut t = init_t;
    let Some(mut stats) = correspond(model, tree, t, r2) else {
        return t;
    };
    for _ in 0..params.max_iters {
        let Some(delta) = stats.mean_offset() else {
            break;
        };
        let candidate = t + delta;
        let Some(next) = correspond(model, tree, candidate, r2) else {
            break;
        };
        if next.mean_distance() > stats.mean_distance() {
            break;
        }
        t = candidate;
        stats = next;
        if delta.norm() < params.tol {
            break;
        }
    }
    t
}

struct Correspondences {
    offset_sum: Vector3<f64>,
    dist_sum: f64,
    accepted: usize,
}

impl Correspondences {
    fn mean_offset(&self) -> Option<Vector3<f64>> {
        (self.accepted > 0).then(|| self.offset_sum / self.accepted as f64)
    }

    /// Mean distance over accepted pairs; with no pairs this is infinite so
    /// that any iterate with correspondences compares as better.
    fn mean_distance(&self) -> f64 {
        if self.accepted == 0 {
            f64::INFINITY
        } else {
            self.dist_sum / self.accepted as f64
        }
    }
}

fn correspond(model: &[Vector3<f64>], tree: &KdTree, t: Vector3<f64>, r2: f64) -> Option<Correspondences> {
    let mut c = Correspondences {
        offset_sum: Vector3::zeros(),
        dist_sum: 0.0,
        accepted: 0,
    };
    for p in model {
        let moved = p + t;
        let (j, d2) = tree.nearest(&moved)?;
        if d2 <= r2 {
            c.offset_sum += tree.point(j) - moved;
            c.dist_sum += d2.sqrt();
            c.accepted += 1;
        }
    }
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid_cloud() -> Vec<Vector3<f64>> {
        let mut pts = Vec::new();
        // spacing well above the test shifts so nearest neighbors are the
        // true correspondences
        for i in 0..6 {
            for j in 0..5 {
                let x = i as f64;
                let y = j as f64;
                pts.push(Vector3::new(x, y, 2.0 + 0.2 * (x * 7.0).sin() * (y * 5.0).cos()));
            }
        }
        pts
    }

    #[test]
    fn recovers_pure_shift() {
        let model = PointCloud::from_points(grid_cloud());
        let shift = Vector3::new(0.3, 0.0, 0.0);
        let target = PointCloud::from_points(model.points.iter().map(|p| p + shift).collect());
        let params = IcpParams {
            rejection_radius: 1.0,
            ..Default::default()
        };
        let t = icp_translation(&model, &target, Vector3::zeros(), &params).unwrap();
        assert_relative_eq!(t, shift, epsilon = 1e-3);
    }

    #[test]
    fn fixed_point_stays_put() {
        let model = PointCloud::from_points(grid_cloud());
        let t = icp_translation(&model, &model, Vector3::zeros(), &IcpParams::default()).unwrap();
        assert_eq!(t, Vector3::zeros());
    }

    #[test]
    fn empty_clouds_rejected() {
        let model = PointCloud::from_points(grid_cloud());
        let empty = PointCloud::default();
        assert!(icp_translation(&model, &empty, Vector3::zeros(), &IcpParams::default()).is_err());
        assert!(icp_translation(&empty, &model, Vector3::zeros(), &IcpParams::default()).is_err());
    }
}
