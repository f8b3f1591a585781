use nalgebra::Vector3;

use super::camera::CameraIntrinsics;
use super::image::{DepthImage, Mask};
use crate::error::Result;

/// Points backprojected from a depth image, in the camera frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    /// Unit normals oriented toward the camera, `None` where a neighbor
    /// needed for the central difference is missing.
    pub normals: Vec<Option<Vector3<f64>>>,
    /// Linear index of the source pixel.
    pub pixel_index: Vec<usize>,
}

impl PointCloud {
    pub fn from_points(points: Vec<Vector3<f64>>) -> Self {
        let n = points.len();
        PointCloud {
            points,
            normals: vec![None; n],
            pixel_index: (0..n).collect(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Vector3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let sum: Vector3<f64> = self.points.iter().sum();
        Some(sum / self.points.len() as f64)
    }
}

/// One point per valid depth pixel, at `z * ((u - cx) / fx, (v - cy) / fy, 1)`.
pub fn backproject(depth: &DepthImage, k: &CameraIntrinsics) -> Result<PointCloud> {
    backproject_masked(depth, k, None)
}

/// As [`backproject`], restricted to pixels inside `region`. Normals still use
/// neighbors outside the region.
pub fn backproject_masked(depth: &DepthImage, k: &CameraIntrinsics, region: Option<&Mask>) -> Result<PointCloud> {
    k.check_size(depth.width(), depth.height())?;
    if let Some(r) = region {
        r.check_same_size(k.width, k.height)?;
    }
    let (w, h) = (k.width, k.height);
    let point_at = |u: usize, v: usize| depth.get(u, v).map(|z| k.backproject_pixel(u, v, z));

    let mut cloud = PointCloud::default();
    for v in 0..h {
        for u in 0..w {
            let idx = v * w + u;
            if region.is_some_and(|r| !r.at(idx)) {
                continue;
            }
            let Some(p) = point_at(u, v) else { continue };
            let normal = if u > 0 && v > 0 && u + 1 < w && v + 1 < h {
                match (
                    point_at(u - 1, v),
                    point_at(u + 1, v),
                    point_at(u, v - 1),
                    point_at(u, v + 1),
                ) {
                    (Some(l), Some(r), Some(t), Some(b)) => {
                        let n = (r - l).cross(&(b - t));
                        let len = n.norm();
                        if len > 0.0 {
                            let n = n / len;
                            Some(if n.dot(&p) > 0.0 { -n } else { n })
                        } else {
                            None
                        }
                    }
                    _ => None,
                }
            } else {
                None
            };
            cloud.points.push(p);
            cloud.normals.push(normal);
            cloud.pixel_index.push(idx);
        }
    }
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn principal_ray_of_flat_plane() {
        let k = CameraIntrinsics::new(50.0, 50.0, 10.0, 8.0, 21, 17).unwrap();
        let depth = DepthImage::filled(21, 17, 2.0);
        let cloud = backproject(&depth, &k).unwrap();
        assert_eq!(cloud.len(), 21 * 17);
        let i = cloud.pixel_index.iter().position(|&p| p == 8 * 21 + 10).unwrap();
        assert_relative_eq!(cloud.points[i], Vector3::new(0.0, 0.0, 2.0));
        assert_relative_eq!(cloud.normals[i].unwrap(), Vector3::new(0.0, 0.0, -1.0), epsilon = 1e-12);
    }

    #[test]
    fn all_missing_gives_empty_cloud() {
        let k = CameraIntrinsics::from_fov(8, 6, 60.0).unwrap();
        let cloud = backproject(&DepthImage::missing(8, 6), &k).unwrap();
        assert!(cloud.is_empty());
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let k = CameraIntrinsics::from_fov(8, 6, 60.0).unwrap();
        assert!(backproject(&DepthImage::missing(6, 8), &k).is_err());
    }

    #[test]
    fn border_and_hole_neighbors_have_no_normal() {
        let k = CameraIntrinsics::from_fov(5, 5, 60.0).unwrap();
        let mut depth = DepthImage::filled(5, 5, 1.0);
        depth.set(2, 1, None);
        let cloud = backproject(&depth, &k).unwrap();
        for (i, &pix) in cloud.pixel_index.iter().enumerate() {
            let (u, v) = (pix % 5, pix / 5);
            let interior = u > 0 && v > 0 && u < 4 && v < 4;
            let touches_hole = (u == 2 && v == 2) || (v == 1 && (u == 1 || u == 3));
            assert_eq!(cloud.normals[i].is_some(), interior && !touches_hole, "pixel ({u},{v})");
        }
    }
}
