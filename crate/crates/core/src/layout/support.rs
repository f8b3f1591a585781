use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::PointCloud;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SupportParams {
    /// Height histogram bin width (meters).
    pub bin: f64,
    /// Minimum |n_y| for a point to count as lying on a horizontal surface.
    pub min_vertical: f64,
    /// Peaks holding less than this fraction of horizontal points are noise.
    pub min_fraction: f64,
}

impl Default for SupportParams {
    fn default() -> Self {
        SupportParams {
            bin: 0.03,
            min_vertical: 0.95,
            min_fraction: 0.01,
        }
    }
}

/// Heights (meters, up positive, i.e. `-y`) of horizontal surfaces that could
/// support objects: local maxima of the height histogram of points with
/// near-vertical normals, most populated first. Heights are bin centers.
pub fn support_height_candidates(cloud: &PointCloud, params: &SupportParams) -> Vec<f64> {
    let mut hist: BTreeMap<i64, usize> = BTreeMap::new();
    let mut total = 0usize;
    for (p, n) in cloud.points.iter().zip(&cloud.normals) {
        if n.is_some_and(|n| n.y.abs() >= params.min_vertical) {
            *hist.entry((-p.y / params.bin).floor() as i64).or_default() += 1;
            total += 1;
        }
    }
    let min_count = ((params.min_fraction * total as f64).ceil() as usize).max(1);
    let count = |b: i64| hist.get(&b).copied().unwrap_or(0);
    let mut peaks: Vec<(usize, i64)> = hist
        .iter()
        .filter(|&(&b, &c)| c >= min_count && c > count(b - 1) && c >= count(b + 1))
        .map(|(&b, &c)| (c, b))
        .collect();
    peaks.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)));
    peaks.into_iter().map(|(_, b)| (b as f64 + 0.5) * params.bin).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn horizontal(points: Vec<Vector3<f64>>) -> PointCloud {
        let n = points.len();
        let mut c = PointCloud::from_points(points);
        c.normals = vec![Some(Vector3::new(0.0, -1.0, 0.0)); n];
        c
    }

    #[test]
    fn empty_cloud_has_no_candidates() {
        assert!(support_height_candidates(&PointCloud::default(), &SupportParams::default()).is_empty());
    }

    #[test]
    fn single_plane() {
        let pts = (0..100).map(|i| Vector3::new(i as f64 * 0.01, -0.40, 2.0)).collect();
        let c = support_height_candidates(&horizontal(pts), &SupportParams::default());
        assert_eq!(c.len(), 1);
        assert!((c[0] - 0.40).abs() <= 0.03);
    }

    #[test]
    fn vertical_surfaces_are_ignored() {
        let mut cloud = horizontal(vec![Vector3::new(0.0, 0.0, 2.0); 10]);
        cloud.points.push(Vector3::new(0.0, -1.0, 2.0));
        cloud.normals.push(Some(Vector3::new(0.0, 0.0, -1.0)));
        cloud.pixel_index.push(10);
        let c = support_height_candidates(&cloud, &SupportParams::default());
        assert_eq!(c.len(), 1);
    }
}
