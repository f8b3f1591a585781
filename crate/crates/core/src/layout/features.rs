use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::plane::{Category, LayoutPlane};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;

/// Per-pixel probabilities over (floor, wall, ceiling, object), produced by
/// an external pixel classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PixelLabelProbs {
    pub width: usize,
    pub height: usize,
    pub probs: Vec<[f64; 4]>,
}

impl PixelLabelProbs {
    pub const FLOOR: usize = 0;
    pub const WALL: usize = 1;
    pub const CEILING: usize = 2;
    pub const OBJECT: usize = 3;

    pub fn new(width: usize, height: usize, probs: Vec<[f64; 4]>) -> Result<Self> {
        let labels = PixelLabelProbs { width, height, probs };
        labels.validate()?;
        Ok(labels)
    }

    pub fn uniform(width: usize, height: usize) -> Self {
        PixelLabelProbs {
            width,
            height,
            probs: vec![[0.25; 4]; width * height],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.probs.len() != self.width * self.height {
            return Err(Error::InvalidInput("label map size mismatch".into()));
        }
        for (i, p) in self.probs.iter().enumerate() {
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-6 || p.iter().any(|x| *x < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "label probabilities at pixel {i} do not form a distribution: {p:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Piecewise-constant prior over a plane's distance from the camera.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PriorBins {
    /// `[lo, hi, value]` with `lo <= |offset| < hi`.
    pub bins: Vec<[f64; 3]>,
}

impl PriorBins {
    pub fn lookup(&self, distance: f64) -> f64 {
        self.bins
            .iter()
            .find(|b| distance >= b[0] && distance < b[1])
            .map_or(0.0, |b| b[2])
    }
}

/// A value per layout category.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerCategory<T> {
    pub floor: T,
    pub ceiling: T,
    pub left_wall: T,
    pub right_wall: T,
    pub front_wall: T,
}

impl<T> PerCategory<T> {
    pub fn get(&self, c: Category) -> &T {
        match c {
            Category::Floor => &self.floor,
            Category::Ceiling => &self.ceiling,
            Category::LeftWall => &self.left_wall,
            Category::RightWall => &self.right_wall,
            Category::FrontWall => &self.front_wall,
        }
    }

    pub fn from_fn(f: impl Fn(Category) -> T) -> Self {
        PerCategory {
            floor: f(Category::Floor),
            ceiling: f(Category::Ceiling),
            left_wall: f(Category::LeftWall),
            right_wall: f(Category::RightWall),
            front_wall: f(Category::FrontWall),
        }
    }
}

pub type PositionPrior = PerCategory<PriorBins>;

impl PositionPrior {
    /// Camera-height and room-size ranges typical of handheld indoor capture.
    pub fn indoor_default() -> Self {
        PerCategory {
            floor: PriorBins {
                bins: vec![[0.4, 2.2, 1.0]],
            },
            ceiling: PriorBins {
                bins: vec![[0.2, 2.5, 1.0]],
            },
            left_wall: PriorBins {
                bins: vec![[0.2, 8.0, 1.0]],
            },
            right_wall: PriorBins {
                bins: vec![[0.2, 8.0, 1.0]],
            },
            front_wall: PriorBins {
                bins: vec![[0.5, 12.0, 1.0]],
            },
        }
    }

    pub fn lookup(&self, plane: &LayoutPlane) -> f64 {
        self.get(plane.category).lookup(plane.offset.abs())
    }
}

/// Features `f1..f12` of a layout plane hypothesis, stored zero-based.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlaneFeatures(pub [f64; 12]);

impl PlaneFeatures {
    /// One-based accessor matching the feature numbering.
    pub fn f(&self, i: usize) -> f64 {
        self.0[i - 1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlaneProbParams {
    /// Point-to-plane distance sigma (meters).
    pub sigma_p: f64,
    /// Normal angular distance sigma (radians).
    pub sigma_n: f64,
    /// Relative depth margin for counting a point as behind the plane.
    pub behind_ratio: f64,
}

impl Default for PlaneProbParams {
    fn default() -> Self {
        PlaneProbParams {
            sigma_p: 0.025,
            sigma_n: 0.0799,
            behind_ratio: 0.03,
        }
    }
}

/// Likelihood that a point with the given normal lies on `plane`, as a
/// product of Gaussians in point-to-plane distance and normal angle, each
/// scaled so zero distance gives 1.
pub fn point_plane_probability(
    point: &Vector3<f64>,
    normal: &Vector3<f64>,
    plane: &LayoutPlane,
    sigma_p: f64,
    sigma_n: f64,
) -> f64 {
    let d = plane.distance(point);
    let angle = normal.dot(&plane.normal()).clamp(-1.0, 1.0).acos();
    gaussian_ratio(d, sigma_p) * gaussian_ratio(angle, sigma_n)
}

#[inline]
pub(crate) fn gaussian_ratio(x: f64, sigma: f64) -> f64 {
    (-0.5 * (x / sigma) * (x / sigma)).exp()
}

/// Whether `p` is behind the infinite plane along its own pixel ray by at
/// least `ratio` of the plane depth there.
#[inline]
pub(crate) fn is_behind(plane: &LayoutPlane, p: &Vector3<f64>, ratio: f64) -> bool {
    if p.z <= 0.0 {
        return false;
    }
    let ray = p / p.z;
    match plane.ray_hit_unbounded(&ray) {
        Some((plane_depth, _)) => p.z - plane_depth >= ratio * plane_depth,
        None => false,
    }
}

/// Computes `f1..f12` for one plane. Points without a normal contribute to
/// the behind-plane count only.
pub fn plane_features(
    plane: &LayoutPlane,
    cloud: &PointCloud,
    labels: &PixelLabelProbs,
    prior: &PositionPrior,
    params: &PlaneProbParams,
) -> Result<PlaneFeatures> {
    if labels.probs.len() <= cloud.pixel_index.iter().copied().max().unwrap_or(0) && !cloud.is_empty() {
        return Err(Error::InvalidInput("cloud pixel index outside label map".into()));
    }
    let mut f = [0.0; 12];
    let mut behind = 0usize;
    for ((p, n), &pix) in cloud.points.iter().zip(&cloud.normals).zip(&cloud.pixel_index) {
        if let Some(n) = n {
            let prob = point_plane_probability(p, n, plane, params.sigma_p, params.sigma_n);
            let lp = &labels.probs[pix];
            f[0] += prob;
            for l in 0..4 {
                f[1 + l] += prob * lp[l];
            }
        }
        if is_behind(plane, p, params.behind_ratio) {
            behind += 1;
        }
    }
    f[5] = behind as f64;
    for i in 0..5 {
        f[6 + i] = if behind == 0 { 0.0 } else { f[i] / f[5] };
    }
    f[11] = prior.lookup(plane);
    Ok(PlaneFeatures(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn on_plane_probability_is_one() {
        let plane = LayoutPlane::unbounded(Category::FrontWall, 3.0);
        let p = Vector3::new(0.4, -0.2, 3.0);
        assert_eq!(point_plane_probability(&p, &plane.normal(), &plane, 0.025, 0.0799), 1.0);
    }

    #[test]
    fn one_sigma_offset() {
        let plane = LayoutPlane::unbounded(Category::FrontWall, 3.0);
        let p = Vector3::new(0.4, -0.2, 3.025);
        let prob = point_plane_probability(&p, &plane.normal(), &plane, 0.025, 0.0799);
        assert_relative_eq!(prob, (-0.5f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn prior_lookup_is_half_open() {
        let bins = PriorBins {
            bins: vec![[1.0, 2.0, 0.7], [2.0, 3.0, 0.2]],
        };
        assert_eq!(bins.lookup(0.5), 0.0);
        assert_eq!(bins.lookup(1.0), 0.7);
        assert_eq!(bins.lookup(2.0), 0.2);
        assert_eq!(bins.lookup(3.0), 0.0);
    }

    #[test]
    fn label_map_must_be_normalized() {
        assert!(PixelLabelProbs::new(1, 1, vec![[0.5, 0.5, 0.1, 0.0]]).is_err());
        assert!(PixelLabelProbs::new(1, 1, vec![[0.4, 0.5, 0.1, 0.0]]).is_ok());
    }
}
