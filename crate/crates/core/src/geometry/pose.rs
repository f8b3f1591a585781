use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a % (2.0 * PI);
    if x <= -PI {
        x += 2.0 * PI;
    } else if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Uniform scale, then yaw about the vertical axis, then translation.
///
/// The vertical axis is the camera frame's y axis: scenes are assumed to be
/// expressed in a gravity-aligned frame with y pointing down.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseTransform {
    pub yaw: f64,
    pub scale: f64,
    pub translation: [f64; 3],
}

impl Default for PoseTransform {
    fn default() -> Self {
        PoseTransform {
            yaw: 0.0,
            scale: 1.0,
            translation: [0.0; 3],
        }
    }
}

impl PoseTransform {
    pub fn new(yaw: f64, scale: f64, translation: Vector3<f64>) -> Result<Self> {
        let pose = PoseTransform {
            yaw: wrap_angle(yaw),
            scale,
            translation: translation.into(),
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        PoseTransform {
            translation: t.into(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidPose(format!("scale {} must be > 0", self.scale)));
        }
        if !(self.yaw > -PI && self.yaw <= PI) {
            return Err(Error::InvalidPose(format!("yaw {} outside (-pi, pi]", self.yaw)));
        }
        if self.translation.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidPose("non-finite translation".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn t(&self) -> Vector3<f64> {
        Vector3::from(self.translation)
    }

    pub fn with_translation(&self, t: Vector3<f64>) -> Self {
        PoseTransform {
            translation: t.into(),
            ..*self
        }
    }

    /// Rotation about +y by `yaw`.
    pub fn rotation(&self) -> Matrix3<f64> {
        let (s, c) = self.yaw.sin_cos();
        Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
    }

    #[inline]
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation() * (p * self.scale) + self.t()
    }

    pub fn apply_all(&self, pts: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        let r = self.rotation();
        let t = self.t();
        pts.iter().map(|p| r * (p * self.scale) + t).collect()
    }
}
