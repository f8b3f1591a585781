//! Depth, voxel occupancy, layout and segmentation metrics.

mod coverage;
mod depth;
mod layout;
mod voxel;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use coverage::{coverage_metrics, InstanceLabels};
pub use depth::relative_depth_error;
pub use layout::{layout_depth_error, layout_pixel_error, occluded_mask, OCCLUSION_RATIO};
pub use voxel::{occupancy_metrics, voxelize_scene, GridFrame, VoxelGrid};

/// Named scalar results.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricReport {
    pub values: BTreeMap<String, f64>,
}

impl MetricReport {
    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    /// Adds every entry of `other` under `prefix.`.
    pub fn merge(&mut self, prefix: &str, other: &MetricReport) {
        for (k, v) in &other.values {
            self.values.insert(format!("{prefix}.{k}"), *v);
        }
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.values {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// `num / den`, or `empty` when there is nothing to measure.
#[inline]
pub(crate) fn ratio_or(num: usize, den: usize, empty: f64) -> f64 {
    if den == 0 {
        empty
    } else {
        num as f64 / den as f64
    }
}
