//! Run configuration: every weight preset and threshold, loadable from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alignment::{AlignParams, FitWeights};
use crate::composition::{PruneParams, SelectionWeights};
use crate::error::{Error, Result};
use crate::geometry::CameraIntrinsics;
use crate::layout::{LayoutParams, SupportParams};
use crate::synth::SynthParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitPresets {
    pub annotation: FitWeights,
    pub retrieval: FitWeights,
}

impl Default for FitPresets {
    fn default() -> Self {
        FitPresets {
            annotation: FitWeights::ANNOTATION,
            retrieval: FitWeights::RETRIEVAL,
        }
    }
}

impl FitPresets {
    pub fn get(&self, name: &str) -> Option<FitWeights> {
        match name {
            "annotation" => Some(self.annotation),
            "retrieval" => Some(self.retrieval),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalParams {
    /// Voxel edge length in meters.
    pub voxel_resolution: f64,
    /// Tolerant matching radius as a fraction of voxel depth.
    pub tolerance: f64,
    /// Far limit of the evaluated grid, in meters.
    pub max_depth: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            voxel_resolution: 0.03,
            tolerance: 0.05,
            max_depth: 10.0,
        }
    }
}

impl EvalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.voxel_resolution > 0.0 && self.tolerance >= 0.0 && self.max_depth > 0.0) {
            return Err(Error::InvalidInput(format!("bad evaluation parameters: {self:?}")));
        }
        Ok(())
    }
}

/// All tunables of the pipeline. Missing tables and keys take their defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Intrinsics for inputs that carry no camera of their own.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraIntrinsics>,
    pub fit: FitPresets,
    pub align: AlignParams,
    pub layout: LayoutParams,
    pub support: SupportParams,
    pub selection: SelectionWeights,
    pub prune: PruneParams,
    pub eval: EvalParams,
    pub synth: SynthParams,
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1);
            Error::parse(path, line, e.message())
        })?;
        cfg.validate().map_err(|e| Error::parse(path, 0, e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(k) = &self.camera {
            k.validate()?;
        }
        self.fit.annotation.validate()?;
        self.fit.retrieval.validate()?;
        self.selection.validate()?;
        self.eval.validate()?;
        self.synth.validate()
    }
}
