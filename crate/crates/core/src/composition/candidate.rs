use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    render_depth, render_depth_range, CameraIntrinsics, DepthRange, Mask, PoseTransform, RenderResult, TriangleMesh,
};

/// Size of the object class vocabulary.
pub const NUM_CLASSES: usize = 81;

/// Probabilities below this are clamped before taking logs.
pub const LOG_FLOOR: f64 = 1e-6;

/// A posed shape hypothesis for one image region, without cached renders.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSpec {
    pub id: u64,
    pub mesh: TriangleMesh,
    pub pose: PoseTransform,
    /// Supporting region of the image.
    pub region: Mask,
    /// Class of the shape itself.
    pub class_id: usize,
    /// Class distribution of the region.
    pub class_probs: Vec<f64>,
    /// Probability that the region is not an object at all.
    pub non_object_prob: f64,
    /// Depth fitting cost of the posed shape against its region.
    pub fitting_energy: f64,
    pub support_height: Option<f64>,
}

impl CandidateSpec {
    pub fn validate(&self) -> Result<()> {
        self.pose.validate()?;
        let sum: f64 = self.class_probs.iter().sum();
        if self.class_probs.is_empty() || (sum - 1.0).abs() > 1e-6 || self.class_probs.iter().any(|p| *p < 0.0) {
            return Err(Error::InvalidInput(format!(
                "candidate {}: class probabilities must be a distribution (sum {sum})",
                self.id
            )));
        }
        if !(0.0..=1.0).contains(&self.non_object_prob) {
            return Err(Error::InvalidInput(format!(
                "candidate {}: non-object probability {} outside [0, 1]",
                self.id, self.non_object_prob
            )));
        }
        if self.class_id >= self.class_probs.len() {
            return Err(Error::InvalidInput(format!(
                "candidate {}: class {} outside the {}-class vocabulary",
                self.id,
                self.class_id,
                self.class_probs.len()
            )));
        }
        Ok(())
    }

    pub fn max_class_prob(&self) -> f64 {
        self.class_probs.iter().copied().fold(0.0, f64::max)
    }
}

/// A candidate with its renders cached for one camera.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub spec: CandidateSpec,
    pub render: RenderResult,
    pub depth_range: DepthRange,
}

impl Candidate {
    pub fn new(spec: CandidateSpec, k: &CameraIntrinsics) -> Result<Self> {
        spec.validate()?;
        spec.region.check_same_size(k.width, k.height)?;
        let render = render_depth(&spec.mesh, &spec.pose, k);
        let depth_range = render_depth_range(&spec.mesh, &spec.pose, k);
        Ok(Candidate {
            spec,
            render,
            depth_range,
        })
    }

    #[inline]
    pub fn id(&self) -> u64 {
        self.spec.id
    }
}

/// Weights of the candidate energy and the scene selection cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionWeights {
    /// Relative depth errors below `2^depth_clip_base` count as noise.
    pub depth_clip_base: f64,
    /// Multiplier on the depth term during greedy addition.
    pub greedy_depth_factor: f64,
    pub w_f: f64,
    pub w_c: f64,
    pub w_b: f64,
    /// Unselected objects revisited in the swap stage, best energy first.
    pub swap_subset: usize,
    /// Pixel stride of the volume overlap term in each image axis; 1 is exact.
    pub overlap_stride: usize,
}

impl Default for SelectionWeights {
    fn default() -> Self {
        SelectionWeights {
            depth_clip_base: 1.03f64.log2(),
            greedy_depth_factor: 10.0,
            w_f: 1.0,
            w_c: -1500.0,
            w_b: 1300.0,
            swap_subset: 30,
            overlap_stride: 2,
        }
    }
}

impl SelectionWeights {
    /// Default weights with the exact volume overlap term.
    pub fn exact() -> Self {
        SelectionWeights {
            overlap_stride: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.greedy_depth_factor >= 1.0) {
            return Err(Error::InvalidInput("greedy depth factor must be >= 1".into()));
        }
        if self.overlap_stride == 0 {
            return Err(Error::InvalidInput("overlap stride must be >= 1".into()));
        }
        if !(self.depth_clip_base >= 0.0) {
            return Err(Error::InvalidInput("depth clip base must be >= 0".into()));
        }
        Ok(())
    }
}

/// `w_f * fitting_energy + w_c * ln(max class prob) + w_b * ln(non-object
/// prob)`, with probabilities clamped below at [`LOG_FLOOR`]. Lower is
/// better.
pub fn candidate_energy(c: &CandidateSpec, w: &SelectionWeights) -> f64 {
    let ln = |p: f64| p.max(LOG_FLOOR).ln();
    w.w_f * c.fitting_energy + w.w_c * ln(c.max_class_prob()) + w.w_b * ln(c.non_object_prob)
}
