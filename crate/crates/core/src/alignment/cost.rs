use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DepthImage, Mask, RenderResult};

/// Per-pixel weights of the depth fitting cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWeights {
    /// Absolute depth difference inside the region where the model renders.
    pub c_depth: f64,
    /// Constant charge per region pixel the model fails to cover.
    pub c_missing: f64,
    /// Protrusion: rendered depth beyond observation outside the region.
    pub c_occ: f64,
}

impl FitWeights {
    /// Profile used to fit annotation models to ground-truth regions.
    pub const ANNOTATION: FitWeights = FitWeights {
        c_depth: 1.0,
        c_missing: 0.9,
        c_occ: 0.5,
    };

    /// Profile used to align retrieved shapes to region proposals.
    pub const RETRIEVAL: FitWeights = FitWeights {
        c_depth: 1.0,
        c_missing: 0.6,
        c_occ: 0.9,
    };

    pub fn preset(name: &str) -> Option<FitWeights> {
        match name {
            "annotation" => Some(Self::ANNOTATION),
            "retrieval" => Some(Self::RETRIEVAL),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.c_depth, self.c_missing, self.c_occ]
            .iter()
            .all(|w| *w >= 0.0 && w.is_finite());
        if !ok {
            return Err(Error::InvalidInput(format!("fit weights must be >= 0: {self:?}")));
        }
        Ok(())
    }
}

/// The three sums of the fitting cost before weighting.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FitTerms {
    pub depth_abs: f64,
    pub missing_pixels: usize,
    pub protrusion: f64,
}

impl FitTerms {
    pub fn weighted(&self, w: &FitWeights) -> f64 {
        w.c_depth * self.depth_abs + w.c_missing * self.missing_pixels as f64 + w.c_occ * self.protrusion
    }
}

pub fn fit_terms(render: &RenderResult, observed: &DepthImage, region: &Mask) -> Result<FitTerms> {
    let (w, h) = (observed.width(), observed.height());
    render.depth.check_same_size(w, h)?;
    render.mask.check_same_size(w, h)?;
    region.check_same_size(w, h)?;

    let mut terms = FitTerms::default();
    let obs = observed.as_slice();
    let rendered = render.depth.as_slice();
    for (j, (&in_region, &covered)) in region.as_slice().iter().zip(render.mask.as_slice()).enumerate() {
        match (in_region, covered) {
            (true, false) => terms.missing_pixels += 1,
            (true, true) => {
                if let Some(o) = valid(obs[j]) {
                    terms.depth_abs += (o - rendered[j]).abs();
                }
            }
            (false, true) => {
                if let Some(o) = valid(obs[j]) {
                    terms.protrusion += (rendered[j] - o).max(0.0);
                }
            }
            (false, false) => {}
        }
    }
    Ok(terms)
}

#[inline]
fn valid(d: f64) -> Option<f64> {
    crate::geometry::is_valid_depth(d).then_some(d)
}

/// Depth fitting cost of a rendered model against observed depth over a
/// region mask.
///
/// Charges `c_depth * |observed - rendered|` on region pixels the model
/// covers, `c_missing` per region pixel it leaves uncovered, and
/// `c_occ * max(rendered - observed, 0)` on covered pixels outside the
/// region. Pixels without observed depth only ever pay the missing charge.
pub fn fitting_cost(render: &RenderResult, observed: &DepthImage, region: &Mask, w: &FitWeights) -> Result<f64> {
    Ok(fit_terms(render, observed, region)?.weighted(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn img(w: usize, h: usize, vals: &[f64]) -> DepthImage {
        DepthImage::from_vec(w, h, vals.to_vec()).unwrap()
    }

    #[test]
    fn perfect_fit_costs_nothing() {
        let obs = img(3, 1, &[2.0, 2.5, 4.0]);
        let render = RenderResult::from_depth(img(3, 1, &[2.0, 2.5, f64::NAN]));
        let region = Mask::from_vec(3, 1, vec![true, true, false]).unwrap();
        assert_eq!(
            fitting_cost(&render, &obs, &region, &FitWeights::ANNOTATION).unwrap(),
            0.0
        );
    }

    #[test]
    fn protrusion_outside_region() {
        let obs = img(1, 1, &[2.5]);
        let render = RenderResult::from_depth(img(1, 1, &[3.0]));
        let region = Mask::new(1, 1);
        let w = FitWeights::RETRIEVAL;
        assert_relative_eq!(fitting_cost(&render, &obs, &region, &w).unwrap(), 0.5 * w.c_occ);
        // rendering in front of the observation is free outside the region
        let render = RenderResult::from_depth(img(1, 1, &[2.0]));
        assert_eq!(fitting_cost(&render, &obs, &region, &w).unwrap(), 0.0);
    }

    #[test]
    fn missing_observation_only_pays_missing_charge() {
        let obs = img(3, 1, &[f64::NAN, f64::NAN, f64::NAN]);
        let render = RenderResult::from_depth(img(3, 1, &[1.0, f64::NAN, 1.0]));
        let region = Mask::from_vec(3, 1, vec![true, true, false]).unwrap();
        let w = FitWeights::ANNOTATION;
        assert_relative_eq!(fitting_cost(&render, &obs, &region, &w).unwrap(), w.c_missing);
    }

    #[test]
    fn size_mismatch() {
        let obs = img(2, 1, &[1.0, 1.0]);
        let render = RenderResult::from_depth(img(1, 1, &[1.0]));
        assert!(fitting_cost(&render, &obs, &Mask::new(2, 1), &FitWeights::ANNOTATION).is_err());
    }
}
