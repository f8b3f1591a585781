use crate::error::{Error, Result};
use crate::geometry::DepthImage;

/// Mean of `|gt - pred| / gt` over pixels where both depths are present.
pub fn relative_depth_error(pred: &DepthImage, gt: &DepthImage) -> Result<f64> {
    pred.check_same_size(gt.width(), gt.height())?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for j in 0..gt.len() {
        if let (Some(p), Some(g)) = (pred.at(j), gt.at(j)) {
            sum += (g - p).abs() / g;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoValidPixels);
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_is_zero() {
        let gt = DepthImage::from_vec(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(relative_depth_error(&gt, &gt).unwrap(), 0.0);
    }

    #[test]
    fn uniform_scaling() {
        let gt = DepthImage::from_vec(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let pred = gt.map(|d| 1.1 * d);
        assert_relative_eq!(relative_depth_error(&pred, &gt).unwrap(), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn nothing_to_compare() {
        let gt = DepthImage::missing(2, 2);
        assert!(relative_depth_error(&gt, &gt).is_err());
    }
}
