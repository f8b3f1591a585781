use super::MetricReport;
use crate::error::Result;
use crate::geometry::{CameraIntrinsics, DepthImage, Mask};
use crate::layout::{render_layouts, LayoutPlane};

/// Observed depth nearer than the layout by more than this fraction of the
/// layout depth marks the layout as occluded.
pub const OCCLUSION_RATIO: f64 = 0.03;

/// Pixels where `observed` is in front of `layout_depth` by more than
/// [`OCCLUSION_RATIO`].
pub fn occluded_mask(observed: &DepthImage, layout_depth: &DepthImage) -> Result<Mask> {
    observed.check_same_size(layout_depth.width(), layout_depth.height())?;
    let data = (0..observed.len())
        .map(|j| match (observed.at(j), layout_depth.at(j)) {
            (Some(o), Some(l)) => l - o > OCCLUSION_RATIO * l,
            _ => false,
        })
        .collect();
    Mask::from_vec(observed.width(), observed.height(), data)
}

/// Accumulates a mean overall and per visibility class.
#[derive(Default)]
struct SplitMean {
    sum: [f64; 2],
    n: [usize; 2],
}

impl SplitMean {
    fn add(&mut self, occluded: bool, x: f64) {
        self.sum[occluded as usize] += x;
        self.n[occluded as usize] += 1;
    }

    fn write(&self, report: &mut MetricReport, name: &str) {
        let total = self.n[0] + self.n[1];
        if total > 0 {
            report.insert(name, (self.sum[0] + self.sum[1]) / total as f64);
        }
        for (i, part) in ["visible", "occluded"].iter().enumerate() {
            if self.n[i] > 0 {
                report.insert(format!("{name}.{part}"), self.sum[i] / self.n[i] as f64);
            }
        }
    }
}

fn occlusion(observed: Option<&DepthImage>, gt_depth: &DepthImage) -> Result<Option<Mask>> {
    observed.map(|o| occluded_mask(o, gt_depth)).transpose()
}

/// Fraction of pixels whose front-most predicted layout category differs
/// from the ground truth's, over pixels the ground truth labels. With an
/// observed depth image the error is also split into visible and occluded
/// pixels.
pub fn layout_pixel_error(
    pred: &[LayoutPlane],
    gt: &[LayoutPlane],
    observed: Option<&DepthImage>,
    k: &CameraIntrinsics,
) -> Result<MetricReport> {
    let pr = render_layouts(pred, k);
    let gr = render_layouts(gt, k);
    let occluded = occlusion(observed, &gr.depth)?;
    let mut acc = SplitMean::default();
    let mut counts = [0usize; 2];
    for j in 0..k.num_pixels() {
        let Some(g) = gr.category_at(gt, j) else {
            continue;
        };
        let occ = occluded.as_ref().is_some_and(|m| m.at(j));
        let wrong = pr.category_at(pred, j) != Some(g);
        acc.add(occ, wrong as u8 as f64);
        counts[occ as usize] += 1;
    }
    let mut report = MetricReport::default();
    acc.write(&mut report, "pixel_error");
    report.insert("pixels.visible", counts[0] as f64);
    report.insert("pixels.occluded", counts[1] as f64);
    Ok(report)
}

/// Mean absolute difference between predicted and ground-truth layout depth
/// (meters) where both render, and, given the observed depth, the sensor
/// baseline: mean absolute difference between observed depth and
/// ground-truth layout depth.
pub fn layout_depth_error(
    pred: &[LayoutPlane],
    gt: &[LayoutPlane],
    observed: Option<&DepthImage>,
    k: &CameraIntrinsics,
) -> Result<MetricReport> {
    let pr = render_layouts(pred, k);
    let gr = render_layouts(gt, k);
    let occluded = occlusion(observed, &gr.depth)?;
    let mut model = SplitMean::default();
    let mut sensor = SplitMean::default();
    for j in 0..k.num_pixels() {
        let Some(g) = gr.depth.at(j) else { continue };
        let occ = occluded.as_ref().is_some_and(|m| m.at(j));
        if let Some(p) = pr.depth.at(j) {
            model.add(occ, (p - g).abs());
        }
        if let Some(o) = observed.and_then(|o| o.at(j)) {
            sensor.add(occ, (o - g).abs());
        }
    }
    let mut report = MetricReport::default();
    model.write(&mut report, "depth_error");
    sensor.write(&mut report, "sensor_error");
    Ok(report)
}
