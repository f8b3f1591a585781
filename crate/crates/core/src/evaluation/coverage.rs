use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricReport;
use crate::error::{Error, Result};

/// Per-pixel instance ids (0 = unlabeled) with each instance's class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceLabels {
    pub width: usize,
    pub height: usize,
    pub instance: Vec<u32>,
    pub classes: BTreeMap<u32, usize>,
}

impl InstanceLabels {
    pub fn validate(&self) -> Result<()> {
        if self.instance.len() != self.width * self.height {
            return Err(Error::InvalidInput("instance map size mismatch".into()));
        }
        if let Some(id) = self
            .instance
            .iter()
            .find(|&&i| i != 0 && !self.classes.contains_key(&i))
        {
            return Err(Error::InvalidInput(format!("instance {id} has no class")));
        }
        Ok(())
    }

    fn class_at(&self, j: usize) -> Option<usize> {
        match self.instance[j] {
            0 => None,
            i => self.classes.get(&i).copied(),
        }
    }

    fn areas(&self) -> BTreeMap<u32, usize> {
        let mut areas = BTreeMap::new();
        for &i in &self.instance {
            if i != 0 {
                *areas.entry(i).or_default() += 1;
            }
        }
        areas
    }
}

/// Region coverage and semantic segmentation accuracy of predicted
/// instances against ground truth.
///
/// Coverage of a ground-truth instance is its best IoU with a predicted
/// instance of the same class; reported as the plain mean over instances and
/// the area-weighted mean. Semantic accuracy is the fraction of labeled
/// ground-truth pixels whose predicted class matches, averaged per pixel, per
/// class and per instance.
pub fn coverage_metrics(pred: &InstanceLabels, gt: &InstanceLabels) -> Result<MetricReport> {
    pred.validate()?;
    gt.validate()?;
    if pred.width != gt.width || pred.height != gt.height {
        return Err(Error::size((gt.width, gt.height), (pred.width, pred.height)));
    }
    let gt_area = gt.areas();
    let pred_area = pred.areas();
    let mut inter: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for (&g, &p) in gt.instance.iter().zip(&pred.instance) {
        if g != 0 && p != 0 {
            *inter.entry((g, p)).or_default() += 1;
        }
    }

    let mut coverage = BTreeMap::new();
    for (&g, &area) in &gt_area {
        let best = inter
            .range((g, 0)..=(g, u32::MAX))
            .filter(|((_, p), _)| pred.classes[p] == gt.classes[&g])
            .map(|(&(_, p), &n)| n as f64 / (area + pred_area[&p] - n) as f64)
            .fold(0.0, f64::max);
        coverage.insert(g, best);
    }

    let mut report = MetricReport::default();
    if !gt_area.is_empty() {
        let n = gt_area.len() as f64;
        let total_area: usize = gt_area.values().sum();
        report.insert("coverage.unweighted", coverage.values().sum::<f64>() / n);
        report.insert(
            "coverage.weighted",
            gt_area.iter().map(|(g, &a)| coverage[g] * a as f64).sum::<f64>() / total_area as f64,
        );

        let mut per_class: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        let mut per_instance: BTreeMap<u32, usize> = BTreeMap::new();
        let mut correct = 0usize;
        for j in 0..gt.instance.len() {
            let Some(c) = gt.class_at(j) else { continue };
            let ok = pred.class_at(j) == Some(c);
            let e = per_class.entry(c).or_default();
            e.1 += 1;
            if ok {
                e.0 += 1;
                correct += 1;
                *per_instance.entry(gt.instance[j]).or_default() += 1;
            }
        }
        report.insert("semantic.avg_pixel", correct as f64 / total_area as f64);
        report.insert(
            "semantic.avg_class",
            per_class.values().map(|(ok, n)| *ok as f64 / *n as f64).sum::<f64>() / per_class.len() as f64,
        );
        report.insert(
            "semantic.avg_instance",
            gt_area
                .iter()
                .map(|(g, &a)| per_instance.get(g).copied().unwrap_or(0) as f64 / a as f64)
                .sum::<f64>()
                / n,
        );
    }
    Ok(report)
}
