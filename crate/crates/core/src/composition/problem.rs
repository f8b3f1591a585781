use serde::{Deserialize, Serialize};

use super::candidate::{candidate_energy, Candidate, SelectionWeights};
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthImage, ProbMap};
use crate::layout::LayoutPlane;

const NONE: u32 = u32::MAX;

/// The four terms of the selection cost, unweighted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// Clipped log-ratio depth error of the composite render.
    pub depth: f64,
    /// Disagreement between the front-most model type and the object
    /// probability map.
    pub object_prob: f64,
    /// Region pixels claimed by more than one selected object.
    pub region_overlap: f64,
    /// Summed per-pixel length of intersecting depth intervals.
    pub volume_overlap: f64,
}

impl CostBreakdown {
    /// Total with the depth term scaled by `depth_factor`.
    pub fn total(&self, depth_factor: f64) -> f64 {
        depth_factor * self.depth + self.object_prob + self.region_overlap + self.volume_overlap
    }

    fn add(&mut self, other: &CostBreakdown, sign: f64) {
        self.depth += sign * other.depth;
        self.object_prob += sign * other.object_prob;
        self.region_overlap += sign * other.region_overlap;
        self.volume_overlap += sign * other.volume_overlap;
    }
}

/// Selection cost of a scene, with every per-pixel relation between
/// candidates precomputed.
///
/// Items are the object candidates in the given order followed by the layout
/// planes. Each pixel keeps the items that render there sorted front to back
/// (depth, then item index), so the composite depth under any selection is
/// the first selected entry of the pixel's list.
#[derive(Clone, Debug)]
pub struct SelectionProblem {
    pub(crate) width: usize,
    pub(crate) height: usize,
    pub(crate) n_objects: usize,
    pub(crate) n_layouts: usize,
    observed: Vec<f64>,
    p_object: Vec<f64>,
    clip_base: f64,
    starts: Vec<u32>,
    entries: Vec<(f64, u32)>,
    item_pixels: Vec<Vec<u32>>,
    region_pixels: Vec<Vec<u32>>,
    /// Volume overlap between object pairs, row-major `n_objects^2`.
    overlap: Vec<f64>,
    pub(crate) ids: Vec<u64>,
    pub(crate) energies: Vec<f64>,
}

impl SelectionProblem {
    pub fn new(
        candidates: &[Candidate],
        layouts: &[LayoutPlane],
        observed: &DepthImage,
        p_object: &ProbMap,
        k: &CameraIntrinsics,
        w: &SelectionWeights,
    ) -> Result<Self> {
        w.validate()?;
        k.check_size(observed.width(), observed.height())?;
        p_object.check_same_size(k.width, k.height)?;
        for c in candidates {
            c.render.depth.check_same_size(k.width, k.height)?;
            c.depth_range.near.check_same_size(k.width, k.height)?;
            c.spec.region.check_same_size(k.width, k.height)?;
        }
        if candidates.len() + layouts.len() >= NONE as usize {
            return Err(Error::InvalidInput("too many selection items".into()));
        }
        let n_pix = k.num_pixels();
        let n_objects = candidates.len();

        let layout_renders: Vec<DepthImage> = layouts.iter().map(|l| l.render(k).depth).collect();
        let item_depth = |item: usize| -> &DepthImage {
            if item < n_objects {
                &candidates[item].render.depth
            } else {
                &layout_renders[item - n_objects]
            }
        };
        let n_items = n_objects + layouts.len();

        let mut per_pixel: Vec<Vec<(f64, u32)>> = vec![Vec::new(); n_pix];
        let mut item_pixels = vec![Vec::new(); n_items];
        for (item, pixels) in item_pixels.iter_mut().enumerate() {
            let depth = item_depth(item);
            for (j, list) in per_pixel.iter_mut().enumerate() {
                if let Some(d) = depth.at(j) {
                    list.push((d, item as u32));
                    pixels.push(j as u32);
                }
            }
        }
        let mut starts = Vec::with_capacity(n_pix + 1);
        let mut entries = Vec::new();
        starts.push(0u32);
        for mut list in per_pixel {
            list.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            entries.extend(list);
            starts.push(entries.len() as u32);
        }

        let region_pixels = candidates
            .iter()
            .map(|c| c.spec.region.indices().map(|j| j as u32).collect())
            .collect();

        let stride = w.overlap_stride;
        let sample_weight = (stride * stride) as f64;
        let mut overlap = vec![0.0; n_objects * n_objects];
        for a in 0..n_objects {
            for b in a + 1..n_objects {
                let ra = &candidates[a].depth_range;
                let rb = &candidates[b].depth_range;
                let mut sum = 0.0;
                for v in (0..k.height).step_by(stride) {
                    for u in (0..k.width).step_by(stride) {
                        let j = v * k.width + u;
                        sum += interval_overlap(ra.at(j), rb.at(j));
                    }
                }
                overlap[a * n_objects + b] = sample_weight * sum;
                overlap[b * n_objects + a] = sample_weight * sum;
            }
        }

        Ok(SelectionProblem {
            width: k.width,
            height: k.height,
            n_objects,
            n_layouts: layouts.len(),
            observed: observed.as_slice().to_vec(),
            p_object: p_object.as_slice().to_vec(),
            clip_base: w.depth_clip_base,
            starts,
            entries,
            item_pixels,
            region_pixels,
            overlap,
            ids: candidates.iter().map(|c| c.id()).collect(),
            energies: candidates.iter().map(|c| candidate_energy(&c.spec, w)).collect(),
        })
    }

    #[inline]
    pub fn n_items(&self) -> usize {
        self.n_objects + self.n_layouts
    }

    #[inline]
    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    #[inline]
    pub fn n_layouts(&self) -> usize {
        self.n_layouts
    }

    #[inline]
    fn is_object(&self, item: u32) -> bool {
        (item as usize) < self.n_objects
    }

    #[inline]
    fn pixel_entries(&self, j: usize) -> &[(f64, u32)] {
        &self.entries[self.starts[j] as usize..self.starts[j + 1] as usize]
    }

    /// Depth and object-probability contributions of pixel `j` when `front`
    /// is its front-most selected entry.
    #[inline]
    fn pixel_terms(&self, j: usize, front: Option<(f64, u32)>) -> (f64, f64) {
        let obs = self.observed[j];
        let depth = match front {
            _ if !(obs.is_finite() && obs > 0.0) => 0.0,
            None => 1.0,
            Some((d, _)) => ((d / obs).log2().abs() - self.clip_base).clamp(0.0, 1.0),
        };
        let is_object = front.is_some_and(|(_, item)| self.is_object(item));
        let prob = ((is_object as u8 as f64) - self.p_object[j]).abs();
        (depth, prob)
    }

    fn front(&self, j: usize, selected: &[bool]) -> Option<(f64, u32)> {
        self.pixel_entries(j)
            .iter()
            .find(|(_, item)| selected[*item as usize])
            .copied()
    }

    /// Volume overlap between two objects, as used by the cost.
    pub fn pair_overlap(&self, a: usize, b: usize) -> f64 {
        self.overlap[a * self.n_objects + b]
    }

    /// Cost terms of a selection, computed from scratch.
    pub fn breakdown(&self, selected: &[bool]) -> Result<CostBreakdown> {
        if selected.len() != self.n_items() {
            return Err(Error::InvalidInput(format!(
                "selection has {} entries, expected {}",
                selected.len(),
                self.n_items()
            )));
        }
        let mut t = CostBreakdown::default();
        let mut count = vec![0u32; self.observed.len()];
        for j in 0..self.observed.len() {
            let (d, p) = self.pixel_terms(j, self.front(j, selected));
            t.depth += d;
            t.object_prob += p;
        }
        for (i, pixels) in self.region_pixels.iter().enumerate() {
            if selected[i] {
                for &j in pixels {
                    count[j as usize] += 1;
                }
            }
        }
        t.region_overlap = count.iter().map(|&c| c.saturating_sub(1) as f64).sum();
        for a in 0..self.n_objects {
            for b in a + 1..self.n_objects {
                if selected[a] && selected[b] {
                    t.volume_overlap += self.pair_overlap(a, b);
                }
            }
        }
        Ok(t)
    }

    /// Same terms as [`breakdown`](Self::breakdown), accumulated through
    /// single-item toggles the way the search does: every item is switched on
    /// in order, then the unselected ones are switched off again.
    pub fn breakdown_incremental(&self, selected: &[bool]) -> Result<CostBreakdown> {
        if selected.len() != self.n_items() {
            return Err(Error::InvalidInput(format!(
                "selection has {} entries, expected {}",
                selected.len(),
                self.n_items()
            )));
        }
        let mut state = SelectionState::empty(self);
        for i in 0..self.n_items() {
            state.toggle(i);
        }
        for i in (0..self.n_items()).rev() {
            if !selected[i] {
                state.toggle(i);
            }
        }
        Ok(state.terms)
    }

    /// Composite z-buffer depth of the selected items.
    pub fn composite(&self, selected: &[bool]) -> DepthImage {
        let data = (0..self.observed.len())
            .map(|j| self.front(j, selected).map_or(f64::NAN, |(d, _)| d))
            .collect();
        DepthImage::from_vec(self.width, self.height, data).expect("sized")
    }

    /// Candidate energies of the object items.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Items whose individual renders share at least one pixel with `item`.
    pub(crate) fn render_overlaps(&self, item: usize, other: usize) -> bool {
        let a = &self.item_pixels[item];
        let b = &self.item_pixels[other];
        let (mut i, mut k) = (0, 0);
        while i < a.len() && k < b.len() {
            match a[i].cmp(&b[k]) {
                std::cmp::Ordering::Equal => return true,
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => k += 1,
            }
        }
        false
    }

    pub(crate) fn regions_overlap(&self, a: usize, b: usize) -> bool {
        let ra = &self.region_pixels[a];
        let rb = &self.region_pixels[b];
        let (mut i, mut k) = (0, 0);
        while i < ra.len() && k < rb.len() {
            match ra[i].cmp(&rb[k]) {
                std::cmp::Ordering::Equal => return true,
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => k += 1,
            }
        }
        false
    }
}

/// Length of the intersection of two `(near, far)` intervals.
#[inline]
pub(crate) fn interval_overlap(a: Option<(f64, f64)>, b: Option<(f64, f64)>) -> f64 {
    match (a, b) {
        (Some((na, fa)), Some((nb, fb))) => (fa.min(fb) - na.max(nb)).max(0.0),
        _ => 0.0,
    }
}

/// Incrementally maintained selection with its cost terms.
#[derive(Clone, Debug)]
pub(crate) struct SelectionState<'a> {
    problem: &'a SelectionProblem,
    pub selected: Vec<bool>,
    front: Vec<u32>,
    count: Vec<u32>,
    pub terms: CostBreakdown,
}

impl<'a> SelectionState<'a> {
    pub fn empty(problem: &'a SelectionProblem) -> Self {
        let selected = vec![false; problem.n_items()];
        let terms = problem.breakdown(&selected).expect("sized");
        let n_pix = problem.observed.len();
        SelectionState {
            problem,
            selected,
            front: vec![NONE; n_pix],
            count: vec![0; n_pix],
            terms,
        }
    }

    #[inline]
    fn front_entry(&self, j: usize) -> Option<(f64, u32)> {
        let f = self.front[j];
        if f == NONE {
            return None;
        }
        self.problem.pixel_entries(j).iter().find(|(_, it)| *it == f).copied()
    }

    /// Front-most entry of pixel `j` with `item` toggled.
    #[inline]
    fn front_with_toggle(&self, j: usize, item: u32) -> Option<(f64, u32)> {
        let on = !self.selected[item as usize];
        self.problem
            .pixel_entries(j)
            .iter()
            .find(|(_, it)| if *it == item { on } else { self.selected[*it as usize] })
            .copied()
    }

    /// Change of each cost term if `item` were toggled.
    pub fn toggle_delta(&self, item: usize) -> CostBreakdown {
        let p = self.problem;
        let adding = !self.selected[item];
        let sign = if adding { 1.0 } else { -1.0 };
        let mut d = CostBreakdown::default();
        for &j in &p.item_pixels[item] {
            let j = j as usize;
            let old = self.front_entry(j);
            let new = self.front_with_toggle(j, item as u32);
            if old.map(|e| e.1) != new.map(|e| e.1) {
                let (od, op) = p.pixel_terms(j, old);
                let (nd, np) = p.pixel_terms(j, new);
                d.depth += nd - od;
                d.object_prob += np - op;
            }
        }
        if item < p.n_objects {
            for &j in &p.region_pixels[item] {
                // claims beyond the first cost one each
                let c = self.count[j as usize];
                if adding && c >= 1 {
                    d.region_overlap += 1.0;
                } else if !adding && c >= 2 {
                    d.region_overlap -= 1.0;
                }
            }
            for other in 0..p.n_objects {
                if other != item && self.selected[other] {
                    d.volume_overlap += sign * p.pair_overlap(item, other);
                }
            }
        }
        d
    }

    pub fn toggle(&mut self, item: usize) -> CostBreakdown {
        let delta = self.toggle_delta(item);
        let p = self.problem;
        for &j in &p.item_pixels[item] {
            let j = j as usize;
            self.front[j] = self.front_with_toggle(j, item as u32).map_or(NONE, |e| e.1);
        }
        let adding = !self.selected[item];
        if item < p.n_objects {
            for &j in &p.region_pixels[item] {
                if adding {
                    self.count[j as usize] += 1;
                } else {
                    self.count[j as usize] -= 1;
                }
            }
        }
        self.selected[item] = adding;
        self.terms.add(&delta, 1.0);
        delta
    }

    /// Recomputes the cost terms from scratch to shed accumulated rounding.
    pub fn refresh(&mut self) {
        self.terms = self.problem.breakdown(&self.selected).expect("sized");
    }
}

/// Selection cost of `selected` (objects in order, then layouts), unweighted.
pub fn selection_cost(
    selected: &[bool],
    candidates: &[Candidate],
    layouts: &[LayoutPlane],
    observed: &DepthImage,
    p_object: &ProbMap,
    k: &CameraIntrinsics,
    w: &SelectionWeights,
) -> Result<f64> {
    let problem = SelectionProblem::new(candidates, layouts, observed, p_object, k, w)?;
    Ok(problem.breakdown(selected)?.total(1.0))
}
