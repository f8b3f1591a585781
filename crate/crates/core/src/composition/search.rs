use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::problem::{CostBreakdown, SelectionProblem, SelectionState};
use crate::error::{Error, Result};
use crate::geometry::DepthImage;

/// Largest object pool [`brute_force_compose`] accepts.
pub const MAX_BRUTE_FORCE_OBJECTS: usize = 20;
/// Largest total item count (objects plus layouts) for exhaustive search.
pub const MAX_BRUTE_FORCE_ITEMS: usize = 24;

/// Improvements smaller than this are treated as rounding noise.
const MIN_GAIN: f64 = 1e-9;

/// A chosen subset of candidates and layouts.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneHypothesis {
    /// One flag per object candidate, in pool order, then one per layout.
    pub selected: Vec<bool>,
    pub n_objects: usize,
    pub composite_render: DepthImage,
    /// Unweighted selection cost, recomputed from scratch.
    pub cost: f64,
    pub terms: CostBreakdown,
}

impl SceneHypothesis {
    pub fn from_selection(problem: &SelectionProblem, selected: Vec<bool>) -> Result<Self> {
        let terms = problem.breakdown(&selected)?;
        Ok(SceneHypothesis {
            composite_render: problem.composite(&selected),
            n_objects: problem.n_objects(),
            cost: terms.total(1.0),
            terms,
            selected,
        })
    }

    pub fn objects(&self) -> &[bool] {
        &self.selected[..self.n_objects]
    }

    pub fn layouts(&self) -> &[bool] {
        &self.selected[self.n_objects..]
    }
}

/// Costs after each search stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    /// Greedy stage result measured with the unweighted cost.
    pub greedy: f64,
    pub hill_climb: f64,
    pub swap: f64,
}

/// Three-stage search from the empty selection: greedy addition under a
/// depth-weighted cost, hill climbing over single additions and removals,
/// then one pass of swaps that add an unselected layout or strong object
/// while dropping the selected models it conflicts with.
pub fn compose_scene(problem: &SelectionProblem, greedy_depth_factor: f64, swap_subset: usize) -> SceneHypothesis {
    compose_scene_traced(problem, greedy_depth_factor, swap_subset).0
}

pub fn compose_scene_traced(
    problem: &SelectionProblem,
    greedy_depth_factor: f64,
    swap_subset: usize,
) -> (SceneHypothesis, SearchTrace) {
    let mut state = SelectionState::empty(problem);

    // stage 1: additions only, depth term emphasized
    loop {
        let best = best_move(&state, |i, s| !s.selected[i], greedy_depth_factor);
        match best {
            Some((i, gain)) if gain < -MIN_GAIN => {
                state.toggle(i);
            }
            _ => break,
        }
    }
    state.refresh();
    let greedy = state.terms.total(1.0);

    // stage 2: best single add or remove
    loop {
        match best_move(&state, |_, _| true, 1.0) {
            Some((i, gain)) if gain < -MIN_GAIN => {
                state.toggle(i);
            }
            _ => break,
        }
    }
    state.refresh();
    let hill_climb = state.terms.total(1.0);

    // stage 3: add-and-evict swaps
    for item in swap_order(problem, &state.selected, swap_subset) {
        if state.selected[item] {
            continue;
        }
        let before = state.terms.total(1.0);
        let evicted: Vec<usize> = (0..problem.n_items())
            .filter(|&other| state.selected[other] && conflicts(problem, item, other))
            .collect();
        for &e in &evicted {
            state.toggle(e);
        }
        state.toggle(item);
        if state.terms.total(1.0) < before - MIN_GAIN {
            state.refresh();
        } else {
            state.toggle(item);
            for &e in evicted.iter().rev() {
                state.toggle(e);
            }
            state.refresh();
        }
    }
    state.refresh();
    let swap = state.terms.total(1.0);

    let hypothesis = SceneHypothesis::from_selection(problem, state.selected).expect("sized");
    (
        hypothesis,
        SearchTrace {
            greedy,
            hill_climb,
            swap,
        },
    )
}

/// Lowest-delta toggle among the allowed items, lowest index on ties.
fn best_move(
    state: &SelectionState,
    allowed: impl Fn(usize, &SelectionState) -> bool + Sync,
    depth_factor: f64,
) -> Option<(usize, f64)> {
    let n = state.selected.len();
    let deltas: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| allowed(i, state).then(|| state.toggle_delta(i).total(depth_factor)))
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, d) in deltas.into_iter().enumerate() {
        if let Some(d) = d {
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((i, d));
            }
        }
    }
    best
}

/// Unselected layouts in order, then up to `subset` unselected objects by
/// ascending candidate energy (id on ties).
fn swap_order(problem: &SelectionProblem, selected: &[bool], subset: usize) -> Vec<usize> {
    let n_obj = problem.n_objects();
    let mut objects: Vec<usize> = (0..n_obj).filter(|&i| !selected[i]).collect();
    objects.sort_by(|&a, &b| {
        problem.energies[a]
            .total_cmp(&problem.energies[b])
            .then(problem.ids[a].cmp(&problem.ids[b]))
    });
    objects.truncate(subset);
    (n_obj..problem.n_items())
        .filter(|&i| !selected[i])
        .chain(objects)
        .collect()
}

/// Whether two items compete for the same part of the scene: objects that
/// share region pixels or volume, layouts whose surfaces cover a common
/// pixel.
fn conflicts(problem: &SelectionProblem, a: usize, b: usize) -> bool {
    let n_obj = problem.n_objects();
    match (a < n_obj, b < n_obj) {
        (true, true) => problem.regions_overlap(a, b) || problem.pair_overlap(a, b) > 0.0,
        (false, false) => problem.render_overlaps(a, b),
        _ => false,
    }
}

/// Exact minimizer over every subset, by Gray-code enumeration with
/// incremental cost updates. Ties go to the lexicographically smallest
/// selection vector (`false < true`, first item most significant).
pub fn brute_force_compose(problem: &SelectionProblem) -> Result<SceneHypothesis> {
    let n = problem.n_items();
    if problem.n_objects() > MAX_BRUTE_FORCE_OBJECTS || n > MAX_BRUTE_FORCE_ITEMS {
        return Err(Error::PoolTooLarge(problem.n_objects(), MAX_BRUTE_FORCE_OBJECTS));
    }
    let mut state = SelectionState::empty(problem);
    let mut best_sel = state.selected.clone();
    let mut best_cost = state.terms.total(1.0);
    for step in 1u64..(1u64 << n) {
        state.toggle(step.trailing_zeros() as usize);
        if step % 4096 == 0 {
            state.refresh();
        }
        let approx = state.terms.total(1.0);
        // incremental totals drift slightly, so confirm near-ties exactly
        if approx <= best_cost + 1e-7 * best_cost.abs().max(1.0) {
            let exact = problem.breakdown(&state.selected)?.total(1.0);
            let better = match exact.total_cmp(&best_cost) {
                Ordering::Less => true,
                Ordering::Equal => state.selected < best_sel,
                Ordering::Greater => false,
            };
            if better {
                best_cost = exact;
                best_sel.clone_from(&state.selected);
            }
        }
    }
    SceneHypothesis::from_selection(problem, best_sel)
}
