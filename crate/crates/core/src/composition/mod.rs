//! Candidate ranking, proposal pruning, and scene selection.

mod candidate;
mod problem;
mod prune;
mod search;

pub use candidate::{candidate_energy, Candidate, CandidateSpec, SelectionWeights, LOG_FLOOR, NUM_CLASSES};
pub use problem::{selection_cost, CostBreakdown, SelectionProblem};
pub use prune::{prune_proposals, PruneParams};
pub use search::{
    brute_force_compose, compose_scene, compose_scene_traced, SceneHypothesis, SearchTrace, MAX_BRUTE_FORCE_ITEMS,
    MAX_BRUTE_FORCE_OBJECTS,
};
