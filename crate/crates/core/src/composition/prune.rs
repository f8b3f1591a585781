use serde::{Deserialize, Serialize};

use super::candidate::{candidate_energy, CandidateSpec, SelectionWeights};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PruneParams {
    /// Regions overlapping a kept region above this IoU are dropped.
    pub max_iou: f64,
    /// Roughly this many regions survive the non-object threshold.
    pub target_count: usize,
    pub classes_per_region: usize,
    pub shapes_per_class: usize,
    /// Candidates kept per region after ranking by energy.
    pub keep_per_region: usize,
}

impl Default for PruneParams {
    fn default() -> Self {
        PruneParams {
            max_iou: 0.9,
            target_count: 190,
            classes_per_region: 2,
            shapes_per_class: 5,
            keep_per_region: 2,
        }
    }
}

/// A region proposal: candidates sharing one mask and non-object
/// probability, as indices into the pool.
struct Proposal {
    members: Vec<usize>,
    non_object_prob: f64,
    first_id: u64,
}

fn group(pool: &[CandidateSpec]) -> Vec<Proposal> {
    let mut proposals: Vec<Proposal> = Vec::new();
    for (i, c) in pool.iter().enumerate() {
        let same = proposals.iter_mut().find(|p| {
            let rep = &pool[p.members[0]];
            rep.non_object_prob == c.non_object_prob && rep.region == c.region
        });
        match same {
            Some(p) => {
                p.members.push(i);
                p.first_id = p.first_id.min(c.id);
            }
            None => proposals.push(Proposal {
                members: vec![i],
                non_object_prob: c.non_object_prob,
                first_id: c.id,
            }),
        }
    }
    proposals
}

/// Reduces a candidate pool to a few promising shapes per region.
///
/// Candidates with the same region mask and non-object probability form one
/// region proposal. Proposals are suppressed greedily by region IoU, lowest
/// non-object probability first; the `target_count` most object-like
/// survivors are kept (plus any tied with the last). Within each surviving
/// region the top classes of its class distribution each contribute their
/// best-fitting shapes, and the lowest-energy candidates among those are
/// returned. Output is ordered by region rank, then energy, then id.
pub fn prune_proposals(pool: &[CandidateSpec], params: &PruneParams, w: &SelectionWeights) -> Vec<CandidateSpec> {
    let mut proposals = group(pool);
    proposals.sort_by(|a, b| {
        a.non_object_prob
            .total_cmp(&b.non_object_prob)
            .then(a.first_id.cmp(&b.first_id))
    });

    let mut kept: Vec<Proposal> = Vec::new();
    for p in proposals {
        let region = &pool[p.members[0]].region;
        let suppressed = kept
            .iter()
            .any(|k| pool[k.members[0]].region.iou(region) > params.max_iou);
        if !suppressed {
            kept.push(p);
        }
    }
    if kept.len() > params.target_count && params.target_count > 0 {
        let threshold = kept[params.target_count - 1].non_object_prob;
        kept.retain(|p| p.non_object_prob <= threshold);
    } else if params.target_count == 0 {
        kept.clear();
    }

    let mut out = Vec::new();
    for p in kept {
        let class_probs = &pool[p.members[0]].class_probs;
        let mut classes: Vec<usize> = (0..class_probs.len()).collect();
        classes.sort_by(|&a, &b| class_probs[b].total_cmp(&class_probs[a]).then(a.cmp(&b)));
        classes.truncate(params.classes_per_region);

        let mut shortlist: Vec<usize> = Vec::new();
        for class in classes {
            let mut shapes: Vec<usize> = p
                .members
                .iter()
                .copied()
                .filter(|&i| pool[i].class_id == class)
                .collect();
            shapes.sort_by(|&a, &b| {
                pool[a]
                    .fitting_energy
                    .total_cmp(&pool[b].fitting_energy)
                    .then(pool[a].id.cmp(&pool[b].id))
            });
            shortlist.extend(shapes.into_iter().take(params.shapes_per_class));
        }
        let mut ranked: Vec<(f64, u64, usize)> = shortlist
            .into_iter()
            .map(|i| (candidate_energy(&pool[i], w), pool[i].id, i))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out.extend(
            ranked
                .into_iter()
                .take(params.keep_per_region)
                .map(|(_, _, i)| pool[i].clone()),
        );
    }
    out
}
