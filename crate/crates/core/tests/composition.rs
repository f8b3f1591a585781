use proptest::prelude::*;
use scenecomp::composition::{
    brute_force_compose, compose_scene_traced, prune_proposals, Candidate, PruneParams, SelectionProblem,
    SelectionWeights,
};
use scenecomp::synth::{synth_scene, SynthParams, SynthScene};

fn scene(seed: u64) -> SynthScene {
    synth_scene(&SynthParams {
        seed,
        width: 48,
        height: 36,
        min_visible_pixels: 6,
        object_count: [1, 3],
        distractors: 2,
        ..SynthParams::default()
    })
    .unwrap()
}

fn candidates(s: &SynthScene) -> Vec<Candidate> {
    s.pool
        .specs()
        .into_iter()
        .map(|c| Candidate::new(c, &s.scene.camera).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn incremental_terms_match_a_fresh_evaluation(seed in 0u64..400, bits in any::<u32>()) {
        let s = scene(seed);
        let cands = candidates(&s);
        let w = SelectionWeights::default();
        let p = SelectionProblem::new(&cands, &s.scene.layouts, &s.depth, &s.p_object, &s.scene.camera, &w).unwrap();
        let sel: Vec<bool> = (0..p.n_items()).map(|i| bits >> (i % 32) & 1 == 1).collect();
        let a = p.breakdown(&sel).unwrap();
        let b = p.breakdown_incremental(&sel).unwrap();
        for (x, y) in [(a.depth, b.depth), (a.object_prob, b.object_prob),
                       (a.region_overlap, b.region_overlap), (a.volume_overlap, b.volume_overlap)] {
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn search_stages_never_raise_the_cost(seed in 0u64..400) {
        let s = scene(seed);
        let cands = candidates(&s);
        let w = SelectionWeights::default();
        let p = SelectionProblem::new(&cands, &s.scene.layouts, &s.depth, &s.p_object, &s.scene.camera, &w).unwrap();
        let (h, trace) = compose_scene_traced(&p, w.greedy_depth_factor, w.swap_subset);
        prop_assert!(trace.hill_climb <= trace.greedy + 1e-9);
        prop_assert!(trace.swap <= trace.hill_climb + 1e-9);
        prop_assert!((h.cost - p.breakdown(&h.selected).unwrap().total(1.0)).abs() < 1e-9 * h.cost.abs().max(1.0));
        let best = brute_force_compose(&p).unwrap();
        prop_assert!(best.cost <= h.cost + 1e-9);
    }

    #[test]
    fn pruning_returns_a_subset_in_a_stable_order(seed in 0u64..400, keep in 1usize..4) {
        let s = scene(seed);
        let pool = s.pool.specs();
        let params = PruneParams { keep_per_region: keep, ..PruneParams::default() };
        let w = SelectionWeights::default();
        let out = prune_proposals(&pool, &params, &w);
        prop_assert!(out.iter().all(|c| pool.contains(c)));
        let mut ids: Vec<u64> = out.iter().map(|c| c.id).collect();
        ids.dedup();
        prop_assert_eq!(ids.len(), out.len());
        prop_assert_eq!(&out, &prune_proposals(&pool, &params, &w));
    }
}

#[test]
fn pool_order_does_not_change_the_optimum() {
    let s = scene(7);
    let w = SelectionWeights::default();
    let k = s.scene.camera;
    let cands = candidates(&s);
    let mut reversed = cands.clone();
    reversed.reverse();
    let a = SelectionProblem::new(&cands, &s.scene.layouts, &s.depth, &s.p_object, &k, &w).unwrap();
    let b = SelectionProblem::new(&reversed, &s.scene.layouts, &s.depth, &s.p_object, &k, &w).unwrap();
    let (ba, bb) = (brute_force_compose(&a).unwrap(), brute_force_compose(&b).unwrap());
    assert!((ba.cost - bb.cost).abs() < 1e-9);
}
