mod common;

use common::*;
use framesel_core::oracle::{brute_allocation, brute_allocation_own_path, lazy_vs_full};
use framesel_core::*;
use rand::Rng;

fn random_instance(seed: u64) -> (ConditionedKernel, SegmentPlan, usize) {
    let mut rng = rng(seed);
    let t = rng.random_range(1..=4);
    let m = rng.random_range(1..=5);
    let n = (t * m).min(14);
    let k = rng.random_range(1..=n.min(6));
    let emb = random_embeddings(&mut rng, n, 4);
    let lambda = [0.2, 1.0, 5.0][rng.random_range(0..3)];
    let spec = KernelSpec::default();
    let ck = ConditionedKernel::from_embeddings(&emb, &spec, &spec, lambda).unwrap();
    (ck, make_segments(n, m).unwrap(), k)
}

#[test]
fn dp_matches_exhaustive_allocation() {
    for seed in 0..150 {
        let (ck, plan, k) = random_instance(seed);
        let dp = allocate_and_select(&ck, &plan, k, DpOptions::default()).unwrap();
        let brute = brute_allocation(&ck, &plan, k).unwrap();
        assert!((dp.score - brute.score).abs() < 1e-10, "seed {seed}: {} vs {}", dp.score, brute.score);
        assert_eq!(dp.allocation, brute.allocation, "seed {seed}");
        assert_eq!(dp.trace, brute.trace, "seed {seed}");
    }
}

#[test]
fn own_path_exhaustive_never_below_dp() {
    for seed in 0..150 {
        let (ck, plan, k) = random_instance(seed);
        let dp = allocate_and_select(&ck, &plan, k, DpOptions::default()).unwrap();
        let own = brute_allocation_own_path(&ck, &plan, k).unwrap();
        assert!(own.score >= dp.score - 1e-10, "seed {seed}");
    }
}

#[test]
fn two_segment_example() {
    let mut rng = rng(42);
    let emb = random_embeddings(&mut rng, 8, 4);
    let spec = KernelSpec::default();
    let ck = ConditionedKernel::from_embeddings(&emb, &spec, &spec, 0.2).unwrap();
    let plan = make_segments(8, 4).unwrap();
    let dp = allocate_and_select(&ck, &plan, 4, DpOptions::default()).unwrap();
    let brute = brute_allocation(&ck, &plan, 4).unwrap();
    assert_eq!(dp.allocation.iter().sum::<usize>(), 4);
    assert!((dp.score - brute.score).abs() < 1e-10);
    let audit = score_of(&dp.trace, &ck, &plan).unwrap();
    assert!((audit - dp.score).abs() < 1e-8);
}

#[test]
fn audit_agrees_with_table() {
    for seed in 0..40 {
        let mut rng = rng(700 + seed);
        let emb = random_embeddings(&mut rng, 15, 5);
        let spec = KernelSpec::default();
        let ck = ConditionedKernel::from_embeddings(&emb, &spec, &spec, 0.5).unwrap();
        let plan = make_segments(15, 5).unwrap();
        let k = rng.random_range(1..=8);
        let dp = allocate_and_select(&ck, &plan, k, DpOptions::default()).unwrap();
        let audit = score_of(&dp.trace, &ck, &plan).unwrap();
        assert!((audit - dp.score).abs() < 1e-8, "seed {seed}");
        // replaying the chosen allocation reproduces the trace
        let replay = sequential_map_fixed_sizes(&ck, &plan, &dp.allocation).unwrap();
        assert_eq!(replay.trace, dp.trace);
        assert!((replay.score - dp.score).abs() < 1e-10);
    }
}

#[test]
fn table_reachability_and_budget() {
    for seed in 0..30 {
        let mut rng = rng(900 + seed);
        let n = rng.random_range(2..=40);
        let m = rng.random_range(1..=8);
        let emb = random_embeddings(&mut rng, n, 4);
        let spec = KernelSpec::default();
        let ck = ConditionedKernel::from_embeddings(&emb, &spec, &spec, 0.2).unwrap();
        let plan = make_segments(n, m).unwrap();
        let k = rng.random_range(1..=n.min(12));
        let dp = allocate_and_select(&ck, &plan, k, DpOptions::default()).unwrap();
        assert_eq!(dp.indices.len(), k);
        assert!(dp.indices.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(dp.allocation.len(), plan.len());
        for (a, r) in dp.allocation.iter().zip(plan.ranges()) {
            assert!(*a <= r.len());
        }
        let mut frames_so_far = 0;
        for t in 0..=plan.len() {
            for c in 0..=k {
                assert_eq!(dp.table.is_reachable(t, c), c <= frames_so_far, "t={t} c={c}");
                assert_eq!(dp.table.qstar(t, c).is_finite(), c <= frames_so_far);
            }
            if t < plan.len() {
                frames_so_far += plan.range(t).len();
            }
        }
    }
}

#[test]
fn parallel_matches_serial() {
    for seed in 0..20 {
        let mut rng = rng(1100 + seed);
        let emb = random_embeddings(&mut rng, 96, 8);
        let spec = KernelSpec::default();
        let r = build_relevance(&emb, &spec).unwrap();
        let lazy = LazyKernel::new(&emb, Similarity::MultiGaussian(spec), &r, 0.2).unwrap();
        let plan = make_segments(96, 16).unwrap();
        let serial = allocate_and_select(&lazy, &plan, 8, DpOptions::default()).unwrap();
        let par = allocate_and_select(&lazy, &plan, 8, DpOptions { parallel: true, ..DpOptions::default() }).unwrap();
        assert_eq!(serial, par);
        assert_eq!(serial.score.to_bits(), par.score.to_bits());
    }
}

#[test]
fn lazy_kernel_matches_dense() {
    let mut rng = rng(5);
    let emb = random_embeddings(&mut rng, 30, 6);
    let spec = KernelSpec::default();
    let ck = ConditionedKernel::from_embeddings(&emb, &spec, &spec, 0.2).unwrap();
    let lazy = LazyKernel::new(&emb, Similarity::MultiGaussian(spec), &ck.r, 0.2).unwrap();
    let plan = make_segments(30, 8).unwrap();
    let a = allocate_and_select(&ck, &plan, 6, DpOptions::default()).unwrap();
    let b = allocate_and_select(&lazy, &plan, 6, DpOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_frame_segments_make_conditioning_choices_agree() {
    let mut rng = rng(6);
    let emb = random_embeddings(&mut rng, 12, 4);
    let spec = KernelSpec::default();
    let ck = ConditionedKernel::from_embeddings(&emb, &spec, &spec, 0.2).unwrap();
    let plan = make_segments(12, 4).unwrap();
    let rep = lazy_vs_full(&ck, &plan, &[1, 1, 1]).unwrap();
    assert_eq!(rep.lazy_trace, rep.full_trace);
    assert_eq!(rep.differing, 0);
    assert!((rep.lazy_score - rep.full_score).abs() < 1e-12);
    let rep = lazy_vs_full(&ck, &plan, &[3, 2, 2]).unwrap();
    assert!(rep.lazy_score.is_finite() && rep.full_score.is_finite());
}

#[test]
fn relevance_draws_budget_to_relevant_segment() {
    let mut rng = rng(12);
    let d = 8;
    let mut rows = random_rows(&mut rng, 64, d);
    let q: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    for row in rows.iter_mut().skip(32).take(16) {
        for (x, qv) in row.iter_mut().zip(&q) {
            *x = qv + 0.05 * *x;
        }
    }
    let emb = EmbeddingSet::new(Matrix::from_rows(&rows).unwrap(), q, true).unwrap();
    let spec = KernelSpec::default();
    let ck = ConditionedKernel::from_embeddings(&emb, &spec, &spec, 0.2).unwrap();
    let plan = make_segments(64, 16).unwrap();
    let dp = allocate_and_select(&ck, &plan, 8, DpOptions::default()).unwrap();
    assert!(dp.allocation[2] >= 4, "{:?}", dp.allocation);
}

#[test]
fn rejects_bad_inputs() {
    let ck = condition_kernel(Matrix::identity(4), vec![0.5; 4], 1.0).unwrap();
    let plan = make_segments(4, 2).unwrap();
    assert!(allocate_and_select(&ck, &plan, 5, DpOptions::default()).is_err());
    assert!(allocate_and_select(&ck, &make_segments(5, 2).unwrap(), 1, DpOptions::default()).is_err());
    assert!(sequential_map_fixed_sizes(&ck, &plan, &[3, 0]).is_err());
    assert!(score_of(&[vec![2]], &ck, &plan).is_err());
    assert!(score_of(&[vec![0, 0]], &ck, &plan).is_err());
    let empty = allocate_and_select(&ck, &plan, 0, DpOptions::default()).unwrap();
    assert!(empty.indices.is_empty());
    assert_eq!(empty.score, 0.0);
}
