mod common;

use common::*;
use framesel_core::kernel::relevance_scale;
use framesel_core::*;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn pooling_matches_reference_mean() {
    let mut rng = rng(11);
    let chunks: Vec<Vec<f64>> = (0..3)
        .map(|_| {
            let v: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
        .collect();
    let pooled = pool_query_chunks(&Matrix::from_rows(&chunks).unwrap()).unwrap();
    let mean: Vec<f64> = (0..5).map(|j| chunks.iter().map(|c| c[j]).sum::<f64>() / 3.0).collect();
    let norm = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
    for (p, m) in pooled.iter().zip(&mean) {
        assert!((p - m / norm).abs() < 1e-12);
    }
}

#[test]
fn default_grid_matches_termwise_sum() {
    // ‖x − y‖² = 1
    let x = [1.0, 0.0, 0.0];
    let y = [0.0, 0.0, 0.0];
    let v = multi_gaussian(&x, &y, &KernelSpec::default()).unwrap();
    let reference: f64 = [-3, -2, 0, 1, 2].iter().map(|&i| (-1.0 / (2.0 * 2f64.powi(i))).exp() / 5.0).sum();
    assert!((v - reference).abs() < 1e-12);
}

#[test]
fn relevance_matches_entrywise() {
    let mut rng = rng(5);
    let emb = random_embeddings(&mut rng, 5, 4);
    let spec = KernelSpec::default();
    let r = build_relevance(&emb, &spec).unwrap();
    for (i, &ri) in r.iter().enumerate() {
        assert_eq!(ri, multi_gaussian(emb.frame(i), emb.query(), &spec).unwrap());
        assert!(ri > 0.0 && ri <= 1.0);
    }
}

#[test]
fn similarity_is_symmetric_psd() {
    for seed in 0..20 {
        let mut rng = rng(seed);
        let emb = random_embeddings(&mut rng, 6, 3);
        let l = build_similarity(&emb, &KernelSpec::default()).unwrap();
        assert_eq!(l.asymmetry(0.0), None);
        assert!((0..6).all(|i| l[(i, i)] == 1.0));
        assert!(min_eigenvalue(&l) >= -1e-8);
    }
}

#[test]
fn conditioned_kernel_invariants() {
    for seed in 0..20 {
        let mut rng = rng(100 + seed);
        let n = rng.random_range(2..=32);
        let emb = random_embeddings(&mut rng, n, 8);
        let spec = KernelSpec::default();
        let ck = ConditionedKernel::from_embeddings(&emb, &spec, &spec, 0.2).unwrap();
        assert!(ck.r.iter().all(|&r| r > 0.0 && r <= 1.0));
        assert!(min_eigenvalue(&ck.l) >= -1e-8);
        assert!(min_eigenvalue(&ck.ltilde) >= -1e-8);
        assert_eq!(ck.ltilde.asymmetry(0.0), None);
    }
}

/// `log det L̃_S − log det L_S − (1/λ) Σ log r_i² = 0` for every subset.
#[test]
fn log_det_decomposition_all_subsets() {
    for lambda in [0.2, 1.0, 5.0] {
        for seed in 0..10 {
            let mut rng = rng(seed);
            let n = rng.random_range(1..=8);
            let emb = random_embeddings(&mut rng, n, 3);
            let spec = KernelSpec::default();
            let ck = ConditionedKernel::from_embeddings(&emb, &spec, &spec, lambda).unwrap();
            for s in subsets(n) {
                let lhs = dense_logdet(&ck.ltilde, &s);
                let rhs = s.iter().map(|&i| (ck.r[i] * ck.r[i]).ln()).sum::<f64>() / lambda + dense_logdet(&ck.l, &s);
                assert!((lhs - rhs).abs() < 1e-8, "λ={lambda} S={s:?} {lhs} vs {rhs}");
            }
        }
    }
}

/// Exponent `1/λ` on relevance from bandwidth² α equals exponent 1 on
/// relevance from bandwidth² λα (single kernel).
#[test]
fn bandwidth_lambda_equivalence() {
    let mut rng = rng(3);
    let emb = random_embeddings(&mut rng, 6, 4);
    let l = build_similarity(&emb, &KernelSpec::default()).unwrap();
    for lambda in [0.2, 0.5, 2.0] {
        let g = KernelSpec::averaged(&[0.5]).unwrap();
        let r = build_relevance(&emb, &g).unwrap();
        let a = condition_kernel(l.clone(), r, lambda).unwrap();
        let r2 = build_relevance(&emb, &g.scaled(lambda).unwrap()).unwrap();
        let b = condition_kernel(l.clone(), r2, 1.0).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((a.ltilde[(i, j)] - b.ltilde[(i, j)]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn diagonal_scaling_preserves_psd() {
    for seed in 0..10 {
        let mut rng = rng(seed);
        let n = rng.random_range(2..=32);
        let l = identity_plus_gram(&mut rng, n, 3);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..2.0)).collect();
        let ck = condition_kernel(l, v, 1.0).unwrap();
        assert!(min_eigenvalue(&ck.ltilde) >= -1e-8);
    }
}

#[test]
fn underflowed_relevance_is_floored() {
    let s = relevance_scale(&[1e-320, 0.5], 0.2).unwrap();
    assert!(s[0] >= 0.0 && s[0].is_finite());
    let ck = condition_kernel(Matrix::identity(2), vec![1e-320, 0.5], 0.2).unwrap();
    assert_eq!(ck.r[0], framesel_core::kernel::RELEVANCE_FLOOR);
}

proptest! {
    #[test]
    fn kernel_symmetric_and_bounded(
        x in proptest::collection::vec(-2.0f64..2.0, 4),
        y in proptest::collection::vec(-2.0f64..2.0, 4),
    ) {
        let spec = KernelSpec::default();
        let a = multi_gaussian(&x, &y, &spec).unwrap();
        let b = multi_gaussian(&y, &x, &spec).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a > 0.0 && a <= 1.0);
        let sq: f64 = x.iter().zip(&y).map(|(p, q)| (p - q) * (p - q)).sum();
        if sq > 1e-9 {
            prop_assert!(a < 1.0);
        }
    }

    #[test]
    fn normalized_embeddings_have_unit_rows(
        rows in proptest::collection::vec(proptest::collection::vec(0.1f64..3.0, 3), 1..6),
    ) {
        let emb = EmbeddingSet::new(Matrix::from_rows(&rows).unwrap(), vec![1.0, 2.0, 3.0], true).unwrap();
        prop_assert!(emb.check_unit_norms());
    }
}
