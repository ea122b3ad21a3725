#![allow(dead_code)]

use framesel_core::{EmbeddingSet, KernelMatrix, Matrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

pub fn random_embeddings(rng: &mut ChaCha8Rng, n: usize, d: usize) -> EmbeddingSet {
    let rows = random_rows(rng, n, d);
    let q = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    EmbeddingSet::new(Matrix::from_rows(&rows).unwrap(), q, true).unwrap()
}

/// `I + B·Bᵀ` with `B` of shape `n × rank`.
pub fn identity_plus_gram(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> Matrix {
    let b = Matrix::from_rows(&random_rows(rng, n, rank)).unwrap();
    b.matmul(&b.transpose()).unwrap().add_identity()
}

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

/// `log det` of the principal submatrix on `idx` via nalgebra's LU.
pub fn dense_logdet<K: KernelMatrix + ?Sized>(k: &K, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    to_na(&k.gather(idx)).determinant().ln()
}

pub fn min_eigenvalue(m: &Matrix) -> f64 {
    let e = to_na(m).symmetric_eigen();
    e.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..(1 << n)).map(move |mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
}

/// Least-squares slope of `ln t` against `ln n`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
