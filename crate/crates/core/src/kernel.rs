//! Multi-Gaussian kernels and query-conditioned similarity.
//!
//! The frame–frame similarity `L` and the frame–query relevance `r` both come
//! from a convex combination of Gaussian kernels
//! `k(x, y) = Σ_u β_u · exp(−‖x − y‖² / (2 α_u))`. Conditioning rescales
//! `L` by `r^{1/λ}` on both sides, so that
//! `log det L̃_S = (1/λ) Σ_{i∈S} log r_i² + log det L_S` holds exactly.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::{dot, sq_dist, KernelMatrix, Matrix};

/// Relevance values are floored here before any power or log.
pub const RELEVANCE_FLOOR: f64 = 1e-300;

/// Bandwidths `α_u = 2^i`, `i ∈ {−3, −2, 0, 1, 2}`.
pub const DEFAULT_ALPHAS: [f64; 5] = [0.125, 0.25, 1.0, 2.0, 4.0];

const NORM_TOL: f64 = 1e-6;

/// Frame embeddings (`n × d`) and a query embedding (`d`).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    frames: Matrix,
    query: Vec<f64>,
    normalized: bool,
}

impl EmbeddingSet {
    /// Validates shapes and finiteness; with `normalize` every row and the
    /// query are scaled to unit L2 norm.
    pub fn new(frames: Matrix, query: Vec<f64>, normalize: bool) -> Result<Self> {
        if frames.rows() == 0 {
            return Err(Error::Empty("frames"));
        }
        if frames.cols() == 0 {
            return Err(Error::Empty("embedding dimension"));
        }
        if query.len() != frames.cols() {
            return Err(Error::DimensionMismatch { expected: frames.cols(), got: query.len() });
        }
        if !frames.all_finite() {
            return Err(Error::NonFinite("frames"));
        }
        if !query.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("query"));
        }
        let mut set = Self { frames, query, normalized: false };
        if normalize {
            for i in 0..set.frames.rows() {
                normalize_in_place(set.frames.row_mut(i)).ok_or(Error::DegenerateFrame(i))?;
            }
            normalize_in_place(&mut set.query).ok_or(Error::DegenerateQuery)?;
            set.normalized = true;
        }
        Ok(set)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.frames.rows()
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.frames.cols()
    }

    pub fn frames(&self) -> &Matrix {
        &self.frames
    }

    #[inline]
    pub fn frame(&self, i: usize) -> &[f64] {
        self.frames.row(i)
    }

    pub fn query(&self) -> &[f64] {
        &self.query
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Same frames with a different query.
    pub fn with_query(&self, query: Vec<f64>) -> Result<Self> {
        Self::new(self.frames.clone(), query, self.normalized)
    }

    /// True when every row and the query have unit norm within 1e-6.
    pub fn check_unit_norms(&self) -> bool {
        let unit = |v: &[f64]| (math::sqrt(dot(v, v)) - 1.0).abs() <= NORM_TOL;
        (0..self.n()).all(|i| unit(self.frame(i))) && unit(&self.query)
    }
}

fn normalize_in_place(v: &mut [f64]) -> Option<()> {
    let norm = math::sqrt(dot(v, v));
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(())
}

/// Mean of the chunk embeddings, then L2-normalized.
pub fn pool_query_chunks(chunks: &Matrix) -> Result<Vec<f64>> {
    if chunks.rows() == 0 || chunks.cols() == 0 {
        return Err(Error::Empty("query chunks"));
    }
    if !chunks.all_finite() {
        return Err(Error::NonFinite("query chunks"));
    }
    let c = chunks.rows() as f64;
    let mut pooled = vec![0.0; chunks.cols()];
    for i in 0..chunks.rows() {
        for (acc, v) in pooled.iter_mut().zip(chunks.row(i)) {
            *acc += v;
        }
    }
    pooled.iter_mut().for_each(|x| *x /= c);
    normalize_in_place(&mut pooled).ok_or(Error::DegenerateQuery)?;
    Ok(pooled)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelComponent {
    /// Squared bandwidth `(h·σ)²`.
    pub alpha: f64,
    pub beta: f64,
}

/// Convex combination of Gaussian kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    components: Vec<KernelComponent>,
}

impl KernelSpec {
    pub fn new(components: Vec<KernelComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidKernel("no components"));
        }
        for c in &components {
            if !(c.alpha.is_finite() && c.alpha > 0.0) {
                return Err(Error::InvalidKernel("alpha must be positive and finite"));
            }
            if !(c.beta.is_finite() && c.beta >= 0.0) {
                return Err(Error::InvalidKernel("beta must be nonnegative"));
            }
        }
        let total: f64 = components.iter().map(|c| c.beta).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidKernel("weights must sum to 1"));
        }
        Ok(Self { components })
    }

    /// Equal weights `β_u = 1/U` over the given bandwidths.
    pub fn averaged(alphas: &[f64]) -> Result<Self> {
        let beta = 1.0 / alphas.len() as f64;
        Self::new(alphas.iter().map(|&alpha| KernelComponent { alpha, beta }).collect())
    }

    pub fn components(&self) -> &[KernelComponent] {
        &self.components
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.alpha).collect()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Kernel value at squared distance `sq`.
    #[inline]
    pub fn eval_sq(&self, sq: f64) -> f64 {
        self.components.iter().map(|c| c.beta * math::exp(-sq / (2.0 * c.alpha))).sum()
    }

    /// Same spec with every bandwidth multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.components.iter().map(|c| KernelComponent { alpha: c.alpha * factor, beta: c.beta }).collect())
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::averaged(&DEFAULT_ALPHAS).expect("default grid is valid")
    }
}

/// `Σ_u β_u exp(−‖x − y‖² / (2 α_u))`.
pub fn multi_gaussian(x: &[f64], y: &[f64], spec: &KernelSpec) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if !x.iter().chain(y).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("kernel input"));
    }
    Ok(spec.eval_sq(sq_dist(x, y)))
}

/// `r_i = g(f_i, q)`, floored at [`RELEVANCE_FLOOR`].
pub fn build_relevance(emb: &EmbeddingSet, spec: &KernelSpec) -> Result<Vec<f64>> {
    (0..emb.n()).map(|i| multi_gaussian(emb.frame(i), emb.query(), spec).map(|v| v.max(RELEVANCE_FLOOR))).collect()
}

/// `L_ij = k(f_i, f_j)`.
pub fn build_similarity(emb: &EmbeddingSet, spec: &KernelSpec) -> Result<Matrix> {
    let n = emb.n();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        l[(i, i)] = multi_gaussian(emb.frame(i), emb.frame(i), spec)?;
        for j in i + 1..n {
            let v = multi_gaussian(emb.frame(i), emb.frame(j), spec)?;
            l[(i, j)] = v;
            l[(j, i)] = v;
        }
    }
    Ok(l)
}

/// Per-frame scale `r_i^{1/λ}` applied on both sides of `L`.
pub fn relevance_scale(r: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidLambda);
    }
    r.iter()
        .enumerate()
        .map(|(i, &v)| {
            if v.is_nan() || v <= 0.0 {
                Err(Error::NonpositiveRelevance(i))
            } else {
                Ok(math::powf(v.max(RELEVANCE_FLOOR), 1.0 / lambda))
            }
        })
        .collect()
}

/// Relevance `r`, base similarity `L`, and `L̃ = diag(r^{1/λ}) · L · diag(r^{1/λ})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedKernel {
    pub r: Vec<f64>,
    pub l: Matrix,
    pub ltilde: Matrix,
    pub lambda: f64,
}

pub fn condition_kernel(l: Matrix, r: Vec<f64>, lambda: f64) -> Result<ConditionedKernel> {
    if !l.is_square() {
        return Err(Error::NotSquare { rows: l.rows(), cols: l.cols() });
    }
    if r.len() != l.rows() {
        return Err(Error::DimensionMismatch { expected: l.rows(), got: r.len() });
    }
    if let Some((row, col)) = l.asymmetry(1e-8) {
        return Err(Error::Asymmetric { row, col });
    }
    let scale = relevance_scale(&r, lambda)?;
    let r: Vec<f64> = r.into_iter().map(|v| v.max(RELEVANCE_FLOOR)).collect();
    let n = l.rows();
    let mut ltilde = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            ltilde[(i, j)] = (scale[i] * scale[j]) * l[(i, j)];
        }
    }
    Ok(ConditionedKernel { r, l, ltilde, lambda })
}

impl ConditionedKernel {
    /// Builds `r`, `L` and `L̃` densely from embeddings.
    pub fn from_embeddings(
        emb: &EmbeddingSet,
        relevance: &KernelSpec,
        similarity: &KernelSpec,
        lambda: f64,
    ) -> Result<Self> {
        let r = build_relevance(emb, relevance)?;
        let l = build_similarity(emb, similarity)?;
        condition_kernel(l, r, lambda)
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }
}

impl KernelMatrix for ConditionedKernel {
    #[inline]
    fn size(&self) -> usize {
        self.ltilde.rows()
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.ltilde[(i, j)]
    }
}

/// Frame–frame (and frame–query) similarity used by [`LazyKernel`].
#[derive(Debug, Clone, PartialEq)]
pub enum Similarity {
    MultiGaussian(KernelSpec),
    /// `(1 + cos(x, y)) / 2`.
    ShiftedCosine,
}

impl Similarity {
    fn pair(&self, x: &[f64], y: &[f64], nx: f64, ny: f64) -> f64 {
        match self {
            Similarity::MultiGaussian(spec) => spec.eval_sq(sq_dist(x, y)),
            Similarity::ShiftedCosine => {
                let cos = if nx == 0.0 || ny == 0.0 { 0.0 } else { dot(x, y) / (nx * ny) };
                0.5 * (1.0 + cos.clamp(-1.0, 1.0))
            }
        }
    }

    /// Similarity of each frame to the query, floored at [`RELEVANCE_FLOOR`].
    pub fn relevance(&self, emb: &EmbeddingSet) -> Vec<f64> {
        let qn = math::sqrt(dot(emb.query(), emb.query()));
        (0..emb.n())
            .map(|i| {
                let f = emb.frame(i);
                let fnorm = math::sqrt(dot(f, f));
                self.pair(f, emb.query(), fnorm, qn).max(RELEVANCE_FLOOR)
            })
            .collect()
    }
}

/// Conditioned kernel evaluated on demand: `L̃_ij = s_i · sim(f_i, f_j) · s_j`.
///
/// Memory is `O(n·d)`; each entry costs `O(d)`.
#[derive(Debug, Clone)]
pub struct LazyKernel {
    frames: Matrix,
    norms: Vec<f64>,
    scale: Vec<f64>,
    similarity: Similarity,
}

impl LazyKernel {
    /// `relevance` must have one entry per frame; it is raised to `1/λ`.
    pub fn new(emb: &EmbeddingSet, similarity: Similarity, relevance: &[f64], lambda: f64) -> Result<Self> {
        if relevance.len() != emb.n() {
            return Err(Error::DimensionMismatch { expected: emb.n(), got: relevance.len() });
        }
        let scale = relevance_scale(relevance, lambda)?;
        let frames = emb.frames().clone();
        let norms = (0..frames.rows()).map(|i| math::sqrt(dot(frames.row(i), frames.row(i)))).collect();
        Ok(Self { frames, norms, scale, similarity })
    }

    /// Unconditioned similarity `L_ij`.
    #[inline]
    pub fn base(&self, i: usize, j: usize) -> f64 {
        self.similarity.pair(self.frames.row(i), self.frames.row(j), self.norms[i], self.norms[j])
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }
}

impl KernelMatrix for LazyKernel {
    #[inline]
    fn size(&self) -> usize {
        self.frames.rows()
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        (self.scale[i] * self.scale[j]) * self.base(i, j)
    }
}
