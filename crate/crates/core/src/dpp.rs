//! Greedy MAP inference for DPPs with incremental Cholesky updates.
//!
//! Each step picks the candidate with the largest marginal gain
//! `log det L̃_{S∪{i}} − log det L̃_S = log d_i²`, where `d_i²` is the
//! squared residual of `i` after projecting out the current selection. The
//! residuals and partial Cholesky rows are updated in `O(|candidates|·|S|)`
//! per step, so a run of `k` steps costs `O(|candidates|·k²)`.
//!
//! Conditioning on a fixed set `C` (the previous segment's selection) is the
//! same process with `C` forced in first; the gains then measure
//! `log det L̃_{C∪S} − log det L̃_C`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::{dot, KernelMatrix, Matrix};

/// Floor for squared Cholesky pivots. A candidate that is (numerically)
/// linearly dependent on the selection contributes `ln(JITTER)`.
pub const JITTER: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-8;

/// In-progress greedy selection over `condition ∪ candidates`.
#[derive(Debug, Clone)]
pub struct GreedyState<'a, K: KernelMatrix + ?Sized> {
    kernel: &'a K,
    /// Global indices: the condition first (in order), then the sorted candidates.
    pool: Vec<usize>,
    n_condition: usize,
    /// Partial Cholesky row of every pool item against the picked items.
    rows: Vec<Vec<f64>>,
    residual: Vec<f64>,
    picked: Vec<bool>,
    /// Pool positions in pick order; `pivots[p]` is the diagonal entry for `order[p]`.
    order: Vec<usize>,
    pivots: Vec<f64>,
    gains: Vec<f64>,
    condition_logdet: f64,
    logdet: f64,
    clamped: bool,
}

impl<'a, K: KernelMatrix + ?Sized> GreedyState<'a, K> {
    /// Seeds the factor with `condition` and prepares `candidates`.
    pub fn new(kernel: &'a K, condition: &[usize], candidates: &[usize]) -> Result<Self> {
        let size = kernel.size();
        let mut cands = candidates.to_vec();
        cands.sort_unstable();
        cands.dedup();
        for &i in condition.iter().chain(&cands) {
            if i >= size {
                return Err(Error::IndexOutOfRange { index: i, size });
            }
        }
        if let Some(&c) = condition.iter().find(|c| cands.binary_search(c).is_ok()) {
            return Err(Error::OverlappingCondition(c));
        }
        let mut pool = Vec::with_capacity(condition.len() + cands.len());
        pool.extend_from_slice(condition);
        pool.extend_from_slice(&cands);
        let residual = pool.iter().map(|&i| kernel.entry(i, i)).collect();
        let mut state = Self {
            kernel,
            rows: vec![Vec::new(); pool.len()],
            picked: vec![false; pool.len()],
            residual,
            pool,
            n_condition: condition.len(),
            order: Vec::new(),
            pivots: Vec::new(),
            gains: Vec::new(),
            condition_logdet: 0.0,
            logdet: 0.0,
            clamped: false,
        };
        for p in 0..state.n_condition {
            let gain = state.absorb(p);
            state.condition_logdet += gain;
        }
        Ok(state)
    }

    fn absorb(&mut self, p: usize) -> f64 {
        let raw = self.residual[p];
        if raw.is_nan() || raw < JITTER {
            self.clamped = true;
        }
        let d2 = if raw >= JITTER { raw } else { JITTER };
        let pivot = math::sqrt(d2);
        let gain = math::ln(d2);
        self.picked[p] = true;
        let gp = self.pool[p];
        let (before, rest) = self.rows.split_at_mut(p);
        let (row_p, after) = rest.split_first_mut().expect("p in range");
        let row_p: &[f64] = row_p;
        for (i, row_i) in before.iter_mut().chain(after.iter_mut()).enumerate() {
            let i = if i < p { i } else { i + 1 };
            if self.picked[i] {
                continue;
            }
            let e = (self.kernel.entry(gp, self.pool[i]) - dot(row_p, row_i)) / pivot;
            row_i.push(e);
            self.residual[i] -= e * e;
        }
        self.order.push(p);
        self.pivots.push(pivot);
        self.logdet += gain;
        gain
    }

    /// Best unpicked candidate by residual, lowest index on ties.
    fn best(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for p in self.n_condition..self.pool.len() {
            if self.picked[p] {
                continue;
            }
            let v = self.residual[p].max(JITTER);
            match best {
                Some((_, bv)) if v <= bv => {}
                _ => best = Some((p, v)),
            }
        }
        best.map(|(p, _)| p)
    }

    /// Picks the next candidate; returns its global index and log-det gain.
    pub fn step(&mut self) -> Option<(usize, f64)> {
        let p = self.best()?;
        let gain = self.absorb(p);
        self.gains.push(gain);
        Some((self.pool[p], gain))
    }

    /// Candidates picked so far, in pick order.
    pub fn selected(&self) -> Vec<usize> {
        self.order[self.n_condition..].iter().map(|&p| self.pool[p]).collect()
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// `log det L̃` over condition and selection together.
    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    /// `log det L̃_condition`.
    pub fn condition_logdet(&self) -> f64 {
        self.condition_logdet
    }

    /// True when any pivot hit the jitter floor.
    pub fn clamped(&self) -> bool {
        self.clamped
    }

    /// Global indices behind the factor's rows: condition then selection.
    pub fn factor_indices(&self) -> Vec<usize> {
        self.order.iter().map(|&p| self.pool[p]).collect()
    }

    /// Lower-triangular factor `C` with `C·Cᵀ = L̃` on [`factor_indices`](Self::factor_indices).
    pub fn chol(&self) -> Matrix {
        let s = self.order.len();
        let mut c = Matrix::zeros(s, s);
        for (a, &p) in self.order.iter().enumerate() {
            for (b, &v) in self.rows[p].iter().enumerate().take(a) {
                c[(a, b)] = v;
            }
            c[(a, a)] = self.pivots[a];
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyOutcome {
    /// Selected indices in pick order.
    pub indices: Vec<usize>,
    /// `gains[j] = log det L̃_{S_{j+1}} − log det L̃_{S_j}`.
    pub gains: Vec<f64>,
    pub logdet: f64,
    pub clamped: bool,
}

/// Greedy MAP: `k` picks from `candidates`, each maximizing the log-det gain.
pub fn greedy_map<K: KernelMatrix + ?Sized>(kernel: &K, k: usize, candidates: &[usize]) -> Result<GreedyOutcome> {
    let mut state = GreedyState::new(kernel, &[], candidates)?;
    let available = state.pool.len();
    if k > available {
        return Err(Error::BudgetExceedsCandidates { budget: k, candidates: available });
    }
    for _ in 0..k {
        state.step();
    }
    Ok(GreedyOutcome {
        indices: state.selected(),
        gains: state.gains.clone(),
        logdet: state.logdet,
        clamped: state.clamped,
    })
}

/// Fixed condition, candidate set and normalizing offset for one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalContext {
    condition: Vec<usize>,
    candidates: Vec<usize>,
    offset: f64,
}

impl ConditionalContext {
    pub fn new(condition: Vec<usize>, candidates: Vec<usize>, offset: f64) -> Result<Self> {
        if let Some(&c) = condition.iter().find(|c| candidates.contains(c)) {
            return Err(Error::OverlappingCondition(c));
        }
        if !offset.is_finite() {
            return Err(Error::NonFinite("offset"));
        }
        Ok(Self { condition, candidates, offset })
    }

    pub fn condition(&self) -> &[usize] {
        &self.condition
    }

    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalOutcome {
    /// Selected candidates in pick order.
    pub indices: Vec<usize>,
    pub gains: Vec<f64>,
    /// `rewards[j] = log det L̃_{cond∪S_j} − log det L̃_cond + offset` for `j = 0..=kt`.
    pub rewards: Vec<f64>,
    pub clamped: bool,
}

/// Greedy MAP over `ctx.candidates` given `ctx.condition`.
///
/// Greedy selections are nested, so one run of `kt` steps yields the reward
/// of every prefix size `0..=kt`.
pub fn conditional_greedy_map<K: KernelMatrix + ?Sized>(
    kernel: &K,
    ctx: &ConditionalContext,
    kt: usize,
) -> Result<ConditionalOutcome> {
    let mut state = GreedyState::new(kernel, &ctx.condition, &ctx.candidates)?;
    let available = state.pool.len() - state.n_condition;
    if kt > available {
        return Err(Error::BudgetExceedsCandidates { budget: kt, candidates: available });
    }
    let mut rewards = Vec::with_capacity(kt + 1);
    let mut acc = ctx.offset;
    rewards.push(acc);
    for _ in 0..kt {
        let (_, gain) = state.step().expect("enough candidates");
        acc += gain;
        rewards.push(acc);
    }
    Ok(ConditionalOutcome { indices: state.selected(), gains: state.gains.clone(), rewards, clamped: state.clamped })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub value: f64,
    /// A pivot fell below [`JITTER`] and was clamped.
    pub clamped: bool,
}

/// `log det M` for symmetric PSD `M` via Cholesky, clamping pivots at [`JITTER`].
pub fn logdet_psd(m: &Matrix) -> Result<LogDet> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if let Some((row, col)) = m.asymmetry(SYMMETRY_TOL) {
        return Err(Error::Asymmetric { row, col });
    }
    let n = m.rows();
    let mut c = Matrix::zeros(n, n);
    let mut value = 0.0;
    let mut clamped = false;
    for j in 0..n {
        let mut d = m[(j, j)] - dot(&c.row(j)[..j], &c.row(j)[..j]);
        if d.is_nan() || d < JITTER {
            clamped = true;
            d = JITTER;
        }
        value += math::ln(d);
        let pivot = math::sqrt(d);
        c[(j, j)] = pivot;
        for i in j + 1..n {
            let s = m[(i, j)] - dot(&c.row(i)[..j], &c.row(j)[..j]);
            c[(i, j)] = s / pivot;
        }
    }
    Ok(LogDet { value, clamped })
}

/// `−log det(L̃_N + I)` over one segment's frames.
pub fn segment_offset<K: KernelMatrix + ?Sized>(kernel: &K, candidates: &[usize]) -> Result<f64> {
    Ok(-logdet_psd(&kernel.gather(candidates).add_identity())?.value)
}

/// `−log det(L̃_{C∪N} + I_N)` where the identity only covers the candidates.
pub fn conditional_offset<K: KernelMatrix + ?Sized>(
    kernel: &K,
    condition: &[usize],
    candidates: &[usize],
) -> Result<f64> {
    let mut idx = condition.to_vec();
    idx.extend_from_slice(candidates);
    let mut m = kernel.gather(&idx);
    for i in condition.len()..idx.len() {
        m[(i, i)] += 1.0;
    }
    Ok(-logdet_psd(&m)?.value)
}
