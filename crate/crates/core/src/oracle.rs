//! Slow reference implementations for tests and acceptance runs.
//!
//! Determinants here go through LU with partial pivoting, not the Cholesky
//! path the engine uses, so agreement between the two is evidence rather than
//! a tautology.

use alloc::vec;
use alloc::vec::Vec;

use crate::budget::{check_sizes, sequential_map_fixed_sizes, SegmentPlan, SelectionTrace, Stage};
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::{KernelMatrix, Matrix};

/// Enumeration sizes the oracles accept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudgetLimits {
    pub max_n: usize,
    pub max_k: usize,
    pub max_t: usize,
}

impl Default for OracleBudgetLimits {
    fn default() -> Self {
        Self { max_n: 14, max_k: 6, max_t: 4 }
    }
}

const MAX_SUBSETS: u128 = 1_000_000;

/// `log det M` via LU with partial pivoting; `−∞` when the determinant is not positive.
pub fn log_det_lu(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut a = m.clone();
    let mut sign = 1.0;
    let mut acc = 0.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&x, &y| a[(x, col)].abs().partial_cmp(&a[(y, col)].abs()).unwrap_or(core::cmp::Ordering::Equal))
            .expect("nonempty");
        let p = a[(pivot_row, col)];
        if p == 0.0 || !p.is_finite() {
            return f64::NEG_INFINITY;
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot_row, j)];
                a[(pivot_row, j)] = tmp;
            }
            sign = -sign;
        }
        if p < 0.0 {
            sign = -sign;
        }
        acc += math::ln(p.abs());
        for i in col + 1..n {
            let f = a[(i, col)] / p;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[(i, j)] -= f * a[(col, j)];
            }
        }
    }
    if sign > 0.0 {
        acc
    } else {
        f64::NEG_INFINITY
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
}

/// Every size-`k` subset of `items`, lexicographic order.
fn for_each_subset(items: &[usize], k: usize, mut f: impl FnMut(&[usize])) {
    let n = items.len();
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf = vec![0; k];
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = items[i];
        }
        f(&buf);
        let mut pos = k;
        while pos > 0 && idx[pos - 1] == pos - 1 + n - k {
            pos -= 1;
        }
        if pos == 0 {
            return;
        }
        pos -= 1;
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Exhaustive max-determinant subset of size `k`; ties go to the lexicographically smallest.
pub fn brute_map<K: KernelMatrix + ?Sized>(kernel: &K, k: usize, candidates: &[usize]) -> Result<(Vec<usize>, f64)> {
    let mut cands = candidates.to_vec();
    cands.sort_unstable();
    cands.dedup();
    if k > cands.len() {
        return Err(Error::BudgetExceedsCandidates { budget: k, candidates: cands.len() });
    }
    if binomial(cands.len(), k) > MAX_SUBSETS {
        return Err(Error::OracleLimit("more than 10^6 subsets"));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_subset(&cands, k, |s| {
        let v = log_det_lu(&kernel.gather(s));
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((s.to_vec(), v));
        }
    });
    Ok(best.unwrap_or((Vec::new(), 0.0)))
}

/// Best allocation found by trying every composition of `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteAllocation {
    pub allocation: Vec<usize>,
    pub trace: SelectionTrace,
    pub score: f64,
}

fn compositions(caps: &[usize], k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() == caps.len() {
        if k == 0 {
            out.push(prefix.clone());
        }
        return;
    }
    let remaining: usize = caps[prefix.len() + 1..].iter().sum();
    let cap = caps[prefix.len()].min(k);
    for take in 0..=cap {
        if k - take > remaining {
            continue;
        }
        prefix.push(take);
        compositions(caps, k - take, prefix, out);
        prefix.pop();
    }
}

fn check_allocation_limits(plan: &SegmentPlan, k: usize, limits: OracleBudgetLimits) -> Result<()> {
    if plan.frames() > limits.max_n || plan.len() > limits.max_t || k > limits.max_k {
        return Err(Error::OracleLimit("allocation instance too large"));
    }
    if k > plan.frames() {
        return Err(Error::BudgetExceedsFrames { budget: k, frames: plan.frames() });
    }
    Ok(())
}

/// Best known path into one `(t, C)` state of the allocation MDP.
#[derive(Debug, Clone)]
struct StateBest {
    value: f64,
    allocation: Vec<usize>,
    trace: SelectionTrace,
    tail: Vec<usize>,
}

/// Exhaustive search over allocations `(k_1, …, k_T)` summing to `k` under
/// the allocation MDP's reward: moving from state `(t−1, C)` to `(t, C + k_t)`
/// earns the conditional greedy reward of segment `t` given the last frame of
/// the best path into `(t−1, C)`.
///
/// Every state's best path is found by enumerating all of its allocation
/// prefixes and summing edge rewards, never by a Bellman recursion; it checks
/// the table, tie-breaking and trace recovery of the dynamic program.
pub fn brute_allocation<K: KernelMatrix + ?Sized>(kernel: &K, plan: &SegmentPlan, k: usize) -> Result<BruteAllocation> {
    brute_allocation_with_limits(kernel, plan, k, OracleBudgetLimits::default())
}

pub fn brute_allocation_with_limits<K: KernelMatrix + ?Sized>(
    kernel: &K,
    plan: &SegmentPlan,
    k: usize,
    limits: OracleBudgetLimits,
) -> Result<BruteAllocation> {
    check_allocation_limits(plan, k, limits)?;
    if k == 0 {
        return Ok(BruteAllocation { allocation: vec![0; plan.len()], trace: Vec::new(), score: 0.0 });
    }
    let stages: Vec<Stage> = plan.ranges().iter().map(|r| Stage::new(kernel, r.clone())).collect::<Result<_>>()?;
    let caps: Vec<usize> = plan.ranges().iter().map(|r| r.len()).collect();
    // best[t][c]; edge[t][c] = greedy outcome leaving state (t, c)
    let mut best: Vec<Vec<Option<StateBest>>> = vec![vec![None; k + 1]; plan.len() + 1];
    best[0][0] = Some(StateBest { value: 0.0, allocation: Vec::new(), trace: Vec::new(), tail: Vec::new() });
    let mut edge: Vec<Vec<Option<crate::dpp::ConditionalOutcome>>> = vec![vec![None; k + 1]; plan.len()];

    for t in 1..=plan.len() {
        for c in 0..=k {
            if let Some(src) = &best[t - 1][c] {
                let kt = caps[t - 1].min(k - c);
                edge[t - 1][c] = Some(stages[t - 1].run(kernel, &src.tail, kt)?);
            }
        }
        for c in 0..=k {
            let mut all = Vec::new();
            compositions(&caps[..t], c, &mut Vec::new(), &mut all);
            let mut winner: Option<StateBest> = None;
            for alloc in all {
                let mut value = 0.0;
                let mut spent = 0;
                let mut trace = Vec::with_capacity(t);
                for (r, &kr) in alloc.iter().enumerate() {
                    let out = edge[r][spent].as_ref().expect("prefix state reachable");
                    value += out.rewards[kr];
                    trace.push(out.indices[..kr].to_vec());
                    spent += kr;
                }
                let prev_c = c - alloc[t - 1];
                let better = match &winner {
                    None => true,
                    Some(w) => {
                        let w_prev = c - w.allocation[t - 1];
                        value > w.value
                            || (value == w.value
                                && (prev_c < w_prev
                                    || (prev_c == w_prev
                                        && best[t - 1][prev_c]
                                            .as_ref()
                                            .is_some_and(|b| b.allocation[..] == alloc[..t - 1]))))
                    }
                };
                if better {
                    let tail = trace.iter().rev().find_map(|s: &Vec<usize>| s.last().copied()).into_iter().collect();
                    winner = Some(StateBest { value, allocation: alloc, trace, tail });
                }
            }
            best[t][c] = winner;
        }
    }
    let fin = best[plan.len()][k].take().ok_or(Error::Internal("no feasible allocation"))?;
    Ok(BruteAllocation { allocation: fin.allocation, trace: fin.trace, score: fin.value })
}

/// Exhaustive search over allocations where each allocation is scored by its
/// own sequential pass (every segment conditioned on that allocation's latest
/// frame). This is the true objective the dynamic program approximates.
pub fn brute_allocation_own_path<K: KernelMatrix + ?Sized>(
    kernel: &K,
    plan: &SegmentPlan,
    k: usize,
) -> Result<BruteAllocation> {
    check_allocation_limits(plan, k, OracleBudgetLimits::default())?;
    if k == 0 {
        return Ok(BruteAllocation { allocation: vec![0; plan.len()], trace: Vec::new(), score: 0.0 });
    }
    let caps: Vec<usize> = plan.ranges().iter().map(|r| r.len()).collect();
    let mut all = Vec::new();
    compositions(&caps, k, &mut Vec::new(), &mut all);
    let mut best: Option<BruteAllocation> = None;
    for alloc in all {
        let seq = sequential_map_fixed_sizes(kernel, plan, &alloc)?;
        if best.as_ref().is_none_or(|b| seq.score > b.score) {
            best = Some(BruteAllocation { allocation: alloc, trace: seq.trace, score: seq.score });
        }
    }
    best.ok_or(Error::Internal("no feasible allocation"))
}

/// Sequential pass that conditions each segment on the whole of the most
/// recent nonempty segment selection, instead of its last frame.
pub fn full_condition_sequential<K: KernelMatrix + ?Sized>(
    kernel: &K,
    plan: &SegmentPlan,
    sizes: &[usize],
) -> Result<(SelectionTrace, f64)> {
    check_sizes(plan, sizes)?;
    let mut trace = Vec::with_capacity(plan.len());
    let mut condition: Vec<usize> = Vec::new();
    let mut score = 0.0;
    for (t, &kt) in sizes.iter().enumerate() {
        let stage = Stage::new(kernel, plan.range(t))?;
        let out = stage.run(kernel, &condition, kt)?;
        score += out.rewards[kt];
        if !out.indices.is_empty() {
            condition = out.indices.clone();
        }
        trace.push(out.indices);
    }
    Ok((trace, score))
}

/// Lazy (last frame) versus full previous-segment conditioning on one allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub lazy_trace: SelectionTrace,
    pub lazy_score: f64,
    pub full_trace: SelectionTrace,
    pub full_score: f64,
    /// Frames chosen by exactly one of the two passes.
    pub differing: usize,
}

pub fn lazy_vs_full<K: KernelMatrix + ?Sized>(
    kernel: &K,
    plan: &SegmentPlan,
    sizes: &[usize],
) -> Result<DivergenceReport> {
    let lazy = sequential_map_fixed_sizes(kernel, plan, sizes)?;
    let (full_trace, full_score) = full_condition_sequential(kernel, plan, sizes)?;
    let lazy_trace = if lazy.trace.is_empty() { vec![Vec::new(); plan.len()] } else { lazy.trace };
    let flat = |t: &SelectionTrace| {
        let mut v: Vec<usize> = t.iter().flatten().copied().collect();
        v.sort_unstable();
        v
    };
    let (a, b) = (flat(&lazy_trace), flat(&full_trace));
    let differing = a.iter().filter(|i| b.binary_search(i).is_err()).count()
        + b.iter().filter(|i| a.binary_search(i).is_err()).count();
    Ok(DivergenceReport { lazy_trace, lazy_score: lazy.score, full_trace, full_score, differing })
}
