//! Segment-wise budget allocation.
//!
//! The frame range is cut into `T = ⌈n/m⌉` contiguous segments. Picking
//! `k_t` frames from segment `t` is a deterministic transition
//! `(t−1, C) → (t, C + k_t)` whose reward is the conditional greedy log-DPP
//! gain of the segment given the most recently selected frame(s). The table
//! keeps only the best accumulated reward `Q*[t][C]` per cell together with a
//! back-pointer, so the whole program costs `T · (k+1)` greedy runs, each of
//! which yields the rewards for every `k_t` at once.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::dpp::{conditional_greedy_map, logdet_psd, ConditionalContext, ConditionalOutcome};
use crate::error::{Error, Result};
use crate::matrix::{KernelMatrix, Matrix};

/// Contiguous partition of `[0, n)` into segments of length `m` (last may be shorter).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentPlan {
    m: usize,
    n: usize,
    ranges: Vec<Range<usize>>,
}

impl SegmentPlan {
    pub fn segment_size(&self) -> usize {
        self.m
    }

    pub fn frames(&self) -> usize {
        self.n
    }

    /// Number of segments `T`.
    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn range(&self, t: usize) -> Range<usize> {
        self.ranges[t].clone()
    }
}

pub fn make_segments(n: usize, m: usize) -> Result<SegmentPlan> {
    if n == 0 {
        return Err(Error::Empty("frames"));
    }
    if m == 0 {
        return Err(Error::InvalidSegmentSize);
    }
    let ranges = (0..n).step_by(m).map(|s| s..(s + m).min(n)).collect();
    Ok(SegmentPlan { m, n, ranges })
}

/// Per-segment selections `[S_1, …, S_t]`, each in greedy pick order.
pub type SelectionTrace = Vec<Vec<usize>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DpOptions {
    /// Run the relaxations of each stage on the rayon pool (needs the `parallel` feature).
    pub parallel: bool,
    /// How many of the most recently selected frames condition the next segment.
    pub condition_size: usize,
}

impl Default for DpOptions {
    fn default() -> Self {
        Self { parallel: false, condition_size: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct BackPointer {
    prev: usize,
    picks: Vec<usize>,
    /// Last `condition_size` frames of the trace ending here.
    tail: Vec<usize>,
}

/// `Q*[t][C]` with back-pointers to recover the selection trace `𝒯[t][C]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DpTable {
    qstar: Vec<Vec<f64>>,
    back: Vec<Vec<Option<BackPointer>>>,
}

impl DpTable {
    fn new(stages: usize, k: usize) -> Self {
        let mut qstar = vec![vec![f64::NEG_INFINITY; k + 1]; stages + 1];
        qstar[0][0] = 0.0;
        let mut back = vec![vec![None; k + 1]; stages + 1];
        back[0][0] = Some(BackPointer { prev: 0, picks: Vec::new(), tail: Vec::new() });
        Self { qstar, back }
    }

    /// Number of segments `T`.
    pub fn stages(&self) -> usize {
        self.qstar.len() - 1
    }

    pub fn budget(&self) -> usize {
        self.qstar[0].len() - 1
    }

    /// Best accumulated reward for `c` frames from the first `t` segments; `−∞` if unreachable.
    pub fn qstar(&self, t: usize, c: usize) -> f64 {
        self.qstar[t][c]
    }

    pub fn is_reachable(&self, t: usize, c: usize) -> bool {
        self.back[t][c].is_some()
    }

    /// Selection trace of cell `(t, c)`.
    pub fn trace(&self, t: usize, c: usize) -> Option<SelectionTrace> {
        self.back[t][c].as_ref()?;
        let mut out = vec![Vec::new(); t];
        let mut cur = c;
        for s in (1..=t).rev() {
            let bp = self.back[s][cur].as_ref().expect("reachable chain");
            out[s - 1] = bp.picks.clone();
            cur = bp.prev;
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpOutcome {
    pub table: DpTable,
    pub trace: SelectionTrace,
    /// Selected frames, ascending.
    pub indices: Vec<usize>,
    /// Frames taken from each segment.
    pub allocation: Vec<usize>,
    /// `Q*[T][k]`.
    pub score: f64,
}

/// One segment's frames, their kernel block, and the offset `−log det(L̃_N + I)`.
pub(crate) struct Stage {
    candidates: Vec<usize>,
    block: Matrix,
    offset: f64,
}

impl Stage {
    pub(crate) fn new<K: KernelMatrix + ?Sized>(kernel: &K, range: Range<usize>) -> Result<Self> {
        let candidates: Vec<usize> = range.collect();
        let block = kernel.gather(&candidates);
        let offset = -logdet_psd(&block.add_identity())?.value;
        Ok(Self { candidates, block, offset })
    }

    /// Conditional greedy on the local matrix over `condition ∪ candidates`.
    pub(crate) fn run<K: KernelMatrix + ?Sized>(
        &self,
        kernel: &K,
        condition: &[usize],
        kt: usize,
    ) -> Result<ConditionalOutcome> {
        let c = condition.len();
        let m = self.candidates.len();
        let mut local = Matrix::zeros(c + m, c + m);
        for (a, &i) in condition.iter().enumerate() {
            for (b, &j) in condition.iter().enumerate().skip(a) {
                let v = kernel.entry(i, j);
                local[(a, b)] = v;
                local[(b, a)] = v;
            }
            for (b, &j) in self.candidates.iter().enumerate() {
                let v = kernel.entry(i, j);
                local[(a, c + b)] = v;
                local[(c + b, a)] = v;
            }
        }
        for a in 0..m {
            for b in 0..m {
                local[(c + a, c + b)] = self.block[(a, b)];
            }
        }
        let ctx = ConditionalContext::new((0..c).collect(), (c..c + m).collect(), self.offset)?;
        let mut out = conditional_greedy_map(&local, &ctx, kt)?;
        for p in &mut out.indices {
            *p = self.candidates[*p - c];
        }
        Ok(out)
    }
}

pub(crate) fn extend_tail(tail: &[usize], picks: &[usize], size: usize) -> Vec<usize> {
    let mut all: Vec<usize> = tail.iter().chain(picks).copied().collect();
    let drop = all.len().saturating_sub(size);
    all.drain(..drop);
    all
}

fn relax_sources<K: KernelMatrix + Sync + ?Sized>(
    kernel: &K,
    stage: &Stage,
    sources: &[(usize, &[usize])],
    k: usize,
    parallel: bool,
) -> Result<Vec<ConditionalOutcome>> {
    let work = |&(c, tail): &(usize, &[usize])| {
        let kt = stage.candidates.len().min(k - c);
        stage.run(kernel, tail, kt)
    };
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return sources.par_iter().map(work).collect();
    }
    let _ = parallel;
    sources.iter().map(work).collect()
}

/// Fills the `Q*` table over all segments and returns the best `k`-frame selection.
pub fn allocate_and_select<K: KernelMatrix + Sync + ?Sized>(
    kernel: &K,
    plan: &SegmentPlan,
    k: usize,
    opts: DpOptions,
) -> Result<DpOutcome> {
    if plan.frames() != kernel.size() {
        return Err(Error::DimensionMismatch { expected: kernel.size(), got: plan.frames() });
    }
    if k > plan.frames() {
        return Err(Error::BudgetExceedsFrames { budget: k, frames: plan.frames() });
    }
    let stages = plan.len();
    let mut table = DpTable::new(stages, k);
    if k == 0 {
        return Ok(DpOutcome { table, trace: Vec::new(), indices: Vec::new(), allocation: Vec::new(), score: 0.0 });
    }
    for t in 1..=stages {
        let stage = Stage::new(kernel, plan.range(t - 1))?;
        let sources: Vec<(usize, &[usize])> =
            (0..=k).filter_map(|c| table.back[t - 1][c].as_ref().map(|bp| (c, bp.tail.as_slice()))).collect();
        let outcomes = relax_sources(kernel, &stage, &sources, k, opts.parallel)?;
        let mut next_q = vec![f64::NEG_INFINITY; k + 1];
        let mut next_back: Vec<Option<BackPointer>> = vec![None; k + 1];
        // ascending source order with strict `>`: ties keep the smaller C_{t-1}
        for (&(c, tail), out) in sources.iter().zip(&outcomes) {
            let base = table.qstar[t - 1][c];
            for (j, &reward) in out.rewards.iter().enumerate() {
                let value = base + reward;
                if value > next_q[c + j] {
                    next_q[c + j] = value;
                    let picks = out.indices[..j].to_vec();
                    next_back[c + j] =
                        Some(BackPointer { prev: c, tail: extend_tail(tail, &picks, opts.condition_size), picks });
                }
            }
        }
        table.qstar[t] = next_q;
        table.back[t] = next_back;
    }
    let trace = table.trace(stages, k).ok_or(Error::Internal("final cell unreachable"))?;
    let score = table.qstar[stages][k];
    let allocation = trace.iter().map(Vec::len).collect();
    let mut indices: Vec<usize> = trace.iter().flatten().copied().collect();
    indices.sort_unstable();
    Ok(DpOutcome { table, trace, indices, allocation, score })
}

/// Result of a fixed-allocation sequential pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SequentialOutcome {
    pub trace: SelectionTrace,
    /// Sum of the per-segment conditional greedy rewards.
    pub score: f64,
}

/// Segment by segment, greedily takes `sizes[t]` frames conditioned on the
/// most recently selected frame(s). No allocation search.
pub fn sequential_map_fixed_sizes<K: KernelMatrix + ?Sized>(
    kernel: &K,
    plan: &SegmentPlan,
    sizes: &[usize],
) -> Result<SequentialOutcome> {
    sequential_with_condition(kernel, plan, sizes, 1)
}

pub fn sequential_with_condition<K: KernelMatrix + ?Sized>(
    kernel: &K,
    plan: &SegmentPlan,
    sizes: &[usize],
    condition_size: usize,
) -> Result<SequentialOutcome> {
    check_sizes(plan, sizes)?;
    if sizes.iter().all(|&s| s == 0) {
        return Ok(SequentialOutcome { trace: Vec::new(), score: 0.0 });
    }
    let mut trace = Vec::with_capacity(plan.len());
    let mut tail: Vec<usize> = Vec::new();
    let mut score = 0.0;
    for (t, &kt) in sizes.iter().enumerate() {
        let stage = Stage::new(kernel, plan.range(t))?;
        let out = stage.run(kernel, &tail, kt)?;
        score += out.rewards[kt];
        tail = extend_tail(&tail, &out.indices, condition_size);
        trace.push(out.indices);
    }
    Ok(SequentialOutcome { trace, score })
}

pub(crate) fn check_sizes(plan: &SegmentPlan, sizes: &[usize]) -> Result<()> {
    if sizes.len() != plan.len() {
        return Err(Error::InfeasibleSizes("one size per segment required"));
    }
    if sizes.iter().zip(plan.ranges()).any(|(&s, r)| s > r.len()) {
        return Err(Error::InfeasibleSizes("size exceeds segment length"));
    }
    Ok(())
}

/// Recomputes `Σ_t [log det L̃_{cond_t ∪ S_t} − log det L̃_{cond_t} + offset_t]`
/// with dense Cholesky determinants, conditioning on the latest selected frame.
pub fn score_of<K: KernelMatrix + ?Sized>(trace: &[Vec<usize>], kernel: &K, plan: &SegmentPlan) -> Result<f64> {
    score_with_condition(trace, kernel, plan, 1)
}

pub fn score_with_condition<K: KernelMatrix + ?Sized>(
    trace: &[Vec<usize>],
    kernel: &K,
    plan: &SegmentPlan,
    condition_size: usize,
) -> Result<f64> {
    if trace.len() > plan.len() {
        return Err(Error::InconsistentTrace("more segments than the plan"));
    }
    let mut seen = Vec::new();
    let mut tail: Vec<usize> = Vec::new();
    let mut score = 0.0;
    for (t, picks) in trace.iter().enumerate() {
        let range = plan.range(t);
        if picks.iter().any(|i| !range.contains(i)) {
            return Err(Error::InconsistentTrace("index outside its segment"));
        }
        seen.extend_from_slice(picks);
        let candidates: Vec<usize> = range.collect();
        let offset = -logdet_psd(&kernel.gather(&candidates).add_identity())?.value;
        let joint: Vec<usize> = tail.iter().chain(picks).copied().collect();
        let reward = logdet_psd(&kernel.gather(&joint))?.value - logdet_psd(&kernel.gather(&tail))?.value;
        score += reward + offset;
        tail = extend_tail(&tail, picks, condition_size);
    }
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InconsistentTrace("duplicate index"));
    }
    Ok(score)
}
