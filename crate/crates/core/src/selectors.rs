//! One entry point for the full method and its ablation baselines.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::budget::{allocate_and_select, make_segments, DpOptions};
use crate::dpp::greedy_map;
use crate::error::{Error, Result};
use crate::kernel::{build_relevance, EmbeddingSet, KernelSpec, LazyKernel, Similarity};
use crate::math;

pub const DEFAULT_LAMBDA: f64 = 0.2;
pub const DEFAULT_SEGMENT: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Conditioned multi-Gaussian kernel, segment-wise DPP, DP budget allocation.
    Mdp3,
    /// Greedy DPP over all frames, no segmentation.
    Dpp,
    /// `k` most query-relevant frames.
    TopK,
    /// Evenly spaced frames.
    Uniform,
    /// `Mdp3` with relevance forced to one (query-agnostic).
    Mdp3Mgk,
    /// `Mdp3` with shifted cosine similarity in place of the RKHS kernels.
    Mdp3Cosine,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Mdp3, Method::Dpp, Method::TopK, Method::Uniform, Method::Mdp3Mgk, Method::Mdp3Cosine];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mdp3 => "mdp3",
            Method::Dpp => "dpp",
            Method::TopK => "topk",
            Method::Uniform => "uniform",
            Method::Mdp3Mgk => "mdp3-mgk",
            Method::Mdp3Cosine => "mdp3-cosine",
        }
    }

    /// Whether the method splits the video into segments.
    pub fn is_segmented(self) -> bool {
        matches!(self, Method::Mdp3 | Method::Mdp3Mgk | Method::Mdp3Cosine)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRequest {
    pub emb: EmbeddingSet,
    pub k: usize,
    pub method: Method,
    pub lambda: f64,
    /// Segment size `m`.
    pub m: usize,
    /// Frame–frame kernel `k`.
    pub kernel: KernelSpec,
    /// Frame–query kernel `g`; `None` reuses `kernel`.
    pub relevance_kernel: Option<KernelSpec>,
    pub parallel: bool,
}

impl SelectionRequest {
    pub fn new(emb: EmbeddingSet, k: usize, method: Method) -> Self {
        Self {
            emb,
            k,
            method,
            lambda: DEFAULT_LAMBDA,
            m: DEFAULT_SEGMENT,
            kernel: KernelSpec::default(),
            relevance_kernel: None,
            parallel: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::ZeroBudget);
        }
        if self.k > self.emb.n() {
            return Err(Error::BudgetExceedsFrames { budget: self.k, frames: self.emb.n() });
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidLambda);
        }
        if self.m == 0 {
            return Err(Error::InvalidSegmentSize);
        }
        Ok(())
    }

    fn relevance_spec(&self) -> &KernelSpec {
        self.relevance_kernel.as_ref().unwrap_or(&self.kernel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTiming {
    pub phase: &'static str,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Strictly increasing frame indices.
    pub indices: Vec<usize>,
    /// Frames per segment; empty for methods without segmentation.
    pub allocation: Vec<usize>,
    /// Method objective: `Q*[T][k]` for the segmented methods, the greedy
    /// log-det for `dpp`, summed relevance for `topk`, zero for `uniform`.
    pub score: f64,
    pub timing: Vec<PhaseTiming>,
}

/// Millisecond wall clock; `no_std` callers can use [`NoClock`].
pub trait Clock {
    fn now_ms(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ms(&self) -> f64 {
        0.0
    }
}

/// Evenly spaced indices `round(i·(n−1)/(k−1))`, inclusive of both ends.
pub fn uniform_indices(n: usize, k: usize) -> Vec<usize> {
    if k == 0 {
        return Vec::new();
    }
    if k == 1 {
        return vec![(n - 1) / 2];
    }
    let step = (n - 1) as f64 / (k - 1) as f64;
    let mut out: Vec<usize> = Vec::with_capacity(k);
    for i in 0..k {
        let mut idx = math::round(i as f64 * step) as usize;
        if let Some(&prev) = out.last() {
            if idx <= prev {
                idx = prev + 1;
            }
        }
        out.push(idx.min(n - 1));
    }
    out
}

/// `k` largest entries of `r`, lower index first on ties; returned ascending.
pub fn topk_indices(r: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..r.len()).collect();
    order.sort_by(|&a, &b| r[b].partial_cmp(&r[a]).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut out = order[..k.min(r.len())].to_vec();
    out.sort_unstable();
    out
}

pub fn select(req: &SelectionRequest) -> Result<SelectionResult> {
    select_with_clock(req, &NoClock)
}

pub fn select_with_clock<C: Clock + ?Sized>(req: &SelectionRequest, clock: &C) -> Result<SelectionResult> {
    req.validate()?;
    let n = req.emb.n();
    let k = req.k;
    let mut timing = Vec::new();
    let t0 = clock.now_ms();

    if req.method == Method::Uniform {
        let indices = uniform_indices(n, k);
        timing.push(PhaseTiming { phase: "select", millis: clock.now_ms() - t0 });
        return Ok(SelectionResult { indices, allocation: Vec::new(), score: 0.0, timing });
    }

    let (similarity, relevance) = match req.method {
        Method::Mdp3Cosine => (Similarity::ShiftedCosine, Similarity::ShiftedCosine.relevance(&req.emb)),
        Method::Mdp3Mgk => (Similarity::MultiGaussian(req.kernel.clone()), vec![1.0; n]),
        _ => (Similarity::MultiGaussian(req.kernel.clone()), build_relevance(&req.emb, req.relevance_spec())?),
    };
    let t1 = clock.now_ms();
    timing.push(PhaseTiming { phase: "relevance", millis: t1 - t0 });

    if req.method == Method::TopK {
        let indices = topk_indices(&relevance, k);
        let score = indices.iter().map(|&i| relevance[i]).sum();
        timing.push(PhaseTiming { phase: "select", millis: clock.now_ms() - t1 });
        return Ok(SelectionResult { indices, allocation: Vec::new(), score, timing });
    }

    let kernel = LazyKernel::new(&req.emb, similarity, &relevance, req.lambda)?;
    let t2 = clock.now_ms();
    timing.push(PhaseTiming { phase: "kernel", millis: t2 - t1 });

    let result = if req.method == Method::Dpp {
        let all: Vec<usize> = (0..n).collect();
        let out = greedy_map(&kernel, k, &all)?;
        let mut indices = out.indices;
        indices.sort_unstable();
        SelectionResult { indices, allocation: Vec::new(), score: out.logdet, timing: Vec::new() }
    } else {
        let plan = make_segments(n, req.m)?;
        let opts = DpOptions { parallel: req.parallel, ..DpOptions::default() };
        let out = allocate_and_select(&kernel, &plan, k, opts)?;
        SelectionResult { indices: out.indices, allocation: out.allocation, score: out.score, timing: Vec::new() }
    };
    timing.push(PhaseTiming { phase: "select", millis: clock.now_ms() - t2 });
    Ok(SelectionResult { timing, ..result })
}
