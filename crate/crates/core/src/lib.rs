//! Query-conditioned frame selection.
//!
//! Given `n` frame embeddings and a query embedding, pick `k` frame indices
//! that are relevant to the query, diverse as a list, and spread along the
//! timeline. The pieces:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`kernel`] | multi-Gaussian kernels, relevance vector, conditioned similarity |
//! | [`dpp`] | greedy MAP inference for (conditional) DPPs with incremental Cholesky |
//! | [`budget`] | segment plan and the dynamic program that splits `k` across segments |
//! | [`selectors`] | one `select` entry point for the full method and its baselines |
//! | [`oracle`] | slow enumeration-based references for tests |
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is on.
//! The `parallel` feature runs the per-stage DP relaxations on rayon.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod budget;
pub mod dpp;
mod error;
pub mod kernel;
mod math;
pub mod matrix;
pub mod oracle;
pub mod selectors;

pub use budget::{
    allocate_and_select, make_segments, score_of, sequential_map_fixed_sizes, DpOptions, DpOutcome, DpTable,
    SegmentPlan, SelectionTrace,
};
pub use dpp::{
    conditional_greedy_map, greedy_map, logdet_psd, segment_offset, ConditionalContext, ConditionalOutcome,
    GreedyOutcome, GreedyState, LogDet, JITTER,
};
pub use error::{Error, Result};
pub use kernel::{
    build_relevance, build_similarity, condition_kernel, multi_gaussian, pool_query_chunks, ConditionedKernel,
    EmbeddingSet, KernelComponent, KernelSpec, LazyKernel, Similarity,
};
pub use matrix::{KernelMatrix, Matrix};
pub use selectors::{
    select, select_with_clock, Clock, Method, NoClock, PhaseTiming, SelectionRequest, SelectionResult,
};

/// Engine version reported in result documents.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
