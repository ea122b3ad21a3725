use std::time::Instant;

use framesel_core::{pool_query_chunks, select_with_clock, Clock, EmbeddingSet, Matrix, SelectionResult};

use crate::format::Embeddings;
use crate::{Error, Result, RunConfig};

/// Wall clock measured from construction.
#[derive(Debug, Clone, Copy)]
pub struct StdClock(Instant);

impl StdClock {
    pub fn start() -> Self {
        StdClock(Instant::now())
    }
}

impl Default for StdClock {
    fn default() -> Self {
        Self::start()
    }
}

impl Clock for StdClock {
    fn now_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

fn upcast(data: &[f32]) -> Vec<f64> {
    data.iter().map(|&v| f64::from(v)).collect()
}

/// Selects frames from row-major `f32` arrays.
///
/// `query` holds `query_rows` rows of length `dim`; a single row is used
/// directly, several rows are mean-pooled and normalized first.
pub fn select_frames(
    frames: &[f32],
    rows: usize,
    dim: usize,
    query: &[f32],
    query_rows: usize,
    config: &RunConfig,
) -> Result<SelectionResult> {
    if rows.checked_mul(dim) != Some(frames.len()) {
        return Err(Error::Config(format!("frames: expected {rows}x{dim} values, got {}", frames.len())));
    }
    if query_rows == 0 {
        return Err(Error::Config("query: no rows".into()));
    }
    if query_rows.checked_mul(dim) != Some(query.len()) {
        return Err(Error::Engine(framesel_core::Error::DimensionMismatch {
            expected: dim,
            got: query.len() / query_rows,
        }));
    }
    let frames = Matrix::from_vec(rows, dim, upcast(frames))?;
    let query = if query_rows == 1 {
        upcast(query)
    } else {
        pool_query_chunks(&Matrix::from_vec(query_rows, dim, upcast(query))?)?
    };
    let emb = EmbeddingSet::new(frames, query, config.normalize)?;
    let req = config.request(emb)?;
    Ok(select_with_clock(&req, &StdClock::start())?)
}

pub fn select_embeddings(frames: &Embeddings, query: &Embeddings, config: &RunConfig) -> Result<SelectionResult> {
    if frames.dim() != query.dim() {
        return Err(Error::Engine(framesel_core::Error::DimensionMismatch {
            expected: frames.dim(),
            got: query.dim(),
        }));
    }
    select_frames(frames.data(), frames.rows(), frames.dim(), query.data(), query.rows(), config)
}
