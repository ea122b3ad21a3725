use framesel_core::kernel::DEFAULT_ALPHAS;
use framesel_core::selectors::{DEFAULT_LAMBDA, DEFAULT_SEGMENT};
use framesel_core::{EmbeddingSet, KernelSpec, Method, SelectionRequest};

use crate::{Error, Result};

/// Everything a run needs besides the embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub k: usize,
    pub lambda: f64,
    /// Segment size.
    pub m: usize,
    /// Squared bandwidths of the kernel grid, equally weighted.
    pub alphas: Vec<f64>,
    pub normalize: bool,
    pub parallel: bool,
    /// Seed for synthetic data generation.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::Mdp3,
            k: 8,
            lambda: DEFAULT_LAMBDA,
            m: DEFAULT_SEGMENT,
            alphas: DEFAULT_ALPHAS.to_vec(),
            normalize: true,
            parallel: false,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        Ok(KernelSpec::averaged(&self.alphas)?)
    }

    pub fn request(&self, emb: EmbeddingSet) -> Result<SelectionRequest> {
        let mut req = SelectionRequest::new(emb, self.k, self.method);
        req.lambda = self.lambda;
        req.m = self.m;
        req.kernel = self.kernel_spec()?;
        req.parallel = self.parallel;
        req.validate()?;
        Ok(req)
    }
}

/// Parses `a1,a2,...` into a bandwidth list.
pub fn parse_alphas(s: &str) -> Result<Vec<f64>> {
    let alphas = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad kernel bandwidth `{}`", t.trim()))))
        .collect::<Result<Vec<_>>>()?;
    KernelSpec::averaged(&alphas)?;
    Ok(alphas)
}
