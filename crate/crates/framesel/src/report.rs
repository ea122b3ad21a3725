//! Versioned JSON result and error documents.

use std::collections::BTreeMap;

use framesel_core::SelectionResult;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, RunConfig, ENGINE_VERSION};

pub const RESULT_SCHEMA: &str = "framesel.result";
pub const ERROR_SCHEMA: &str = "framesel.error";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDocument {
    pub schema: String,
    pub schema_version: u32,
    pub engine_version: String,
    pub method: String,
    pub k: usize,
    pub lambda: f64,
    pub segment: usize,
    pub kernel: Vec<f64>,
    pub normalize: bool,
    pub frames: usize,
    pub dim: usize,
    pub indices: Vec<usize>,
    pub allocation: Vec<usize>,
    pub score: f64,
    /// Milliseconds per phase.
    pub timings: BTreeMap<String, f64>,
}

impl ResultDocument {
    pub fn new(config: &RunConfig, frames: usize, dim: usize, result: &SelectionResult) -> Self {
        Self {
            schema: RESULT_SCHEMA.into(),
            schema_version: SCHEMA_VERSION,
            engine_version: ENGINE_VERSION.into(),
            method: config.method.name().into(),
            k: config.k,
            lambda: config.lambda,
            segment: config.m,
            kernel: config.alphas.clone(),
            normalize: config.normalize,
            frames,
            dim,
            indices: result.indices.clone(),
            allocation: result.allocation.clone(),
            score: result.score,
            timings: result.timing.iter().map(|p| (p.phase.to_string(), p.millis)).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Parses and checks the schema name and version.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        check_schema(&doc.schema, RESULT_SCHEMA, doc.schema_version)?;
        Ok(doc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorInfo {
    pub code: String,
    pub exit_code: i32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorDocument {
    pub schema: String,
    pub schema_version: u32,
    pub engine_version: String,
    pub error: ErrorInfo,
}

impl ErrorDocument {
    pub fn new(err: &Error) -> Self {
        Self {
            schema: ERROR_SCHEMA.into(),
            schema_version: SCHEMA_VERSION,
            engine_version: ENGINE_VERSION.into(),
            error: ErrorInfo { code: err.code().into(), exit_code: err.exit_code(), message: err.to_string() },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        check_schema(&doc.schema, ERROR_SCHEMA, doc.schema_version)?;
        Ok(doc)
    }
}

pub(crate) fn check_schema(name: &str, expected: &str, version: u32) -> Result<()> {
    if name != expected {
        return Err(Error::Format(format!("unexpected schema `{name}`, expected `{expected}`")));
    }
    if version != SCHEMA_VERSION {
        return Err(Error::Format(format!("unsupported schema version {version}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use framesel_core::PhaseTiming;

    fn sample() -> ResultDocument {
        let res = SelectionResult {
            indices: vec![1, 5],
            allocation: vec![1, 1],
            score: -0.5,
            timing: vec![PhaseTiming { phase: "select", millis: 1.5 }],
        };
        ResultDocument::new(&RunConfig::default(), 10, 4, &res)
    }

    #[test]
    fn round_trip() {
        let doc = sample();
        assert_eq!(ResultDocument::from_json(&doc.to_json().unwrap()).unwrap(), doc);
    }

    #[test]
    fn unknown_fields_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&sample().to_json().unwrap()).unwrap();
        v["extra"] = 1.into();
        assert!(ResultDocument::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn version_checked() {
        let mut doc = sample();
        doc.schema_version = 99;
        assert!(ResultDocument::from_json(&doc.to_json().unwrap()).is_err());
    }
}
