//! Optional JSON config file and the flag / file / default precedence.
//!
//! The file is a flat object of tuning keys. An explicit command-line flag
//! always wins over the file value, which wins over the built-in default.
//! Unknown keys are rejected.

use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<usize>,
    pub a: Option<f64>,
    pub beta: Option<f64>,
    pub lambda1: Option<f64>,
    pub reduction: Option<String>,
    pub crop: Option<usize>,
    pub t_ab: Option<f64>,
    pub t_bc: Option<f64>,
    pub eta: Option<f64>,
    pub lr: Option<f64>,
    pub iters: Option<usize>,
    pub seed: Option<u64>,
    pub log_every: Option<usize>,
    pub alpha: Option<f64>,
    pub gap: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("parsing config file {}", path.display()))
    }
}

/// flag > config file > default
pub fn resolve<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
