//! Run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::RequestDistribution;

/// One simulation run. Missing JSON keys take the defaults below; unknown
/// keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_nodes: u32,
    /// Upper bound on a node's physical degree draw, as a fraction of `n_nodes`.
    pub alpha: f64,
    pub m_connections: u64,
    pub distribution: RequestDistribution,
    /// Fraction of nodes selected in each proactive round.
    pub proactive_fraction: f64,
    /// Requests between proactive rounds.
    pub proactive_interval: u64,
    pub seed: u64,
    /// Steps between degree snapshots; `None` picks 1 up to 10⁴ requests
    /// and 10 beyond.
    pub degree_stride: Option<u64>,
    pub output_dir: PathBuf,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_nodes: 100,
            alpha: 0.25,
            m_connections: 100_000,
            distribution: RequestDistribution::Uniform,
            proactive_fraction: 0.10,
            proactive_interval: 1,
            seed: 1,
            degree_stride: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_nodes < 2 {
            return bad(format!("n_nodes must be at least 2, got {}", self.n_nodes));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if (self.alpha * self.n_nodes as f64).floor() < 1.0 {
            return bad(format!(
                "floor(alpha * n_nodes) must be at least 1 (alpha={}, n_nodes={})",
                self.alpha, self.n_nodes
            ));
        }
        if !(0.0..=1.0).contains(&self.proactive_fraction) {
            return bad(format!("proactive_fraction must lie in [0, 1], got {}", self.proactive_fraction));
        }
        if self.proactive_interval == 0 {
            return bad("proactive_interval must be positive".into());
        }
        if self.degree_stride == Some(0) {
            return bad("degree_stride must be positive".into());
        }
        self.distribution.validate()
    }

    pub fn stride(&self) -> u64 {
        self.degree_stride.unwrap_or_else(|| crate::metrics::MetricsSeries::default_stride(self.m_connections))
    }
}

/// Parse and validate a JSON config file.
pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config { path: path.to_owned(), msg: e.to_string() })?;
    parse_config(&text).map_err(|e| match e {
        Error::Json(e) => Error::Config { path: path.to_owned(), msg: e.to_string() },
        Error::InvalidParameter(msg) => Error::Config { path: path.to_owned(), msg },
        other => other,
    })
}

pub fn parse_config(text: &str) -> Result<SimConfig> {
    let config: SimConfig = serde_json::from_str(text)?;
    config.validate()?;
    Ok(config)
}
