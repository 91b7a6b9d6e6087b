//! Endpoint selection for connection requests.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Sigmas beyond which an id's rounding bin counts as unreachable.
const MAX_GAUSSIAN_REACH: f64 = 8.0;

fn default_mu() -> f64 {
    50.0
}

fn default_sigma() -> f64 {
    20.0
}

fn default_exponent() -> f64 {
    -0.75
}

/// Distribution over node ids from which both request endpoints are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum RequestDistribution {
    #[default]
    Uniform,
    /// Normal in node-id units, rounded to the nearest id and resampled
    /// until it lands in range.
    Gaussian {
        #[serde(default = "default_mu")]
        mu: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    /// `P(i) ∝ i^exponent` over ids `1..=n`.
    PowerLaw {
        #[serde(default = "default_exponent")]
        exponent: f64,
    },
}

impl RequestDistribution {
    pub fn gaussian() -> Self {
        RequestDistribution::Gaussian { mu: default_mu(), sigma: default_sigma() }
    }

    pub fn power_law() -> Self {
        RequestDistribution::PowerLaw { exponent: default_exponent() }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RequestDistribution::Uniform => Ok(()),
            RequestDistribution::Gaussian { mu, sigma } => {
                if !mu.is_finite() || !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "gaussian needs finite mu and sigma > 0, got mu={mu} sigma={sigma}"
                    )));
                }
                Ok(())
            }
            RequestDistribution::PowerLaw { exponent } => {
                if !(exponent < 0.0 && exponent.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "power-law exponent must be negative, got {exponent}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Short label used in file names and summaries.
    pub fn label(&self) -> &'static str {
        match self {
            RequestDistribution::Uniform => "uniform",
            RequestDistribution::Gaussian { .. } => "gaussian",
            RequestDistribution::PowerLaw { .. } => "power_law",
        }
    }
}

enum Kernel {
    Uniform,
    Gaussian(Normal<f64>),
    /// Cumulative pmf; `cdf[i]` is `P(id <= i + 1)`.
    PowerLaw(Vec<f64>),
}

/// A [`RequestDistribution`] bound to a node count, with any lookup tables
/// precomputed.
pub struct RequestSampler {
    n: u32,
    kernel: Kernel,
}

impl RequestSampler {
    pub fn new(dist: RequestDistribution, n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 nodes, got {n}")));
        }
        dist.validate()?;
        let kernel = match dist {
            RequestDistribution::Uniform => Kernel::Uniform,
            RequestDistribution::Gaussian { mu, sigma } => {
                // Pairs need two distinct ids, so the second-closest id's
                // rounding bin must be within reach or resampling never ends.
                let mut gaps: Vec<f64> = (1..=n).map(|i| ((mu - i as f64).abs() - 0.5).max(0.0)).collect();
                gaps.sort_by(f64::total_cmp);
                if gaps[1] > MAX_GAUSSIAN_REACH * sigma {
                    return Err(Error::InvalidParameter(format!(
                        "gaussian mu={mu} sigma={sigma} puts almost no mass on two distinct ids in 1..={n}"
                    )));
                }
                Kernel::Gaussian(Normal::new(mu, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?)
            }
            RequestDistribution::PowerLaw { exponent } => {
                let mut acc = 0.0;
                let mut cdf: Vec<f64> = (1..=n)
                    .map(|i| {
                        acc += (i as f64).powf(exponent);
                        acc
                    })
                    .collect();
                for c in &mut cdf {
                    *c /= acc;
                }
                *cdf.last_mut().unwrap() = 1.0;
                Kernel::PowerLaw(cdf)
            }
        };
        Ok(RequestSampler { n, kernel })
    }

    pub fn n_nodes(&self) -> u32 {
        self.n
    }

    pub fn sample_node<R: Rng + ?Sized>(&self, rng: &mut R) -> NodeId {
        let id = match &self.kernel {
            Kernel::Uniform => rng.random_range(1..=self.n),
            Kernel::Gaussian(normal) => loop {
                let x = normal.sample(rng).round();
                if x >= 1.0 && x <= self.n as f64 {
                    break x as u32;
                }
            },
            Kernel::PowerLaw(cdf) => {
                let u: f64 = rng.random();
                cdf.partition_point(|&c| c <= u) as u32 + 1
            }
        };
        NodeId::from_index(id as usize - 1)
    }

    /// Two distinct endpoints; only the second is redrawn on collision.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (NodeId, NodeId) {
        let first = self.sample_node(rng);
        loop {
            let second = self.sample_node(rng);
            if second != first {
                return (first, second);
            }
        }
    }
}

pub fn sample_node<R: Rng + ?Sized>(dist: RequestDistribution, n: u32, rng: &mut R) -> Result<NodeId> {
    Ok(RequestSampler::new(dist, n)?.sample_node(rng))
}

pub fn sample_pair<R: Rng + ?Sized>(dist: RequestDistribution, n: u32, rng: &mut R) -> Result<(NodeId, NodeId)> {
    Ok(RequestSampler::new(dist, n)?.sample_pair(rng))
}
