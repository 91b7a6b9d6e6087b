//! One-parameter sweeps over a base configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::fitting::Model;
use crate::output::{format_number, write_artifacts};
use crate::sampling::RequestDistribution;
use crate::simulation::{map_runs, run_simulation, Execution, SimulationReport};

/// Number of top-ranked edges averaged in the comparison table.
pub const TOP_EDGES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Sigma,
    Exponent,
    Connections,
    Rho,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma" => Ok(SweepParam::Sigma),
            "exponent" => Ok(SweepParam::Exponent),
            "connections" => Ok(SweepParam::Connections),
            "rho" => Ok(SweepParam::Rho),
            other => Err(Error::InvalidParameter(format!(
                "unknown sweep parameter {other:?}; expected sigma, exponent, connections or rho"
            ))),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::Sigma => "sigma",
            SweepParam::Exponent => "exponent",
            SweepParam::Connections => "connections",
            SweepParam::Rho => "rho",
        })
    }
}

impl SweepParam {
    /// Copy of `base` with this parameter set to `value`. Sweeping sigma or
    /// exponent switches the request distribution to the matching family.
    pub fn apply(self, base: &SimConfig, value: f64) -> Result<SimConfig> {
        let mut config = base.clone();
        match self {
            SweepParam::Sigma => {
                let mu = match base.distribution {
                    RequestDistribution::Gaussian { mu, .. } => mu,
                    _ => 50.0,
                };
                config.distribution = RequestDistribution::Gaussian { mu, sigma: value };
            }
            SweepParam::Exponent => config.distribution = RequestDistribution::PowerLaw { exponent: value },
            SweepParam::Connections => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidParameter(format!("connections must be a whole number, got {value}")));
                }
                config.m_connections = value as u64;
            }
            SweepParam::Rho => config.proactive_fraction = value,
        }
        config.validate()?;
        Ok(config)
    }
}

pub fn parse_values(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(|v| {
            v.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("not a number in --values: {v:?}")))
        })
        .collect()
}

/// One row of `<param>_comparison.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub value: String,
    pub seed: u64,
    pub completed: u64,
    pub failed: u64,
    pub final_e_total: u64,
    pub top20_mean_frequency: f64,
    pub max_frequency: u64,
    pub powerlaw_a: Option<f64>,
    pub powerlaw_b: Option<f64>,
    pub powerlaw_r_squared: Option<f64>,
}

impl ComparisonRow {
    pub fn from_report(value: f64, report: &SimulationReport) -> Self {
        let pl = report.fit("edge_freq_sorted_all");
        let (a, b) = match pl.map(|f| f.model) {
            Some(Model::PowerLaw { a, b }) => (Some(a), Some(b)),
            _ => (None, None),
        };
        ComparisonRow {
            value: format_number(value),
            seed: report.config.seed,
            completed: report.completed,
            failed: report.failed,
            final_e_total: report.final_e_total(),
            top20_mean_frequency: report.top_mean_frequency(TOP_EDGES),
            max_frequency: report.sorted_all.first().map_or(0, |&(_, f)| f),
            powerlaw_a: a,
            powerlaw_b: b,
            powerlaw_r_squared: pl.map(|f| f.r_squared),
        }
    }
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<ComparisonRow>,
    pub subdirs: Vec<PathBuf>,
    pub comparison_csv: PathBuf,
}

pub fn subdir_name(param: SweepParam, value: f64) -> String {
    format!("{param}_{}", format_number(value))
}

/// Run one simulation per value, seeded `base.seed + index`, each writing to
/// its own subdirectory of `out`. The comparison CSV is written once all runs
/// have finished.
pub fn run_sweep(
    base: &SimConfig,
    param: SweepParam,
    values: &[f64],
    out: &Path,
    execution: Execution,
) -> Result<SweepOutcome> {
    let configs = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut c = param.apply(base, v)?;
            c.seed = base.seed.wrapping_add(i as u64);
            c.output_dir = out.join(subdir_name(param, v));
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;

    let results = map_runs(&configs, execution, |c| -> Result<SimulationReport> {
        let report = run_simulation(c)?;
        write_artifacts(&report, &c.output_dir)?;
        Ok(report)
    });

    let mut rows = Vec::with_capacity(values.len());
    for (value, result) in values.iter().zip(results) {
        rows.push(ComparisonRow::from_report(*value, &result?));
    }
    let comparison_csv = out.join(format!("{param}_comparison.csv"));
    let mut w = csv::Writer::from_path(&comparison_csv)?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(SweepOutcome { rows, subdirs: configs.into_iter().map(|c| c.output_dir).collect(), comparison_csv })
}
