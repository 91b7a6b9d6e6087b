//! Single runs and batches of independent runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::SimConfig;
use crate::error::Result;
use crate::fitting::{fit_monomolecular, fit_monomolecular_auto, fit_power_law, FitResult};
use crate::graph::{generate_physical_topology, NodeId};
use crate::metrics::{degree_growth, sorted_usage_frequencies, DegreeGrowthReport, KindFilter, MetricsSeries};
use crate::protocol::{Event, Network};
use crate::sampling::RequestSampler;

/// Growth curves are fitted over the first this-many requests.
pub const GROWTH_FIT_WINDOW: u64 = 1000;
/// Largest onset tried when fitting degree trajectories.
pub const MAX_ONSET: u32 = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedFit {
    pub series_name: String,
    #[serde(flatten)]
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub config: SimConfig,
    pub physical_links: usize,
    pub metrics: MetricsSeries,
    pub degree_growth: Option<DegreeGrowthReport>,
    pub sorted_all: Vec<(usize, u64)>,
    pub sorted_physical: Vec<(usize, u64)>,
    pub sorted_virtual: Vec<(usize, u64)>,
    pub fits: Vec<NamedFit>,
    pub completed: u64,
    pub failed: u64,
    /// Final entangled degree per node, index `j - 1`.
    pub entangled_degrees: Vec<u32>,
    /// Requests touching each node.
    pub connection_touches: Vec<u64>,
    /// Distinct request partners of each node.
    pub connection_partners: Vec<u64>,
    /// Total usage frequency summed over all edges.
    pub frequency_total: u64,
    #[serde(skip)]
    pub events: Vec<Event>,
}

impl SimulationReport {
    pub fn final_e_total(&self) -> u64 {
        self.metrics.e_total.last().map_or(0, |&(_, e)| e)
    }

    /// Mean of the `top` largest usage frequencies over all edges.
    pub fn top_mean_frequency(&self, top: usize) -> f64 {
        let head = &self.sorted_all[..top.min(self.sorted_all.len())];
        if head.is_empty() {
            return 0.0;
        }
        head.iter().map(|&(_, f)| f as f64).sum::<f64>() / head.len() as f64
    }

    pub fn fit(&self, series_name: &str) -> Option<&FitResult> {
        self.fits.iter().find(|f| f.series_name == series_name).map(|f| &f.fit)
    }
}

fn rank_points(sorted: &[(usize, u64)]) -> Vec<(f64, f64)> {
    sorted.iter().map(|&(r, f)| (r as f64, f as f64)).collect()
}

fn series_points<T: Copy + Into<f64>>(series: &[(u64, T)], window: u64) -> Vec<(f64, f64)> {
    series.iter().filter(|&&(k, _)| k <= window).map(|&(k, v)| (k as f64, v.into())).collect()
}

fn fit_families(report: &SimulationReport) -> Vec<NamedFit> {
    let mut fits = Vec::new();
    let mut push = |name: &str, fit: Result<FitResult>| {
        if let Ok(fit) = fit {
            fits.push(NamedFit { series_name: name.to_string(), fit });
        }
    };
    push("edge_freq_sorted_all", fit_power_law(&rank_points(&report.sorted_all)));
    push("edge_freq_sorted_phys", fit_power_law(&rank_points(&report.sorted_physical)));
    push("edge_freq_sorted_virt", fit_power_law(&rank_points(&report.sorted_virtual)));

    let growth: Vec<(u64, f64)> = report.metrics.e_total.iter().map(|&(k, e)| (k, e as f64)).collect();
    push("ent_growth", fit_monomolecular(&series_points(&growth, GROWTH_FIT_WINDOW), 0));

    if let Some(dg) = &report.degree_growth {
        for (name, node) in [("degree_max_growth_node", dg.argmax), ("degree_min_growth_node", dg.argmin)] {
            let traj: Vec<(u64, f64)> =
                report.metrics.node_trajectory(node).into_iter().map(|(k, d)| (k, d as f64)).collect();
            push(name, fit_monomolecular_auto(&series_points(&traj, GROWTH_FIT_WINDOW), MAX_ONSET));
        }
    }
    fits
}

/// Run one simulation end to end.
///
/// One proactive round precedes the first request. After request `k` a
/// proactive round runs whenever `k` is a multiple of the interval, then the
/// step-`k` snapshot is recorded.
pub fn run_simulation(config: &SimConfig) -> Result<SimulationReport> {
    run_with(config, true)
}

/// As [`run_simulation`], without keeping the event log.
pub fn run_simulation_quiet(config: &SimConfig) -> Result<SimulationReport> {
    run_with(config, false)
}

fn run_with(config: &SimConfig, keep_events: bool) -> Result<SimulationReport> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let topology = generate_physical_topology(config.n_nodes, config.alpha, &mut rng)?;
    let physical_links = topology.link_count();
    let sampler = RequestSampler::new(config.distribution, config.n_nodes)?;
    let mut net = Network::new(topology);
    if !keep_events {
        net = net.without_event_log();
    }
    let mut metrics = MetricsSeries::new(config.stride(), Some(config.m_connections));

    net.proactive_round(config.proactive_fraction, 0, &mut rng)?;
    metrics.record_snapshot(&net.graph, 0)?;
    for k in 1..=config.m_connections {
        let (u, v) = sampler.sample_pair(&mut rng);
        net.setup_connection(u, v, k)?;
        if k.is_multiple_of(config.proactive_interval) {
            net.proactive_round(config.proactive_fraction, k, &mut rng)?;
        }
        metrics.record_snapshot(&net.graph, k)?;
    }

    let nodes: Vec<NodeId> = net.topology.nodes().collect();
    let mut report = SimulationReport {
        config: config.clone(),
        physical_links,
        degree_growth: degree_growth(&metrics).ok(),
        metrics,
        sorted_all: sorted_usage_frequencies(&net.graph, KindFilter::All),
        sorted_physical: sorted_usage_frequencies(&net.graph, KindFilter::Physical),
        sorted_virtual: sorted_usage_frequencies(&net.graph, KindFilter::Virtual),
        fits: Vec::new(),
        completed: net.ledger.completed(),
        failed: net.ledger.failed(),
        entangled_degrees: net.graph.degrees(),
        connection_touches: nodes.iter().map(|&j| net.ledger.touch_degree(j)).collect(),
        connection_partners: nodes.iter().map(|&j| net.ledger.partner_degree(j)).collect(),
        frequency_total: net.graph.edges().iter().map(|e| e.usage_frequency).sum(),
        events: net.events().to_vec(),
    };
    report.fits = fit_families(&report);
    Ok(report)
}

/// How a batch of independent runs is scheduled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled and falls
    /// back to sequential execution otherwise.
    #[default]
    Parallel,
}

/// Map `f` over `items`, preserving order.
pub fn map_runs<T, U, F>(items: &[T], execution: Execution, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Run each config independently; results come back in input order.
pub fn run_many(configs: &[SimConfig], execution: Execution, keep_events: bool) -> Vec<Result<SimulationReport>> {
    map_runs(configs, execution, |c| run_with(c, keep_events))
}
