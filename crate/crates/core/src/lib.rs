//! Entanglement distribution simulator for studying edge usage and node
//! degree centrality in quantum networks.
//!
//! A run generates a random physical topology, seeds entanglements
//! proactively from per-link historical counts, and then serves a stream of
//! end-to-end requests whose endpoints follow a uniform, Gaussian or
//! power-law distribution. Every entanglement is an edge; swaps create
//! virtual edges between non-adjacent nodes. Usage frequencies and degrees
//! are recorded as the run proceeds and summarised with power-law and
//! monomolecular fits.

pub mod config;
pub mod error;
pub mod fitting;
pub mod graph;
pub mod metrics;
pub mod output;
pub mod protocol;
pub mod sampling;
pub mod simulation;
pub mod sweep;

pub use config::{load_config, SimConfig};
pub use error::{Error, Result};
pub use fitting::{fit_monomolecular, fit_monomolecular_auto, fit_power_law, FitResult, Model};
pub use graph::{
    generate_physical_topology, EdgeId, EdgeKind, EntangledEdge, EntangledGraph, HistoricalCounts, NodeId,
    PhysicalTopology,
};
pub use metrics::{degree_growth, sorted_usage_frequencies, KindFilter, MetricsSeries};
pub use protocol::{proactive_select, ConnectionOutcome, ConnectionStatus, Event, Network, Origin};
pub use sampling::{RequestDistribution, RequestSampler};
pub use simulation::{run_many, run_simulation, run_simulation_quiet, Execution, SimulationReport};
