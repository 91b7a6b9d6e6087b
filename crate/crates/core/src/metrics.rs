//! Time series and rank-frequency observables.
//!
//! Step `k = 0` is the state after the initial proactive round and before
//! any request; step `k >= 1` is the state after the k-th request. In the
//! usual `d_j(k)` notation with requests counted from 1, our snapshot at
//! step `k` is `d_j(k + 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeKind, EntangledGraph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindFilter {
    All,
    Physical,
    Virtual,
}

impl KindFilter {
    fn admits(self, kind: EdgeKind) -> bool {
        match self {
            KindFilter::All => true,
            KindFilter::Physical => kind == EdgeKind::Physical,
            KindFilter::Virtual => kind == EdgeKind::Virtual,
        }
    }
}

/// Usage frequencies of matching edges, sorted descending and ranked from 1.
/// Ties keep creation order.
pub fn sorted_usage_frequencies(graph: &EntangledGraph, kind: KindFilter) -> Vec<(usize, u64)> {
    let mut freqs: Vec<(u64, u32)> =
        graph.edges().iter().filter(|e| kind.admits(e.kind)).map(|e| (e.usage_frequency, e.id.get())).collect();
    freqs.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    freqs.into_iter().enumerate().map(|(i, (f, _))| (i + 1, f)).collect()
}

/// Snapshot of every node's entangled degree at one step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSnapshot {
    pub k: u64,
    pub degrees: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub e_total: Vec<(u64, u64)>,
    pub max_virtual_freq: Vec<(u64, u64)>,
    pub max_physical_freq: Vec<(u64, u64)>,
    pub degree_series: Vec<DegreeSnapshot>,
    stride: u64,
    final_step: Option<u64>,
}

impl MetricsSeries {
    /// `stride` controls how often degree snapshots are kept. Steps 0, 1 and
    /// `final_step` (when known) are always kept.
    pub fn new(stride: u64, final_step: Option<u64>) -> Self {
        MetricsSeries {
            e_total: Vec::new(),
            max_virtual_freq: Vec::new(),
            max_physical_freq: Vec::new(),
            degree_series: Vec::new(),
            stride: stride.max(1),
            final_step,
        }
    }

    /// Default stride: every step up to 10⁴ requests, every 10th beyond.
    pub fn default_stride(m_connections: u64) -> u64 {
        if m_connections <= 10_000 {
            1
        } else {
            10
        }
    }

    pub fn last_step(&self) -> Option<u64> {
        self.e_total.last().map(|&(k, _)| k)
    }

    pub fn record_snapshot(&mut self, graph: &EntangledGraph, k: u64) -> Result<()> {
        if let Some(last) = self.last_step() {
            if k <= last {
                return Err(Error::OutOfOrderStep { step: k, last });
            }
        }
        self.e_total.push((k, graph.len() as u64));
        self.max_virtual_freq.push((k, graph.max_frequency(EdgeKind::Virtual)));
        self.max_physical_freq.push((k, graph.max_frequency(EdgeKind::Physical)));
        if k <= 1 || k.is_multiple_of(self.stride) || Some(k) == self.final_step {
            self.degree_series.push(DegreeSnapshot { k, degrees: graph.degrees() });
        }
        Ok(())
    }

    /// Degree trajectory `(k, d_j(k))` of a single node.
    pub fn node_trajectory(&self, j: NodeId) -> Vec<(u64, u32)> {
        self.degree_series.iter().map(|s| (s.k, s.degrees[j.index()])).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeGrowth {
    pub node: NodeId,
    pub delta: u64,
    pub initial: u32,
    pub last: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeGrowthReport {
    pub per_node: Vec<DegreeGrowth>,
    pub argmax: NodeId,
    pub argmin: NodeId,
}

/// Per-node sum of degree increments across the recorded snapshots.
pub fn degree_growth(series: &MetricsSeries) -> Result<DegreeGrowthReport> {
    let snaps = &series.degree_series;
    if snaps.len() < 2 {
        return Err(Error::InsufficientData(format!("degree growth needs two snapshots, have {}", snaps.len())));
    }
    let n = snaps[0].degrees.len();
    let mut delta = vec![0i64; n];
    for pair in snaps.windows(2) {
        for (j, d) in delta.iter_mut().enumerate() {
            *d += pair[1].degrees[j] as i64 - pair[0].degrees[j] as i64;
        }
    }
    let last = snaps.last().unwrap();
    let per_node: Vec<DegreeGrowth> = (0..n)
        .map(|j| DegreeGrowth {
            node: NodeId::from_index(j),
            delta: delta[j].max(0) as u64,
            initial: snaps[0].degrees[j],
            last: last.degrees[j],
        })
        .collect();
    // min_by_key/max_by_key keep the first/last extremum respectively, so
    // break ties on id explicitly.
    let argmax = per_node.iter().max_by_key(|g| (g.delta, std::cmp::Reverse(g.node))).unwrap().node;
    let argmin = per_node.iter().min_by_key(|g| (g.delta, g.node)).unwrap().node;
    Ok(DegreeGrowthReport { per_node, argmax, argmin })
}
