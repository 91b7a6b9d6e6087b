//! Physical topology and the evolving entangled graph.
//!
//! Nodes are identified by 1-based [`NodeId`]s. Internally every per-node
//! table is indexed by `id - 1`.

use std::collections::HashMap;
use std::fmt;

use fixedbitset::FixedBitSet;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1-based node identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(u32);

impl NodeId {
    /// Checked constructor against a network of `n` nodes.
    pub fn new(id: u32, n: u32) -> Result<Self> {
        if id == 0 || id > n {
            return Err(Error::NodeOutOfRange { id, n });
        }
        Ok(NodeId(id))
    }

    pub(crate) fn from_index(index: usize) -> Self {
        NodeId(index as u32 + 1)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Unordered node pair stored with the smaller id first.
pub(crate) fn pair_key(u: NodeId, v: NodeId) -> (u32, u32) {
    if u.0 < v.0 {
        (u.0, v.0)
    } else {
        (v.0, u.0)
    }
}

/// Static graph of physical quantum links.
#[derive(Debug, Clone)]
pub struct PhysicalTopology {
    n_nodes: u32,
    alpha: f64,
    targets: Vec<u32>,
    adjacency: Vec<FixedBitSet>,
    links: Vec<(NodeId, NodeId)>,
    link_index: HashMap<(u32, u32), usize>,
}

impl PhysicalTopology {
    /// Build a topology from an explicit link list. Used for scripted
    /// scenarios; generated topologies go through [`generate_physical_topology`].
    pub fn from_links(n: u32, links: &[(u32, u32)]) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 nodes, got {n}")));
        }
        let mut topo = PhysicalTopology::empty(n, 1.0);
        for &(u, v) in links {
            let (u, v) = (NodeId::new(u, n)?, NodeId::new(v, n)?);
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at node {u}")));
            }
            if topo.is_adjacent(u, v) {
                return Err(Error::InvalidParameter(format!("duplicate link {u}-{v}")));
            }
            topo.add_link(u, v);
        }
        topo.targets = (0..n as usize).map(|i| topo.adjacency[i].count_ones(..) as u32).collect();
        Ok(topo)
    }

    fn empty(n: u32, alpha: f64) -> Self {
        PhysicalTopology {
            n_nodes: n,
            alpha,
            targets: vec![0; n as usize],
            adjacency: (0..n).map(|_| FixedBitSet::with_capacity(n as usize)).collect(),
            links: Vec::new(),
            link_index: HashMap::new(),
        }
    }

    fn add_link(&mut self, u: NodeId, v: NodeId) {
        self.adjacency[u.index()].insert(v.index());
        self.adjacency[v.index()].insert(u.index());
        let key = pair_key(u, v);
        self.link_index.insert(key, self.links.len());
        self.links.push((NodeId(key.0), NodeId(key.1)));
    }

    pub fn n_nodes(&self) -> u32 {
        self.n_nodes
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Degree targets drawn during generation, one per node.
    pub fn targets(&self) -> &[u32] {
        &self.targets
    }

    /// Links in insertion order, each with the smaller id first.
    pub fn links(&self) -> &[(NodeId, NodeId)] {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn is_adjacent(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u.index()].contains(v.index())
    }

    pub fn degree(&self, j: NodeId) -> usize {
        self.adjacency[j.index()].count_ones(..)
    }

    /// Physical neighbors of `j` in ascending id order.
    pub fn neighbors(&self, j: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency[j.index()].ones().map(NodeId::from_index)
    }

    pub(crate) fn row(&self, j: NodeId) -> &FixedBitSet {
        &self.adjacency[j.index()]
    }

    /// Position of link `{u, v}` in [`links`](Self::links).
    pub fn link_id(&self, u: NodeId, v: NodeId) -> Option<usize> {
        self.link_index.get(&pair_key(u, v)).copied()
    }

    pub fn node(&self, id: u32) -> Result<NodeId> {
        NodeId::new(id, self.n_nodes)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (1..=self.n_nodes).map(NodeId)
    }
}

/// Generate a random physical topology.
///
/// Nodes are visited in ascending id order. Each draws a target degree
/// uniformly from `1..=floor(alpha * n)` and is linked to uniformly chosen
/// non-neighbors until its degree reaches the target. Links added by earlier
/// nodes count toward later targets. A target of `n` (possible when
/// `alpha = 1`) is capped at the `n - 1` available partners.
pub fn generate_physical_topology<R: Rng + ?Sized>(n: u32, alpha: f64, rng: &mut R) -> Result<PhysicalTopology> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 nodes, got {n}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let max_links = (alpha * n as f64).floor() as u32;
    if max_links < 1 {
        return Err(Error::InvalidParameter(format!("floor(alpha * n) = floor({alpha} * {n}) is zero")));
    }

    let mut topo = PhysicalTopology::empty(n, alpha);
    let mut candidates = Vec::with_capacity(n as usize);
    for j in topo.nodes().collect::<Vec<_>>() {
        let target = rng.random_range(1..=max_links);
        topo.targets[j.index()] = target;
        let wanted = target.min(n - 1) as usize;
        while topo.degree(j) < wanted {
            candidates.clear();
            candidates.extend(topo.nodes().filter(|&m| m != j && !topo.is_adjacent(j, m)));
            let pick = candidates[rng.random_range(0..candidates.len())];
            topo.add_link(j, pick);
        }
    }
    Ok(topo)
}

/// Per-physical-link count of qubits transferred.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoricalCounts {
    counts: Vec<u64>,
}

impl HistoricalCounts {
    /// All counters start at zero.
    pub fn new(topo: &PhysicalTopology) -> Self {
        HistoricalCounts { counts: vec![0; topo.link_count()] }
    }

    pub fn get(&self, topo: &PhysicalTopology, u: NodeId, v: NodeId) -> Option<u64> {
        topo.link_id(u, v).map(|i| self.counts[i])
    }

    /// Counters aligned with [`PhysicalTopology::links`].
    pub fn as_slice(&self) -> &[u64] {
        &self.counts
    }

    pub(crate) fn increment(&mut self, topo: &PhysicalTopology, u: NodeId, v: NodeId) {
        if let Some(i) = topo.link_id(u, v) {
            self.counts[i] += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Physical,
    Virtual,
}

/// 1-based edge id, assigned in creation order across both kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(u32);

impl EdgeId {
    pub fn get(self) -> u32 {
        self.0
    }

    fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntangledEdge {
    pub id: EdgeId,
    /// Endpoints with the smaller id first.
    pub endpoints: (NodeId, NodeId),
    pub kind: EdgeKind,
    pub usage_frequency: u64,
    pub creation_step: u64,
}

impl EntangledEdge {
    /// The endpoint that is not `node`, if `node` is an endpoint.
    pub fn other(&self, node: NodeId) -> Option<NodeId> {
        match self.endpoints {
            (a, b) if a == node => Some(b),
            (a, b) if b == node => Some(a),
            _ => None,
        }
    }

    pub fn touches(&self, node: NodeId) -> bool {
        self.endpoints.0 == node || self.endpoints.1 == node
    }
}

/// Result of [`EntangledGraph::ensure_entangled`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ensured {
    pub edge: EdgeId,
    pub created: bool,
}

/// The set of live entanglements.
#[derive(Debug, Clone)]
pub struct EntangledGraph {
    n_nodes: u32,
    edges: Vec<EntangledEdge>,
    adjacency: Vec<FixedBitSet>,
    by_pair: HashMap<(u32, u32), EdgeId>,
    physical_degree: Vec<u32>,
    virtual_degree: Vec<u32>,
    max_physical_freq: u64,
    max_virtual_freq: u64,
}

impl EntangledGraph {
    pub fn new(n_nodes: u32) -> Self {
        EntangledGraph {
            n_nodes,
            edges: Vec::new(),
            adjacency: (0..n_nodes).map(|_| FixedBitSet::with_capacity(n_nodes as usize)).collect(),
            by_pair: HashMap::new(),
            physical_degree: vec![0; n_nodes as usize],
            virtual_degree: vec![0; n_nodes as usize],
            max_physical_freq: 0,
            max_virtual_freq: 0,
        }
    }

    pub fn n_nodes(&self) -> u32 {
        self.n_nodes
    }

    /// Total number of entanglements.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Edges in creation order.
    pub fn edges(&self) -> &[EntangledEdge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Result<&EntangledEdge> {
        id.0.checked_sub(1).and_then(|i| self.edges.get(i as usize)).ok_or(Error::UnknownEdge(id.0))
    }

    pub fn edge_between(&self, u: NodeId, v: NodeId) -> Option<EdgeId> {
        self.by_pair.get(&pair_key(u, v)).copied()
    }

    pub fn is_entangled(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u.index()].contains(v.index())
    }

    /// Degree centrality `d_j`: incident entanglements of both kinds.
    pub fn entangled_degree(&self, j: NodeId) -> u32 {
        self.physical_degree[j.index()] + self.virtual_degree[j.index()]
    }

    /// Incident physical-kind entanglements.
    pub fn physical_degree(&self, j: NodeId) -> u32 {
        self.physical_degree[j.index()]
    }

    /// Incident virtual entanglements.
    pub fn virtual_degree(&self, j: NodeId) -> u32 {
        self.virtual_degree[j.index()]
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.physical_degree.iter().zip(&self.virtual_degree).map(|(p, v)| p + v).collect()
    }

    /// Entangled neighbors of `j` in ascending id order.
    pub fn neighbors(&self, j: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency[j.index()].ones().map(NodeId::from_index)
    }

    pub(crate) fn row(&self, j: NodeId) -> &FixedBitSet {
        &self.adjacency[j.index()]
    }

    pub fn max_frequency(&self, kind: EdgeKind) -> u64 {
        match kind {
            EdgeKind::Physical => self.max_physical_freq,
            EdgeKind::Virtual => self.max_virtual_freq,
        }
    }

    /// Entangle a physical link directly.
    ///
    /// An existing edge is returned untouched. A new edge starts with usage
    /// frequency 1 and the link's historical count is incremented.
    pub fn ensure_entangled(
        &mut self,
        topo: &PhysicalTopology,
        history: &mut HistoricalCounts,
        u: NodeId,
        v: NodeId,
        step: u64,
    ) -> Result<Ensured> {
        if let Some(edge) = self.edge_between(u, v) {
            return Ok(Ensured { edge, created: false });
        }
        if u == v || !topo.is_adjacent(u, v) {
            return Err(Error::NotPhysicallyAdjacent(u.0, v.0));
        }
        let edge = self.insert(u, v, EdgeKind::Physical, 1, step);
        history.increment(topo, u, v);
        Ok(Ensured { edge, created: true })
    }

    pub(crate) fn insert(&mut self, u: NodeId, v: NodeId, kind: EdgeKind, frequency: u64, step: u64) -> EdgeId {
        debug_assert!(u != v && !self.is_entangled(u, v));
        let id = EdgeId(self.edges.len() as u32 + 1);
        let key = pair_key(u, v);
        self.edges.push(EntangledEdge {
            id,
            endpoints: (NodeId(key.0), NodeId(key.1)),
            kind,
            usage_frequency: 0,
            creation_step: step,
        });
        self.by_pair.insert(key, id);
        self.adjacency[u.index()].insert(v.index());
        self.adjacency[v.index()].insert(u.index());
        let degrees = match kind {
            EdgeKind::Physical => &mut self.physical_degree,
            EdgeKind::Virtual => &mut self.virtual_degree,
        };
        degrees[u.index()] += 1;
        degrees[v.index()] += 1;
        self.add_usage(id, frequency);
        id
    }

    pub(crate) fn bump(&mut self, id: EdgeId) {
        self.add_usage(id, 1);
    }

    fn add_usage(&mut self, id: EdgeId, by: u64) {
        let edge = &mut self.edges[id.index()];
        edge.usage_frequency += by;
        let max = match edge.kind {
            EdgeKind::Physical => &mut self.max_physical_freq,
            EdgeKind::Virtual => &mut self.max_virtual_freq,
        };
        *max = (*max).max(edge.usage_frequency);
    }
}
