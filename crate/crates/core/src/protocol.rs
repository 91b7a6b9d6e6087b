//! Proactive entanglement distribution, swapping and end-to-end setup.
//!
//! Every operation that changes usage frequencies appends to the event log,
//! so the sum of all frequencies can be audited from the log alone:
//! a direct creation contributes 1, a swap 2 and a completed connection 1.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, EdgeKind, EntangledGraph, HistoricalCounts, NodeId, PhysicalTopology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Proactive,
    Connection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    EdgeCreated {
        step: u64,
        edge: EdgeId,
        endpoints: (NodeId, NodeId),
        kind: EdgeKind,
        origin: Origin,
    },
    Swap {
        step: u64,
        via: NodeId,
        consumed: [EdgeId; 2],
        produced: EdgeId,
        endpoints: (NodeId, NodeId),
        origin: Origin,
    },
    ConnectionCompleted {
        step: u64,
        edge: EdgeId,
        endpoints: (NodeId, NodeId),
        path: Vec<NodeId>,
    },
    ConnectionFailed {
        step: u64,
        endpoints: (NodeId, NodeId),
    },
}

impl Event {
    /// Usage-frequency increments this event accounts for.
    pub fn frequency_increments(&self) -> u64 {
        match self {
            Event::EdgeCreated { kind: EdgeKind::Physical, .. } => 1,
            Event::EdgeCreated { kind: EdgeKind::Virtual, .. } => 0,
            Event::Swap { .. } => 2,
            Event::ConnectionCompleted { .. } => 1,
            Event::ConnectionFailed { .. } => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapEvent {
    pub via: NodeId,
    pub consumed: [EdgeId; 2],
    pub produced: EdgeId,
    pub step: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionStatus {
    Completed,
    FailedNoPath,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionOutcome {
    pub requested: (NodeId, NodeId),
    pub status: ConnectionStatus,
    pub path: Vec<NodeId>,
    pub edges_created: usize,
    pub swaps: usize,
    pub step: u64,
}

/// What one proactive round changed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProactiveSummary {
    pub selected: Vec<NodeId>,
    pub created: Vec<EdgeId>,
    pub swaps: Vec<SwapEvent>,
}

/// Requests seen so far: the connection graph.
#[derive(Debug, Clone)]
pub struct ConnectionLedger {
    completed: u64,
    failed: u64,
    touches: Vec<u64>,
    partners: Vec<FixedBitSet>,
}

impl ConnectionLedger {
    pub fn new(n_nodes: u32) -> Self {
        ConnectionLedger {
            completed: 0,
            failed: 0,
            touches: vec![0; n_nodes as usize],
            partners: (0..n_nodes).map(|_| FixedBitSet::with_capacity(n_nodes as usize)).collect(),
        }
    }

    fn record(&mut self, u: NodeId, v: NodeId, status: ConnectionStatus) {
        match status {
            ConnectionStatus::Completed => self.completed += 1,
            ConnectionStatus::FailedNoPath => self.failed += 1,
        }
        self.touches[u.index()] += 1;
        self.touches[v.index()] += 1;
        self.partners[u.index()].insert(v.index());
        self.partners[v.index()].insert(u.index());
    }

    pub fn completed(&self) -> u64 {
        self.completed
    }

    pub fn failed(&self) -> u64 {
        self.failed
    }

    /// Number of requests with `j` as an endpoint.
    pub fn touch_degree(&self, j: NodeId) -> u64 {
        self.touches[j.index()]
    }

    /// Number of distinct partners `j` was requested with.
    pub fn partner_degree(&self, j: NodeId) -> u64 {
        self.partners[j.index()].count_ones(..) as u64
    }
}

/// Pick the neighbor whose historical count is closest to the mean of all
/// neighbors' counts. Ties go to the smallest id.
pub fn proactive_select(neighbors: &[(NodeId, u64)]) -> Result<NodeId> {
    // Compare (len * hc - sum)^2, which is the squared distance to the mean
    // scaled by len^2, in exact integer arithmetic.
    let len = neighbors.len() as i128;
    let sum: i128 = neighbors.iter().map(|&(_, hc)| hc as i128).sum();
    neighbors
        .iter()
        .map(|&(node, hc)| {
            let d = len * hc as i128 - sum;
            (d * d, node)
        })
        .min()
        .map(|(_, node)| node)
        .ok_or(Error::EmptyNeighborhood)
}

/// Simulation state for one run.
#[derive(Debug, Clone)]
pub struct Network {
    pub topology: PhysicalTopology,
    pub graph: EntangledGraph,
    pub history: HistoricalCounts,
    pub ledger: ConnectionLedger,
    events: Vec<Event>,
    record_events: bool,
}

impl Network {
    pub fn new(topology: PhysicalTopology) -> Self {
        let n = topology.n_nodes();
        Network {
            graph: EntangledGraph::new(n),
            history: HistoricalCounts::new(&topology),
            ledger: ConnectionLedger::new(n),
            topology,
            events: Vec::new(),
            record_events: true,
        }
    }

    /// Stop appending to the event log. Frequencies and metrics are unaffected.
    pub fn without_event_log(mut self) -> Self {
        self.record_events = false;
        self
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn n_nodes(&self) -> u32 {
        self.topology.n_nodes()
    }

    fn log(&mut self, event: Event) {
        if self.record_events {
            self.events.push(event);
        }
    }

    /// Direct entanglement over a physical link, logging creation.
    pub fn ensure_entangled(&mut self, u: NodeId, v: NodeId, step: u64, origin: Origin) -> Result<(EdgeId, bool)> {
        let ensured = self.graph.ensure_entangled(&self.topology, &mut self.history, u, v, step)?;
        if ensured.created {
            let edge = self.graph.edge(ensured.edge)?;
            let event =
                Event::EdgeCreated { step, edge: ensured.edge, endpoints: edge.endpoints, kind: edge.kind, origin };
            self.log(event);
        }
        Ok((ensured.edge, ensured.created))
    }

    /// Swap `{a,b}` and `{b,c}` into a new virtual edge `{a,c}`.
    ///
    /// The consumed edges stay in the graph and each gains one usage; those
    /// of physical kind also add one to their link's historical count.
    pub fn apply_swap(&mut self, ab: EdgeId, bc: EdgeId, step: u64, origin: Origin) -> Result<SwapEvent> {
        let first = self.graph.edge(ab)?.clone();
        let second = self.graph.edge(bc)?.clone();
        if first.endpoints == second.endpoints {
            return Err(Error::DegenerateSwap(ab.get(), bc.get()));
        }
        let via = [first.endpoints.0, first.endpoints.1]
            .into_iter()
            .find(|&x| second.touches(x))
            .ok_or(Error::NotAdjacentEdges(ab.get(), bc.get()))?;
        let a = first.other(via).expect("via is an endpoint");
        let c = second.other(via).expect("via is an endpoint");
        if self.graph.is_entangled(a, c) {
            return Err(Error::DuplicateTargetEdge(a.get(), c.get()));
        }
        if self.topology.is_adjacent(a, c) {
            return Err(Error::PhysicalSwapTarget(a.get(), c.get()));
        }

        let produced = self.graph.insert(a, c, EdgeKind::Virtual, 0, step);
        for edge in [&first, &second] {
            self.graph.bump(edge.id);
            if edge.kind == EdgeKind::Physical {
                self.history.increment(&self.topology, edge.endpoints.0, edge.endpoints.1);
            }
        }
        let endpoints = self.graph.edge(produced)?.endpoints;
        self.log(Event::Swap { step, via, consumed: [ab, bc], produced, endpoints, origin });
        Ok(SwapEvent { via, consumed: [ab, bc], produced, step })
    }

    /// Smallest `(a, c)` among `b`'s entangled neighbors, `a < c`, that is
    /// neither entangled nor physically linked.
    pub fn swap_candidate(&self, b: NodeId) -> Option<(NodeId, NodeId)> {
        let row_b = self.graph.row(b).as_slice();
        for a in self.graph.neighbors(b) {
            let ent_a = self.graph.row(a).as_slice();
            let phys_a = self.topology.row(a).as_slice();
            let start = a.index() + 1;
            let bits = usize::BITS as usize;
            for w in start / bits..row_b.len() {
                let mut word = row_b[w] & !ent_a[w] & !phys_a[w];
                if w == start / bits {
                    word &= usize::MAX.checked_shl((start % bits) as u32).unwrap_or(0);
                }
                if word != 0 {
                    let c = w * bits + word.trailing_zeros() as usize;
                    return Some((a, NodeId::from_index(c)));
                }
            }
        }
        None
    }

    /// Proactive distribution round.
    ///
    /// Selects `ceil(rho * n)` distinct nodes uniformly. Each, in ascending
    /// id order, entangles with the physical neighbor picked by
    /// [`proactive_select`]. Then each selected node, again in ascending
    /// order, performs at most one swap on its [`swap_candidate`](Self::swap_candidate).
    pub fn proactive_round<R: Rng + ?Sized>(&mut self, rho: f64, step: u64, rng: &mut R) -> Result<ProactiveSummary> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidParameter(format!("proactive fraction must lie in [0, 1], got {rho}")));
        }
        let n = self.n_nodes() as usize;
        let count = ((rho * n as f64).ceil() as usize).min(n);
        let mut selected: Vec<NodeId> =
            rand::seq::index::sample(rng, n, count).into_iter().map(NodeId::from_index).collect();
        selected.sort_unstable();

        let mut summary = ProactiveSummary::default();
        let mut scratch = Vec::new();
        for &node in &selected {
            scratch.clear();
            scratch.extend(self.topology.neighbors(node).map(|m| {
                let hc = self.history.get(&self.topology, node, m).unwrap_or(0);
                (m, hc)
            }));
            if scratch.is_empty() {
                continue;
            }
            let chosen = proactive_select(&scratch)?;
            let (edge, created) = self.ensure_entangled(node, chosen, step, Origin::Proactive)?;
            if created {
                summary.created.push(edge);
            }
        }
        for &b in &selected {
            if let Some((a, c)) = self.swap_candidate(b) {
                let ab = self.graph.edge_between(a, b).expect("entangled neighbor");
                let bc = self.graph.edge_between(b, c).expect("entangled neighbor");
                summary.swaps.push(self.apply_swap(ab, bc, step, Origin::Proactive)?);
            }
        }
        summary.selected = selected;
        Ok(summary)
    }

    /// Breadth-first shortest path on entangled edges plus physical links,
    /// exploring neighbors in ascending id order.
    pub fn route(&self, u: NodeId, v: NodeId) -> Option<Vec<NodeId>> {
        let n = self.n_nodes() as usize;
        let mut parent = vec![usize::MAX; n];
        let mut frontier = VecDeque::from([u.index()]);
        parent[u.index()] = u.index();
        let mut reach = FixedBitSet::with_capacity(n);
        while let Some(x) = frontier.pop_front() {
            let x_id = NodeId::from_index(x);
            reach.clone_from(self.graph.row(x_id));
            reach.union_with(self.topology.row(x_id));
            for y in reach.ones() {
                if parent[y] != usize::MAX {
                    continue;
                }
                parent[y] = x;
                if y == v.index() {
                    let mut path = vec![v];
                    let mut at = y;
                    while at != u.index() {
                        at = parent[at];
                        path.push(NodeId::from_index(at));
                    }
                    path.reverse();
                    return Some(path);
                }
                frontier.push_back(y);
            }
        }
        None
    }

    /// Serve one end-to-end request.
    pub fn setup_connection(&mut self, u: NodeId, v: NodeId, step: u64) -> Result<ConnectionOutcome> {
        if u == v {
            return Err(Error::DegenerateRequest(u.get()));
        }
        let mut outcome = ConnectionOutcome {
            requested: (u, v),
            status: ConnectionStatus::Completed,
            path: Vec::new(),
            edges_created: 0,
            swaps: 0,
            step,
        };

        let path = match self.graph.edge_between(u, v) {
            Some(_) => vec![u, v],
            None => match self.route(u, v) {
                Some(path) => path,
                None => {
                    outcome.status = ConnectionStatus::FailedNoPath;
                    self.ledger.record(u, v, outcome.status);
                    self.log(Event::ConnectionFailed { step, endpoints: (u, v) });
                    return Ok(outcome);
                }
            },
        };

        let mut hops = Vec::with_capacity(path.len() - 1);
        for hop in path.windows(2) {
            let (edge, created) = self.ensure_entangled(hop[0], hop[1], step, Origin::Connection)?;
            outcome.edges_created += created as usize;
            hops.push(edge);
        }

        let mut current = hops[0];
        for (i, &next) in hops.iter().enumerate().skip(1) {
            current = match self.graph.edge_between(u, path[i + 1]) {
                Some(existing) => existing,
                None => {
                    outcome.swaps += 1;
                    self.apply_swap(current, next, step, Origin::Connection)?.produced
                }
            };
        }

        self.graph.bump(current);
        self.ledger.record(u, v, outcome.status);
        self.log(Event::ConnectionCompleted { step, edge: current, endpoints: (u, v), path: path.clone() });
        outcome.path = path;
        Ok(outcome)
    }
}
