//! Geometric sensor network: node placement, mutual-range links, residual
//! energy and the processing element (PE) every route terminates at.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::fmt;
use thiserror::Error;

/// Index of a node inside its [`Network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index of a directed link. Link ids are dense, so per-link tables
/// (pheromone, link quality, counters) are plain vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Euclidean norm of `a - b`.
pub fn euclidean_distance(a: Point, b: Point) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Sensor,
    ProcessingElement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub position: Point,
    energy: f64,
    pub role: Role,
    pub radio_range: f64,
    alive: bool,
}

impl Node {
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn is_alive(&self) -> bool {
        self.alive
    }
}

/// Input row for [`Network::build`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSpec {
    pub position: Point,
    pub energy: f64,
    pub range: f64,
}

impl NodeSpec {
    pub const fn new(x: f64, y: f64, energy: f64, range: f64) -> Self {
        Self {
            position: Point::new(x, y),
            energy,
            range,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("network needs at least two nodes, got {0}")]
    TooFewNodes(usize),
    #[error("processing element index {index} out of range for {count} nodes")]
    BadPeIndex { index: usize, count: usize },
    #[error("node {0} has a non-positive or non-finite radio range")]
    BadRange(usize),
    #[error("node {0} has a negative or non-finite energy")]
    BadEnergy(usize),
    #[error("node {0} has a non-finite position")]
    BadPosition(usize),
    #[error("nodes {0} and {1} share the same position")]
    CoincidentNodes(usize, usize),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("energy drain must be non-negative, got {0}")]
    NegativeDrain(f64),
}

/// Sensor field with a static link structure. Links are fixed at build
/// time; node death hides links from [`Network::neighbors`] without
/// renumbering them.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: Vec<Node>,
    pe: NodeId,
    // CSR adjacency: links of node i are offsets[i]..offsets[i + 1],
    // sorted by target id.
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    sources: Vec<NodeId>,
    lengths: Vec<f64>,
}

impl Network {
    /// Builds the network, linking every pair within mutual radio range.
    pub fn build(specs: &[NodeSpec], pe_index: usize) -> Result<Self, NetworkError> {
        if specs.len() < 2 {
            return Err(NetworkError::TooFewNodes(specs.len()));
        }
        if pe_index >= specs.len() {
            return Err(NetworkError::BadPeIndex {
                index: pe_index,
                count: specs.len(),
            });
        }
        for (i, s) in specs.iter().enumerate() {
            if !s.position.is_finite() {
                return Err(NetworkError::BadPosition(i));
            }
            if !(s.range.is_finite() && s.range > 0.0) {
                return Err(NetworkError::BadRange(i));
            }
            if !(s.energy.is_finite() && s.energy >= 0.0) {
                return Err(NetworkError::BadEnergy(i));
            }
        }

        let n = specs.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut sources = Vec::new();
        let mut lengths = Vec::new();
        offsets.push(0);
        for (i, a) in specs.iter().enumerate() {
            for (j, b) in specs.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d = euclidean_distance(a.position, b.position);
                if d == 0.0 {
                    return Err(NetworkError::CoincidentNodes(i.min(j), i.max(j)));
                }
                if d <= a.range.min(b.range) {
                    targets.push(NodeId(j));
                    sources.push(NodeId(i));
                    lengths.push(d);
                }
            }
            offsets.push(targets.len());
        }

        let nodes = specs
            .iter()
            .enumerate()
            .map(|(i, s)| Node {
                id: NodeId(i),
                position: s.position,
                energy: s.energy,
                role: if i == pe_index {
                    Role::ProcessingElement
                } else {
                    Role::Sensor
                },
                radio_range: s.range,
                alive: s.energy > 0.0,
            })
            .collect();

        Ok(Self {
            nodes,
            pe: NodeId(pe_index),
            offsets,
            targets,
            sources,
            lengths,
        })
    }

    /// Uniform placement of `count` nodes over `[0, width] x [0, height]`.
    pub fn random_geometric<R: Rng + ?Sized>(
        count: usize,
        width: f64,
        height: f64,
        range: f64,
        energy: f64,
        pe_index: usize,
        rng: &mut R,
    ) -> Result<Self, NetworkError> {
        let specs: Vec<NodeSpec> = (0..count)
            .map(|_| {
                NodeSpec::new(
                    rng.gen::<f64>() * width,
                    rng.gen::<f64>() * height,
                    energy,
                    range,
                )
            })
            .collect();
        Self::build(&specs, pe_index)
    }

    /// Row-major `rows x cols` lattice; node `r * cols + c` sits at
    /// `(c * spacing, r * spacing)`.
    pub fn grid(
        rows: usize,
        cols: usize,
        spacing: f64,
        range: f64,
        energy: f64,
        pe_index: usize,
    ) -> Result<Self, NetworkError> {
        let specs: Vec<NodeSpec> = (0..rows)
            .flat_map(|r| {
                (0..cols).map(move |c| {
                    NodeSpec::new(c as f64 * spacing, r as f64 * spacing, energy, range)
                })
            })
            .collect();
        Self::build(&specs, pe_index)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, NetworkError> {
        self.nodes.get(id.0).ok_or(NetworkError::UnknownNode(id))
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.0 < self.nodes.len()
    }

    pub fn processing_element(&self) -> NodeId {
        self.pe
    }

    pub fn is_alive(&self, id: NodeId) -> bool {
        self.nodes.get(id.0).is_some_and(|n| n.alive)
    }

    pub fn position(&self, id: NodeId) -> Point {
        self.nodes[id.0].position
    }

    pub fn energy(&self, id: NodeId) -> f64 {
        self.nodes[id.0].energy
    }

    /// Total number of directed links (twice the undirected count).
    pub fn link_count(&self) -> usize {
        self.targets.len()
    }

    pub fn link_endpoints(&self, link: LinkId) -> (NodeId, NodeId) {
        (self.sources[link.0], self.targets[link.0])
    }

    /// `D_ij` of a link.
    pub fn link_length(&self, link: LinkId) -> f64 {
        self.lengths[link.0]
    }

    pub fn link_id(&self, from: NodeId, to: NodeId) -> Option<LinkId> {
        let range = *self.offsets.get(from.0)?..*self.offsets.get(from.0 + 1)?;
        let start = range.start;
        self.targets[range]
            .binary_search(&to)
            .ok()
            .map(|k| LinkId(start + k))
    }

    /// Distance along a link, `None` if the two nodes are not linked.
    pub fn distance(&self, from: NodeId, to: NodeId) -> Option<f64> {
        self.link_id(from, to).map(|l| self.lengths[l.0])
    }

    /// All static links leaving `from`, regardless of liveness.
    pub fn links_from(&self, from: NodeId) -> impl Iterator<Item = (LinkId, NodeId)> + '_ {
        (self.offsets[from.0]..self.offsets[from.0 + 1]).map(|k| (LinkId(k), self.targets[k]))
    }

    /// Live links leaving `from`; a dead endpoint hides the link.
    pub fn live_links_from(&self, from: NodeId) -> impl Iterator<Item = (LinkId, NodeId)> + '_ {
        let alive = self.is_alive(from);
        self.links_from(from)
            .filter(move |&(_, to)| alive && self.nodes[to.0].alive)
    }

    /// The neighborhood `J_i`: live nodes linked to `i`, in id order.
    pub fn neighbors(&self, id: NodeId) -> Result<Vec<NodeId>, NetworkError> {
        if !self.contains(id) {
            return Err(NetworkError::UnknownNode(id));
        }
        Ok(self.live_links_from(id).map(|(_, to)| to).collect())
    }

    /// Removes up to `amount` joules from node `id`. Returns `true` if the
    /// node died as a result of this call.
    pub fn drain_energy(&mut self, id: NodeId, amount: f64) -> Result<bool, NetworkError> {
        if !(amount >= 0.0) {
            return Err(NetworkError::NegativeDrain(amount));
        }
        let node = self
            .nodes
            .get_mut(id.0)
            .ok_or(NetworkError::UnknownNode(id))?;
        node.energy = (node.energy - amount).max(0.0);
        let died = node.alive && node.energy == 0.0;
        if died {
            node.alive = false;
        }
        Ok(died)
    }

    /// Hop distance from every node to `target` over live nodes accepted by
    /// `usable`. Unreachable nodes get `None`.
    pub fn hops_to(&self, target: NodeId, usable: impl Fn(NodeId) -> bool) -> Vec<Option<usize>> {
        let mut hops = vec![None; self.len()];
        if !self.is_alive(target) || !usable(target) {
            return hops;
        }
        hops[target.0] = Some(0);
        let mut queue = VecDeque::from([target]);
        while let Some(u) = queue.pop_front() {
            let next = hops[u.0].map(|h| h + 1);
            for (_, v) in self.live_links_from(u) {
                if hops[v.0].is_none() && usable(v) {
                    hops[v.0] = next;
                    queue.push_back(v);
                }
            }
        }
        hops
    }

    /// Total length of a walk, `None` if consecutive nodes are not linked.
    pub fn path_length(&self, path: &[NodeId]) -> Option<f64> {
        path.windows(2)
            .map(|w| self.distance(w[0], w[1]))
            .sum::<Option<f64>>()
    }
}
