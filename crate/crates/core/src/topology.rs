//! The resource network connectivity topology: an undirected graph of hosts
//! and switches without parallel links or self-loops.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::pathmodel::PathSet;

/// Name of a host or switch. Non-empty and free of whitespace.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(Arc<str>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NodeIdError {
    #[error("node name is empty")]
    Empty,
    #[error("node name {0:?} contains whitespace")]
    Whitespace(String),
}

impl NodeId {
    pub fn new(name: &str) -> Result<Self, NodeIdError> {
        if name.is_empty() {
            return Err(NodeIdError::Empty);
        }
        if name.chars().any(char::is_whitespace) {
            return Err(NodeIdError::Whitespace(name.to_string()));
        }
        Ok(NodeId(Arc::from(name)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for NodeId {
    type Err = NodeIdError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeId::new(s)
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        NodeId::new(&raw).map_err(serde::de::Error::custom)
    }
}

/// Unordered pair of distinct nodes, stored with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    a: NodeId,
    b: NodeId,
}

impl Link {
    pub fn new(x: NodeId, y: NodeId) -> Self {
        if x <= y {
            Link { a: x, b: y }
        } else {
            Link { a: y, b: x }
        }
    }

    pub fn endpoints(&self) -> (&NodeId, &NodeId) {
        (&self.a, &self.b)
    }

    pub fn contains(&self, n: &NodeId) -> bool {
        &self.a == n || &self.b == n
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.a, self.b)
    }
}

impl Serialize for Link {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [&self.a, &self.b].serialize(serializer)
    }
}

/// A link traversed in one direction: a packet moves from `from` to `to`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirectedArc {
    pub from: NodeId,
    pub to: NodeId,
}

impl DirectedArc {
    pub fn new(from: NodeId, to: NodeId) -> Self {
        DirectedArc { from, to }
    }

    pub fn link(&self) -> Link {
        Link::new(self.from.clone(), self.to.clone())
    }

    pub fn reversed(&self) -> Self {
        DirectedArc::new(self.to.clone(), self.from.clone())
    }
}

impl fmt::Display for DirectedArc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.from, self.to)
    }
}

impl Serialize for DirectedArc {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [&self.from, &self.to].serialize(serializer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Host,
    Switch,
}

/// One structural defect found while building a topology.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologyViolation {
    #[error("node {node} is declared more than once")]
    DuplicateNode { node: NodeId },
    #[error("link {{{a},{b}}} references undeclared node {node}")]
    UnknownEndpoint { a: NodeId, b: NodeId, node: NodeId },
    #[error("self-loop at {node}")]
    SelfLoop { node: NodeId },
    #[error("link {link} is declared more than once")]
    DuplicateLink { link: Link },
    #[error("host {host} must have exactly one neighbor and it must be a switch (degree {degree}, switch neighbors {switch_neighbors})")]
    HostDegreeViolation {
        host: NodeId,
        degree: usize,
        switch_neighbors: usize,
    },
    #[error("graph has {components} connected components; each component is a separate network and must be checked on its own")]
    Disconnected { components: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid topology: {}", render_violations(.violations))]
pub struct TopologyError {
    pub violations: Vec<TopologyViolation>,
}

fn render_violations(violations: &[TopologyViolation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown node {0}")]
pub struct UnknownNode(pub NodeId);

/// A validated topology. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    kinds: BTreeMap<NodeId, NodeKind>,
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
    links: BTreeSet<Link>,
}

/// Builds a topology from explicitly typed nodes and undirected links.
///
/// Every violation is collected before returning, so a malformed input file
/// is reported in a single pass.
pub fn build_topology(
    hosts: &[NodeId],
    switches: &[NodeId],
    links: &[(NodeId, NodeId)],
) -> Result<Topology, TopologyError> {
    let (topology, violations) = assemble(hosts, switches, links);
    if violations.is_empty() {
        Ok(topology)
    } else {
        Err(TopologyError { violations })
    }
}

fn assemble(
    hosts: &[NodeId],
    switches: &[NodeId],
    links: &[(NodeId, NodeId)],
) -> (Topology, Vec<TopologyViolation>) {
    let mut violations = Vec::new();
    let mut kinds = BTreeMap::new();
    let mut reported_dups = BTreeSet::new();
    let declared = hosts
        .iter()
        .map(|h| (h, NodeKind::Host))
        .chain(switches.iter().map(|s| (s, NodeKind::Switch)));
    for (node, kind) in declared {
        if kinds.contains_key(node) {
            if reported_dups.insert(node.clone()) {
                violations.push(TopologyViolation::DuplicateNode { node: node.clone() });
            }
        } else {
            kinds.insert(node.clone(), kind);
        }
    }

    let mut adjacency: BTreeMap<NodeId, BTreeSet<NodeId>> =
        kinds.keys().map(|n| (n.clone(), BTreeSet::new())).collect();
    let mut link_set = BTreeSet::new();
    let mut reported_links = BTreeSet::new();
    for (a, b) in links {
        if a == b {
            violations.push(TopologyViolation::SelfLoop { node: a.clone() });
            continue;
        }
        let mut known = true;
        for node in [a, b] {
            if !kinds.contains_key(node) {
                violations.push(TopologyViolation::UnknownEndpoint {
                    a: a.clone(),
                    b: b.clone(),
                    node: node.clone(),
                });
                known = false;
            }
        }
        if !known {
            continue;
        }
        let link = Link::new(a.clone(), b.clone());
        if !link_set.insert(link.clone()) {
            if reported_links.insert(link.clone()) {
                violations.push(TopologyViolation::DuplicateLink { link });
            }
            continue;
        }
        adjacency.get_mut(a).expect("declared").insert(b.clone());
        adjacency.get_mut(b).expect("declared").insert(a.clone());
    }

    for (node, kind) in &kinds {
        if *kind != NodeKind::Host {
            continue;
        }
        let neighbors = &adjacency[node];
        let switch_neighbors = neighbors
            .iter()
            .filter(|n| kinds.get(*n) == Some(&NodeKind::Switch))
            .count();
        if neighbors.len() != 1 || switch_neighbors != 1 {
            violations.push(TopologyViolation::HostDegreeViolation {
                host: node.clone(),
                degree: neighbors.len(),
                switch_neighbors,
            });
        }
    }

    let components = count_components(&adjacency);
    if components != 1 {
        violations.push(TopologyViolation::Disconnected { components });
    }

    (
        Topology {
            kinds,
            adjacency,
            links: link_set,
        },
        violations,
    )
}

fn count_components(adjacency: &BTreeMap<NodeId, BTreeSet<NodeId>>) -> usize {
    let mut seen = BTreeSet::new();
    let mut components = 0;
    for start in adjacency.keys() {
        if !seen.insert(start) {
            continue;
        }
        components += 1;
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            for m in &adjacency[n] {
                if seen.insert(m) {
                    queue.push_back(m);
                }
            }
        }
    }
    components
}

impl Topology {
    /// Runs the full validation again on this topology's own parts.
    pub fn revalidate(&self) -> Vec<TopologyViolation> {
        let hosts: Vec<_> = self.hosts().cloned().collect();
        let switches: Vec<_> = self.switches().cloned().collect();
        let links: Vec<_> = self
            .links
            .iter()
            .map(|l| (l.a.clone(), l.b.clone()))
            .collect();
        assemble(&hosts, &switches, &links).1
    }

    pub fn hosts(&self) -> impl Iterator<Item = &NodeId> {
        self.kinds
            .iter()
            .filter(|(_, k)| **k == NodeKind::Host)
            .map(|(n, _)| n)
    }

    pub fn switches(&self) -> impl Iterator<Item = &NodeId> {
        self.kinds
            .iter()
            .filter(|(_, k)| **k == NodeKind::Switch)
            .map(|(n, _)| n)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&NodeId, NodeKind)> {
        self.kinds.iter().map(|(n, k)| (n, *k))
    }

    pub fn links(&self) -> &BTreeSet<Link> {
        &self.links
    }

    pub fn kind(&self, n: &NodeId) -> Option<NodeKind> {
        self.kinds.get(n).copied()
    }

    pub fn contains(&self, n: &NodeId) -> bool {
        self.kinds.contains_key(n)
    }

    pub fn is_host(&self, n: &NodeId) -> bool {
        self.kind(n) == Some(NodeKind::Host)
    }

    pub fn is_switch(&self, n: &NodeId) -> bool {
        self.kind(n) == Some(NodeKind::Switch)
    }

    pub fn has_link(&self, a: &NodeId, b: &NodeId) -> bool {
        self.adjacency.get(a).is_some_and(|ns| ns.contains(b))
    }

    /// Adjacency set of `n`. Ports are identified with neighbors.
    pub fn neighbors(&self, n: &NodeId) -> Result<&BTreeSet<NodeId>, UnknownNode> {
        self.adjacency.get(n).ok_or_else(|| UnknownNode(n.clone()))
    }

    /// Links whose endpoints are both switches.
    pub fn switch_links(&self) -> impl Iterator<Item = &Link> {
        self.links
            .iter()
            .filter(|l| self.is_switch(&l.a) && self.is_switch(&l.b))
    }
}

/// Free-function form of [`Topology::neighbors`].
pub fn neighbors<'t>(t: &'t Topology, n: &NodeId) -> Result<&'t BTreeSet<NodeId>, UnknownNode> {
    t.neighbors(n)
}

/// Switch–switch links that no path of `paths` traverses in either direction.
pub fn unused_switch_edges(t: &Topology, paths: &PathSet) -> BTreeSet<Link> {
    let used: BTreeSet<Link> = paths
        .iter()
        .flat_map(|p| p.arcs())
        .map(|arc| arc.link())
        .collect();
    t.switch_links()
        .filter(|l| !used.contains(*l))
        .cloned()
        .collect()
}

/// Directed switch–switch arcs that no path of `paths` traverses.
///
/// This is the detour material used by rerouting repair: a link used by a
/// path in one direction remains available in the other.
pub fn unused_switch_arcs(t: &Topology, paths: &PathSet) -> BTreeSet<DirectedArc> {
    let used: BTreeSet<DirectedArc> = paths.iter().flat_map(|p| p.arcs()).collect();
    t.switch_links()
        .flat_map(|l| {
            let forward = DirectedArc::new(l.a.clone(), l.b.clone());
            let backward = forward.reversed();
            [forward, backward]
        })
        .filter(|arc| !used.contains(arc))
        .collect()
}
