//! Requested data paths and the structural checks applied to a request
//! before anything else looks at it.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexSet;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::topology::{DirectedArc, NodeId, NodeIdError, Topology, UnknownNode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("a path needs at least two nodes, got {0}")]
    TooFewNodes(usize),
    #[error("node {node} is repeated at positions {position} and {}", .position + 1)]
    RepeatedStep { node: NodeId, position: usize },
    #[error(transparent)]
    BadNode(#[from] NodeIdError),
}

/// A node sequence with at least one arc and no immediate repetition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    nodes: Vec<NodeId>,
}

impl Path {
    pub fn new(nodes: Vec<NodeId>) -> Result<Self, PathError> {
        if nodes.len() < 2 {
            return Err(PathError::TooFewNodes(nodes.len()));
        }
        if let Some(position) = nodes.windows(2).position(|w| w[0] == w[1]) {
            return Err(PathError::RepeatedStep {
                node: nodes[position].clone(),
                position,
            });
        }
        Ok(Path { nodes })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Number of arcs.
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn head(&self) -> &NodeId {
        &self.nodes[0]
    }

    pub fn tail(&self) -> &NodeId {
        &self.nodes[self.nodes.len() - 1]
    }

    pub fn arc(&self, i: usize) -> DirectedArc {
        DirectedArc::new(self.nodes[i].clone(), self.nodes[i + 1].clone())
    }

    pub fn arcs(&self) -> impl Iterator<Item = DirectedArc> + '_ {
        self.nodes
            .windows(2)
            .map(|w| DirectedArc::new(w[0].clone(), w[1].clone()))
    }

    /// Rebuilds a path from consecutive arcs.
    pub fn from_arcs(arcs: &[DirectedArc]) -> Option<Path> {
        let first = arcs.first()?;
        let mut nodes = vec![first.from.clone()];
        for (i, arc) in arcs.iter().enumerate() {
            if i > 0 && arcs[i - 1].to != arc.from {
                return None;
            }
            nodes.push(arc.to.clone());
        }
        Path::new(nodes).ok()
    }

    /// First pair of positions `(i, j)`, `i < j`, at which the same directed
    /// arc is traversed twice.
    pub fn repeated_arc(&self) -> Option<(usize, usize)> {
        let mut seen = std::collections::HashMap::new();
        for (j, w) in self.nodes.windows(2).enumerate() {
            if let Some(&i) = seen.get(&(&w[0], &w[1])) {
                return Some((i, j));
            }
            seen.insert((&w[0], &w[1]), j);
        }
        None
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.nodes.iter().enumerate() {
            if i > 0 {
                f.write_str("·")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

/// Parses `h0·s1·h1` or `h0 s1 h1`.
impl FromStr for Path {
    type Err = PathError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let nodes = s
            .split(|c: char| c == '·' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(NodeId::new)
            .collect::<Result<Vec<_>, _>>()?;
        Path::new(nodes)
    }
}

impl Serialize for Path {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.nodes.serialize(serializer)
    }
}

/// Ordered list of the directed arcs of `p`.
pub fn path_arcs(p: &Path) -> Vec<DirectedArc> {
    p.arcs().collect()
}

pub fn is_edge_simple(p: &Path) -> bool {
    p.repeated_arc().is_none()
}

pub fn is_node_simple(p: &Path) -> bool {
    let mut seen = HashSet::with_capacity(p.nodes.len());
    p.nodes.iter().all(|n| seen.insert(n))
}

/// Head and tail are hosts and every intermediate node is a switch.
pub fn is_complete(p: &Path, t: &Topology) -> Result<bool, UnknownNode> {
    if let Some(unknown) = p.nodes.iter().find(|n| !t.contains(n)) {
        return Err(UnknownNode(unknown.clone()));
    }
    let interior = &p.nodes[1..p.nodes.len() - 1];
    Ok(t.is_host(p.head()) && t.is_host(p.tail()) && interior.iter().all(|n| t.is_switch(n)))
}

/// The set of paths requested for one traffic type.
///
/// Insertion order is kept (rerouting repair depends on it), but equality is
/// set equality and duplicate paths collapse.
#[derive(Debug, Clone, Default)]
pub struct PathSet {
    traffic_type: String,
    paths: IndexSet<Path>,
    collapsed: Vec<Path>,
}

impl PartialEq for PathSet {
    fn eq(&self, other: &Self) -> bool {
        self.traffic_type == other.traffic_type && self.paths == other.paths
    }
}

impl Eq for PathSet {}

impl PathSet {
    pub fn new(traffic_type: impl Into<String>) -> Self {
        PathSet {
            traffic_type: traffic_type.into(),
            ..Default::default()
        }
    }

    pub fn from_paths(
        traffic_type: impl Into<String>,
        paths: impl IntoIterator<Item = Path>,
    ) -> Self {
        let mut set = PathSet::new(traffic_type);
        for p in paths {
            set.insert(p);
        }
        set
    }

    pub fn traffic_type(&self) -> &str {
        &self.traffic_type
    }

    /// Inserts `p`; returns false (and records the duplicate) if present.
    pub fn insert(&mut self, p: Path) -> bool {
        if self.paths.contains(&p) {
            self.collapsed.push(p);
            false
        } else {
            self.paths.insert(p)
        }
    }

    pub fn remove(&mut self, p: &Path) -> bool {
        self.paths.shift_remove(p)
    }

    pub fn contains(&self, p: &Path) -> bool {
        self.paths.contains(p)
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Path> {
        self.paths.iter()
    }

    pub fn get(&self, i: usize) -> Option<&Path> {
        self.paths.get_index(i)
    }

    pub fn index_of(&self, p: &Path) -> Option<usize> {
        self.paths.get_index_of(p)
    }

    /// Paths that were dropped because they were already present.
    pub fn collapsed_duplicates(&self) -> &[Path] {
        &self.collapsed
    }

    /// Paths in lexicographic node-sequence order.
    pub fn sorted(&self) -> Vec<Path> {
        let mut out: Vec<_> = self.paths.iter().cloned().collect();
        out.sort();
        out
    }

    /// Same set with a new traffic label.
    pub fn relabeled(&self, traffic_type: impl Into<String>) -> Self {
        PathSet::from_paths(traffic_type, self.paths.iter().cloned())
    }

    /// `(self ∪ add) \ remove`, keeping this set's order followed by `add`'s.
    pub fn updated(&self, add: &PathSet, remove: &PathSet) -> PathSet {
        let mut out = PathSet::new(self.traffic_type.clone());
        for p in self.iter().chain(add.iter()) {
            if !remove.contains(p) && !out.contains(p) {
                out.insert(p.clone());
            }
        }
        out
    }

    pub fn is_subset(&self, other: &PathSet) -> bool {
        self.paths.iter().all(|p| other.contains(p))
    }
}

impl<'a> IntoIterator for &'a PathSet {
    type Item = &'a Path;
    type IntoIter = indexmap::set::Iter<'a, Path>;
    fn into_iter(self) -> Self::IntoIter {
        self.paths.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathViolation {
    UnknownNode {
        node: NodeId,
    },
    MissingLink {
        from: NodeId,
        to: NodeId,
    },
    TooShort {
        arcs: usize,
    },
    HeadNotHost {
        node: NodeId,
    },
    TailNotHost {
        node: NodeId,
    },
    IntermediateNotSwitch {
        node: NodeId,
        position: usize,
    },
    NotEdgeSimple {
        arc: DirectedArc,
        first: usize,
        second: usize,
    },
}

impl fmt::Display for PathViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathViolation::UnknownNode { node } => write!(f, "unknown node {node}"),
            PathViolation::MissingLink { from, to } => write!(f, "no link between {from} and {to}"),
            PathViolation::TooShort { arcs } => {
                write!(f, "complete paths need at least 2 arcs, got {arcs}")
            }
            PathViolation::HeadNotHost { node } => write!(f, "head {node} is not a host"),
            PathViolation::TailNotHost { node } => write!(f, "tail {node} is not a host"),
            PathViolation::IntermediateNotSwitch { node, position } => {
                write!(
                    f,
                    "intermediate node {node} at position {position} is not a switch"
                )
            }
            PathViolation::NotEdgeSimple { arc, first, second } => {
                write!(
                    f,
                    "arc {arc} is traversed at positions {first} and {second}"
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathDiagnostics {
    pub index: usize,
    pub path: Path,
    pub violations: Vec<PathViolation>,
}

/// Result of [`validate_path_set`]. Empty `invalid_paths` means valid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub traffic_type: String,
    pub valid: bool,
    pub invalid_paths: Vec<PathDiagnostics>,
    pub collapsed_duplicates: Vec<Path>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.invalid_paths.is_empty()
    }
}

pub fn validate_path_set(p: &PathSet, t: &Topology, require_edge_simple: bool) -> ValidationReport {
    let invalid_paths: Vec<_> = p
        .iter()
        .enumerate()
        .filter_map(|(index, path)| {
            let violations = path_violations(path, t, require_edge_simple);
            (!violations.is_empty()).then(|| PathDiagnostics {
                index,
                path: path.clone(),
                violations,
            })
        })
        .collect();
    ValidationReport {
        traffic_type: p.traffic_type().to_string(),
        valid: invalid_paths.is_empty(),
        invalid_paths,
        collapsed_duplicates: p.collapsed_duplicates().to_vec(),
    }
}

fn path_violations(path: &Path, t: &Topology, require_edge_simple: bool) -> Vec<PathViolation> {
    let mut out = Vec::new();
    let mut unknown = HashSet::new();
    for n in path.nodes() {
        if !t.contains(n) && unknown.insert(n) {
            out.push(PathViolation::UnknownNode { node: n.clone() });
        }
    }
    for w in path.nodes().windows(2) {
        if t.contains(&w[0]) && t.contains(&w[1]) && !t.has_link(&w[0], &w[1]) {
            out.push(PathViolation::MissingLink {
                from: w[0].clone(),
                to: w[1].clone(),
            });
        }
    }
    if path.len() < 2 {
        out.push(PathViolation::TooShort { arcs: path.len() });
    }
    if t.contains(path.head()) && !t.is_host(path.head()) {
        out.push(PathViolation::HeadNotHost {
            node: path.head().clone(),
        });
    }
    if t.contains(path.tail()) && !t.is_host(path.tail()) {
        out.push(PathViolation::TailNotHost {
            node: path.tail().clone(),
        });
    }
    let last = path.nodes().len() - 1;
    for (position, n) in path.nodes().iter().enumerate() {
        if position != 0 && position != last && t.contains(n) && !t.is_switch(n) {
            out.push(PathViolation::IntermediateNotSwitch {
                node: n.clone(),
                position,
            });
        }
    }
    if require_edge_simple {
        if let Some((first, second)) = path.repeated_arc() {
            out.push(PathViolation::NotEdgeSimple {
                arc: path.arc(first),
                first,
                second,
            });
        }
    }
    out
}
