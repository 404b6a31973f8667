//! Arc-closedness checking over the verification graph `D(P)`.
//!
//! Vertices of `D(P)` are the directed arcs of the requested paths plus a
//! `source` and a `sink`. For every path `q = x1·x2·…·xn` of length at least
//! three there are edges `source → (x1,x2)`, `(x_{m-1},x_m) → (x_m,x_{m+1})`
//! and `(x_{n-1},xn) → sink`. Source-to-sink paths of `D(P)` are exactly the
//! complete paths of the arc closure of `P`, so
//!
//! * a cycle in `D(P)` means the closure is infinite (a forwarding loop), and
//! * otherwise `P` is arc closed iff `D(P)` has exactly `|Q|` such paths.
//!
//! Paths with only two arcs (`h·s·h'`) are left out of `Q`. Both of their
//! arcs touch a host, and a complete path can only enter or leave a host at
//! its ends, so every swap around such an arc reproduces the original paths.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::pathmodel::{Path, PathSet};
use crate::topology::{DirectedArc, NodeId};

pub use crate::rules::DEFAULT_PATH_BUDGET;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClosureError {
    #[error("closure has more than {budget} paths; raise the budget to enumerate them")]
    BudgetExceeded { budget: usize },
    #[error("path counting needs an acyclic graph")]
    CyclicGraph,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClosureVertex {
    Source,
    Arc(DirectedArc),
    Sink,
}

impl fmt::Display for ClosureVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosureVertex::Source => f.write_str("source"),
            ClosureVertex::Sink => f.write_str("sink"),
            ClosureVertex::Arc(a) => write!(f, "{a}"),
        }
    }
}

const SOURCE: usize = 0;
const SINK: usize = 1;

/// The graph `D(P)`. Vertex 0 is `source`, vertex 1 is `sink`, the rest are
/// arcs in first-seen order.
#[derive(Debug, Clone)]
pub struct ClosureGraph {
    arcs: Vec<DirectedArc>,
    succ: Vec<Vec<usize>>,
    q_size: usize,
}

impl ClosureGraph {
    fn vertex(&self, i: usize) -> ClosureVertex {
        match i {
            SOURCE => ClosureVertex::Source,
            SINK => ClosureVertex::Sink,
            _ => ClosureVertex::Arc(self.arcs[i - 2].clone()),
        }
    }

    fn len(&self) -> usize {
        self.arcs.len() + 2
    }

    /// Number of paths of length greater than two, i.e. `|Q|`.
    pub fn q_size(&self) -> usize {
        self.q_size
    }

    pub fn vertices(&self) -> BTreeSet<ClosureVertex> {
        (0..self.len()).map(|i| self.vertex(i)).collect()
    }

    pub fn edges(&self) -> BTreeSet<(ClosureVertex, ClosureVertex)> {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(x, ys)| ys.iter().map(move |&y| (x, y)))
            .map(|(x, y)| (self.vertex(x), self.vertex(y)))
            .collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.len()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.len()];
        for (x, ys) in self.succ.iter().enumerate() {
            for &y in ys {
                preds[y].push(x);
            }
        }
        preds
    }

    /// Kahn's algorithm. `Err` carries the vertices left with unresolved
    /// in-degree, which all lie on or below a cycle.
    fn topological_order(&self) -> Result<Vec<usize>, Vec<bool>> {
        let mut indegree = vec![0usize; self.len()];
        for ys in &self.succ {
            for &y in ys {
                indegree[y] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..self.len()).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(x) = queue.pop_front() {
            order.push(x);
            for &y in &self.succ[x] {
                indegree[y] -= 1;
                if indegree[y] == 0 {
                    queue.push_back(y);
                }
            }
        }
        if order.len() == self.len() {
            Ok(order)
        } else {
            Err(indegree.iter().map(|&d| d > 0).collect())
        }
    }

    fn path_nodes(&self, walk: &[usize]) -> Vec<NodeId> {
        let arcs: Vec<_> = walk.iter().map(|&v| &self.arcs[v - 2]).collect();
        let mut nodes = vec![arcs[0].from.clone()];
        nodes.extend(arcs.iter().map(|a| a.to.clone()));
        nodes
    }
}

/// Builds `D(P)` from the paths of `P` with more than two arcs.
pub fn build_closure_graph(p: &PathSet) -> ClosureGraph {
    let mut arcs: Vec<DirectedArc> = Vec::new();
    let mut index: HashMap<(&NodeId, &NodeId), usize> = HashMap::new();
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    let mut q_size = 0;

    for q in p.iter().filter(|q| q.len() > 2) {
        q_size += 1;
        let nodes = q.nodes();
        let mut prev = SOURCE;
        for w in nodes.windows(2) {
            let v = *index.entry((&w[0], &w[1])).or_insert_with(|| {
                arcs.push(DirectedArc::new(w[0].clone(), w[1].clone()));
                arcs.len() + 1
            });
            edges.insert((prev, v));
            prev = v;
        }
        edges.insert((prev, SINK));
    }

    let mut succ = vec![Vec::new(); arcs.len() + 2];
    for (x, y) in edges {
        succ[x].push(y);
    }
    let mut graph = ClosureGraph { arcs, succ, q_size };
    // Successors in vertex order keep enumeration lexicographic.
    let keys: Vec<ClosureVertex> = (0..graph.len()).map(|i| graph.vertex(i)).collect();
    for ys in &mut graph.succ {
        ys.sort_by(|a, b| keys[*a].cmp(&keys[*b]));
    }
    graph
}

/// A cycle of `D(P)`, if any, rotated to start at its smallest vertex. The
/// edge from the last vertex back to the first is implied.
pub fn find_cycle(d: &ClosureGraph) -> Option<Vec<DirectedArc>> {
    let stuck = d.topological_order().err()?;
    let key = |v: usize| d.vertex(v);
    let preds = d.predecessors();
    // Every stuck vertex has a stuck predecessor, so walking backwards from
    // one must eventually repeat.
    let mut cur = (0..d.len())
        .filter(|&v| stuck[v])
        .min_by_key(|&v| key(v))
        .expect("a failed sort leaves vertices behind");
    let mut position = HashMap::new();
    let mut back = Vec::new();
    while !position.contains_key(&cur) {
        position.insert(cur, back.len());
        back.push(cur);
        cur = *preds[cur]
            .iter()
            .filter(|&&u| stuck[u])
            .min_by_key(|&&u| key(u))
            .expect("stuck vertices have stuck predecessors");
    }
    let mut cycle: Vec<usize> = back[position[&cur]..].to_vec();
    cycle.reverse();
    let smallest = (0..cycle.len())
        .min_by_key(|&i| key(cycle[i]))
        .expect("cycles are non-empty");
    cycle.rotate_left(smallest);
    Some(cycle.into_iter().map(|v| d.arcs[v - 2].clone()).collect())
}

/// A path count that stops growing at a cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathCount {
    Exact(u64),
    /// At least the cap that was used.
    Saturated,
}

impl Serialize for PathCount {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            PathCount::Exact(n) => serializer.serialize_u64(*n),
            PathCount::Saturated => serializer.serialize_str("saturated"),
        }
    }
}

impl fmt::Display for PathCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathCount::Exact(n) => write!(f, "{n}"),
            PathCount::Saturated => f.write_str("saturated"),
        }
    }
}

/// Number of source-to-sink paths, by dynamic programming in topological
/// order. Counts at or above `cap` are reported as [`PathCount::Saturated`].
pub fn count_source_sink_paths(d: &ClosureGraph, cap: u64) -> Result<PathCount, ClosureError> {
    let order = d
        .topological_order()
        .map_err(|_| ClosureError::CyclicGraph)?;
    let mut ways = vec![0u64; d.len()];
    ways[SOURCE] = 1;
    for x in order {
        let w = ways[x];
        if w == 0 {
            continue;
        }
        for &y in &d.succ[x] {
            ways[y] = ways[y].saturating_add(w).min(cap);
        }
    }
    Ok(if ways[SINK] >= cap {
        PathCount::Saturated
    } else {
        PathCount::Exact(ways[SINK])
    })
}

/// All source-to-sink paths as node sequences, in lexicographic order.
/// Callers bound the count first; `d` must be acyclic.
fn enumerate_paths(d: &ClosureGraph) -> Vec<Path> {
    let mut out = Vec::new();
    let mut stack = vec![(SOURCE, 0usize)];
    while let Some(&mut (v, ref mut next)) = stack.last_mut() {
        if *next < d.succ[v].len() {
            let y = d.succ[v][*next];
            *next += 1;
            if y == SINK {
                let walk: Vec<usize> = stack[1..].iter().map(|(v, _)| *v).collect();
                out.push(Path::new(d.path_nodes(&walk)).expect("arcs join distinct nodes"));
            } else {
                stack.push((y, 0));
            }
        } else {
            stack.pop();
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosureStatus {
    /// The request is implemented exactly.
    ArcClosed,
    /// A finite superset of loop-free paths would be implemented.
    FiniteSuperset,
    /// The closure is infinite: the rules would induce a forwarding loop.
    InfiniteClosure,
}

impl fmt::Display for ClosureStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClosureStatus::ArcClosed => "arc_closed",
            ClosureStatus::FiniteSuperset => "finite_superset",
            ClosureStatus::InfiniteClosure => "infinite_closure",
        })
    }
}

/// Three-way implementability verdict with its witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub status: ClosureStatus,
    /// Source-to-sink paths of `D(P)`; equals `|Q|` exactly when arc closed.
    pub counted_paths: PathCount,
    /// Closure paths not requested (finite superset only).
    pub extra_paths: Vec<Path>,
    /// A cycle of `D(P)` (infinite closure only).
    pub cycle: Vec<DirectedArc>,
}

impl Verdict {
    pub fn is_arc_closed(&self) -> bool {
        self.status == ClosureStatus::ArcClosed
    }
}

/// Decides whether `p` can be implemented exactly.
///
/// `budget` bounds the number of extra paths that may be enumerated for a
/// finite superset.
pub fn check_arc_closed(p: &PathSet, budget: usize) -> Result<Verdict, ClosureError> {
    let d = build_closure_graph(p);
    if let Some(cycle) = find_cycle(&d) {
        return Ok(Verdict {
            status: ClosureStatus::InfiniteClosure,
            counted_paths: PathCount::Saturated,
            extra_paths: Vec::new(),
            cycle,
        });
    }
    let q = d.q_size() as u64;
    if count_source_sink_paths(&d, q + 1)? == PathCount::Exact(q) {
        return Ok(Verdict {
            status: ClosureStatus::ArcClosed,
            counted_paths: PathCount::Exact(q),
            extra_paths: Vec::new(),
            cycle: Vec::new(),
        });
    }
    let counted = count_source_sink_paths(&d, budget as u64 + 1)?;
    if counted == PathCount::Saturated {
        return Err(ClosureError::BudgetExceeded { budget });
    }
    let extra_paths = enumerate_paths(&d)
        .into_iter()
        .filter(|x| !p.contains(x))
        .collect();
    Ok(Verdict {
        status: ClosureStatus::FiniteSuperset,
        counted_paths: counted,
        extra_paths,
        cycle: Vec::new(),
    })
}

/// Status only, without enumerating extra paths. Never exceeds a budget.
pub fn closure_status(p: &PathSet) -> ClosureStatus {
    let d = build_closure_graph(p);
    let q = d.q_size() as u64;
    match count_source_sink_paths(&d, q + 1) {
        Err(_) => ClosureStatus::InfiniteClosure,
        Ok(PathCount::Exact(n)) if n == q => ClosureStatus::ArcClosed,
        Ok(_) => ClosureStatus::FiniteSuperset,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Closure {
    /// Every path of the closure, in lexicographic order.
    Finite(Vec<Path>),
    Infinite {
        cycle: Vec<DirectedArc>,
    },
}

impl Closure {
    pub fn finite(&self) -> Option<&[Path]> {
        match self {
            Closure::Finite(paths) => Some(paths),
            Closure::Infinite { .. } => None,
        }
    }
}

/// The arc closure of `p`: all source-to-sink paths of `D(P)` together with
/// the two-arc paths of `p`.
pub fn arc_closure(p: &PathSet, budget: usize) -> Result<Closure, ClosureError> {
    let d = build_closure_graph(p);
    if let Some(cycle) = find_cycle(&d) {
        return Ok(Closure::Infinite { cycle });
    }
    let short: Vec<&Path> = p.iter().filter(|q| q.len() <= 2).collect();
    let limit = budget.saturating_sub(short.len()) as u64 + 1;
    if short.len() > budget || count_source_sink_paths(&d, limit)? == PathCount::Saturated {
        return Err(ClosureError::BudgetExceeded { budget });
    }
    let mut paths = enumerate_paths(&d);
    paths.extend(short.into_iter().cloned());
    paths.sort();
    Ok(Closure::Finite(paths))
}

/// Result of the swap fixed point computed by [`brute_force_closure`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BruteForceClosure {
    Finite(Vec<Path>),
    /// A generated (or requested) path traverses some arc twice.
    Infinite {
        non_edge_simple: Path,
    },
}

/// Arc closure computed straight from the definition: keep adding the
/// cross-combinations `α·x·y·β'` of any two member paths sharing an arc
/// `(x, y)` until nothing changes.
///
/// Stops with [`BruteForceClosure::Infinite`] as soon as any member repeats
/// an arc, since such a path makes the closure infinite.
pub fn brute_force_closure(p: &PathSet, budget: usize) -> Result<BruteForceClosure, ClosureError> {
    let mut members: Vec<Vec<NodeId>> = Vec::new();
    let mut known: HashSet<Vec<NodeId>> = HashSet::new();
    let mut by_arc: HashMap<(NodeId, NodeId), Vec<(usize, usize)>> = HashMap::new();
    let mut pending: VecDeque<Vec<NodeId>> = p.iter().map(|q| q.nodes().to_vec()).collect();

    while let Some(candidate) = pending.pop_front() {
        if !known.insert(candidate.clone()) {
            continue;
        }
        let path = Path::new(candidate.clone()).expect("combinations of paths are paths");
        if path.repeated_arc().is_some() {
            return Ok(BruteForceClosure::Infinite {
                non_edge_simple: path,
            });
        }
        if known.len() > budget {
            return Err(ClosureError::BudgetExceeded { budget });
        }
        let id = members.len();
        members.push(candidate);
        let this = &members[id];
        for u in 0..this.len() - 1 {
            let key = (this[u].clone(), this[u + 1].clone());
            let entry = by_arc.entry(key).or_default();
            entry.push((id, u));
            for &(other, v) in entry.iter() {
                let that = &members[other];
                for combo in [
                    [&this[..=u], &that[v + 1..]].concat(),
                    [&that[..=v], &this[u + 1..]].concat(),
                ] {
                    if !known.contains(&combo) {
                        pending.push_back(combo);
                    }
                }
            }
        }
    }

    let mut paths: Vec<Path> = members
        .into_iter()
        .map(|m| Path::new(m).expect("members are paths"))
        .collect();
    paths.sort();
    Ok(BruteForceClosure::Finite(paths))
}

/// Verdict on `(p ∪ add) \ remove`, plus the removed paths that the closure
/// of the updated set would bring back.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UpdateVerdict {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub reinduced: Vec<Path>,
}

pub fn check_update(
    p: &PathSet,
    add: &PathSet,
    remove: &PathSet,
    budget: usize,
) -> Result<UpdateVerdict, ClosureError> {
    let updated = p.updated(add, remove);
    let verdict = check_arc_closed(&updated, budget)?;
    let reinduced = verdict
        .extra_paths
        .iter()
        .filter(|x| remove.contains(x))
        .cloned()
        .collect();
    Ok(UpdateVerdict { verdict, reinduced })
}
