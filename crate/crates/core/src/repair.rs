//! Repairs for requests that are not arc closed.
//!
//! Three strategies are offered: keep a largest arc-closed subset, grow the
//! request to its (finite) closure, or reroute paths over unused switch arcs
//! until every pair is compatible.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::closure::{arc_closure, closure_status, Closure, ClosureError, ClosureStatus};
use crate::pathmodel::{Path, PathSet};
use crate::topology::{unused_switch_arcs, DirectedArc, NodeId, Topology};

/// Above this many paths the exact subset search falls back to the greedy
/// heuristic.
pub const DEFAULT_EXACT_THRESHOLD: usize = 20;

/// Largest instance the exact search can represent.
const EXACT_LIMIT: usize = 128;

/// Path counts up to which [`RerouteOptions::try_rotations`] has an effect.
const ROTATION_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RepairError {
    #[error("cannot reroute {candidate} around {arc}: it conflicts with {accepted} and no unused arc helps")]
    RepairImpossible {
        candidate: Path,
        accepted: Path,
        arc: DirectedArc,
    },
    #[error("{candidate} conflicts with {accepted} on {arc} and there are no unused switch arcs")]
    EmptyUnusedSet {
        candidate: Path,
        accepted: Path,
        arc: DirectedArc,
    },
    #[error("rerouted paths are still not arc closed ({status})")]
    NotArcClosedAfterRepair {
        status: ClosureStatus,
        paths: Vec<Path>,
    },
    #[error("the closure is infinite, so no finite arc-closed superset exists")]
    NoFiniteSuperset { cycle: Vec<DirectedArc> },
    #[error("closure has more than {budget} paths")]
    BudgetExceeded { budget: usize },
}

impl From<ClosureError> for RepairError {
    fn from(e: ClosureError) -> Self {
        match e {
            ClosureError::BudgetExceeded { budget } => RepairError::BudgetExceeded { budget },
            // Only reachable on a cyclic graph, which the callers rule out.
            ClosureError::CyclicGraph => unreachable!("closure enumerated on a cyclic graph"),
        }
    }
}

/// Indices `(u, v)` of the first arc of `p_i` (by position) shared with
/// `p_j` for which a cross-combination is not a member.
fn first_conflict(
    p_i: &Path,
    p_j: &Path,
    member: impl Fn(&Path) -> bool,
) -> Option<(usize, usize)> {
    let a = p_i.nodes();
    let b = p_j.nodes();
    let mut positions: HashMap<(&NodeId, &NodeId), Vec<usize>> = HashMap::new();
    for (v, w) in b.windows(2).enumerate() {
        positions.entry((&w[0], &w[1])).or_default().push(v);
    }
    for (u, w) in a.windows(2).enumerate() {
        let Some(vs) = positions.get(&(&w[0], &w[1])) else {
            continue;
        };
        for &v in vs {
            let ok = [
                [&a[..=u], &b[v + 1..]].concat(),
                [&b[..=v], &a[u + 1..]].concat(),
            ]
            .into_iter()
            .all(|combo| Path::new(combo).map(|c| member(&c)).unwrap_or(false));
            if !ok {
                return Some((u, v));
            }
        }
    }
    None
}

/// The first arc of `p_i` shared with `p_j` around which one of the two
/// cross-combinations is missing from `p`, or `None` if the two paths are
/// compatible within `p`.
pub fn incompatible(p_i: &Path, p_j: &Path, p: &PathSet) -> Option<DirectedArc> {
    first_conflict(p_i, p_j, |c| p.contains(c)).map(|(u, _)| p_i.arc(u))
}

/// The conflict graph `G(P)`: one vertex per path, one edge per incompatible
/// pair, labelled with a witness arc.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictGraph {
    paths: Vec<Path>,
    edges: BTreeMap<(usize, usize), DirectedArc>,
}

impl ConflictGraph {
    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    /// Edges as `(i, j)` with `i < j`, indexing [`ConflictGraph::paths`].
    pub fn edges(&self) -> &BTreeMap<(usize, usize), DirectedArc> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains_key(&(i.min(j), i.max(j)))
    }

    pub fn witness(&self, i: usize, j: usize) -> Option<&DirectedArc> {
        self.edges.get(&(i.min(j), i.max(j)))
    }

    pub fn neighbors(&self, i: usize) -> BTreeSet<usize> {
        self.edges
            .keys()
            .filter_map(|&(a, b)| match () {
                _ if a == i => Some(b),
                _ if b == i => Some(a),
                _ => None,
            })
            .collect()
    }
}

pub fn build_conflict_graph(p: &PathSet) -> ConflictGraph {
    let paths: Vec<Path> = p.iter().cloned().collect();
    // Arcs touching a host can only swap a path with itself.
    let mut by_arc: HashMap<DirectedArc, BTreeSet<usize>> = HashMap::new();
    for (i, q) in paths.iter().enumerate() {
        let inner = q.nodes().len().saturating_sub(2);
        for u in 1..inner {
            by_arc.entry(q.arc(u)).or_default().insert(i);
        }
    }
    let mut pairs = BTreeSet::new();
    for sharing in by_arc.values() {
        let sharing: Vec<usize> = sharing.iter().copied().collect();
        for (x, &i) in sharing.iter().enumerate() {
            for &j in &sharing[x + 1..] {
                pairs.insert((i, j));
            }
        }
    }
    let edges = pairs
        .into_iter()
        .filter_map(|(i, j)| incompatible(&paths[i], &paths[j], p).map(|arc| ((i, j), arc)))
        .collect();
    ConflictGraph { paths, edges }
}

/// Which subsets of a fixed path list are arc closed, precomputed from every
/// pair of arc occurrences.
struct Constraints {
    adjacency: Vec<BTreeSet<usize>>,
    /// Paths whose swaps with themselves leave the list.
    blocked: Vec<bool>,
    /// `(i, j, k)`: a subset holding `i` and `j` must also hold `k`.
    requires: Vec<(usize, usize, usize)>,
}

impl Constraints {
    fn new(paths: &[Path]) -> Self {
        let n = paths.len();
        let index: HashMap<&Path, usize> = paths.iter().enumerate().map(|(i, q)| (q, i)).collect();
        let mut by_arc: HashMap<(&NodeId, &NodeId), Vec<(usize, usize)>> = HashMap::new();
        for (i, q) in paths.iter().enumerate() {
            for (u, w) in q.nodes().windows(2).enumerate() {
                by_arc.entry((&w[0], &w[1])).or_default().push((i, u));
            }
        }
        let mut adjacency = vec![BTreeSet::new(); n];
        let mut blocked = vec![false; n];
        let mut requires = BTreeSet::new();
        for occurrences in by_arc.values() {
            for (x, &(i, u)) in occurrences.iter().enumerate() {
                for &(j, v) in &occurrences[x + 1..] {
                    let a = paths[i].nodes();
                    let b = paths[j].nodes();
                    for combo in [
                        [&a[..=u], &b[v + 1..]].concat(),
                        [&b[..=v], &a[u + 1..]].concat(),
                    ] {
                        let found = Path::new(combo).ok().and_then(|c| index.get(&c).copied());
                        match found {
                            Some(k) if k == i || k == j => {}
                            Some(k) => {
                                requires.insert((i.min(j), i.max(j), k));
                            }
                            None if i == j => blocked[i] = true,
                            None => {
                                adjacency[i].insert(j);
                                adjacency[j].insert(i);
                            }
                        }
                    }
                }
            }
        }
        Constraints {
            adjacency,
            blocked,
            requires: requires.into_iter().collect(),
        }
    }

    fn closed(&self, member: &[bool]) -> bool {
        let n = member.len();
        (0..n).all(|i| {
            !member[i] || (!self.blocked[i] && self.adjacency[i].iter().all(|&j| !member[j]))
        }) && self.requirements_met(member)
    }

    fn requirements_met(&self, member: &[bool]) -> bool {
        self.requires
            .iter()
            .all(|&(i, j, k)| !(member[i] && member[j]) || member[k])
    }

    fn requirements_met_mask(&self, mask: u128) -> bool {
        let has = |i: usize| mask >> i & 1 == 1;
        self.requires
            .iter()
            .all(|&(i, j, k)| !(has(i) && has(j)) || has(k))
    }
}

/// Branch and bound over independent sets, including each vertex before
/// excluding it. `accept` filters leaves; ties keep the first set found.
fn exact_search(
    adjacency: &[BTreeSet<usize>],
    allowed: u128,
    accept: &dyn Fn(u128) -> bool,
) -> u128 {
    let neighbors: Vec<u128> = adjacency
        .iter()
        .map(|ns| ns.iter().fold(0u128, |m, &j| m | 1 << j))
        .collect();

    struct Search<'a> {
        neighbors: &'a [u128],
        accept: &'a dyn Fn(u128) -> bool,
        best: u128,
        found: bool,
    }

    impl Search<'_> {
        fn go(&mut self, chosen: u128, candidates: u128) {
            let size = chosen.count_ones() + candidates.count_ones();
            if self.found && size <= self.best.count_ones() {
                return;
            }
            if candidates == 0 {
                if (self.accept)(chosen) {
                    self.best = chosen;
                    self.found = true;
                }
                return;
            }
            let i = candidates.trailing_zeros() as usize;
            let rest = candidates & !(1 << i);
            self.go(chosen | 1 << i, rest & !self.neighbors[i]);
            self.go(chosen, rest);
        }
    }

    let mut search = Search {
        neighbors: &neighbors,
        accept,
        best: 0,
        found: false,
    };
    search.go(0, allowed);
    search.best
}

fn mask_to_indices(mask: u128) -> Vec<usize> {
    (0..EXACT_LIMIT).filter(|&i| mask >> i & 1 == 1).collect()
}

/// A maximum independent set of `g`, as sorted vertex indices. Among
/// maximum sets the one found first by including lower indices wins.
///
/// # Panics
///
/// If `g` has more than 128 vertices.
pub fn maximum_independent_set(g: &ConflictGraph) -> Vec<usize> {
    let n = g.paths.len();
    assert!(
        n <= EXACT_LIMIT,
        "exact search supports at most {EXACT_LIMIT} paths"
    );
    let mut adjacency = vec![BTreeSet::new(); n];
    for &(i, j) in g.edges.keys() {
        adjacency[i].insert(j);
        adjacency[j].insert(i);
    }
    mask_to_indices(exact_search(&adjacency, full_mask(n), &|_| true))
}

fn full_mask(n: usize) -> u128 {
    if n == EXACT_LIMIT {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

/// Greedy minimum-degree independent set, then removals until arc closed,
/// then re-additions until maximal.
fn greedy_subset(c: &Constraints) -> Vec<bool> {
    let n = c.adjacency.len();
    let mut alive: Vec<bool> = c.blocked.iter().map(|b| !b).collect();
    let mut member = vec![false; n];
    loop {
        let pick = (0..n)
            .filter(|&i| alive[i])
            .min_by_key(|&i| (c.adjacency[i].iter().filter(|&&j| alive[j]).count(), i));
        let Some(i) = pick else { break };
        member[i] = true;
        alive[i] = false;
        for &j in &c.adjacency[i] {
            alive[j] = false;
        }
    }

    while !c.requirements_met(&member) {
        let mut violations = vec![0usize; n];
        for &(i, j, k) in &c.requires {
            if member[i] && member[j] && !member[k] {
                violations[i] += 1;
                if j != i {
                    violations[j] += 1;
                }
            }
        }
        // Most violations first; among equals drop the lexicographically
        // larger path.
        let worst = (0..n)
            .filter(|&i| member[i])
            .max_by_key(|&i| (violations[i], i))
            .expect("a violation involves some member");
        member[worst] = false;
    }

    let mut grew = true;
    while grew {
        grew = false;
        for i in 0..n {
            if member[i] {
                continue;
            }
            member[i] = true;
            if c.closed(&member) {
                grew = true;
            } else {
                member[i] = false;
            }
        }
    }
    member
}

/// A largest arc-closed subset of `p`, keeping `p`'s order.
///
/// Up to `exact_threshold` paths (capped at 128) the search is exact and
/// among maximum subsets returns the one whose sorted path list is
/// lexicographically first. Larger inputs use a greedy heuristic whose
/// result is arc closed and cannot be extended by any single path.
pub fn max_arc_closed_subset(p: &PathSet, exact_threshold: usize) -> PathSet {
    let sorted = p.sorted();
    let n = sorted.len();
    let c = Constraints::new(&sorted);

    let mut member = if n <= exact_threshold.min(EXACT_LIMIT) {
        let allowed = (0..n)
            .filter(|&i| !c.blocked[i])
            .fold(0u128, |m, i| m | 1 << i);
        let best = exact_search(&c.adjacency, allowed, &|mask| c.requirements_met_mask(mask));
        let mut member = vec![false; n];
        for i in mask_to_indices(best) {
            member[i] = true;
        }
        member
    } else {
        greedy_subset(&c)
    };

    // Independent checker on the result; only a bug could trip it.
    let pick = |member: &[bool]| {
        let kept: HashSet<&Path> = (0..n).filter(|&i| member[i]).map(|i| &sorted[i]).collect();
        PathSet::from_paths(
            p.traffic_type(),
            p.iter().filter(|q| kept.contains(q)).cloned(),
        )
    };
    let mut out = pick(&member);
    while closure_status(&out) != ClosureStatus::ArcClosed {
        let last = (0..n)
            .rev()
            .find(|&i| member[i])
            .expect("the empty set is arc closed");
        member[last] = false;
        out = pick(&member);
    }
    out
}

/// The arc closure of `p` when it is finite: `p` in its own order followed by
/// the induced extra paths in lexicographic order.
pub fn min_arc_closed_superset(p: &PathSet, budget: usize) -> Result<PathSet, RepairError> {
    match arc_closure(p, budget)? {
        Closure::Infinite { cycle } => Err(RepairError::NoFiniteSuperset { cycle }),
        Closure::Finite(all) => {
            let mut out = PathSet::from_paths(p.traffic_type(), p.iter().cloned());
            for q in all {
                if !out.contains(&q) {
                    out.insert(q);
                }
            }
            Ok(out)
        }
    }
}

/// One edit made to a path during rerouting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Change {
    pub removed_subpath: Path,
    pub inserted_subpath: Path,
}

/// A repaired request and what was done to get it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepairOutcome {
    pub traffic_type: String,
    pub paths: Vec<Path>,
    /// Edits per path, aligned with `paths`.
    pub changes: Vec<Vec<Change>>,
    /// Unused switch arcs now carrying a rerouted path.
    pub consumed_links: Vec<DirectedArc>,
    pub removed_paths: Vec<Path>,
    pub added_paths: Vec<Path>,
}

impl RepairOutcome {
    pub fn repaired(&self) -> PathSet {
        PathSet::from_paths(self.traffic_type.clone(), self.paths.iter().cloned())
    }

    fn unchanged(p: &PathSet, paths: Vec<Path>) -> Self {
        let removed_paths = p.iter().filter(|q| !paths.contains(q)).cloned().collect();
        let added_paths = paths.iter().filter(|q| !p.contains(q)).cloned().collect();
        RepairOutcome {
            traffic_type: p.traffic_type().to_string(),
            changes: vec![Vec::new(); paths.len()],
            paths,
            consumed_links: Vec::new(),
            removed_paths,
            added_paths,
        }
    }
}

pub fn subset_repair(p: &PathSet, exact_threshold: usize) -> RepairOutcome {
    let kept = max_arc_closed_subset(p, exact_threshold);
    RepairOutcome::unchanged(p, kept.iter().cloned().collect())
}

pub fn superset_repair(p: &PathSet, budget: usize) -> Result<RepairOutcome, RepairError> {
    let grown = min_arc_closed_superset(p, budget)?;
    Ok(RepairOutcome::unchanged(p, grown.iter().cloned().collect()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RerouteOptions {
    /// For at most eight paths, retry with the processing order rotated and
    /// keep the first rotation that succeeds.
    pub try_rotations: bool,
}

/// Shortcut a sub-path shared by `c` and `other` around the arc at `c[u]`,
/// `other[v]` by a single unused arc, longest sub-path first.
fn shortcut(
    c: &[NodeId],
    other: &[NodeId],
    u: usize,
    v: usize,
    unused: &BTreeSet<DirectedArc>,
) -> Option<(Vec<NodeId>, Change, Vec<DirectedArc>)> {
    let left = (1..=u.min(v))
        .take_while(|&k| c[u - k] == other[v - k])
        .count();
    let right = (1..)
        .take_while(|&k| {
            u + 1 + k < c.len() && v + 1 + k < other.len() && c[u + 1 + k] == other[v + 1 + k]
        })
        .count();
    let mut options: Vec<(usize, usize)> = (1..=left)
        .flat_map(|i| (1..=right).map(move |j| (i, j)))
        .collect();
    options.sort_by_key(|&(i, j)| std::cmp::Reverse((i + j, i)));
    options.into_iter().find_map(|(i, j)| {
        let (start, end) = (u - i, u + 1 + j);
        let shortcut = DirectedArc::new(c[start].clone(), c[end].clone());
        let u_turn = (start > 0 && c[start - 1] == c[end]) || c.get(end + 1) == Some(&c[start]);
        if c[start] == c[end] || u_turn || !unused.contains(&shortcut) {
            return None;
        }
        let nodes = [&c[..=start], &c[end..]].concat();
        let change = Change {
            removed_subpath: Path::new(c[start..=end].to_vec()).ok()?,
            inserted_subpath: Path::new(vec![c[start].clone(), c[end].clone()]).ok()?,
        };
        Some((nodes, change, vec![shortcut]))
    })
}

/// Replace the arc `c[u]·c[u+1]` by a two-arc detour through a switch
/// joined to both ends by unused arcs. Turning straight back is not allowed;
/// among the remaining switches the largest name wins.
fn detour(
    c: &[NodeId],
    u: usize,
    unused: &BTreeSet<DirectedArc>,
) -> Option<(Vec<NodeId>, Change, Vec<DirectedArc>)> {
    let (s1, s2) = (&c[u], &c[u + 1]);
    let before = u.checked_sub(1).map(|k| &c[k]);
    let after = c.get(u + 2);
    let x = unused
        .iter()
        .filter(|a| &a.from == s1)
        .map(|a| &a.to)
        .filter(|&x| Some(x) != before && Some(x) != after)
        .filter(|&x| unused.contains(&DirectedArc::new(x.clone(), s2.clone())))
        .max()?
        .clone();
    let nodes = [&c[..=u], std::slice::from_ref(&x), &c[u + 1..]].concat();
    let change = Change {
        removed_subpath: Path::new(vec![s1.clone(), s2.clone()]).ok()?,
        inserted_subpath: Path::new(vec![s1.clone(), x.clone(), s2.clone()]).ok()?,
    };
    let used = vec![
        DirectedArc::new(s1.clone(), x.clone()),
        DirectedArc::new(x, s2.clone()),
    ];
    Some((nodes, change, used))
}

fn reroute_in_order(
    paths: &[Path],
    traffic_type: &str,
    t: &Topology,
) -> Result<RepairOutcome, RepairError> {
    let original = PathSet::from_paths(traffic_type, paths.iter().cloned());
    let mut unused = unused_switch_arcs(t, &original);
    let mut accepted: Vec<Path> = Vec::new();
    let mut changes = Vec::new();
    let mut consumed = Vec::new();

    for path in paths {
        let mut candidate = path.clone();
        let mut log = Vec::new();
        loop {
            let working: HashSet<&Path> = accepted.iter().chain([&candidate]).collect();
            let conflict = accepted.iter().find_map(|q| {
                first_conflict(&candidate, q, |c| working.contains(c)).map(|(u, v)| (q, u, v))
            });
            let Some((other, u, v)) = conflict else { break };
            if unused.is_empty() {
                return Err(RepairError::EmptyUnusedSet {
                    candidate: candidate.clone(),
                    accepted: other.clone(),
                    arc: candidate.arc(u),
                });
            }
            let c = candidate.nodes();
            let step = shortcut(c, other.nodes(), u, v, &unused).or_else(|| detour(c, u, &unused));
            let Some((nodes, change, used)) = step else {
                return Err(RepairError::RepairImpossible {
                    candidate: candidate.clone(),
                    accepted: other.clone(),
                    arc: candidate.arc(u),
                });
            };
            for arc in &used {
                unused.remove(arc);
            }
            consumed.extend(used);
            log.push(change);
            candidate = Path::new(nodes).expect("edits keep consecutive nodes distinct");
        }
        accepted.push(candidate);
        changes.push(log);
    }

    let repaired = PathSet::from_paths(traffic_type, accepted.iter().cloned());
    let status = closure_status(&repaired);
    if status != ClosureStatus::ArcClosed {
        return Err(RepairError::NotArcClosedAfterRepair {
            status,
            paths: accepted,
        });
    }
    let removed_paths = paths
        .iter()
        .filter(|q| !repaired.contains(q))
        .cloned()
        .collect();
    let added_paths = accepted
        .iter()
        .filter(|q| !original.contains(q))
        .cloned()
        .collect();
    consumed.sort();
    Ok(RepairOutcome {
        traffic_type: traffic_type.to_string(),
        paths: accepted,
        changes,
        consumed_links: consumed,
        removed_paths,
        added_paths,
    })
}

/// Reroutes paths, in order, until every pair is compatible.
///
/// Each path is checked against the already accepted ones. While some shared
/// arc lacks a cross-combination, the candidate is edited: first by
/// shortcutting a longer shared sub-path with one unused arc, otherwise by a
/// detour around the arc through another switch. Accepted paths are never
/// modified and each unused arc is consumed at most once. The result is
/// verified to be arc closed before it is returned.
pub fn reroute_repair(p: &PathSet, t: &Topology) -> Result<RepairOutcome, RepairError> {
    reroute_repair_with(p, t, RerouteOptions::default())
}

pub fn reroute_repair_with(
    p: &PathSet,
    t: &Topology,
    options: RerouteOptions,
) -> Result<RepairOutcome, RepairError> {
    let paths: Vec<Path> = p.iter().cloned().collect();
    let first = reroute_in_order(&paths, p.traffic_type(), t);
    if first.is_ok() || !options.try_rotations || paths.len() > ROTATION_LIMIT {
        return first;
    }
    for r in 1..paths.len() {
        let mut rotated = paths.clone();
        rotated.rotate_left(r);
        if let Ok(mut outcome) = reroute_in_order(&rotated, p.traffic_type(), t) {
            outcome.paths.rotate_right(r);
            outcome.changes.rotate_right(r);
            return Ok(outcome);
        }
    }
    first
}
