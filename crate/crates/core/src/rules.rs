//! Flow rules induced by a path set, and the paths those rules induce back.
//!
//! A rule `(a, s, b)` tells switch `s` to forward packets arriving from
//! neighbor `a` to neighbor `b`. All rules of one traffic type share a single
//! priority, so several rules with the same `(a, s)` clone the packet.
//!
//! The data plane is modelled as a transition system whose states are
//! directed arcs `(from, at)`: rule `(a, s, b)` moves a packet from state
//! `(a, s)` to state `(s, b)`. Because forwarding depends only on the
//! current state, any walk that revisits a state can be pumped forever.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::pathmodel::{Path, PathSet};
use crate::topology::{DirectedArc, NodeId, Topology};

/// Default bound on the number of complete paths any enumeration may produce.
pub const DEFAULT_PATH_BUDGET: usize = 100_000;

/// Default bound on the number of packet copies followed by the simulator.
pub const DEFAULT_WALK_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowRule {
    pub in_neighbor: NodeId,
    pub switch: NodeId,
    pub out_neighbor: NodeId,
}

impl FlowRule {
    pub fn new(in_neighbor: NodeId, switch: NodeId, out_neighbor: NodeId) -> Self {
        FlowRule {
            in_neighbor,
            switch,
            out_neighbor,
        }
    }
}

impl fmt::Display for FlowRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{})",
            self.in_neighbor, self.switch, self.out_neighbor
        )
    }
}

impl Serialize for FlowRule {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [&self.in_neighbor, &self.switch, &self.out_neighbor].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FlowRule {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [a, s, b] = <[NodeId; 3]>::deserialize(deserializer)?;
        Ok(FlowRule::new(a, s, b))
    }
}

/// The rule set of one traffic type across all switches.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration {
    rules: BTreeSet<FlowRule>,
}

impl Configuration {
    pub fn new(rules: impl IntoIterator<Item = FlowRule>) -> Self {
        Configuration {
            rules: rules.into_iter().collect(),
        }
    }

    pub fn rules(&self) -> &BTreeSet<FlowRule> {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn contains(&self, rule: &FlowRule) -> bool {
        self.rules.contains(rule)
    }

    /// Checks that every rule sits on a switch and uses two of its neighbors.
    pub fn check_against(&self, t: &Topology) -> Result<(), RulesError> {
        for rule in &self.rules {
            let reason = if !t.is_switch(&rule.switch) {
                Some("rule location is not a switch")
            } else if !t.has_link(&rule.in_neighbor, &rule.switch) {
                Some("in-neighbor is not adjacent to the switch")
            } else if !t.has_link(&rule.switch, &rule.out_neighbor) {
                Some("out-neighbor is not adjacent to the switch")
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(RulesError::InvalidRule {
                    rule: rule.clone(),
                    reason,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RulesError {
    #[error("more than {budget} paths; raise the budget to enumerate them")]
    BudgetExceeded { budget: usize },
    #[error("rule {rule} does not fit the topology: {reason}")]
    InvalidRule {
        rule: FlowRule,
        reason: &'static str,
    },
    #[error("{0} is not a host")]
    NotAHost(NodeId),
}

/// For every window `a·b·c` of every path, rule `(a, b, c)`.
///
/// Interior nodes of complete paths are switches, so every window yields a
/// rule.
pub fn derive_rules(p: &PathSet) -> Configuration {
    Configuration::new(p.iter().flat_map(|path| {
        path.nodes()
            .windows(3)
            .map(|w| FlowRule::new(w[0].clone(), w[1].clone(), w[2].clone()))
    }))
}

/// A walk that reaches the same arc state twice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoopWitness {
    pub walk: Vec<NodeId>,
    pub repeated_arc: DirectedArc,
}

impl fmt::Display for LoopWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let walk: Vec<_> = self.walk.iter().map(NodeId::as_str).collect();
        write!(f, "{} (repeats {})", walk.join("·"), self.repeated_arc)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InducedPaths {
    /// All complete paths the configuration induces, in lexicographic order.
    Finite(Vec<Path>),
    LoopDetected(LoopWitness),
}

/// Transition system over arc states; state indices follow arc order.
struct ArcMachine {
    states: Vec<DirectedArc>,
    index: HashMap<DirectedArc, usize>,
    succ: Vec<Vec<usize>>,
    terminal: Vec<bool>,
}

impl ArcMachine {
    fn new(c: &Configuration, t: &Topology) -> Self {
        let mut arcs = BTreeSet::new();
        for r in c.rules() {
            arcs.insert(DirectedArc::new(r.in_neighbor.clone(), r.switch.clone()));
            arcs.insert(DirectedArc::new(r.switch.clone(), r.out_neighbor.clone()));
        }
        let states: Vec<_> = arcs.into_iter().collect();
        let index: HashMap<_, _> = states
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, a)| (a, i))
            .collect();
        let mut succ = vec![Vec::new(); states.len()];
        // BTreeSet iteration keeps successor lists sorted by out-neighbor.
        for r in c.rules() {
            let from = index[&DirectedArc::new(r.in_neighbor.clone(), r.switch.clone())];
            let to = index[&DirectedArc::new(r.switch.clone(), r.out_neighbor.clone())];
            succ[from].push(to);
        }
        let terminal = states.iter().map(|a| t.is_host(&a.to)).collect();
        ArcMachine {
            states,
            index,
            succ,
            terminal,
        }
    }

    fn initial_states(&self, t: &Topology) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&i| t.is_host(&self.states[i].from))
            .collect()
    }

    fn bfs(&self, sources: &[usize], forward: bool) -> Vec<Option<usize>> {
        let preds;
        let adj: &[Vec<usize>] = if forward {
            &self.succ
        } else {
            preds = self.predecessors();
            &preds
        };
        let mut dist = vec![None; self.states.len()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(x) = queue.pop_front() {
            let d = dist[x].expect("queued");
            for &y in &adj[x] {
                if dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.states.len()];
        for (x, ys) in self.succ.iter().enumerate() {
            for &y in ys {
                preds[y].push(x);
            }
        }
        preds
    }

    fn walk_nodes(&self, states: &[usize]) -> Vec<NodeId> {
        let mut nodes = vec![self.states[states[0]].from.clone()];
        nodes.extend(states.iter().map(|&s| self.states[s].to.clone()));
        nodes
    }

    /// True if some state reachable from `reachable` lies on a cycle.
    fn has_cycle(&self, reachable: &[bool]) -> bool {
        let n = self.states.len();
        let mut indegree = vec![0usize; n];
        for x in (0..n).filter(|&x| reachable[x]) {
            for &y in &self.succ[x] {
                indegree[y] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..n)
            .filter(|&x| reachable[x] && indegree[x] == 0)
            .collect();
        let mut done = 0;
        while let Some(x) = queue.pop_front() {
            done += 1;
            for &y in &self.succ[x] {
                indegree[y] -= 1;
                if indegree[y] == 0 {
                    queue.push_back(y);
                }
            }
        }
        done < reachable.iter().filter(|r| **r).count()
    }

    /// Greedy lexicographically smallest walk of exactly `len` steps from
    /// `start` to the target whose reverse distances are `to_target`.
    fn steer(&self, start: usize, len: usize, to_target: &[Option<usize>]) -> Vec<usize> {
        let mut walk = vec![start];
        let mut cur = start;
        for remaining in (0..len).rev() {
            cur = *self.succ[cur]
                .iter()
                .find(|&&y| to_target[y] == Some(remaining))
                .expect("distance labels guarantee a successor");
            walk.push(cur);
        }
        walk
    }

    /// Shortest walk from an initial state that revisits a state. Among
    /// shortest walks the lexicographically smallest node sequence wins.
    fn shortest_loop(&self, initial: &[usize]) -> Option<LoopWitness> {
        let from_init = self.bfs(initial, true);
        let preds = self.predecessors();
        let mut best: Option<(usize, Vec<NodeId>, usize)> = None;
        for v in 0..self.states.len() {
            let Some(prefix_len) = from_init[v] else {
                continue;
            };
            let from_v = self.bfs(&[v], true);
            let Some(cycle_len) = preds[v]
                .iter()
                .filter_map(|&u| from_v[u].map(|d| d + 1))
                .min()
            else {
                continue;
            };
            let total = prefix_len + cycle_len;
            if best.as_ref().is_some_and(|(t, _, _)| *t < total) {
                continue;
            }
            let to_v = self.bfs(&[v], false);
            let start = *initial
                .iter()
                .find(|&&i| to_v[i] == Some(prefix_len))
                .expect("v is reachable from an initial state");
            let mut states = self.steer(start, prefix_len, &to_v);
            let first = *self.succ[v]
                .iter()
                .find(|&&y| to_v[y] == Some(cycle_len - 1))
                .expect("v lies on a cycle");
            states.extend(self.steer(first, cycle_len - 1, &to_v));
            let nodes = self.walk_nodes(&states);
            let better = match &best {
                None => true,
                Some((t, b, _)) => total < *t || (total == *t && nodes < *b),
            };
            if better {
                best = Some((total, nodes, v));
            }
        }
        best.map(|(_, walk, v)| LoopWitness {
            walk,
            repeated_arc: self.states[v].clone(),
        })
    }
}

/// The complete paths induced by chaining the rules of `c`.
///
/// Returns [`InducedPaths::LoopDetected`] when a packet injected at some
/// host can revisit an arc state; the witness is a shortest such walk.
pub fn induced_paths(
    c: &Configuration,
    t: &Topology,
    path_budget: usize,
) -> Result<InducedPaths, RulesError> {
    c.check_against(t)?;
    let machine = ArcMachine::new(c, t);
    let initial = machine.initial_states(t);
    let reachable: Vec<bool> = machine
        .bfs(&initial, true)
        .iter()
        .map(Option::is_some)
        .collect();

    if machine.has_cycle(&reachable) {
        let witness = machine
            .shortest_loop(&initial)
            .expect("a reachable cycle yields a witness");
        return Ok(InducedPaths::LoopDetected(witness));
    }

    let terminals: Vec<usize> = (0..machine.states.len())
        .filter(|&i| machine.terminal[i] && reachable[i])
        .collect();
    let useful: Vec<bool> = machine
        .bfs(&terminals, false)
        .iter()
        .map(Option::is_some)
        .collect();

    let mut out = Vec::new();
    for &start in initial.iter().filter(|&&s| useful[s]) {
        // Acyclic below this point, so plain DFS over walks terminates.
        let mut stack = vec![(start, 0usize)];
        while let Some(&mut (state, ref mut next)) = stack.last_mut() {
            if machine.terminal[state] {
                let walk: Vec<usize> = stack.iter().map(|(s, _)| *s).collect();
                out.push(
                    Path::new(machine.walk_nodes(&walk))
                        .expect("walks have distinct consecutive nodes"),
                );
                if out.len() > path_budget {
                    return Err(RulesError::BudgetExceeded {
                        budget: path_budget,
                    });
                }
                stack.pop();
                continue;
            }
            match machine.succ[state][*next..].iter().position(|&y| useful[y]) {
                Some(offset) => {
                    let y = machine.succ[state][*next + offset];
                    *next += offset + 1;
                    stack.push((y, 0));
                }
                None => {
                    stack.pop();
                }
            }
        }
    }
    out.sort();
    Ok(InducedPaths::Finite(out))
}

/// Outcome of injecting a single packet at a host.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Injection {
    pub host: NodeId,
    /// Complete paths along which some copy reached a host without the copy
    /// having revisited an arc state.
    pub delivered: Vec<Path>,
    /// Copies that reached a switch with no matching rule.
    pub dropped: usize,
    pub loop_detected: bool,
    /// The first looping copy found, ending at the revisited arc.
    pub loop_witness: Option<Vec<NodeId>>,
}

/// Follows every copy of a packet injected at `source_host`.
///
/// Each copy remembers the arc states it has visited; a copy that is about
/// to re-enter one is reported as a loop and not followed further.
pub fn simulate_injection(
    c: &Configuration,
    source_host: &NodeId,
    t: &Topology,
) -> Result<Injection, RulesError> {
    simulate_injection_with_budget(c, source_host, t, DEFAULT_WALK_BUDGET)
}

pub fn simulate_injection_with_budget(
    c: &Configuration,
    source_host: &NodeId,
    t: &Topology,
    walk_budget: usize,
) -> Result<Injection, RulesError> {
    if !t.is_host(source_host) {
        return Err(RulesError::NotAHost(source_host.clone()));
    }
    c.check_against(t)?;
    let machine = ArcMachine::new(c, t);
    let switch = t
        .neighbors(source_host)
        .ok()
        .and_then(|ns| ns.iter().next())
        .expect("validated hosts have one neighbor");

    let mut result = Injection {
        host: source_host.clone(),
        delivered: Vec::new(),
        dropped: 0,
        loop_detected: false,
        loop_witness: None,
    };
    let Some(&start) = machine
        .index
        .get(&DirectedArc::new(source_host.clone(), switch.clone()))
    else {
        result.dropped = 1;
        return Ok(result);
    };

    let mut finished = 0usize;
    let mut on_walk = HashSet::from([start]);
    let mut stack = vec![(start, 0usize)];
    let mut delivered = BTreeSet::new();
    while let Some(&mut (state, ref mut next)) = stack.last_mut() {
        if *next == 0 && machine.terminal[state] {
            let walk: Vec<usize> = stack.iter().map(|(s, _)| *s).collect();
            delivered.insert(
                Path::new(machine.walk_nodes(&walk))
                    .expect("walks have distinct consecutive nodes"),
            );
            finished += 1;
            on_walk.remove(&state);
            stack.pop();
        } else if *next == 0 && machine.succ[state].is_empty() {
            result.dropped += 1;
            finished += 1;
            on_walk.remove(&state);
            stack.pop();
        } else if *next < machine.succ[state].len() {
            let y = machine.succ[state][*next];
            *next += 1;
            if on_walk.contains(&y) {
                finished += 1;
                if !result.loop_detected {
                    result.loop_detected = true;
                    let mut walk: Vec<usize> = stack.iter().map(|(s, _)| *s).collect();
                    walk.push(y);
                    result.loop_witness = Some(machine.walk_nodes(&walk));
                }
            } else {
                on_walk.insert(y);
                stack.push((y, 0));
            }
        } else {
            on_walk.remove(&state);
            stack.pop();
        }
        if finished > walk_budget {
            return Err(RulesError::BudgetExceeded {
                budget: walk_budget,
            });
        }
    }
    result.delivered = delivered.into_iter().collect();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::build_topology;

    fn n(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    fn p(s: &str) -> Path {
        s.parse().unwrap()
    }

    fn rule(a: &str, s: &str, b: &str) -> FlowRule {
        FlowRule::new(n(a), n(s), n(b))
    }

    fn topo(hosts: &[&str], switches: &[&str], links: &[(&str, &str)]) -> Topology {
        let ids = |v: &[&str]| v.iter().map(|s| n(s)).collect::<Vec<_>>();
        let links: Vec<_> = links.iter().map(|(a, b)| (n(a), n(b))).collect();
        build_topology(&ids(hosts), &ids(switches), &links).unwrap()
    }

    fn grid() -> Topology {
        topo(
            &["h0", "h1"],
            &["s1", "s2", "s3", "s4", "s5", "s6"],
            &[
                ("h0", "s1"),
                ("s1", "s2"),
                ("s2", "s3"),
                ("s3", "s4"),
                ("s4", "s5"),
                ("s5", "s6"),
                ("s6", "h1"),
                ("s1", "s4"),
                ("s2", "s5"),
                ("s3", "s6"),
            ],
        )
    }

    fn fork() -> Topology {
        topo(
            &["h0", "h1", "h2", "h3"],
            &["s1", "s2"],
            &[
                ("h0", "s1"),
                ("h2", "s1"),
                ("s1", "s2"),
                ("s2", "h1"),
                ("s2", "h3"),
            ],
        )
    }

    fn crossed_request() -> PathSet {
        PathSet::from_paths(
            "t",
            [p("h0·s1·s2·s3·s4·s5·s6·h1"), p("h0·s1·s4·s5·s2·s3·s6·h1")],
        )
    }

    fn fork_request() -> PathSet {
        PathSet::from_paths("t", [p("h0·s1·s2·h1"), p("h2·s1·s2·h3")])
    }

    /// Sliding-window enumeration written independently of `derive_rules`.
    fn window_oracle(set: &PathSet) -> BTreeSet<FlowRule> {
        let mut out = BTreeSet::new();
        for path in set.iter() {
            let nodes = path.nodes();
            for i in 1..nodes.len() - 1 {
                out.insert(FlowRule::new(
                    nodes[i - 1].clone(),
                    nodes[i].clone(),
                    nodes[i + 1].clone(),
                ));
            }
        }
        out
    }

    #[test]
    fn crossed_rules() {
        let c = derive_rules(&crossed_request());
        let expected: BTreeSet<_> = [
            rule("h0", "s1", "s2"),
            rule("s1", "s2", "s3"),
            rule("s2", "s3", "s4"),
            rule("s3", "s4", "s5"),
            rule("s4", "s5", "s6"),
            rule("s5", "s6", "h1"),
            rule("h0", "s1", "s4"),
            rule("s1", "s4", "s5"),
            rule("s4", "s5", "s2"),
            rule("s5", "s2", "s3"),
            rule("s2", "s3", "s6"),
            rule("s3", "s6", "h1"),
        ]
        .into_iter()
        .collect();
        assert_eq!(c.rules(), &expected);
    }

    #[test]
    fn single_window_and_fork_rules() {
        let single = derive_rules(&PathSet::from_paths("t", [p("h0·s1·h1")]));
        assert_eq!(
            single.rules().iter().cloned().collect::<Vec<_>>(),
            vec![rule("h0", "s1", "h1")]
        );
        let fork = derive_rules(&fork_request());
        assert_eq!(fork.rules(), &window_oracle(&fork_request()));
        assert_eq!(fork.len(), 4);
    }

    #[test]
    fn crossed_configuration_loops() {
        let c = derive_rules(&crossed_request());
        let InducedPaths::LoopDetected(w) =
            induced_paths(&c, &grid(), DEFAULT_PATH_BUDGET).unwrap()
        else {
            panic!("expected a loop");
        };
        let walk: Vec<_> = w.walk.iter().map(NodeId::as_str).collect();
        assert_eq!(walk, ["h0", "s1", "s2", "s3", "s4", "s5", "s2", "s3"]);
        assert_eq!(w.repeated_arc, DirectedArc::new(n("s2"), n("s3")));
        assert!(walk.join("·").contains("s2·s3·s4·s5·s2"));
    }

    #[test]
    fn single_rule_induces_single_path() {
        let t = topo(&["h0", "h1"], &["s1"], &[("h0", "s1"), ("s1", "h1")]);
        let c = Configuration::new([rule("h0", "s1", "h1")]);
        assert_eq!(
            induced_paths(&c, &t, 10).unwrap(),
            InducedPaths::Finite(vec![p("h0·s1·h1")])
        );
    }

    #[test]
    fn fork_induces_cross_paths() {
        let c = derive_rules(&fork_request());
        assert_eq!(
            induced_paths(&c, &fork(), 10).unwrap(),
            InducedPaths::Finite(vec![
                p("h0·s1·s2·h1"),
                p("h0·s1·s2·h3"),
                p("h2·s1·s2·h1"),
                p("h2·s1·s2·h3"),
            ])
        );
        assert_eq!(
            induced_paths(&c, &fork(), 3),
            Err(RulesError::BudgetExceeded { budget: 3 })
        );
    }

    #[test]
    fn rules_must_fit_topology() {
        let c = Configuration::new([rule("h0", "s2", "h1")]);
        assert!(matches!(
            induced_paths(&c, &fork(), 10),
            Err(RulesError::InvalidRule { .. })
        ));
        let c = Configuration::new([rule("s1", "h1", "s2")]);
        assert!(matches!(
            induced_paths(&c, &fork(), 10),
            Err(RulesError::InvalidRule {
                reason: "rule location is not a switch",
                ..
            })
        ));
    }

    #[test]
    fn loop_unreachable_from_hosts_is_ignored() {
        // A ring s1→s2→s3→s1 that no host feeds.
        let t = topo(
            &["h0", "h1"],
            &["s1", "s2", "s3", "s4"],
            &[
                ("h0", "s4"),
                ("s4", "h1"),
                ("s1", "s2"),
                ("s2", "s3"),
                ("s3", "s1"),
                ("s1", "s4"),
            ],
        );
        let c = Configuration::new([
            rule("h0", "s4", "h1"),
            rule("s1", "s2", "s3"),
            rule("s2", "s3", "s1"),
            rule("s3", "s1", "s2"),
        ]);
        assert_eq!(
            induced_paths(&c, &t, 10).unwrap(),
            InducedPaths::Finite(vec![p("h0·s4·h1")])
        );
    }

    #[test]
    fn loop_without_exit_is_still_a_loop() {
        let t = topo(
            &["h0", "h1"],
            &["s1", "s2", "s3"],
            &[
                ("h0", "s1"),
                ("s1", "s2"),
                ("s2", "s3"),
                ("s3", "s1"),
                ("s3", "h1"),
            ],
        );
        let c = Configuration::new([
            rule("h0", "s1", "s2"),
            rule("s1", "s2", "s3"),
            rule("s2", "s3", "s1"),
            rule("s3", "s1", "s2"),
        ]);
        let InducedPaths::LoopDetected(w) = induced_paths(&c, &t, 10).unwrap() else {
            panic!("expected a loop");
        };
        assert_eq!(
            w.walk,
            vec![n("h0"), n("s1"), n("s2"), n("s3"), n("s1"), n("s2")]
        );
        let sim = simulate_injection(&c, &n("h0"), &t).unwrap();
        assert!(sim.loop_detected);
        assert!(sim.delivered.is_empty());
    }

    #[test]
    fn u_turn_rule_is_accepted() {
        let t = topo(
            &["h0", "h1"],
            &["s1", "s2"],
            &[("h0", "s1"), ("s1", "s2"), ("s2", "h1")],
        );
        let c = derive_rules(&PathSet::from_paths("t", [p("h0·s1·s2·s1·s2·h1")]));
        assert!(c.contains(&rule("s1", "s2", "s1")));
        assert!(matches!(
            induced_paths(&c, &t, 10).unwrap(),
            InducedPaths::LoopDetected(_)
        ));
        let ok = derive_rules(&PathSet::from_paths("t", [p("h0·s1·s2·s1·h0")]));
        assert_eq!(
            induced_paths(&ok, &t, 10).unwrap(),
            InducedPaths::Finite(vec![p("h0·s1·s2·s1·h0")])
        );
    }

    #[test]
    fn simulate_crossed_from_h0() {
        let c = derive_rules(&crossed_request());
        let sim = simulate_injection(&c, &n("h0"), &grid()).unwrap();
        assert!(sim.loop_detected);
        assert!(sim.delivered.contains(&p("h0·s1·s2·s3·s4·s5·s6·h1")));
        assert!(sim.delivered.contains(&p("h0·s1·s4·s5·s2·s3·s6·h1")));
        assert_eq!(
            sim.loop_witness.unwrap(),
            vec![
                n("h0"),
                n("s1"),
                n("s2"),
                n("s3"),
                n("s4"),
                n("s5"),
                n("s2"),
                n("s3")
            ]
        );
    }

    #[test]
    fn simulate_single_and_fork() {
        let t = topo(&["h0", "h1"], &["s1"], &[("h0", "s1"), ("s1", "h1")]);
        let c = Configuration::new([rule("h0", "s1", "h1")]);
        let sim = simulate_injection(&c, &n("h0"), &t).unwrap();
        assert_eq!(sim.delivered, vec![p("h0·s1·h1")]);
        assert!(!sim.loop_detected);

        let c = derive_rules(&fork_request());
        let sim = simulate_injection(&c, &n("h0"), &fork()).unwrap();
        assert_eq!(sim.delivered, vec![p("h0·s1·s2·h1"), p("h0·s1·s2·h3")]);
        assert!(!sim.loop_detected);
        assert_eq!(sim.dropped, 0);

        // h1 has no rules at all: the packet is dropped at s2.
        let sim = simulate_injection(&c, &n("h1"), &fork()).unwrap();
        assert!(sim.delivered.is_empty());
        assert_eq!(sim.dropped, 1);
        assert!(simulate_injection(&c, &n("s1"), &fork()).is_err());
    }

    #[test]
    fn configuration_json_is_sorted_triples() {
        let c = derive_rules(&fork_request());
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(
            json,
            r#"[["h0","s1","s2"],["h2","s1","s2"],["s1","s2","h1"],["s1","s2","h3"]]"#
        );
        let back: Configuration = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn derived_rules_induce_the_request_on_fork() {
        let set = fork_request();
        let c = derive_rules(&set);
        let InducedPaths::Finite(paths) = induced_paths(&c, &fork(), 100).unwrap() else {
            panic!()
        };
        for r in c.rules() {
            assert!(paths.iter().any(|q| q
                .nodes()
                .windows(3)
                .any(|w| w[0] == r.in_neighbor && w[1] == r.switch && w[2] == r.out_neighbor)));
        }
        for q in set.iter() {
            assert!(paths.contains(q));
        }
        assert_eq!(derive_rules(&PathSet::from_paths("t", paths)), c);
    }
}
