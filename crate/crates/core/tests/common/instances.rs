//! Random small networks and edge-simple complete path sets.

use std::collections::{BTreeSet, HashSet};

use arcverify::pathmodel::{validate_path_set, Path, PathSet};
use arcverify::topology::{build_topology, NodeId, Topology};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub switches: usize,
    pub hosts: usize,
    pub paths: usize,
    /// Arcs per path.
    pub length: usize,
}

pub const ORACLE_LIMITS: Limits = Limits {
    switches: 10,
    hosts: 6,
    paths: 5,
    length: 10,
};

pub const SUBSET_LIMITS: Limits = Limits {
    switches: 5,
    hosts: 4,
    paths: 8,
    length: 7,
};

#[derive(Debug, Clone)]
pub struct Instance {
    pub topology: Topology,
    pub paths: PathSet,
}

fn id(s: String) -> NodeId {
    NodeId::new(&s).unwrap()
}

fn random_topology(rng: &mut impl Rng, limits: Limits) -> (Topology, Vec<Vec<NodeId>>) {
    let ns = rng.gen_range(1..=limits.switches);
    let nh = rng.gen_range(2..=limits.hosts.max(2));
    let switches: Vec<NodeId> = (0..ns).map(|i| id(format!("s{i}"))).collect();
    let hosts: Vec<NodeId> = (0..nh).map(|i| id(format!("h{i}"))).collect();
    let mut links = BTreeSet::new();
    for i in 1..ns {
        let j = rng.gen_range(0..i);
        links.insert((j, i));
    }
    let density = rng.gen_range(0.0..0.6);
    for i in 0..ns {
        for j in i + 1..ns {
            if rng.gen_bool(density) {
                links.insert((i, j));
            }
        }
    }
    let mut pairs: Vec<(NodeId, NodeId)> = links
        .into_iter()
        .map(|(i, j)| (switches[i].clone(), switches[j].clone()))
        .collect();
    let mut attached = vec![Vec::new(); ns];
    for h in &hosts {
        let s = rng.gen_range(0..ns);
        attached[s].push(h.clone());
        pairs.push((h.clone(), switches[s].clone()));
    }
    let t = build_topology(&hosts, &switches, &pairs).expect("generated topologies are valid");
    (t, attached)
}

/// A random edge-simple complete path, or `None` if the walk got stuck.
fn random_path(
    rng: &mut impl Rng,
    t: &Topology,
    attached: &[Vec<NodeId>],
    max_len: usize,
) -> Option<Path> {
    let hosts: Vec<&NodeId> = t.hosts().collect();
    let start = (*hosts.choose(rng)?).clone();
    let first = t.neighbors(&start).ok()?.iter().next()?.clone();
    let mut nodes = vec![start, first];
    let mut used = HashSet::new();
    loop {
        let cur = nodes.last().unwrap().clone();
        let index: usize = cur.as_str()[1..].parse().unwrap();
        let exits = &attached[index];
        let arcs = nodes.len() - 1;
        let onward: Vec<NodeId> = t
            .neighbors(&cur)
            .unwrap()
            .iter()
            .filter(|n| t.is_switch(n) && !used.contains(&(cur.clone(), (*n).clone())))
            .cloned()
            .collect();
        let must_exit = arcs + 1 >= max_len || onward.is_empty();
        if !exits.is_empty() && (must_exit || rng.gen_bool(0.3)) {
            nodes.push(exits.choose(rng).unwrap().clone());
            return Path::new(nodes).ok();
        }
        if must_exit {
            return None;
        }
        let next = onward.choose(rng).unwrap().clone();
        used.insert((cur, next.clone()));
        nodes.push(next);
    }
}

pub fn random_instance(rng: &mut impl Rng, limits: Limits) -> Instance {
    loop {
        let (topology, attached) = random_topology(rng, limits);
        let k = rng.gen_range(1..=limits.paths);
        let mut paths = PathSet::new("random");
        for _ in 0..k * 20 {
            if paths.len() == k {
                break;
            }
            if let Some(p) = random_path(rng, &topology, &attached, limits.length) {
                if !paths.contains(&p) {
                    paths.insert(p);
                }
            }
        }
        if paths.is_empty() {
            continue;
        }
        debug_assert!(validate_path_set(&paths, &topology, true).is_valid());
        return Instance { topology, paths };
    }
}

pub fn instance_from_seed(seed: u64, limits: Limits) -> Instance {
    random_instance(&mut ChaCha8Rng::seed_from_u64(seed), limits)
}

/// Arc closedness straight from the pairwise definition.
pub fn pairwise_closed(paths: &[&Path]) -> bool {
    let members: HashSet<&[NodeId]> = paths.iter().map(|p| p.nodes()).collect();
    for a in paths {
        for b in paths {
            let (x, y) = (a.nodes(), b.nodes());
            for u in 0..x.len() - 1 {
                for v in 0..y.len() - 1 {
                    if x[u] != y[v] || x[u + 1] != y[v + 1] {
                        continue;
                    }
                    let c1 = [&x[..=u], &y[v + 1..]].concat();
                    let c2 = [&y[..=v], &x[u + 1..]].concat();
                    if !members.contains(c1.as_slice()) || !members.contains(c2.as_slice()) {
                        return false;
                    }
                }
            }
        }
    }
    true
}
