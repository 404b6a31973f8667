//! Graphviz renderings. Output is sorted so identical inputs give identical
//! bytes.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::closure::{ClosureGraph, ClosureVertex};
use crate::topology::{DirectedArc, NodeKind, Topology};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Hosts as ellipses, switches as boxes.
pub fn topology_dot(t: &Topology) -> String {
    let mut out = String::from("graph topology {\n");
    for (node, kind) in t.nodes() {
        let shape = match kind {
            NodeKind::Host => "ellipse",
            NodeKind::Switch => "box",
        };
        writeln!(out, "  {} [shape={shape}];", quote(node.as_str())).unwrap();
    }
    for link in t.links() {
        let (a, b) = link.endpoints();
        writeln!(out, "  {} -- {};", quote(a.as_str()), quote(b.as_str())).unwrap();
    }
    out.push_str("}\n");
    out
}

/// `D(P)` with `source` drawn as a box, `sink` as a double circle and the
/// edges of `cycle` (if any) in red.
pub fn closure_graph_dot(d: &ClosureGraph, cycle: Option<&[DirectedArc]>) -> String {
    let mut highlighted = BTreeSet::new();
    if let Some(cycle) = cycle {
        for (i, a) in cycle.iter().enumerate() {
            let b = &cycle[(i + 1) % cycle.len()];
            highlighted.insert((ClosureVertex::Arc(a.clone()), ClosureVertex::Arc(b.clone())));
        }
    }

    let mut out = String::from("digraph closure {\n");
    for v in d.vertices() {
        let attrs = match v {
            ClosureVertex::Source => " [shape=box]",
            ClosureVertex::Sink => " [shape=doublecircle]",
            ClosureVertex::Arc(_) => "",
        };
        writeln!(out, "  {}{attrs};", quote(&v.to_string())).unwrap();
    }
    for (x, y) in d.edges() {
        let attrs = if highlighted.contains(&(x.clone(), y.clone())) {
            " [color=red, penwidth=2]"
        } else {
            ""
        };
        writeln!(
            out,
            "  {} -> {}{attrs};",
            quote(&x.to_string()),
            quote(&y.to_string())
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
