//! Graphviz exports.

use std::fmt::Write as _;

use crate::complex::Complex2;
use crate::cutpoint::{CutpointTree, NodeKind, ReducedCutpointTree};
use crate::gog::GraphOfGroups;
use crate::stability::Bw;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn graph_of_groups(g: &GraphOfGroups) -> String {
    let mut out = format!("graph {} {{\n", quote(&g.name));
    for (i, v) in g.vertices.iter().enumerate() {
        let _ = writeln!(out, "  v{i} [label={}];", quote(&format!("{}: {}", v.name, v.label)));
    }
    for e in &g.edges {
        let _ = writeln!(out, "  v{} -- v{} [label={}];", e.ends[0], e.ends[1], quote(&e.label));
    }
    out.push_str("}\n");
    out
}

pub fn cutpoint_tree(x: &Complex2, t: &CutpointTree) -> String {
    let mut out = format!("graph {} {{\n", quote(&format!("B({})", x.name)));
    for (i, n) in t.nodes.iter().enumerate() {
        let (label, shape) = match n.kind {
            NodeKind::Piece(b) => (format!("block {b}: {}", n.stab), "box"),
            NodeKind::Cut(v) => (format!("{}: {}", x.vertices()[v].name, n.stab), "ellipse"),
        };
        let _ = writeln!(out, "  n{i} [label={}, shape={shape}];", quote(&label));
    }
    for e in &t.edges {
        let _ = writeln!(out, "  n{} -- n{} [label={}];", e.piece, e.cut, quote(&e.stab));
    }
    out.push_str("}\n");
    out
}

pub fn reduced_cutpoint_tree(x: &Complex2, t: &ReducedCutpointTree) -> String {
    let mut out = format!("graph {} {{\n", quote(&format!("B'({})", x.name)));
    for (i, n) in t.nodes.iter().enumerate() {
        let shape = if n.slender { "ellipse" } else { "box" };
        let label = format!("{} faces: {}", n.faces.len(), n.stab);
        let _ = writeln!(out, "  n{i} [label={}, shape={shape}];", quote(&label));
    }
    for (a, b, s) in &t.edges {
        let _ = writeln!(out, "  n{a} -- n{b} [label={}];", quote(s));
    }
    out.push_str("}\n");
    out
}

/// B_w with class nodes as boxes and shared edges as ellipses.
pub fn bw(x: &Complex2, b: &Bw) -> String {
    let mut out = format!("graph {} {{\n", quote(&format!("B_w({})", x.name)));
    for (i, c) in b.classes.iter().enumerate() {
        let _ = writeln!(out, "  n{i} [label={}, shape=box];", quote(&format!("class {c}")));
    }
    for (j, &e) in b.shared_edges.iter().enumerate() {
        let _ = writeln!(out, "  n{} [label={}];", b.classes.len() + j, quote(&x.edges()[e].name));
    }
    for (a, c, s) in &b.incidences {
        let _ = writeln!(out, "  n{a} -- n{c} [label={}];", quote(s));
    }
    out.push_str("}\n");
    out
}
