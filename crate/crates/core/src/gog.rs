//! Quotient graphs of groups.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::group::GroupRegistry;
use crate::tree::TreeHat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VertexKind {
    Rigid,
    Flexible,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GVertex {
    pub name: String,
    pub label: String,
    pub kind: VertexKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GEdge {
    pub name: String,
    pub ends: [usize; 2],
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GraphOfGroups {
    pub name: String,
    pub vertices: Vec<GVertex>,
    pub edges: Vec<GEdge>,
    /// Declared to be a JSJ decomposition; only consulted by the depth bound.
    pub jsj: bool,
}

impl GraphOfGroups {
    pub fn new(name: impl Into<String>) -> Self {
        GraphOfGroups { name: name.into(), ..Default::default() }
    }

    pub fn add_vertex(&mut self, name: impl Into<String>, label: impl Into<String>, kind: VertexKind) -> usize {
        self.vertices.push(GVertex { name: name.into(), label: label.into(), kind });
        self.vertices.len() - 1
    }

    pub fn add_edge(&mut self, name: impl Into<String>, a: usize, b: usize, label: impl Into<String>) -> Result<usize> {
        let name = name.into();
        if a >= self.vertices.len() || b >= self.vertices.len() {
            return Err(Error::MalformedTree(format!("graph-of-groups edge `{name}` has a missing endpoint")));
        }
        self.edges.push(GEdge { name, ends: [a, b], label: label.into() });
        Ok(self.edges.len() - 1)
    }

    /// Quotient of a tree by its orbit labels; each orbit takes the
    /// stabilizer of its first representative.
    pub fn quotient(t: &TreeHat) -> Self {
        let mut g = GraphOfGroups::new(t.name.clone());
        let mut orbit_index: BTreeMap<&str, usize> = BTreeMap::new();
        for v in t.vertices() {
            if !orbit_index.contains_key(v.orbit.as_str()) {
                orbit_index.insert(&v.orbit, g.add_vertex(v.orbit.clone(), v.stab.clone(), VertexKind::Unknown));
            }
        }
        let mut seen = BTreeSet::new();
        for e in t.edges() {
            if seen.insert(e.orbit.as_str()) {
                let [a, b] = e.ends.map(|v| orbit_index[t.vertices()[v].orbit.as_str()]);
                g.edges.push(GEdge { name: e.orbit.clone(), ends: [a, b], label: e.stab.clone() });
            }
        }
        g
    }

    pub fn vertex_named(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.name == name)
    }

    pub fn valence(&self, v: usize) -> usize {
        self.edges.iter().map(|e| e.ends.iter().filter(|&&x| x == v).count()).sum()
    }

    pub fn validate(&self, groups: &GroupRegistry) -> Result<()> {
        for v in &self.vertices {
            groups.get(&v.label)?;
        }
        for e in &self.edges {
            for &x in &e.ends {
                if !groups.is_subgroup(&e.label, &self.vertices[x].label) {
                    return Err(Error::MalformedTree(format!(
                        "edge group of `{}` is not declared ≤ the group of `{}`",
                        e.name, self.vertices[x].name
                    )));
                }
            }
        }
        Ok(())
    }

    /// A single vertex with a single loop, or every valence-2 vertex group
    /// properly contains its incident edge groups.
    pub fn check_reduced(&self, groups: &GroupRegistry) -> bool {
        if self.vertices.len() == 1 && self.edges.len() == 1 {
            return true;
        }
        (0..self.vertices.len()).filter(|&v| self.valence(v) == 2).all(|v| {
            self.edges
                .iter()
                .filter(|e| e.ends.contains(&v))
                .all(|e| groups.is_proper_subgroup(&e.label, &self.vertices[v].label))
        })
    }
}
