//! Finite simplicial trees with ideal boundary points.
//!
//! Each ideal point sits beyond a leaf of the finite tree, reached along a
//! designated ray that ends at that leaf. The step from the leaf out to the
//! ideal point counts as one more tree edge, so every path into the
//! boundary crosses at least one edge midpoint.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::group::{GroupRef, GroupRegistry, TRIVIAL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Point {
    Vertex(usize),
    Ideal(usize),
}

impl Point {
    pub fn is_ideal(self) -> bool {
        matches!(self, Point::Ideal(_))
    }
}

/// A tree edge: a real edge of T, or the final step from a ray's leaf out
/// to its ideal point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TreeEdge {
    Real(usize),
    ToIdeal(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TVertex {
    pub name: String,
    pub stab: String,
    /// Vertex orbit, i.e. the vertex of the quotient graph of groups.
    pub orbit: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TEdge {
    pub name: String,
    pub ends: [usize; 2],
    pub stab: String,
    pub orbit: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealPoint {
    pub name: String,
    pub ray: Vec<usize>,
}

impl IdealPoint {
    pub fn leaf(&self) -> usize {
        *self.ray.last().expect("validated ray is nonempty")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionDescriptor {
    Elliptic { fixed: BTreeSet<usize> },
    Hyperbolic { ends: [usize; 2], translation_length: u32, swaps_ends: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionClass {
    Elliptic,
    Linear,
    Dihedral,
    Parabolic,
    Hyperbolic,
}

impl std::fmt::Display for ActionClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ActionClass::Elliptic => "elliptic",
            ActionClass::Linear => "linear",
            ActionClass::Dihedral => "dihedral",
            ActionClass::Parabolic => "parabolic",
            ActionClass::Hyperbolic => "hyperbolic",
        };
        f.write_str(s)
    }
}

/// Classification with the geometric witness the resolution needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub class: ActionClass,
    /// Common fixed vertices, for elliptic actions.
    pub fixed: BTreeSet<usize>,
    /// The invariant line, for linear and dihedral actions.
    pub axis: Option<[usize; 2]>,
    /// The fixed boundary point, for parabolic actions.
    pub fixed_end: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Subtree {
    pub vertices: BTreeSet<usize>,
    pub ideals: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TreeHat {
    pub name: String,
    vertices: Vec<TVertex>,
    edges: Vec<TEdge>,
    ideals: Vec<IdealPoint>,
    adj: Vec<Vec<(usize, usize)>>,
    /// Declared actions of groups on this tree, as generator descriptors.
    pub actions: BTreeMap<String, Vec<ActionDescriptor>>,
    /// Explicit images for complex vertices, keyed by vertex name.
    pub images: BTreeMap<String, Point>,
    parent: Vec<Option<(usize, usize)>>,
    depth: Vec<usize>,
}

impl TreeHat {
    pub fn new(name: impl Into<String>) -> Self {
        TreeHat { name: name.into(), ..Default::default() }
    }

    pub fn add_vertex(&mut self, name: impl Into<String>) -> Result<usize> {
        let name = name.into();
        if self.vertex_named(&name).is_some() {
            return Err(Error::MalformedTree(format!("duplicate vertex `{name}`")));
        }
        self.vertices.push(TVertex { orbit: name.clone(), name, stab: TRIVIAL.into() });
        self.adj.push(Vec::new());
        self.reindex();
        Ok(self.vertices.len() - 1)
    }

    pub fn add_edge(&mut self, name: impl Into<String>, a: usize, b: usize) -> Result<usize> {
        let name = name.into();
        if a >= self.vertices.len() || b >= self.vertices.len() || a == b {
            return Err(Error::MalformedTree(format!("edge `{name}` has bad endpoints")));
        }
        let idx = self.edges.len();
        self.edges.push(TEdge { orbit: name.clone(), name, ends: [a, b], stab: TRIVIAL.into() });
        self.adj[a].push((b, idx));
        self.adj[b].push((a, idx));
        self.reindex();
        if self.has_cycle() {
            return Err(Error::MalformedTree(format!("edge `{}` closes a cycle", self.edges[idx].name)));
        }
        Ok(idx)
    }

    /// Adds an ideal point reached along `ray`, which must be a simple path
    /// ending at a leaf.
    pub fn add_ideal(&mut self, name: impl Into<String>, ray: Vec<usize>) -> Result<usize> {
        let name = name.into();
        if ray.is_empty() {
            return Err(Error::MalformedTree(format!("ideal point `{name}` has no ray")));
        }
        let distinct: BTreeSet<_> = ray.iter().collect();
        if distinct.len() != ray.len() || ray.iter().any(|&v| v >= self.vertices.len()) {
            return Err(Error::MalformedTree(format!("ray of `{name}` is not a simple path")));
        }
        for w in ray.windows(2) {
            if self.edge_between(w[0], w[1]).is_none() {
                return Err(Error::MalformedTree(format!("ray of `{name}` is not a path")));
            }
        }
        if self.adj[*ray.last().unwrap()].len() > 1 {
            return Err(Error::MalformedTree(format!("ray of `{name}` does not end at a leaf")));
        }
        self.ideals.push(IdealPoint { name, ray });
        Ok(self.ideals.len() - 1)
    }

    pub fn set_vertex_stab(&mut self, v: usize, stab: impl Into<String>) {
        self.vertices[v].stab = stab.into();
    }

    pub fn set_vertex_orbit(&mut self, v: usize, orbit: impl Into<String>) {
        self.vertices[v].orbit = orbit.into();
    }

    pub fn set_edge_stab(&mut self, e: usize, stab: impl Into<String>) {
        self.edges[e].stab = stab.into();
    }

    pub fn set_edge_orbit(&mut self, e: usize, orbit: impl Into<String>) {
        self.edges[e].orbit = orbit.into();
    }

    fn has_cycle(&self) -> bool {
        let mut d = crate::dsu::DisjointSets::new(self.vertices.len());
        self.edges.iter().any(|e| !d.union(e.ends[0], e.ends[1]))
    }

    fn reindex(&mut self) {
        let n = self.vertices.len();
        self.parent = vec![None; n];
        self.depth = vec![usize::MAX; n];
        for root in 0..n {
            if self.depth[root] != usize::MAX {
                continue;
            }
            self.depth[root] = 0;
            let mut q = VecDeque::from([root]);
            while let Some(v) = q.pop_front() {
                for &(w, e) in &self.adj[v] {
                    if self.depth[w] == usize::MAX {
                        self.depth[w] = self.depth[v] + 1;
                        self.parent[w] = Some((v, e));
                        q.push_back(w);
                    }
                }
            }
        }
    }

    /// Checks connectivity and the declared stabilizer order.
    pub fn validate(&self, groups: &GroupRegistry) -> Result<()> {
        if self.vertices.is_empty() {
            return Err(Error::MalformedTree(format!("tree `{}` is empty", self.name)));
        }
        if self.edges.len() + 1 != self.vertices.len() {
            return Err(Error::MalformedTree(format!("tree `{}` is not connected", self.name)));
        }
        for v in &self.vertices {
            groups.get(&v.stab)?;
        }
        for e in &self.edges {
            for v in e.ends {
                if !groups.is_subgroup(&e.stab, &self.vertices[v].stab) {
                    return Err(Error::MalformedTree(format!(
                        "stabilizer of edge `{}` is not declared ≤ stabilizer of `{}`",
                        e.name, self.vertices[v].name
                    )));
                }
            }
        }
        for (g, descs) in &self.actions {
            groups.get(g)?;
            for d in descs {
                self.validate_descriptor(d)?;
            }
        }
        Ok(())
    }

    pub fn validate_descriptor(&self, d: &ActionDescriptor) -> Result<()> {
        match d {
            ActionDescriptor::Elliptic { fixed } => {
                if fixed.is_empty() || fixed.iter().any(|&v| v >= self.vertices.len()) {
                    return Err(Error::MalformedTree("elliptic descriptor with empty or unknown fixed set".into()));
                }
                let hull = self.hull(fixed.iter().copied());
                if hull != *fixed {
                    return Err(Error::MalformedTree("elliptic fixed set is not connected".into()));
                }
            }
            ActionDescriptor::Hyperbolic { ends, translation_length, .. } => {
                if ends[0] == ends[1] || ends.iter().any(|&p| p >= self.ideals.len()) {
                    return Err(Error::MalformedTree("hyperbolic axis needs two distinct ideal points".into()));
                }
                if *translation_length == 0 {
                    return Err(Error::MalformedTree("translation length must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[TVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[TEdge] {
        &self.edges
    }

    pub fn ideals(&self) -> &[IdealPoint] {
        &self.ideals
    }

    pub fn vertex_named(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.name == name)
    }

    pub fn ideal_named(&self, name: &str) -> Option<usize> {
        self.ideals.iter().position(|p| p.name == name)
    }

    pub fn point_named(&self, name: &str) -> Option<Point> {
        self.vertex_named(name)
            .map(Point::Vertex)
            .or_else(|| self.ideal_named(name).map(Point::Ideal))
    }

    pub fn point_name(&self, p: Point) -> &str {
        match p {
            Point::Vertex(v) => &self.vertices[v].name,
            Point::Ideal(i) => &self.ideals[i].name,
        }
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adj.get(a)?.iter().find(|(w, _)| *w == b).map(|&(_, e)| e)
    }

    pub fn tree_edge_name(&self, e: TreeEdge) -> String {
        match e {
            TreeEdge::Real(i) => self.edges[i].name.clone(),
            TreeEdge::ToIdeal(p) => format!("{}>{}", self.vertices[self.ideals[p].leaf()].name, self.ideals[p].name),
        }
    }

    /// All tree edges, virtual ones included.
    pub fn all_tree_edges(&self) -> Vec<TreeEdge> {
        (0..self.edges.len())
            .map(TreeEdge::Real)
            .chain((0..self.ideals.len()).map(TreeEdge::ToIdeal))
            .collect()
    }

    /// Vertex path between two vertices of T.
    pub fn geodesic(&self, a: usize, b: usize) -> Vec<usize> {
        let (mut x, mut y) = (a, b);
        let mut left = vec![x];
        let mut right = vec![y];
        while self.depth[x] > self.depth[y] {
            x = self.parent[x].unwrap().0;
            left.push(x);
        }
        while self.depth[y] > self.depth[x] {
            y = self.parent[y].unwrap().0;
            right.push(y);
        }
        while x != y {
            x = self.parent[x].unwrap().0;
            y = self.parent[y].unwrap().0;
            left.push(x);
            right.push(y);
        }
        right.pop();
        left.extend(right.into_iter().rev());
        left
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        self.geodesic(a, b).len() - 1
    }

    /// The reduced path in T̂ between two points. Equal endpoints give the
    /// constant path (a single point).
    pub fn reduced_path(&self, a: Point, b: Point) -> Result<Vec<Point>> {
        if a == b {
            return Ok(vec![a]);
        }
        let anchor = |p: Point| -> Result<usize> {
            match p {
                Point::Vertex(v) if v < self.vertices.len() => Ok(v),
                Point::Ideal(i) => self
                    .ideals
                    .get(i)
                    .and_then(|ip| ip.ray.last().copied())
                    .ok_or_else(|| Error::MalformedTree(format!("ideal point {i} has no ray"))),
                Point::Vertex(v) => Err(Error::MalformedTree(format!("no vertex {v}"))),
            }
        };
        let mut out = Vec::new();
        if a.is_ideal() {
            out.push(a);
        }
        out.extend(self.geodesic(anchor(a)?, anchor(b)?).into_iter().map(Point::Vertex));
        if b.is_ideal() {
            out.push(b);
        }
        Ok(out)
    }

    /// Tree edges crossed by a point path, in order.
    pub fn path_edges(&self, path: &[Point]) -> Vec<TreeEdge> {
        path.windows(2)
            .map(|w| match (w[0], w[1]) {
                (Point::Vertex(x), Point::Vertex(y)) => TreeEdge::Real(self.edge_between(x, y).expect("path steps along edges")),
                (Point::Ideal(p), _) | (_, Point::Ideal(p)) => TreeEdge::ToIdeal(p),
            })
            .collect()
    }

    /// Smallest subtree containing the given vertices.
    pub fn hull(&self, vs: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let vs: Vec<usize> = vs.into_iter().collect();
        let mut out = BTreeSet::new();
        if let Some(&first) = vs.first() {
            out.insert(first);
            for &v in &vs[1..] {
                out.extend(self.geodesic(first, v));
            }
        }
        out
    }

    /// Finite core of the axis between two ideal points.
    pub fn axis_core(&self, ends: [usize; 2]) -> Vec<usize> {
        self.geodesic(self.ideals[ends[0]].leaf(), self.ideals[ends[1]].leaf())
    }

    /// Action of a group: its declared descriptors; else the common fixed
    /// set of a supergroup declared to act elliptically; else the vertices whose stabilizer is
    /// declared to contain it. `None` when nothing is known.
    pub fn action_of(&self, group: &str, groups: &GroupRegistry) -> Option<Vec<ActionDescriptor>> {
        if group == TRIVIAL {
            return Some(vec![ActionDescriptor::Elliptic { fixed: (0..self.vertices.len()).collect() }]);
        }
        if let Some(d) = self.actions.get(group) {
            return Some(d.clone());
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([group.to_string()]);
        while let Some(g) = queue.pop_front() {
            if !seen.insert(g.clone()) {
                continue;
            }
            if g != group {
                if let Some(fixed) = self.actions.get(&g).and_then(|d| common_fixed(d)) {
                    return Some(vec![ActionDescriptor::Elliptic { fixed }]);
                }
            }
            if let Ok(gr) = groups.get(&g) {
                queue.extend(gr.supergroups.iter().cloned());
            }
        }
        let inside: BTreeSet<usize> =
            (0..self.vertices.len()).filter(|&v| groups.is_subgroup(group, &self.vertices[v].stab)).collect();
        let &start = inside.first()?;
        // the component of the smallest such vertex
        let mut comp = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adj[v] {
                if inside.contains(&w) && comp.insert(w) {
                    stack.push(w);
                }
            }
        }
        Some(vec![ActionDescriptor::Elliptic { fixed: comp }])
    }

    /// Classifies the action of the group generated by the descriptors.
    pub fn classify(&self, descriptors: &[ActionDescriptor]) -> Result<Classification> {
        if descriptors.is_empty() {
            return Err(Error::Classification("empty descriptor list".into()));
        }
        let mut axes: Vec<([usize; 2], bool)> = Vec::new();
        let mut fixed: Option<BTreeSet<usize>> = None;
        for d in descriptors {
            self.validate_descriptor(d)?;
            match d {
                ActionDescriptor::Elliptic { fixed: f } => {
                    fixed = Some(match fixed {
                        None => f.clone(),
                        Some(acc) => acc.intersection(f).copied().collect(),
                    })
                }
                ActionDescriptor::Hyperbolic { ends, swaps_ends, .. } => {
                    let mut e = *ends;
                    e.sort_unstable();
                    axes.push((e, *swaps_ends));
                }
            }
        }
        if axes.is_empty() {
            let fixed = fixed.unwrap_or_default();
            if fixed.is_empty() {
                return Err(Error::Classification("elliptic generators have no common fixed vertex".into()));
            }
            return Ok(Classification { class: ActionClass::Elliptic, fixed, axis: None, fixed_end: None });
        }
        // two lines in a tree meet compactly iff they share no end
        for (i, (a, _)) in axes.iter().enumerate() {
            for (b, _) in &axes[i + 1..] {
                if !a.iter().any(|p| b.contains(p)) {
                    return Ok(Classification {
                        class: ActionClass::Hyperbolic,
                        fixed: BTreeSet::new(),
                        axis: None,
                        fixed_end: None,
                    });
                }
            }
        }
        let first = axes[0].0;
        if axes.iter().all(|(a, _)| *a == first) {
            let swaps = axes.iter().any(|(_, s)| *s);
            let class = if swaps { ActionClass::Dihedral } else { ActionClass::Linear };
            return Ok(Classification { class, fixed: BTreeSet::new(), axis: Some(first), fixed_end: None });
        }
        let common: Vec<usize> = first.iter().copied().filter(|p| axes.iter().all(|(a, _)| a.contains(p))).collect();
        match common[..] {
            [end] => Ok(Classification {
                class: ActionClass::Parabolic,
                fixed: BTreeSet::new(),
                axis: None,
                fixed_end: Some(end),
            }),
            // pairwise-adjacent axes without a common end fix no boundary point
            _ => Ok(Classification { class: ActionClass::Hyperbolic, fixed: BTreeSet::new(), axis: None, fixed_end: None }),
        }
    }

    /// Classification of a labelled group, enforcing that slender groups
    /// act only elliptically, linearly or dihedrally.
    pub fn classify_group(&self, group: &GroupRef, groups: &GroupRegistry) -> Result<Classification> {
        let descriptors = self.action_of(&group.id, groups).ok_or_else(|| {
            Error::Classification(format!("action of `{}` on tree `{}` is not declared", group.id, self.name))
        })?;
        let c = self.classify(&descriptors)?;
        if group.is_slender && matches!(c.class, ActionClass::Parabolic | ActionClass::Hyperbolic) {
            return Err(Error::SlenderConsistency { group: group.id.clone(), class: c.class.to_string() });
        }
        Ok(c)
    }

    /// The minimal invariant subtree of a non-elliptic action: the geodesic
    /// hull of the axes of the hyperbolic generators.
    pub fn minimal_invariant_subtree(&self, descriptors: &[ActionDescriptor]) -> Result<Subtree> {
        let mut anchors = Vec::new();
        let mut ideals = BTreeSet::new();
        for d in descriptors {
            if let ActionDescriptor::Hyperbolic { ends, .. } = d {
                for &p in ends {
                    ideals.insert(p);
                    anchors.push(self.ideals[p].leaf());
                }
            }
        }
        if anchors.is_empty() {
            return Err(Error::precondition(
                "minimal_invariant_subtree",
                "no hyperbolic generator; the action is elliptic",
            ));
        }
        Ok(Subtree { vertices: self.hull(anchors), ideals })
    }
}

/// Vertices fixed by every descriptor, when all are elliptic and agree on
/// at least one vertex.
fn common_fixed(ds: &[ActionDescriptor]) -> Option<BTreeSet<usize>> {
    let mut acc: Option<BTreeSet<usize>> = None;
    for d in ds {
        let ActionDescriptor::Elliptic { fixed } = d else { return None };
        acc = Some(match acc {
            None => fixed.clone(),
            Some(a) => a.intersection(fixed).copied().collect(),
        });
    }
    acc.filter(|a| !a.is_empty())
}
