//! Finite 2-dimensional cell complexes with stabilizer-labelled cells.
//!
//! Two-cells are triangles or bigons, each given by its boundary edges.
//! Group actions are represented at quotient level: every cell carries the
//! label of its stabilizer and an orbit tag, and cells sharing a tag are
//! translates of one another. Vertices in `marked` stand for infinite
//! directions of the (universal-cover-like) complex the finite one models.

use std::collections::{BTreeMap, BTreeSet};

use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::group::{GroupRegistry, TRIVIAL};
use crate::z2::{self, BitRow};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellLabel {
    pub stab: String,
    pub orbit: String,
}

impl CellLabel {
    fn fresh(name: &str) -> Self {
        CellLabel { stab: TRIVIAL.to_string(), orbit: name.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub name: String,
    pub label: CellLabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub name: String,
    pub ends: [usize; 2],
    pub label: CellLabel,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if self.ends[0] == v {
            self.ends[1]
        } else {
            self.ends[0]
        }
    }

    pub fn joins(&self, a: usize, b: usize) -> bool {
        self.ends == [a, b] || self.ends == [b, a]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Triangle([usize; 3]),
    Bigon([usize; 2]),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub name: String,
    pub kind: FaceKind,
    pub label: CellLabel,
}

impl Face {
    pub fn edges(&self) -> &[usize] {
        match &self.kind {
            FaceKind::Triangle(e) => e,
            FaceKind::Bigon(e) => e,
        }
    }

    pub fn is_triangle(&self) -> bool {
        matches!(self.kind, FaceKind::Triangle(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cell {
    Vertex(usize),
    Edge(usize),
    Face(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Complex2 {
    pub name: String,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    faces: Vec<Face>,
    marked: BTreeSet<usize>,
    names: BTreeMap<String, Cell>,
}

/// Cell correspondence produced by [`Complex2::reduce_with_map`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionMap {
    pub edges: Vec<usize>,
    /// Image triangle of each face; bigons and degenerate faces map to `None`.
    pub faces: Vec<Option<usize>>,
}

/// Result of the Z₂ first cohomology computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct H1Report {
    pub dim: usize,
    pub components: usize,
}

impl H1Report {
    /// `false` means the dimension is a sum over several components.
    pub fn connected(&self) -> bool {
        self.components <= 1
    }
}

impl Complex2 {
    pub fn new(name: impl Into<String>) -> Self {
        Complex2 { name: name.into(), ..Default::default() }
    }

    fn claim(&mut self, name: &str, cell: Cell) -> Result<()> {
        if self.names.contains_key(name) {
            return Err(Error::MalformedComplex(format!("duplicate cell name `{name}`")));
        }
        self.names.insert(name.to_string(), cell);
        Ok(())
    }

    pub fn add_vertex(&mut self, name: impl Into<String>) -> Result<usize> {
        let name = name.into();
        let idx = self.vertices.len();
        self.claim(&name, Cell::Vertex(idx))?;
        self.vertices.push(Vertex { label: CellLabel::fresh(&name), name });
        Ok(idx)
    }

    pub fn add_edge(&mut self, name: impl Into<String>, a: usize, b: usize) -> Result<usize> {
        let name = name.into();
        if a >= self.vertices.len() || b >= self.vertices.len() {
            return Err(Error::MalformedComplex(format!("edge `{name}` references a missing vertex")));
        }
        if a == b {
            return Err(Error::MalformedComplex(format!("edge `{name}` is a loop")));
        }
        let idx = self.edges.len();
        self.claim(&name, Cell::Edge(idx))?;
        self.edges.push(Edge { label: CellLabel::fresh(&name), name, ends: [a, b] });
        Ok(idx)
    }

    /// Adds a face bounded by the given edges (three for a triangle, two for
    /// a bigon). The boundary must close up.
    pub fn add_face(&mut self, name: impl Into<String>, edges: &[usize]) -> Result<usize> {
        let name = name.into();
        for &e in edges {
            if e >= self.edges.len() {
                return Err(Error::MalformedComplex(format!("face `{name}` references a missing edge")));
            }
        }
        let kind = match edges {
            [a, b, c] => FaceKind::Triangle([*a, *b, *c]),
            [a, b] => FaceKind::Bigon([*a, *b]),
            _ => {
                return Err(Error::MalformedComplex(format!(
                    "face `{name}` has {} edges; only triangles and bigons are supported",
                    edges.len()
                )))
            }
        };
        if !self.closes_up(edges) {
            return Err(Error::MalformedComplex(format!("boundary of face `{name}` does not close up")));
        }
        let idx = self.faces.len();
        self.claim(&name, Cell::Face(idx))?;
        self.faces.push(Face { label: CellLabel::fresh(&name), name, kind });
        Ok(idx)
    }

    fn closes_up(&self, edges: &[usize]) -> bool {
        match edges {
            [a, b] => {
                let (ea, eb) = (&self.edges[*a], &self.edges[*b]);
                a != b && ea.joins(eb.ends[0], eb.ends[1])
            }
            [a, b, c] => {
                if a == b || b == c || a == c {
                    return false;
                }
                // the three edges must form a cycle through three vertices
                let mut count: BTreeMap<usize, usize> = BTreeMap::new();
                for e in [a, b, c] {
                    for v in self.edges[*e].ends {
                        *count.entry(v).or_default() += 1;
                    }
                }
                count.len() == 3 && count.values().all(|&c| c == 2)
            }
            _ => false,
        }
    }

    /// Adds the triangle on three vertices, reusing the first existing edge
    /// between each pair and creating missing ones.
    pub fn add_triangle(&mut self, name: impl Into<String>, u: usize, v: usize, w: usize) -> Result<usize> {
        let name = name.into();
        let mut es = [0; 3];
        for (k, (a, b)) in [(u, v), (v, w), (w, u)].into_iter().enumerate() {
            es[k] = match self.edge_between(a, b) {
                Some(e) => e,
                None => {
                    if a >= self.vertices.len() || b >= self.vertices.len() {
                        return Err(Error::MalformedComplex(format!(
                            "triangle `{name}` references a missing vertex"
                        )));
                    }
                    let en = self.fresh_edge_name(a, b);
                    self.add_edge(en, a, b)?
                }
            };
        }
        self.add_face(name, &es)
    }

    fn fresh_edge_name(&self, a: usize, b: usize) -> String {
        let (x, y) = if self.vertices[a].name <= self.vertices[b].name { (a, b) } else { (b, a) };
        let base = format!("{}~{}", self.vertices[x].name, self.vertices[y].name);
        let mut name = base.clone();
        let mut k = 1;
        while self.names.contains_key(&name) {
            k += 1;
            name = format!("{base}'{k}");
        }
        name
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.iter().position(|e| e.joins(a, b))
    }

    pub fn mark(&mut self, v: usize) {
        self.marked.insert(v);
    }

    pub fn set_label(&mut self, cell: Cell, label: CellLabel) {
        match cell {
            Cell::Vertex(i) => self.vertices[i].label = label,
            Cell::Edge(i) => self.edges[i].label = label,
            Cell::Face(i) => self.faces[i].label = label,
        }
    }

    pub fn set_stab(&mut self, cell: Cell, stab: impl Into<String>) {
        let stab = stab.into();
        match cell {
            Cell::Vertex(i) => self.vertices[i].label.stab = stab,
            Cell::Edge(i) => self.edges[i].label.stab = stab,
            Cell::Face(i) => self.faces[i].label.stab = stab,
        }
    }

    pub fn set_orbit(&mut self, cell: Cell, orbit: impl Into<String>) {
        let orbit = orbit.into();
        match cell {
            Cell::Vertex(i) => self.vertices[i].label.orbit = orbit,
            Cell::Edge(i) => self.edges[i].label.orbit = orbit,
            Cell::Face(i) => self.faces[i].label.orbit = orbit,
        }
    }

    pub fn label(&self, cell: Cell) -> &CellLabel {
        match cell {
            Cell::Vertex(i) => &self.vertices[i].label,
            Cell::Edge(i) => &self.edges[i].label,
            Cell::Face(i) => &self.faces[i].label,
        }
    }

    pub fn cell(&self, name: &str) -> Option<Cell> {
        self.names.get(name).copied()
    }

    pub fn vertex_named(&self, name: &str) -> Option<usize> {
        match self.cell(name) {
            Some(Cell::Vertex(v)) => Some(v),
            _ => None,
        }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn marked(&self) -> &BTreeSet<usize> {
        &self.marked
    }

    pub fn is_marked(&self, v: usize) -> bool {
        self.marked.contains(&v)
    }

    pub fn num_triangles(&self) -> usize {
        self.faces.iter().filter(|f| f.is_triangle()).count()
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.vertices.len())
            .map(Cell::Vertex)
            .chain((0..self.edges.len()).map(Cell::Edge))
            .chain((0..self.faces.len()).map(Cell::Face))
    }

    /// Vertices of a face, in boundary order for triangles.
    pub fn face_vertices(&self, f: usize) -> Vec<usize> {
        let face = &self.faces[f];
        match face.kind {
            FaceKind::Bigon([e, _]) => self.edges[e].ends.to_vec(),
            FaceKind::Triangle([e0, e1, _]) => {
                let [a, b] = self.edges[e0].ends;
                let c = if self.edges[e1].ends.contains(&a) && !self.edges[e1].ends.contains(&b) {
                    self.edges[e1].other(a)
                } else {
                    self.edges[e1].other(b)
                };
                vec![a, b, c]
            }
        }
    }

    pub fn triangle_vertices(&self, f: usize) -> [usize; 3] {
        let v = self.face_vertices(f);
        [v[0], v[1], v[2]]
    }

    pub fn sorted_triangle(&self, f: usize) -> [usize; 3] {
        let mut t = self.triangle_vertices(f);
        t.sort_unstable();
        t
    }

    /// Faces incident to an edge.
    pub fn edge_faces(&self, e: usize) -> Vec<usize> {
        (0..self.faces.len()).filter(|&f| self.faces[f].edges().contains(&e)).collect()
    }

    pub fn neighbors(&self, v: usize) -> BTreeSet<usize> {
        self.edges.iter().filter(|e| e.ends.contains(&v)).map(|e| e.other(v)).collect()
    }

    /// Checks the labelling invariants: every label names a registered
    /// group, stabilizers shrink along incidence, and cells sharing an orbit
    /// tag share a stabilizer.
    pub fn validate_labels(&self, groups: &GroupRegistry) -> Result<()> {
        for c in self.cells() {
            groups.get(&self.label(c).stab)?;
        }
        for (f, face) in self.faces.iter().enumerate() {
            for &e in face.edges() {
                if !groups.is_subgroup(&face.label.stab, &self.edges[e].label.stab) {
                    return Err(Error::MalformedComplex(format!(
                        "stabilizer of face `{}` is not declared ≤ stabilizer of edge `{}`",
                        self.faces[f].name, self.edges[e].name
                    )));
                }
            }
        }
        for edge in &self.edges {
            for v in edge.ends {
                if !groups.is_subgroup(&edge.label.stab, &self.vertices[v].label.stab) {
                    return Err(Error::MalformedComplex(format!(
                        "stabilizer of edge `{}` is not declared ≤ stabilizer of vertex `{}`",
                        edge.name, self.vertices[v].name
                    )));
                }
            }
        }
        let mut by_orbit: BTreeMap<(u8, &str), &str> = BTreeMap::new();
        for c in self.cells() {
            let kind = match c {
                Cell::Vertex(_) => 0,
                Cell::Edge(_) => 1,
                Cell::Face(_) => 2,
            };
            let l = self.label(c);
            if let Some(prev) = by_orbit.insert((kind, &l.orbit), &l.stab) {
                if !groups.is_equal(prev, &l.stab) {
                    return Err(Error::MalformedComplex(format!(
                        "orbit `{}` mixes stabilizers `{}` and `{}`",
                        l.orbit, prev, l.stab
                    )));
                }
            }
        }
        Ok(())
    }

    /// No multi-edges, every face a triangle, no two triangles on one vertex set.
    pub fn is_simplicial(&self) -> bool {
        let mut pairs = BTreeSet::new();
        for e in &self.edges {
            let mut p = e.ends;
            p.sort_unstable();
            if !pairs.insert(p) {
                return false;
            }
        }
        let mut tris = BTreeSet::new();
        for (f, face) in self.faces.iter().enumerate() {
            if !face.is_triangle() || !tris.insert(self.sorted_triangle(f)) {
                return false;
            }
        }
        true
    }

    /// Number of orbits of triangles.
    pub fn covolume(&self) -> usize {
        self.triangle_orbits().len()
    }

    pub fn triangle_orbits(&self) -> BTreeSet<&str> {
        self.faces.iter().filter(|f| f.is_triangle()).map(|f| f.label.orbit.as_str()).collect()
    }

    /// Connected components of the vertex set, joined along edges.
    pub fn vertex_components(&self) -> (Vec<usize>, usize) {
        let mut d = DisjointSets::new(self.vertices.len());
        for e in &self.edges {
            d.union(e.ends[0], e.ends[1]);
        }
        d.classes()
    }

    pub fn is_connected(&self) -> bool {
        self.vertex_components().1 <= 1
    }

    /// The connected components as separate complexes, named `{name}.{k}`
    /// unless there is only one.
    pub fn components(&self) -> Vec<(Complex2, SubMap)> {
        let (class, n) = self.vertex_components();
        let mut vs = vec![BTreeSet::new(); n];
        let mut es = vec![BTreeSet::new(); n];
        let mut fs = vec![BTreeSet::new(); n];
        for (v, &c) in class.iter().enumerate() {
            vs[c].insert(v);
        }
        for (e, edge) in self.edges.iter().enumerate() {
            es[class[edge.ends[0]]].insert(e);
        }
        for (f, face) in self.faces.iter().enumerate() {
            fs[class[self.edges[face.edges()[0]].ends[0]]].insert(f);
        }
        (0..n)
            .map(|k| {
                let name = if n == 1 { self.name.clone() } else { format!("{}.{k}", self.name) };
                self.subcomplex(name, &vs[k], &es[k], &fs[k])
            })
            .collect()
    }

    /// Dimension of H¹(X; Z₂) from the cellular cochain complex.
    ///
    /// dim H¹ = |E| − rank ∂₁ − rank ∂₂, valid for any complex of this kind
    /// (bigons included). A disconnected complex yields the sum over its
    /// components, flagged through [`H1Report::components`].
    pub fn h1_z2(&self) -> H1Report {
        let nv = self.vertices.len();
        let ne = self.edges.len();
        let d1 = self.edges.iter().map(|e| {
            let mut r = BitRow::zeros(nv);
            r.flip(e.ends[0]);
            r.flip(e.ends[1]);
            r
        });
        let rank1 = z2::rank(d1);
        let d2 = self.faces.iter().map(|f| {
            let mut r = BitRow::zeros(ne);
            for &e in f.edges() {
                r.flip(e);
            }
            r
        });
        let rank2 = z2::rank(d2);
        H1Report { dim: ne - rank1 - rank2, components: self.vertex_components().1 }
    }

    pub fn reduce(&self) -> Complex2 {
        self.reduce_with_map().0
    }

    /// The simplicial reduction: one edge per adjacent vertex pair, one
    /// triangle per vertex triple spanned by a triangle, bigons dropped.
    /// Merged cells keep the name and stabilizer of their first
    /// representative and the least orbit tag among them.
    pub fn reduce_with_map(&self) -> (Complex2, ReductionMap) {
        let mut out = Complex2::new(self.name.clone());
        for v in &self.vertices {
            out.names.insert(v.name.clone(), Cell::Vertex(out.vertices.len()));
            out.vertices.push(v.clone());
        }
        out.marked = self.marked.clone();
        let mut by_pair: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        let mut edge_map = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let mut p = e.ends;
            p.sort_unstable();
            let idx = *by_pair.entry(p).or_insert_with(|| {
                out.names.insert(e.name.clone(), Cell::Edge(out.edges.len()));
                out.edges.push(e.clone());
                out.edges.len() - 1
            });
            if e.label.orbit < out.edges[idx].label.orbit {
                out.edges[idx].label.orbit = e.label.orbit.clone();
            }
            edge_map.push(idx);
        }
        let mut by_triple: BTreeMap<[usize; 3], usize> = BTreeMap::new();
        let mut face_map = Vec::with_capacity(self.faces.len());
        for (f, face) in self.faces.iter().enumerate() {
            if !face.is_triangle() {
                face_map.push(None);
                continue;
            }
            let t = self.sorted_triangle(f);
            let idx = *by_triple.entry(t).or_insert_with(|| {
                let es = [
                    by_pair[&[t[0], t[1]]],
                    by_pair[&[t[1], t[2]]],
                    by_pair[&[t[0], t[2]]],
                ];
                out.names.insert(face.name.clone(), Cell::Face(out.faces.len()));
                out.faces.push(Face { name: face.name.clone(), kind: FaceKind::Triangle(es), label: face.label.clone() });
                out.faces.len() - 1
            });
            if face.label.orbit < out.faces[idx].label.orbit {
                out.faces[idx].label.orbit = face.label.orbit.clone();
            }
            face_map.push(Some(idx));
        }
        (out, ReductionMap { edges: edge_map, faces: face_map })
    }

    /// Subcomplex made of the given triangles and their faces.
    pub fn triangles_subcomplex(&self, name: impl Into<String>, tris: &BTreeSet<usize>) -> (Complex2, SubMap) {
        self.subcomplex(name, &BTreeSet::new(), &BTreeSet::new(), tris)
    }

    /// Smallest subcomplex containing the given cells, with names, labels and
    /// marks carried over.
    pub fn subcomplex(
        &self,
        name: impl Into<String>,
        vertices: &BTreeSet<usize>,
        edges: &BTreeSet<usize>,
        faces: &BTreeSet<usize>,
    ) -> (Complex2, SubMap) {
        let mut out = Complex2::new(name);
        let mut map = SubMap {
            vertices: vec![None; self.vertices.len()],
            edges: vec![None; self.edges.len()],
            faces: vec![None; self.faces.len()],
        };
        let mut want_e: BTreeSet<usize> = edges.clone();
        for &f in faces {
            want_e.extend(self.faces[f].edges().iter().copied());
        }
        let mut want_v: BTreeSet<usize> = vertices.clone();
        for &e in &want_e {
            want_v.extend(self.edges[e].ends);
        }
        for &v in &want_v {
            map.vertices[v] = Some(out.vertices.len());
            out.names.insert(self.vertices[v].name.clone(), Cell::Vertex(out.vertices.len()));
            if self.is_marked(v) {
                out.marked.insert(out.vertices.len());
            }
            out.vertices.push(self.vertices[v].clone());
        }
        for &e in &want_e {
            let ed = &self.edges[e];
            map.edges[e] = Some(out.edges.len());
            out.names.insert(ed.name.clone(), Cell::Edge(out.edges.len()));
            out.edges.push(Edge {
                name: ed.name.clone(),
                ends: [map.vertices[ed.ends[0]].unwrap(), map.vertices[ed.ends[1]].unwrap()],
                label: ed.label.clone(),
            });
        }
        for &f in faces {
            let face = &self.faces[f];
            let es: Vec<usize> = face.edges().iter().map(|&e| map.edges[e].unwrap()).collect();
            let kind = match es[..] {
                [a, b, c] => FaceKind::Triangle([a, b, c]),
                [a, b] => FaceKind::Bigon([a, b]),
                _ => unreachable!("faces have two or three edges"),
            };
            map.faces[f] = Some(out.faces.len());
            out.names.insert(face.name.clone(), Cell::Face(out.faces.len()));
            out.faces.push(Face { name: face.name.clone(), kind, label: face.label.clone() });
        }
        (out, map)
    }
}

/// Cell maps from a complex into one of its subcomplexes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubMap {
    pub vertices: Vec<Option<usize>>,
    pub edges: Vec<Option<usize>>,
    pub faces: Vec<Option<usize>>,
}
