//! Resolutions of complexes to trees with boundary, and contraction of the
//! part mapped into the boundary.

use std::collections::{BTreeMap, BTreeSet};

use crate::complex::{Cell, Complex2, FaceKind};
use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::group::GroupRegistry;
use crate::tree::{ActionClass, Classification, Point, TreeHat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolutionKind {
    /// No edge lies in the preimage of the boundary.
    SplittingI,
    /// Some edge has both ends at one ideal point.
    ContractingII,
}

/// Classification of every vertex and edge stabilizer of a complex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellClasses {
    pub vertices: Vec<Classification>,
    pub edges: Vec<Classification>,
}

impl CellClasses {
    pub fn compute(x: &Complex2, t: &TreeHat, groups: &GroupRegistry) -> Result<Self> {
        let mut cache: BTreeMap<String, Classification> = BTreeMap::new();
        let mut classify = |stab: &str| -> Result<Classification> {
            if let Some(c) = cache.get(stab) {
                return Ok(c.clone());
            }
            let c = t.classify_group(groups.get(stab)?, groups)?;
            cache.insert(stab.to_string(), c.clone());
            Ok(c)
        };
        let vertices = x.vertices().iter().map(|v| classify(&v.label.stab)).collect::<Result<_>>()?;
        let edges = x.edges().iter().map(|e| classify(&e.label.stab)).collect::<Result<_>>()?;
        Ok(CellClasses { vertices, edges })
    }

    pub fn any_dihedral(&self) -> bool {
        self.vertices.iter().chain(&self.edges).any(|c| c.class == ActionClass::Dihedral)
    }
}

/// A maximal connected piece of the 1-skeleton whose stabilizers all act
/// linearly, mapped to one end of their common line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WComponent {
    pub vertices: BTreeSet<usize>,
    pub edges: BTreeSet<usize>,
    pub line: [usize; 2],
    pub end: usize,
}

fn is_line_class(c: &Classification, no_dinfty: bool) -> Result<bool> {
    match c.class {
        ActionClass::Linear => Ok(true),
        ActionClass::Dihedral if no_dinfty => Err(Error::hypothesis(
            "contracting resolution",
            "a stabilizer acts dihedrally although no D∞ quotients were declared",
        )),
        ActionClass::Dihedral => Ok(true),
        _ => Ok(false),
    }
}

pub fn w_components(
    x: &Complex2,
    t: &TreeHat,
    cls: &CellClasses,
    no_dinfty: bool,
) -> Result<Vec<WComponent>> {
    let n = x.vertices().len();
    let mut lin_v = vec![false; n];
    for v in 0..n {
        lin_v[v] = is_line_class(&cls.vertices[v], no_dinfty)?;
    }
    let mut lin_e = Vec::new();
    for (e, edge) in x.edges().iter().enumerate() {
        if is_line_class(&cls.edges[e], no_dinfty)? && edge.ends.iter().all(|&v| lin_v[v]) {
            lin_e.push(e);
        }
    }
    let mut d = DisjointSets::new(n);
    for &e in &lin_e {
        let [a, b] = x.edges()[e].ends;
        d.union(a, b);
    }
    let mut comps: BTreeMap<usize, WComponent> = BTreeMap::new();
    for v in (0..n).filter(|&v| lin_v[v]) {
        let line = cls.vertices[v].axis.expect("linear classes carry an axis");
        let w = comps.entry(d.find(v)).or_insert_with(|| WComponent {
            vertices: BTreeSet::new(),
            edges: BTreeSet::new(),
            line,
            end: line[0],
        });
        if w.line != line {
            return Err(Error::hypothesis(
                "contracting resolution",
                format!("cells of one linear component fix different lines (at `{}`)", x.vertices()[v].name),
            ));
        }
        w.vertices.insert(v);
    }
    for e in lin_e {
        let w = comps.get_mut(&d.find(x.edges()[e].ends[0])).unwrap();
        if cls.edges[e].axis != Some(w.line) {
            return Err(Error::hypothesis(
                "contracting resolution",
                format!("edge `{}` fixes a different line from its component", x.edges()[e].name),
            ));
        }
        w.edges.insert(e);
    }
    let mut out: Vec<WComponent> = comps.into_values().collect();
    for w in &mut out {
        // an explicit image on a member picks the end; otherwise the lower id
        if let Some(Point::Ideal(p)) = w
            .vertices
            .iter()
            .find_map(|&v| t.images.get(&x.vertices()[v].name).copied())
        {
            if !w.line.contains(&p) {
                return Err(Error::hypothesis(
                    "resolution",
                    format!("explicit image `{}` is not an end of the fixed line", t.ideals()[p].name),
                ));
            }
            w.end = p;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    pub source: Complex2,
    pub target: TreeHat,
    pub vertex_image: Vec<Point>,
    pub edge_path: Vec<Vec<Point>>,
    pub kind: ResolutionKind,
    /// For edges joining two distinct ideal points, the vertex of T about
    /// which the edge's path is parametrized symmetrically.
    pub symmetric_through: Vec<Option<usize>>,
}

impl Resolution {
    /// Resolution with prescribed vertex images; edges follow reduced paths.
    pub fn from_images(source: Complex2, target: TreeHat, vertex_image: Vec<Point>) -> Result<Self> {
        let mut edge_path = Vec::with_capacity(source.edges().len());
        let mut symmetric_through = Vec::with_capacity(source.edges().len());
        let mut contracting = false;
        for e in source.edges() {
            let [a, b] = [vertex_image[e.ends[0]], vertex_image[e.ends[1]]];
            let path = target.reduced_path(a, b)?;
            contracting |= a == b && a.is_ideal();
            symmetric_through.push(match (a, b) {
                (Point::Ideal(_), Point::Ideal(_)) if a != b => match path[(path.len() - 1) / 2] {
                    Point::Vertex(y) => Some(y),
                    Point::Ideal(_) => None,
                },
                _ => None,
            });
            edge_path.push(path);
        }
        let kind = if contracting { ResolutionKind::ContractingII } else { ResolutionKind::SplittingI };
        Ok(Resolution { source, target, vertex_image, edge_path, kind, symmetric_through })
    }

    pub fn image_name(&self, v: usize) -> &str {
        self.target.point_name(self.vertex_image[v])
    }

    /// Vertices whose image is an ideal point.
    pub fn ideal_vertices(&self) -> BTreeSet<usize> {
        (0..self.vertex_image.len()).filter(|&v| self.vertex_image[v].is_ideal()).collect()
    }

    /// Edges with both ends at one ideal point.
    pub fn boundary_edges(&self) -> BTreeSet<usize> {
        (0..self.edge_path.len())
            .filter(|&e| self.edge_path[e].len() == 1 && self.edge_path[e][0].is_ideal())
            .collect()
    }

    /// Re-checks the recorded paths: each joins the images of its edge's
    /// ends, steps along tree edges and never backtracks.
    pub fn check(&self) -> Result<()> {
        for (e, edge) in self.source.edges().iter().enumerate() {
            let p = &self.edge_path[e];
            let ends = [self.vertex_image[edge.ends[0]], self.vertex_image[edge.ends[1]]];
            if p.first() != Some(&ends[0]) || p.last() != Some(&ends[1]) {
                return Err(Error::invariant("edge paths join endpoint images", edge.name.clone()));
            }
            for w in p.windows(2) {
                let ok = match (w[0], w[1]) {
                    (Point::Vertex(a), Point::Vertex(b)) => self.target.edge_between(a, b).is_some(),
                    (Point::Vertex(a), Point::Ideal(q)) | (Point::Ideal(q), Point::Vertex(a)) => {
                        self.target.ideals()[q].leaf() == a
                    }
                    _ => false,
                };
                if !ok {
                    return Err(Error::invariant("edge paths step along the tree", edge.name.clone()));
                }
            }
            if p.windows(3).any(|w| w[0] == w[2]) {
                return Err(Error::invariant("edge paths are reduced", edge.name.clone()));
            }
        }
        Ok(())
    }

    /// Orbit tag of a point of T̂; ideal points are their own orbit.
    fn point_orbit(&self, p: Point) -> &str {
        match p {
            Point::Vertex(v) => &self.target.vertices()[v].orbit,
            Point::Ideal(i) => &self.target.ideals()[i].name,
        }
    }

    /// Vertices sharing an orbit tag must have images in one orbit of T̂.
    pub fn check_equivariance(&self) -> Result<()> {
        let mut seen: BTreeMap<&str, (&str, usize)> = BTreeMap::new();
        for (v, vx) in self.source.vertices().iter().enumerate() {
            let img = self.point_orbit(self.vertex_image[v]);
            match seen.get(vx.label.orbit.as_str()) {
                Some(&(o, w)) if o != img => {
                    return Err(Error::hypothesis(
                        "resolution",
                        format!(
                            "vertices `{}` and `{}` share an orbit but map to different orbits of the tree",
                            self.source.vertices()[w].name,
                            vx.name
                        ),
                    ))
                }
                Some(_) => {}
                None => {
                    seen.insert(&vx.label.orbit, (img, v));
                }
            }
        }
        Ok(())
    }
}

/// Builds the resolution: vertices of linear components go to the chosen
/// end of their line, parabolic vertices to their fixed end, and elliptic
/// vertices to an explicitly given image or else their fixed vertex of
/// smallest index.
pub fn build_resolution(
    x: &Complex2,
    t: &TreeHat,
    cls: &CellClasses,
    no_dinfty: bool,
) -> Result<Resolution> {
    let ws = w_components(x, t, cls, no_dinfty)?;
    let mut image: Vec<Option<Point>> = vec![None; x.vertices().len()];
    for w in &ws {
        for &v in &w.vertices {
            image[v] = Some(Point::Ideal(w.end));
        }
    }
    for (v, vx) in x.vertices().iter().enumerate() {
        if image[v].is_some() {
            continue;
        }
        let c = &cls.vertices[v];
        let explicit = t.images.get(&vx.name).copied();
        image[v] = Some(match c.class {
            ActionClass::Elliptic => match explicit {
                Some(Point::Vertex(y)) if c.fixed.contains(&y) => Point::Vertex(y),
                Some(p) => {
                    return Err(Error::hypothesis(
                        "resolution",
                        format!("image `{}` of `{}` is not fixed by its stabilizer", t.point_name(p), vx.name),
                    ))
                }
                None => Point::Vertex(*c.fixed.first().expect("elliptic classes fix a vertex")),
            },
            ActionClass::Parabolic => Point::Ideal(c.fixed_end.expect("parabolic classes fix an end")),
            _ => {
                return Err(Error::hypothesis(
                    "resolution",
                    format!("stabilizer `{}` of vertex `{}` acts {} and fixes no point", vx.label.stab, vx.name, c.class),
                ))
            }
        });
    }
    let r = Resolution::from_images(x.clone(), t.clone(), image.into_iter().map(Option::unwrap).collect())?;
    r.check_equivariance()?;
    Ok(r)
}

/// The result of collapsing the preimage of the boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contraction {
    pub complex: Complex2,
    pub resolution: Resolution,
    /// Source vertex to contracted vertex.
    pub vertices: Vec<usize>,
    /// Source edge to contracted edge, `None` if collapsed.
    pub edges: Vec<Option<usize>>,
    /// Source face to contracted triangle, `None` if it degenerated.
    pub faces: Vec<Option<usize>>,
}

/// Collapses each component of the preimage of ∂T to a vertex and reduces.
pub fn contract(r: &Resolution, groups: &mut GroupRegistry) -> Result<Contraction> {
    if r.kind != ResolutionKind::ContractingII {
        return Err(Error::precondition("contract", "resolution is of splitting type"));
    }
    let x = &r.source;
    let collapsed = r.boundary_edges();
    let mut d = DisjointSets::new(x.vertices().len());
    for &e in &collapsed {
        let [a, b] = x.edges()[e].ends;
        d.union(a, b);
    }
    let (class, n) = d.classes();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, &c) in class.iter().enumerate() {
        members[c].push(v);
    }

    let mut out = Complex2::new(x.name.clone());
    // merged vertices with the same orbit tags share one fresh group
    let mut fresh: BTreeMap<Vec<String>, String> = BTreeMap::new();
    let mut image = Vec::with_capacity(n);
    for ms in &members {
        let first = &x.vertices()[ms[0]];
        if ms.len() == 1 {
            let v = out.add_vertex(first.name.clone())?;
            out.set_label(Cell::Vertex(v), first.label.clone());
        } else {
            let name = ms.iter().map(|&v| x.vertices()[v].name.as_str()).collect::<Vec<_>>().join("+");
            let v = out.add_vertex(name.clone())?;
            let mut tags: Vec<String> = ms.iter().map(|&v| x.vertices()[v].label.orbit.clone()).collect();
            tags.sort();
            let stab = match fresh.get(&tags) {
                Some(s) => s.clone(),
                None => {
                    // the merged vertex fixes a line of the tree, so it is slender
                    let subs: Vec<&str> = ms.iter().map(|&v| x.vertices()[v].label.stab.as_str()).collect();
                    for sub in &subs {
                        if !groups.is_slender(sub)? {
                            return Err(Error::hypothesis(
                                "contracting resolution",
                                format!("vertex stabilizer `{sub}` of a collapsed component of `{name}` is not slender"),
                            ));
                        }
                    }
                    let s = groups.derive(&format!("Stab({name})"), &[], true, false);
                    for sub in subs {
                        groups.declare_subgroup(sub, &s)?;
                    }
                    fresh.insert(tags.clone(), s.clone());
                    s
                }
            };
            out.set_stab(Cell::Vertex(v), stab);
            out.set_orbit(Cell::Vertex(v), tags.join("+"));
        }
        if ms.iter().any(|&v| x.is_marked(v)) {
            out.mark(out.vertices().len() - 1);
        }
        image.push(r.vertex_image[ms[0]]);
    }

    let mut emap = vec![None; x.edges().len()];
    for (e, edge) in x.edges().iter().enumerate() {
        if collapsed.contains(&e) {
            continue;
        }
        let [a, b] = [class[edge.ends[0]], class[edge.ends[1]]];
        let idx = out.add_edge(edge.name.clone(), a, b)?;
        out.set_label(Cell::Edge(idx), edge.label.clone());
        emap[e] = Some(idx);
    }
    let mut fmap = vec![None; x.faces().len()];
    for (f, face) in x.faces().iter().enumerate() {
        let kept: Vec<usize> = face.edges().iter().filter_map(|&e| emap[e]).collect();
        if kept.len() < 2 {
            continue;
        }
        let idx = out.add_face(face.name.clone(), &kept)?;
        out.set_label(Cell::Face(idx), face.label.clone());
        fmap[f] = Some(idx);
    }
    let (reduced, rmap) = out.reduce_with_map();
    let faces = fmap
        .into_iter()
        .map(|f| f.and_then(|i| rmap.faces[i]))
        .collect::<Vec<_>>();
    let edges = emap.into_iter().map(|e| e.map(|i| rmap.edges[i])).collect();
    debug_assert!(x.faces().iter().zip(&faces).all(|(fc, f)| f.is_none() || matches!(fc.kind, FaceKind::Triangle(_))));
    let resolution = Resolution::from_images(reduced.clone(), r.target.clone(), image)?;
    if resolution.kind != ResolutionKind::SplittingI {
        return Err(Error::invariant("contraction leaves a splitting resolution", x.name.clone()));
    }
    Ok(Contraction { complex: reduced, resolution, vertices: class, edges, faces })
}
