//! H-structures: hierarchies with complexes at their terminal nodes, and
//! passing them down to the vertex groups of a tree.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::complex::Complex2;
use crate::cutpoint::reduced_cutpoint_tree;
use crate::error::{Error, Result};
use crate::gog::GraphOfGroups;
use crate::group::GroupRegistry;
use crate::hierarchy::{elliptic_orbits, passdown_hierarchy, Hierarchy};
use crate::resolution::{build_resolution, contract, CellClasses, Resolution, ResolutionKind};
use crate::tracks::{essential_tracks, split_collapse, tracks_from_resolution, TrackSystem};
use crate::tree::{Point, TreeEdge, TreeHat};

/// A complex acted on by a subgroup of a terminal group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub group: String,
    pub complex: Complex2,
}

/// A hierarchy with complexes at its non-slender terminal nodes. A terminal
/// may carry several pieces; their disjoint union is its complex. Slender
/// terminals act on a point and carry nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HStructure {
    pub hierarchy: Hierarchy,
    pub pieces: BTreeMap<usize, Vec<Piece>>,
}

impl HStructure {
    pub fn new(hierarchy: Hierarchy) -> Self {
        HStructure { hierarchy, pieces: BTreeMap::new() }
    }

    pub fn attach(&mut self, node: usize, group: impl Into<String>, complex: Complex2) {
        self.pieces.entry(node).or_default().push(Piece { group: group.into(), complex });
    }

    pub fn all_pieces(&self) -> impl Iterator<Item = (usize, &Piece)> {
        self.pieces.iter().flat_map(|(&n, ps)| ps.iter().map(move |p| (n, p)))
    }

    pub fn triangle_tags(&self) -> BTreeSet<&str> {
        self.all_pieces().flat_map(|(_, p)| p.complex.triangle_orbits()).collect()
    }

    /// Number of triangle orbits over all pieces.
    pub fn covolume(&self) -> usize {
        self.triangle_tags().len()
    }

    pub fn validate(&self, groups: &GroupRegistry) -> Result<()> {
        self.hierarchy.validate(groups)?;
        for (node, p) in self.all_pieces() {
            let n = self.hierarchy.nodes().get(node).ok_or_else(|| {
                Error::MalformedHierarchy(format!("complex `{}` is attached to a missing node", p.complex.name))
            })?;
            if !n.children.is_empty() {
                return Err(Error::MalformedHierarchy(format!(
                    "complex `{}` is attached to the inner node `{}`",
                    p.complex.name, n.name
                )));
            }
            if groups.is_slender(&p.group)? {
                return Err(Error::MalformedHierarchy(format!(
                    "complex `{}` is attached with slender group `{}`",
                    p.complex.name, p.group
                )));
            }
            if !groups.is_subgroup(&p.group, &n.group) {
                return Err(Error::MalformedHierarchy(format!(
                    "group `{}` of `{}` is not declared ≤ the group of `{}`",
                    p.group, p.complex.name, n.name
                )));
            }
            check_h_complex(&p.complex, groups)?;
        }
        Ok(())
    }
}

/// Connected, H¹(·, Z₂) = 0, and every cell stabilizer slender or H-elliptic.
pub fn check_h_complex(x: &Complex2, groups: &GroupRegistry) -> Result<()> {
    x.validate_labels(groups)?;
    let h = x.h1_z2();
    if !h.connected() || h.dim != 0 {
        return Err(Error::hypothesis(
            "H-complex",
            format!("`{}` has {} components and H¹ of dimension {}", x.name, h.components, h.dim),
        ));
    }
    for c in x.cells() {
        let s = &x.label(c).stab;
        if !groups.is_slender(s)? && !groups.is_h_elliptic(s)? {
            return Err(Error::hypothesis(
                "H-complex",
                format!("cell stabilizer `{s}` in `{}` is neither slender nor H-elliptic", x.name),
            ));
        }
    }
    Ok(())
}

/// Passes `k` down to the vertex groups of `t` when every piece is
/// elliptic in `t`. Each piece moves to the hierarchy of the unique orbit
/// it fixes, at the terminal passed down from its own terminal, so the
/// covolumes add up exactly.
pub fn passdown_structure(
    k: &HStructure,
    t: &TreeHat,
    gog: &GraphOfGroups,
    groups: &mut GroupRegistry,
) -> Result<BTreeMap<String, HStructure>> {
    k.validate(groups)?;
    let mut targets = Vec::new();
    for (w, p) in k.all_pieces() {
        let orbits = elliptic_orbits(t, &p.group, groups).ok_or_else(|| {
            Error::precondition(
                "passdown_structure",
                format!("group `{}` of `{}` is neither slender nor elliptic in `{}`", p.group, p.complex.name, t.name),
            )
        })?;
        if orbits.len() != 1 {
            return Err(Error::invariant(
                "a non-slender terminal has a single correspondent",
                format!("`{}` fixes vertices of {} orbits", p.group, orbits.len()),
            ));
        }
        targets.push((w, p, orbits.into_iter().next().unwrap()));
    }

    let kvs = passdown_hierarchy(t, gog, &k.hierarchy, groups)?;
    let mut out: BTreeMap<String, HStructure> = kvs.into_iter().map(|(v, h)| (v, HStructure::new(h))).collect();
    for (w, p, v) in targets {
        let s = out.get_mut(&v).ok_or_else(|| {
            Error::invariant("fixed orbits are vertex orbits of the tree", format!("`{v}` has no vertex group"))
        })?;
        let host = (0..s.hierarchy.nodes().len())
            .find(|&i| s.hierarchy.node(i).origin == Some(w) && s.hierarchy.node(i).children.is_empty())
            .ok_or_else(|| {
                Error::invariant(
                    "a non-slender terminal has a single correspondent",
                    format!("no terminal of `{v}` comes from `{}`", k.hierarchy.node(w).name),
                )
            })?;
        let hg = s.hierarchy.node(host).group.clone();
        if !groups.is_subgroup(&p.group, &hg) {
            groups.declare_subgroup(&p.group, &hg)?;
        }
        s.attach(host, p.group.clone(), p.complex.clone());
    }

    let total: usize = out.values().map(HStructure::covolume).sum();
    if total != k.covolume() {
        return Err(Error::invariant(
            "passed-down covolumes add up",
            format!("{total} ≠ {} for `{}`", k.covolume(), k.hierarchy.name),
        ));
    }
    Ok(out)
}

/// Covolume after each stage of [`passdown_full`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CovolumeLedger {
    pub input: usize,
    pub contracted: usize,
    pub cut: usize,
    pub split: usize,
    pub output: usize,
}

impl CovolumeLedger {
    pub fn stages(&self) -> [(&'static str, usize); 5] {
        [
            ("input", self.input),
            ("contracted", self.contracted),
            ("cut", self.cut),
            ("split", self.split),
            ("output", self.output),
        ]
    }

    pub fn is_monotone(&self) -> bool {
        self.stages().windows(2).all(|w| w[1].1 <= w[0].1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullPassdown {
    pub structures: BTreeMap<String, HStructure>,
    pub ledger: CovolumeLedger,
    /// Triangle orbit of the input to the orbit it ends up in, for the
    /// triangles that survive.
    pub tau: BTreeMap<String, String>,
}

struct Work {
    node: usize,
    group: String,
    complex: Complex2,
    resolution: Option<Resolution>,
    /// Input triangle orbit to current triangle orbit.
    tags: BTreeMap<String, String>,
}

impl Work {
    /// Follows a face map from the current complex into `next`.
    fn advance(&self, next: &Complex2, faces: &[Option<usize>]) -> BTreeMap<String, String> {
        let mut step: BTreeMap<&str, &str> = BTreeMap::new();
        for (f, img) in faces.iter().enumerate() {
            if let Some(g) = img {
                if self.complex.faces()[f].is_triangle() && next.faces()[*g].is_triangle() {
                    let from = self.complex.faces()[f].label.orbit.as_str();
                    let to = next.faces()[*g].label.orbit.as_str();
                    let e = step.entry(from).or_insert(to);
                    if to < *e {
                        *e = to;
                    }
                }
            }
        }
        self.tags
            .iter()
            .filter_map(|(a, b)| step.get(b.as_str()).map(|c| (a.clone(), c.to_string())))
            .collect()
    }
}

fn covolume_of(work: &[Work]) -> usize {
    work.iter().flat_map(|w| w.complex.triangle_orbits()).collect::<BTreeSet<_>>().len()
}

/// Replaces every piece that is not elliptic in `t` by pieces that are, in
/// three stages: collapse the boundary preimage of contracting
/// resolutions, split at cutpoints, then collapse essential tracks and
/// split the result at cutpoints again. Slender and triangle-free pieces
/// act on points and are dropped. The resulting structure is passed down
/// with [`passdown_structure`].
pub fn passdown_full(
    k: &HStructure,
    t: &TreeHat,
    gog: &GraphOfGroups,
    no_dinfty: bool,
    groups: &mut GroupRegistry,
) -> Result<FullPassdown> {
    k.validate(groups)?;
    for e in t.edges() {
        if !groups.is_slender(&e.stab)? {
            return Err(Error::hypothesis(
                "full passdown",
                format!("edge `{}` of `{}` has non-slender stabilizer `{}`", e.name, t.name, e.stab),
            ));
        }
    }
    let mut work: Vec<Work> = k
        .all_pieces()
        .map(|(node, p)| Work {
            node,
            group: p.group.clone(),
            complex: p.complex.clone(),
            resolution: None,
            tags: p.complex.triangle_orbits().into_iter().map(|s| (s.to_string(), s.to_string())).collect(),
        })
        .collect();
    let input = k.covolume();

    // contracting resolutions
    for w in &mut work {
        if elliptic_orbits(t, &w.group, groups).is_some() {
            continue;
        }
        let cls = CellClasses::compute(&w.complex, t, groups)?;
        if cls.any_dihedral() && !no_dinfty {
            return Err(Error::hypothesis(
                "full passdown",
                format!(
                    "`{}` has a cell acting dihedrally on `{}`; refusing without the no-D∞-quotients flag",
                    w.complex.name, t.name
                ),
            ));
        }
        let r = build_resolution(&w.complex, t, &cls, no_dinfty)?;
        if r.kind == ResolutionKind::ContractingII {
            let c = contract(&r, groups)?;
            w.tags = w.advance(&c.complex, &c.faces);
            w.complex = c.complex;
            w.resolution = Some(c.resolution);
        } else {
            w.resolution = Some(r);
        }
    }
    let contracted = covolume_of(&work);
    check_stage("contraction", input, contracted)?;

    // cutpoints
    let mut next = Vec::new();
    for w in work {
        let Some(r) = &w.resolution else {
            next.push(w);
            continue;
        };
        let (_, b) = reduced_cutpoint_tree(&w.complex, Some(&w.group), groups)?;
        let single = b.nodes.len() == 1;
        for (i, n) in b.nodes.iter().enumerate() {
            if n.slender || n.faces.is_empty() {
                continue;
            }
            let name = if single { w.complex.name.clone() } else { format!("{}/{i}", w.complex.name) };
            let (sub, map) = w.complex.subcomplex(name, &n.vertices, &n.edges, &n.faces);
            let mut images = vec![Point::Vertex(0); sub.vertices().len()];
            for (v, img) in map.vertices.iter().enumerate() {
                if let Some(j) = img {
                    images[*j] = r.vertex_image[v];
                }
            }
            let res = Resolution::from_images(sub.clone(), t.clone(), images)?;
            next.push(Work {
                node: w.node,
                group: n.stab.clone(),
                tags: w.advance(&sub, &map.faces),
                complex: sub,
                resolution: Some(res),
            });
        }
    }
    work = next;
    let cut = covolume_of(&work);
    check_stage("cutpoint split", contracted, cut)?;

    // tracks
    let mut next = Vec::new();
    for mut w in work {
        let Some(r) = w.resolution.take() else {
            next.push(w);
            continue;
        };
        let r = &r;
        let ts = essential_tracks(&tracks_from_resolution(r)?)?;
        let s = split_collapse(r, &ts, groups)?;
        let positions = positions(r, &ts, &s.complex);
        let mid = Work { tags: w.advance(&s.complex, &s.provenance.faces), complex: s.complex, ..w };
        for (comp, cmap) in mid.complex.components() {
            if comp.num_triangles() == 0 {
                continue;
            }
            let cw = Work {
                node: mid.node,
                group: mid.group.clone(),
                tags: mid.advance(&comp, &cmap.faces),
                complex: comp,
                resolution: None,
            };
            let (_, b) = reduced_cutpoint_tree(&cw.complex, None, groups)?;
            let single = b.nodes.len() == 1;
            for (i, n) in b.nodes.iter().enumerate() {
                if n.slender || n.faces.is_empty() {
                    continue;
                }
                let name = if single { cw.complex.name.clone() } else { format!("{}/{i}", cw.complex.name) };
                let (sub, map) = cw.complex.subcomplex(name, &n.vertices, &n.edges, &n.faces);
                let pts: Vec<(usize, bool)> = cmap
                    .vertices
                    .iter()
                    .enumerate()
                    .filter_map(|(v, c)| c.and_then(|c| map.vertices[c]).map(|_| positions[v]))
                    .collect();
                // track points sit on the frontier of a piece, so they only
                // decide when the piece has no other vertex
                let inner: Vec<usize> = pts.iter().filter(|p| !p.1).map(|p| p.0).collect();
                let all: Vec<usize> = pts.iter().map(|p| p.0).collect();
                let y = hull_center(t, if inner.is_empty() { &all } else { &inner });
                groups.declare_subgroup(&n.stab, &mid.group)?;
                groups.declare_subgroup(&n.stab, &t.vertices()[y].stab).map_err(|e| {
                    Error::invariant("non-slender pieces of the split complex are elliptic", e.to_string())
                })?;
                next.push(Work {
                    node: cw.node,
                    group: n.stab.clone(),
                    tags: cw.advance(&sub, &map.faces),
                    complex: sub,
                    resolution: None,
                });
            }
        }
    }
    work = next;
    let split = covolume_of(&work);
    check_stage("track collapse", cut, split)?;

    let mut tilde = HStructure::new(k.hierarchy.clone());
    let mut tau = BTreeMap::new();
    for w in work {
        tau.extend(w.tags);
        tilde.attach(w.node, w.group, w.complex);
    }
    let structures = passdown_structure(&tilde, t, gog, groups)?;
    let output = structures.values().map(HStructure::covolume).sum();
    Ok(FullPassdown { structures, ledger: CovolumeLedger { input, contracted, cut, split, output }, tau })
}

fn check_stage(stage: &str, before: usize, after: usize) -> Result<()> {
    if after > before {
        return Err(Error::invariant("covolume does not increase", format!("{stage}: {before} → {after}")));
    }
    Ok(())
}

/// Position of each vertex of the split complex in the subdivided tree,
/// flagged for track points: tree vertex `y` is node `y`, the midpoint of
/// edge `f` is node `n + f`. Track points on a virtual edge sit at its leaf.
fn positions(r: &Resolution, ts: &TrackSystem, xt: &Complex2) -> Vec<(usize, bool)> {
    let n = r.target.vertices().len();
    let by_track: BTreeMap<&str, TreeEdge> = ts.tracks.iter().map(|tr| (tr.name.as_str(), tr.tree_edge)).collect();
    xt.vertices()
        .iter()
        .map(|v| match by_track.get(v.name.as_str()) {
            Some(TreeEdge::Real(f)) => (n + f, true),
            Some(TreeEdge::ToIdeal(p)) => (r.target.ideals()[*p].leaf(), true),
            None => {
                let i = r.source.vertex_named(&v.name).expect("split keeps vertex names");
                match r.vertex_image[i] {
                    Point::Vertex(y) => (y, false),
                    Point::Ideal(_) => unreachable!("vertices over ∂T are removed"),
                }
            }
        })
        .collect()
}

/// The vertex at the center of the hull of the given subdivided-tree
/// positions; a central midpoint resolves to its lower endpoint.
fn hull_center(t: &TreeHat, pts: &[usize]) -> usize {
    let n = t.vertices().len();
    let total = n + t.edges().len();
    let mut adj = vec![Vec::new(); total];
    for (f, e) in t.edges().iter().enumerate() {
        for y in e.ends {
            adj[y].push(n + f);
            adj[n + f].push(y);
        }
    }
    let bfs = |s: usize| -> (Vec<usize>, Vec<usize>) {
        let mut dist = vec![usize::MAX; total];
        let mut prev = vec![usize::MAX; total];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &w in &adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    prev[w] = u;
                    q.push_back(w);
                }
            }
        }
        (dist, prev)
    };
    let far = |dist: &[usize]| *pts.iter().max_by_key(|&&p| (dist[p], std::cmp::Reverse(p))).unwrap();
    let a = far(&bfs(pts[0]).0);
    let (dist, prev) = bfs(a);
    let b = far(&dist);
    let mut path = vec![b];
    while *path.last().unwrap() != a {
        path.push(prev[*path.last().unwrap()]);
    }
    let c = path[path.len() / 2];
    if c < n {
        c
    } else {
        let [u, v] = t.edges()[c - n].ends;
        u.min(v)
    }
}
