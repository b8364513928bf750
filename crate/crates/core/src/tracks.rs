//! Tracks: preimages of tree-edge midpoints under a splitting resolution,
//! their essential subfamily, and the complex obtained by collapsing them.

use std::collections::{BTreeMap, BTreeSet};

use crate::complex::{Cell, Complex2, FaceKind};
use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::group::GroupRegistry;
use crate::resolution::{Resolution, ResolutionKind};
use crate::tree::TreeEdge;

/// A normal arc inside one face, joining the crossings of a tree edge on
/// two of its sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub face: usize,
    pub tree_edge: TreeEdge,
    pub sides: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Track {
    pub name: String,
    pub tree_edge: TreeEdge,
    /// Crossed edges of X, with the index of the tree edge along each
    /// edge's path.
    pub crossings: BTreeMap<usize, usize>,
    pub arcs: Vec<usize>,
    /// Vertex sets of the components of X minus the track that touch it.
    pub sides: Vec<BTreeSet<usize>>,
    /// Per side: contains a boundary-marked vertex or a vertex mapped to ∂T.
    pub infinite: Vec<bool>,
}

impl Track {
    pub fn separates(&self) -> bool {
        self.sides.len() >= 2
    }

    pub fn is_essential(&self) -> bool {
        self.sides.len() == 2 && self.infinite.iter().all(|&b| b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackSystem {
    pub arcs: Vec<Arc>,
    pub tracks: Vec<Track>,
}

impl TrackSystem {
    /// Whether tree edge `f` lies on the path of edge `e`.
    pub fn crosses(&self, e: usize, f: TreeEdge) -> bool {
        self.tracks.iter().any(|t| t.tree_edge == f && t.crossings.contains_key(&e))
    }

    /// Per-face arc listing, for reports and golden tests.
    pub fn arc_listing(&self, x: &Complex2) -> Vec<String> {
        let track_of: BTreeMap<usize, &str> = self
            .tracks
            .iter()
            .flat_map(|t| t.arcs.iter().map(move |&a| (a, t.name.as_str())))
            .collect();
        self.arcs
            .iter()
            .enumerate()
            .filter_map(|(i, a)| {
                track_of.get(&i).map(|t| {
                    format!(
                        "{}: {} {}-{}",
                        x.faces()[a.face].name,
                        t,
                        x.edges()[a.sides[0]].name,
                        x.edges()[a.sides[1]].name
                    )
                })
            })
            .collect()
    }
}

pub fn tracks_from_resolution(r: &Resolution) -> Result<TrackSystem> {
    if r.kind != ResolutionKind::SplittingI {
        return Err(Error::precondition("tracks_from_resolution", "resolution is contracting"));
    }
    let (x, t) = (&r.source, &r.target);
    // crossing points per tree edge: (X edge, position along its path)
    let mut points: BTreeMap<TreeEdge, Vec<(usize, usize)>> = BTreeMap::new();
    for e in 0..x.edges().len() {
        for (pos, f) in t.path_edges(&r.edge_path[e]).into_iter().enumerate() {
            points.entry(f).or_default().push((e, pos));
        }
    }
    let mut arcs = Vec::new();
    for (fi, face) in x.faces().iter().enumerate() {
        let mut by_f: BTreeMap<TreeEdge, Vec<usize>> = BTreeMap::new();
        for &e in face.edges() {
            for f in t.path_edges(&r.edge_path[e]) {
                by_f.entry(f).or_default().push(e);
            }
        }
        for (f, sides) in by_f {
            match sides[..] {
                [a, b] => arcs.push(Arc { face: fi, tree_edge: f, sides: [a, b] }),
                _ => {
                    return Err(Error::invariant(
                        "arcs close up in every face",
                        format!("`{}` crosses face `{}` on {} sides", t.tree_edge_name(f), face.name, sides.len()),
                    ))
                }
            }
        }
    }
    let infinite_vertex: Vec<bool> =
        (0..x.vertices().len()).map(|v| x.is_marked(v) || r.vertex_image[v].is_ideal()).collect();
    let mut tracks = Vec::new();
    for (f, pts) in &points {
        let index: BTreeMap<usize, usize> = pts.iter().enumerate().map(|(i, &(e, _))| (e, i)).collect();
        let mut d = DisjointSets::new(pts.len());
        let mut arcs_of_f = Vec::new();
        for (ai, a) in arcs.iter().enumerate().filter(|(_, a)| a.tree_edge == *f) {
            d.union(index[&a.sides[0]], index[&a.sides[1]]);
            arcs_of_f.push(ai);
        }
        let (class, n) = d.classes();
        for k in 0..n {
            let crossings: BTreeMap<usize, usize> =
                pts.iter().enumerate().filter(|(i, _)| class[*i] == k).map(|(_, &p)| p).collect();
            let track_arcs: Vec<usize> = arcs_of_f
                .iter()
                .copied()
                .filter(|&a| class[index[&arcs[a].sides[0]]] == k)
                .collect();
            let mut sd = DisjointSets::new(x.vertices().len());
            for (e, edge) in x.edges().iter().enumerate() {
                if !crossings.contains_key(&e) {
                    sd.union(edge.ends[0], edge.ends[1]);
                }
            }
            let (vclass, _) = sd.classes();
            let touching: BTreeSet<usize> =
                crossings.keys().flat_map(|&e| x.edges()[e].ends).map(|v| vclass[v]).collect();
            let sides: Vec<BTreeSet<usize>> = touching
                .iter()
                .map(|&c| (0..x.vertices().len()).filter(|&v| vclass[v] == c).collect())
                .collect();
            let infinite = sides.iter().map(|s: &BTreeSet<usize>| s.iter().any(|&v| infinite_vertex[v])).collect();
            tracks.push(Track {
                name: format!("{}:{}.{k}", t.name, t.tree_edge_name(*f)),
                tree_edge: *f,
                crossings,
                arcs: track_arcs,
                sides,
                infinite,
            });
        }
    }
    Ok(TrackSystem { arcs, tracks })
}

/// The tracks splitting X into two infinite parts. Requires every track to
/// separate, which holds when H¹(X; Z₂) = 0.
pub fn essential_tracks(ts: &TrackSystem) -> Result<TrackSystem> {
    if let Some(t) = ts.tracks.iter().find(|t| !t.separates()) {
        return Err(Error::invariant("tracks separate", format!("track `{}` does not separate", t.name)));
    }
    Ok(TrackSystem {
        arcs: ts.arcs.clone(),
        tracks: ts.tracks.iter().filter(|t| t.is_essential()).cloned().collect(),
    })
}

/// Triangle provenance of one stage: each source triangle's image (if it
/// survives) and, per surviving triangle, the image of each of its sides.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub faces: Vec<Option<usize>>,
    pub sides: Vec<Option<[usize; 3]>>,
}

impl Provenance {
    pub fn identity(x: &Complex2) -> Self {
        Provenance {
            faces: (0..x.faces().len()).map(|f| x.faces()[f].is_triangle().then_some(f)).collect(),
            sides: x
                .faces()
                .iter()
                .map(|f| match f.kind {
                    FaceKind::Triangle(es) => Some(es),
                    FaceKind::Bigon(_) => None,
                })
                .collect(),
        }
    }

    /// `self` followed by `next`, where `mid` is the complex in between.
    pub fn then(&self, mid: &Complex2, next: &Provenance) -> Provenance {
        let mut faces = Vec::with_capacity(self.faces.len());
        let mut sides = Vec::with_capacity(self.faces.len());
        for (f, s) in self.faces.iter().zip(&self.sides) {
            let (Some(i), Some(es)) = (*f, s) else {
                faces.push(None);
                sides.push(None);
                continue;
            };
            faces.push(next.faces[i]);
            let mid_edges = mid.faces()[i].edges();
            sides.push(next.sides[i].map(|img| {
                es.map(|e| img[mid_edges.iter().position(|&m| m == e).expect("side of the image triangle")])
            }));
        }
        Provenance { faces, sides }
    }

    pub fn is_total_bijection(&self, x: &Complex2, target_triangles: usize) -> bool {
        let tris: Vec<usize> = (0..x.faces().len()).filter(|&f| x.faces()[f].is_triangle()).collect();
        let images: BTreeSet<usize> = tris.iter().filter_map(|&f| self.faces[f]).collect();
        tris.iter().all(|&f| self.faces[f].is_some()) && images.len() == tris.len() && images.len() == target_triangles
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub complex: Complex2,
    pub provenance: Provenance,
    /// Source edge to the image of its full extent when it is not cut, for
    /// composing provenance across stages.
    pub edges: Vec<Option<usize>>,
    /// Track name to the vertex it was collapsed to.
    pub track_points: BTreeMap<String, usize>,
}

/// Removes the vertices mapped to ∂T, collapses each essential track to a
/// point and reduces.
pub fn split_collapse(r: &Resolution, ts_star: &TrackSystem, groups: &mut GroupRegistry) -> Result<Split> {
    if r.kind != ResolutionKind::SplittingI {
        return Err(Error::precondition("split_collapse", "resolution is contracting"));
    }
    let x = &r.source;
    let mut out = Complex2::new(x.name.clone());
    let mut vmap: Vec<Option<usize>> = vec![None; x.vertices().len()];
    for (v, vx) in x.vertices().iter().enumerate() {
        if r.vertex_image[v].is_ideal() {
            continue;
        }
        let i = out.add_vertex(vx.name.clone())?;
        out.set_label(Cell::Vertex(i), vx.label.clone());
        if x.is_marked(v) {
            out.mark(i);
        }
        vmap[v] = Some(i);
    }

    let mut tracks: Vec<&Track> = ts_star.tracks.iter().collect();
    tracks.sort_by(|a, b| a.name.cmp(&b.name));
    let mut tpoint = Vec::with_capacity(tracks.len());
    let mut track_points = BTreeMap::new();
    for tr in &tracks {
        if tr.crossings.keys().any(|&e| e >= x.edges().len()) {
            return Err(Error::precondition("split_collapse", format!("track `{}` does not fit the complex", tr.name)));
        }
        let i = out.add_vertex(tr.name.clone())?;
        let mut subs: BTreeSet<&str> = BTreeSet::new();
        for &e in tr.crossings.keys() {
            subs.insert(&x.edges()[e].label.stab);
        }
        for s in &subs {
            if !groups.is_slender(s)? {
                return Err(Error::hypothesis(
                    "splitting resolution",
                    format!("edge stabilizer `{s}` crosses a tree edge but is not slender"),
                ));
            }
        }
        let stab = groups.derive(&format!("Stab({})", tr.name), &[], true, false);
        for s in subs {
            groups.declare_subgroup(s, &stab)?;
        }
        if let TreeEdge::Real(f) = tr.tree_edge {
            groups.declare_subgroup(&stab, &r.target.edges()[f].stab)?;
        } else {
            out.mark(i);
        }
        out.set_stab(Cell::Vertex(i), stab);
        tpoint.push(i);
        track_points.insert(tr.name.clone(), i);
    }

    // essential crossings on each edge, ordered along the edge from ends[0]
    let mut cut_tracks: Vec<Vec<(usize, usize)>> = vec![Vec::new(); x.edges().len()];
    for (k, tr) in tracks.iter().enumerate() {
        for (&e, &pos) in &tr.crossings {
            cut_tracks[e].push((pos, k));
        }
    }
    for c in &mut cut_tracks {
        c.sort_unstable();
    }

    // segments of each edge; segment i lies before the i-th cut
    let mut segs: Vec<Vec<Option<usize>>> = Vec::with_capacity(x.edges().len());
    for (e, edge) in x.edges().iter().enumerate() {
        let mut pts: Vec<Option<usize>> = vec![vmap[edge.ends[0]]];
        pts.extend(cut_tracks[e].iter().map(|&(_, k)| Some(tpoint[k])));
        pts.push(vmap[edge.ends[1]]);
        let n = pts.len() - 1;
        let mut row = Vec::with_capacity(n);
        for i in 0..n {
            row.push(match (pts[i], pts[i + 1]) {
                (Some(a), Some(b)) => {
                    let name = if n == 1 { edge.name.clone() } else { format!("{}/{i}", edge.name) };
                    let idx = out.add_edge(name, a, b)?;
                    out.set_label(Cell::Edge(idx), edge.label.clone());
                    Some(idx)
                }
                _ => None,
            });
        }
        segs.push(row);
    }
    // segment of edge e at `rank` cuts away from its end `v`
    let seg_from = |e: usize, v: usize, rank: usize| -> Option<usize> {
        let n = segs[e].len();
        if x.edges()[e].ends[0] == v {
            segs[e][rank]
        } else {
            segs[e][n - 1 - rank]
        }
    };

    let mut fmap: Vec<Option<usize>> = vec![None; x.faces().len()];
    let mut side_map: Vec<Option<[usize; 3]>> = vec![None; x.faces().len()];
    for (fi, face) in x.faces().iter().enumerate() {
        match face.kind {
            FaceKind::Bigon([e0, e1]) => {
                let u = x.edges()[e0].ends[0];
                for rank in 0..segs[e0].len() {
                    if let (Some(a), Some(b)) = (seg_from(e0, u, rank), seg_from(e1, u, rank)) {
                        let name = format!("{}:{rank}", face.name);
                        let idx = out.add_face(name, &[a, b])?;
                        out.set_label(Cell::Face(idx), face.label.clone());
                    }
                }
            }
            FaceKind::Triangle(es) => {
                let vs = x.triangle_vertices(fi);
                // per corner: the sides through it and how many cuts on them
                // belong to that corner
                let mut depth = [0usize; 3];
                let mut eff: [Option<usize>; 3] = [None; 3];
                for (ci, &c) in vs.iter().enumerate() {
                    let sides: Vec<usize> = es.iter().copied().filter(|&e| x.edges()[e].ends.contains(&c)).collect();
                    let (s1, s2) = (sides[0], sides[1]);
                    // cuts on s1 from c whose track also cuts s2 form the corner
                    let from_c = |e: usize| -> Vec<usize> {
                        let mut v: Vec<usize> = cut_tracks[e].iter().map(|&(_, k)| k).collect();
                        if x.edges()[e].ends[0] != c {
                            v.reverse();
                        }
                        v
                    };
                    let (o1, o2) = (from_c(s1), from_c(s2));
                    let mut m = 0;
                    while m < o1.len() && m < o2.len() && o1[m] == o2[m] {
                        m += 1;
                    }
                    depth[ci] = m;
                    eff[ci] = if m == 0 { vmap[c] } else { Some(tpoint[o1[m - 1]]) };
                    for i in 0..m {
                        let (a, b) = (seg_from(s1, c, i), seg_from(s2, c, i));
                        if let (Some(a), Some(b)) = (a, b) {
                            let name = format!("{}:{}.{i}", face.name, x.vertices()[c].name);
                            let idx = out.add_face(name, &[a, b])?;
                            out.set_label(Cell::Face(idx), face.label.clone());
                        }
                    }
                }
                // middle segment of each side
                let mut mids = [None; 3];
                for (k, &e) in es.iter().enumerate() {
                    let [a, b] = x.edges()[e].ends;
                    let (ca, cb) = (
                        vs.iter().position(|&v| v == a).unwrap(),
                        vs.iter().position(|&v| v == b).unwrap(),
                    );
                    if depth[ca] + depth[cb] != cut_tracks[e].len() {
                        return Err(Error::invariant(
                            "cuts on a side belong to its two corners",
                            format!("face `{}`, edge `{}`", face.name, x.edges()[e].name),
                        ));
                    }
                    mids[k] = segs[e][depth[ca]];
                }
                if let [Some(a), Some(b), Some(c)] = mids {
                    debug_assert!(eff.iter().all(Option::is_some));
                    let idx = out.add_face(face.name.clone(), &[a, b, c])?;
                    out.set_label(Cell::Face(idx), face.label.clone());
                    fmap[fi] = Some(idx);
                    side_map[fi] = Some([a, b, c]);
                }
            }
        }
    }

    let (reduced, rmap) = out.reduce_with_map();
    let faces: Vec<Option<usize>> = fmap.iter().map(|f| f.and_then(|i| rmap.faces[i])).collect();
    let sides = side_map
        .iter()
        .map(|s| s.map(|es| [rmap.edges[es[0]], rmap.edges[es[1]], rmap.edges[es[2]]]))
        .collect();
    let edges = segs
        .iter()
        .map(|row| match row[..] {
            [Some(i)] => Some(rmap.edges[i]),
            _ => None,
        })
        .collect();
    Ok(Split { complex: reduced, provenance: Provenance { faces, sides }, edges, track_points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{Point, TreeHat};

    fn path_tree(n: usize) -> TreeHat {
        let mut t = TreeHat::new("T");
        for i in 0..n {
            t.add_vertex(format!("y{i}")).unwrap();
        }
        for i in 1..n {
            t.add_edge(format!("f{}", i - 1), i - 1, i).unwrap();
        }
        t
    }

    fn resolve(x: &Complex2, t: &TreeHat, images: &[usize]) -> Resolution {
        let imgs = images.iter().map(|&y| Point::Vertex(y)).collect();
        Resolution::from_images(x.clone(), t.clone(), imgs).unwrap()
    }

    fn complex(nv: usize, tris: &[[usize; 3]]) -> Complex2 {
        let mut x = Complex2::new("X");
        for i in 0..nv {
            x.add_vertex(format!("v{i}")).unwrap();
        }
        for (k, t) in tris.iter().enumerate() {
            x.add_triangle(format!("t{k}"), t[0], t[1], t[2]).unwrap();
            x.set_orbit(Cell::Face(k), format!("o{k}"));
        }
        x
    }

    #[test]
    fn single_edge_crossing() {
        let mut x = Complex2::new("X");
        x.add_vertex("a").unwrap();
        x.add_vertex("b").unwrap();
        x.add_edge("ab", 0, 1).unwrap();
        let ts = tracks_from_resolution(&resolve(&x, &path_tree(2), &[0, 1])).unwrap();
        assert_eq!(ts.tracks.len(), 1);
        assert_eq!(ts.tracks[0].crossings.len(), 1);
        assert!(ts.arcs.is_empty());
    }

    #[test]
    fn constant_triangle_has_no_arcs() {
        let x = complex(3, &[[0, 1, 2]]);
        let ts = tracks_from_resolution(&resolve(&x, &path_tree(3), &[1, 1, 1])).unwrap();
        assert!(ts.arcs.is_empty() && ts.tracks.is_empty());
    }

    #[test]
    fn square_over_two_edge_path() {
        // a, b over y0 and c, d over y2; both tree edges give one track of two arcs
        let x = complex(4, &[[0, 1, 3], [1, 2, 3]]);
        let ts = tracks_from_resolution(&resolve(&x, &path_tree(3), &[0, 0, 2, 2])).unwrap();
        assert_eq!(ts.tracks.len(), 2);
        for tr in &ts.tracks {
            assert_eq!(tr.arcs.len(), 2);
            assert_eq!(tr.crossings.len(), 3);
            assert_eq!(tr.sides.len(), 2);
        }
    }

    #[test]
    fn vertex_parallel_track_is_inessential() {
        let mut x = complex(4, &[[0, 1, 2], [0, 2, 3]]);
        x.mark(1);
        x.mark(3);
        // vertex 0 alone over y1
        let ts = tracks_from_resolution(&resolve(&x, &path_tree(2), &[1, 0, 0, 0])).unwrap();
        assert_eq!(ts.tracks.len(), 1);
        assert!(!ts.tracks[0].is_essential());
        x.mark(0);
        let ts = tracks_from_resolution(&resolve(&x, &path_tree(2), &[1, 0, 0, 0])).unwrap();
        assert_eq!(essential_tracks(&ts).unwrap().tracks.len(), 1);
    }

    #[test]
    fn hollow_square_track_does_not_separate() {
        let mut x = Complex2::new("X");
        for n in ["a", "b", "c", "d"] {
            x.add_vertex(n).unwrap();
        }
        for (i, (a, b)) in [(0, 1), (1, 2), (2, 3), (3, 0)].into_iter().enumerate() {
            x.add_edge(format!("e{i}"), a, b).unwrap();
        }
        let ts = tracks_from_resolution(&resolve(&x, &path_tree(2), &[0, 1, 1, 1])).unwrap();
        // the two crossings on e0 and e3 are separate point tracks, neither separates
        assert!(essential_tracks(&ts).is_err());
    }

    #[test]
    fn no_tracks_means_reduction() {
        let x = complex(4, &[[0, 1, 2], [0, 2, 3]]);
        let mut g = GroupRegistry::new();
        let r = resolve(&x, &path_tree(1), &[0, 0, 0, 0]);
        let ts = essential_tracks(&tracks_from_resolution(&r).unwrap()).unwrap();
        let s = split_collapse(&r, &ts, &mut g).unwrap();
        assert_eq!(s.complex, x.reduce());
        assert!(s.provenance.is_total_bijection(&x, s.complex.num_triangles()));
    }

    #[test]
    fn strip_track_keeps_triangles() {
        // strip of four triangles along v0..v5, with the track crossing the rungs
        let mut x = complex(6, &[[0, 1, 2], [1, 2, 3], [2, 3, 4], [3, 4, 5]]);
        x.mark(0);
        x.mark(5);
        let r = resolve(&x, &path_tree(2), &[0, 0, 0, 1, 1, 1]);
        let ts = essential_tracks(&tracks_from_resolution(&r).unwrap()).unwrap();
        assert_eq!(ts.tracks.len(), 1);
        let mut g = GroupRegistry::new();
        let s = split_collapse(&r, &ts, &mut g).unwrap();
        assert_eq!(s.complex.num_triangles(), 4);
        assert_eq!(s.complex.covolume(), 4);
        assert!(s.complex.is_connected());
        assert_eq!(s.complex.h1_z2().dim, 0);
        assert_eq!(crate::cutpoint::cutpoints(&s.complex), [s.track_points["T:f0.0"]].into());
    }

    #[test]
    fn pinched_disk_loses_a_triangle_orbit() {
        // three faces of a tetrahedron; the track separates {v0, v1} from {v2, v3}
        let mut x = complex(4, &[[0, 1, 2], [0, 1, 3], [0, 2, 3]]);
        x.mark(0);
        x.mark(2);
        let r = resolve(&x, &path_tree(2), &[0, 0, 1, 1]);
        let ts = essential_tracks(&tracks_from_resolution(&r).unwrap()).unwrap();
        assert_eq!(ts.tracks.len(), 1);
        let mut g = GroupRegistry::new();
        let s = split_collapse(&r, &ts, &mut g).unwrap();
        assert_eq!(x.covolume(), 3);
        assert_eq!(s.complex.covolume(), 2);
        assert_eq!(s.provenance.faces[0], s.provenance.faces[1]);
        assert!(!s.provenance.is_total_bijection(&x, s.complex.num_triangles()));
        assert_eq!(s.complex.h1_z2().dim, 0);
    }

    #[test]
    fn collapse_ignores_track_order() {
        let mut x = complex(4, &[[0, 1, 3], [1, 2, 3]]);
        x.mark(0);
        x.mark(2);
        let r = resolve(&x, &path_tree(3), &[0, 0, 2, 2]);
        let ts = essential_tracks(&tracks_from_resolution(&r).unwrap()).unwrap();
        let mut rev = ts.clone();
        rev.tracks.reverse();
        let a = split_collapse(&r, &ts, &mut GroupRegistry::new()).unwrap();
        let b = split_collapse(&r, &rev, &mut GroupRegistry::new()).unwrap();
        assert_eq!(a.complex, b.complex);
        assert_eq!(a.complex.covolume(), 2);
    }
}
