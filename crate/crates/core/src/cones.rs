//! Cones: triangle fans closed up around a central vertex.

use std::collections::{BTreeMap, BTreeSet};

use crate::complex::Complex2;
use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::resolution::Resolution;
use crate::tracks::{Split, TrackSystem};

pub const DEFAULT_LINK_CAP: usize = 16;

/// Fan of triangles `(center, boundary[k], boundary[k + 1])`, indices
/// taken cyclically; `triangles[k]` is the face realising the k-th one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cone {
    pub center: usize,
    pub boundary: Vec<usize>,
    pub triangles: Vec<usize>,
}

impl Cone {
    pub fn is_simple(&self) -> bool {
        self.boundary.iter().collect::<BTreeSet<_>>().len() == self.boundary.len()
    }

    pub fn area(&self) -> usize {
        self.triangles.len()
    }

    pub fn circumference(&self) -> usize {
        self.boundary.len()
    }

    pub fn triangle_set(&self) -> BTreeSet<usize> {
        self.triangles.iter().copied().collect()
    }

    /// Checks that consecutive fan triangles share the spoke between them.
    pub fn check(&self, x: &Complex2) -> Result<()> {
        let n = self.boundary.len();
        if n < 3 || self.triangles.len() != n {
            return Err(Error::invariant("cones close up", format!("boundary of length {n}")));
        }
        for k in 0..n {
            let want = sorted3(self.center, self.boundary[k], self.boundary[(k + 1) % n]);
            if x.sorted_triangle(self.triangles[k]) != want {
                return Err(Error::invariant("fan triangles meet the center", format!("triangle {k}")));
            }
        }
        Ok(())
    }
}

fn sorted3(a: usize, b: usize, c: usize) -> [usize; 3] {
    let mut t = [a, b, c];
    t.sort_unstable();
    t
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeSearch {
    pub cones: Vec<Cone>,
    /// The link had more vertices than the cap and was not searched.
    pub cap_reached: bool,
}

/// Link of `v`: neighbours joined when they span a triangle with `v`,
/// labelled by the first such triangle.
fn link(x: &Complex2, v: usize) -> BTreeMap<usize, BTreeMap<usize, usize>> {
    let mut adj: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for f in 0..x.faces().len() {
        if !x.faces()[f].is_triangle() {
            continue;
        }
        let t = x.triangle_vertices(f);
        if !t.contains(&v) {
            continue;
        }
        let o: Vec<usize> = t.iter().copied().filter(|&w| w != v).collect();
        if o.len() != 2 {
            continue;
        }
        adj.entry(o[0]).or_default().entry(o[1]).or_insert(f);
        adj.entry(o[1]).or_default().entry(o[0]).or_insert(f);
    }
    adj
}

/// Every simple cone centred at `v`: the simple cycles of its link.
pub fn enumerate_simple_cones(x: &Complex2, v: usize, cap: usize) -> ConeSearch {
    let adj = link(x, v);
    if adj.len() > cap {
        return ConeSearch { cones: Vec::new(), cap_reached: true };
    }
    let mut cones = Vec::new();
    for &s in adj.keys() {
        let mut path = vec![s];
        let mut on_path = BTreeSet::from([s]);
        cycles_from(&adj, s, &mut path, &mut on_path, &mut |p: &[usize]| {
            // each cycle once: smallest vertex first, then the smaller neighbour
            if p.len() >= 3 && p[1] < p[p.len() - 1] {
                let n = p.len();
                let triangles = (0..n).map(|k| adj[&p[k]][&p[(k + 1) % n]]).collect();
                cones.push(Cone { center: v, boundary: p.to_vec(), triangles });
            }
        });
    }
    ConeSearch { cones, cap_reached: false }
}

fn cycles_from(
    adj: &BTreeMap<usize, BTreeMap<usize, usize>>,
    s: usize,
    path: &mut Vec<usize>,
    on_path: &mut BTreeSet<usize>,
    found: &mut dyn FnMut(&[usize]),
) {
    let last = *path.last().unwrap();
    for &w in adj[&last].keys() {
        if w == s && path.len() >= 3 {
            found(path);
        } else if w > s && !on_path.contains(&w) {
            path.push(w);
            on_path.insert(w);
            cycles_from(adj, s, path, on_path, found);
            on_path.remove(&w);
            path.pop();
        }
    }
}

/// A simple cone inside `c` through the consecutive boundary edges `i`
/// and `i + 1`, obtained by repeatedly cutting the boundary at a repeated
/// vertex and keeping the loop through both edges.
pub fn simple_subcone(c: &Cone, i: usize) -> Result<Cone> {
    let n = c.boundary.len();
    if n < 3 || i >= n {
        return Err(Error::precondition("simple_subcone", format!("no boundary edge {i}")));
    }
    if c.boundary[i] == c.boundary[(i + 2) % n] {
        return Err(Error::precondition("simple_subcone", "boundary folds back at the shared vertex"));
    }
    let mut cur = c.clone();
    let mut i = i;
    while !cur.is_simple() {
        let n = cur.boundary.len();
        let mut best: Option<(usize, usize)> = None;
        for p in 0..n {
            for len in 3..n {
                let q = (p + len) % n;
                if cur.boundary[p] != cur.boundary[q] {
                    continue;
                }
                let off = (i + n - p) % n;
                if off + 1 < len && best.is_none_or(|(_, l)| len < l) {
                    best = Some((p, len));
                }
            }
        }
        let Some((p, len)) = best else {
            return Err(Error::precondition(
                "simple_subcone",
                "the only repeated boundary vertex separates the two edges",
            ));
        };
        let boundary = (0..len).map(|k| cur.boundary[(p + k) % n]).collect();
        let triangles = (0..len).map(|k| cur.triangles[(p + k) % n]).collect();
        i = (i + n - p) % n;
        cur = Cone { center: cur.center, boundary, triangles };
    }
    Ok(cur)
}

/// Image of `c` in the split complex. When essential tracks meet the cone
/// in circles around its center, the outermost one becomes the new center;
/// otherwise the center is pushed through. Only image triangles in the
/// component of the new center are kept. `None` when the center is
/// removed or the image does not close up.
pub fn cone_pushforward(c: &Cone, r: &Resolution, ts: &TrackSystem, split: &Split) -> Option<Cone> {
    let x = &r.source;
    let n = c.boundary.len();
    let spokes: Vec<usize> = c.boundary.iter().map(|&b| x.edge_between(c.center, b)).collect::<Option<_>>()?;
    let from_center = |e: usize, pos: usize| -> usize {
        let len = r.edge_path[e].len() - 1;
        if x.edges()[e].ends[0] == c.center {
            pos
        } else {
            len - 1 - pos
        }
    };
    let mut outermost: Option<(usize, &str)> = None;
    for tr in &ts.tracks {
        let encircles = (0..n).all(|k| {
            let f = c.triangles[k];
            let pair = [spokes[k], spokes[(k + 1) % n]];
            tr.arcs.iter().any(|&a| {
                let arc = &ts.arcs[a];
                arc.face == f && (arc.sides == pair || arc.sides == [pair[1], pair[0]])
            })
        });
        if encircles {
            let d = from_center(spokes[0], tr.crossings[&spokes[0]]);
            if outermost.is_none_or(|(od, _)| d > od) {
                outermost = Some((d, &tr.name));
            }
        }
    }
    let y = &split.complex;
    let s = match outermost {
        Some((_, name)) => *split.track_points.get(name)?,
        None => y.vertex_named(&x.vertices()[c.center].name)?,
    };

    let mut images: Vec<usize> = Vec::new();
    for &f in &c.triangles {
        if let Some(g) = split.provenance.faces[f] {
            if images.last() != Some(&g) {
                images.push(g);
            }
        }
    }
    while images.len() > 1 && images.first() == images.last() {
        images.pop();
    }
    // keep the triangles in the component of s
    let mut d = DisjointSets::new(y.vertices().len());
    for &g in &images {
        let [a, b, cc] = y.triangle_vertices(g);
        d.union(a, b);
        d.union(b, cc);
    }
    let root = d.find(s);
    let kept: Vec<usize> = images.into_iter().filter(|&g| d.find(y.triangle_vertices(g)[0]) == root).collect();
    if kept.iter().any(|&g| !y.triangle_vertices(g).contains(&s)) || kept.len() < 3 {
        return None;
    }
    let ends: Vec<[usize; 2]> = kept
        .iter()
        .map(|&g| {
            let o: Vec<usize> = y.triangle_vertices(g).into_iter().filter(|&w| w != s).collect();
            [o[0], o[1]]
        })
        .collect();
    // orient each link edge so consecutive ones meet
    let m = ends.len();
    let mut boundary = Vec::with_capacity(m);
    let mut cur = if ends[1].contains(&ends[0][1]) { ends[0][1] } else { ends[0][0] };
    boundary.push(if cur == ends[0][1] { ends[0][0] } else { ends[0][1] });
    for k in 1..m {
        boundary.push(cur);
        let [a, b] = ends[k];
        cur = if a == cur {
            b
        } else if b == cur {
            a
        } else {
            return None;
        };
    }
    if cur != boundary[0] {
        return None;
    }
    let out = Cone { center: s, boundary, triangles: kept };
    out.check(y).ok()?;
    Some(out)
}
