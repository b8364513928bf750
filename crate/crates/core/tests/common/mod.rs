//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use strongacc::{Cell, Complex2, Point, TreeHat};

pub fn fixture_path(name: &str) -> String {
    format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn edges_joining(x: &Complex2, a: usize, b: usize) -> Vec<usize> {
    (0..x.edges().len()).filter(|&e| x.edges()[e].joins(a, b)).collect()
}

/// Arbitrary complex with parallel edges, bigons, duplicate triangles and
/// triangle orbit tags drawn from a small pool.
pub fn random_complex(rng: &mut impl Rng, max_vertices: usize) -> Complex2 {
    let mut x = Complex2::new("X");
    let n = rng.gen_range(1..=max_vertices);
    for i in 0..n {
        x.add_vertex(format!("v{i}")).unwrap();
    }
    if n < 2 {
        return x;
    }
    let pool = rng.gen_range(1..=6);
    let ops = rng.gen_range(0..=3 * n);
    let mut k = 0;
    for _ in 0..ops {
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..n)) % n;
        match rng.gen_range(0..4) {
            0 => {
                x.add_edge(format!("e{k}"), a, b).unwrap();
            }
            1 => {
                let e = x.add_edge(format!("e{k}"), a, b).unwrap();
                if let Some(&f) = edges_joining(&x, a, b).iter().find(|&&f| f != e) {
                    x.add_face(format!("g{k}"), &[e, f]).unwrap();
                }
            }
            _ if n >= 3 => {
                let c = loop {
                    let c = rng.gen_range(0..n);
                    if c != a && c != b {
                        break c;
                    }
                };
                let mut es = [0; 3];
                for (j, (p, q)) in [(a, b), (b, c), (c, a)].into_iter().enumerate() {
                    let par = edges_joining(&x, p, q);
                    es[j] = match par.choose(rng) {
                        Some(&e) if rng.gen_bool(0.8) => e,
                        _ => x.add_edge(format!("e{k}_{j}"), p, q).unwrap(),
                    };
                }
                let f = x.add_face(format!("f{k}"), &es).unwrap();
                x.set_orbit(Cell::Face(f), format!("o{}", rng.gen_range(0..pool)));
            }
            _ => {}
        }
        k += 1;
    }
    x
}

/// Triangulated disk grown by attaching ears and filling boundary angles.
/// Triangles and edges get distinct orbit tags.
pub fn random_disk(rng: &mut impl Rng, triangles: usize) -> Complex2 {
    let mut x = Complex2::new("D");
    for i in 0..3 {
        x.add_vertex(format!("v{i}")).unwrap();
    }
    x.add_triangle("t0", 0, 1, 2).unwrap();
    let mut boundary = vec![0, 1, 2];
    while x.num_triangles() < triangles {
        let len = boundary.len();
        let i = rng.gen_range(0..len);
        let name = format!("t{}", x.num_triangles());
        if len > 3 && rng.gen_bool(0.3) {
            let (p, q, r) = (boundary[(i + len - 1) % len], boundary[i], boundary[(i + 1) % len]);
            if x.edge_between(p, r).is_none() {
                x.add_triangle(name, p, q, r).unwrap();
                boundary.remove(i);
            }
        } else {
            let (p, q) = (boundary[i], boundary[(i + 1) % len]);
            let v = x.add_vertex(format!("v{}", x.vertices().len())).unwrap();
            x.add_triangle(name, p, q, v).unwrap();
            boundary.insert(i + 1, v);
        }
    }
    for f in 0..x.faces().len() {
        x.set_orbit(Cell::Face(f), format!("o{f}"));
    }
    for e in 0..x.edges().len() {
        x.set_orbit(Cell::Edge(e), format!("e{e}"));
    }
    x
}

/// Vertices on the boundary circle of a disk: those on an edge with one face.
pub fn disk_boundary(x: &Complex2) -> BTreeSet<usize> {
    (0..x.edges().len())
        .filter(|&e| x.edge_faces(e).len() == 1)
        .flat_map(|e| x.edges()[e].ends)
        .collect()
}

/// Path tree on `n` vertices named `y0..`.
pub fn path_tree(n: usize) -> TreeHat {
    let mut t = TreeHat::new("T");
    for i in 0..n {
        t.add_vertex(format!("y{i}")).unwrap();
    }
    for i in 1..n {
        t.add_edge(format!("f{}", i - 1), i - 1, i).unwrap();
    }
    t
}

/// Graph distance from `root` in the 1-skeleton.
pub fn bfs_distance(x: &Complex2, root: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; x.vertices().len()];
    dist[root] = 0;
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for w in x.neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Height map of a connected complex onto a path tree of `len` vertices.
pub fn height_images(x: &Complex2, root: usize, len: usize) -> Vec<Point> {
    bfs_distance(x, root).into_iter().map(|d| Point::Vertex(d.min(len - 1))).collect()
}

/// Triangulated sphere: a random disk with its boundary coned off.
pub fn random_sphere(rng: &mut impl Rng, triangles: usize) -> Complex2 {
    let mut x = random_disk(rng, triangles);
    x.name = "S".into();
    let rim: Vec<usize> = (0..x.edges().len()).filter(|&e| x.edge_faces(e).len() == 1).collect();
    let apex = x.add_vertex("apex").unwrap();
    for (k, e) in rim.into_iter().enumerate() {
        let [a, b] = x.edges()[e].ends;
        let f = x.add_triangle(format!("c{k}"), a, b, apex).unwrap();
        x.set_orbit(Cell::Face(f), format!("c{k}"));
    }
    for e in 0..x.edges().len() {
        x.set_orbit(Cell::Edge(e), format!("e{e}"));
    }
    x
}
