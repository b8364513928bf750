//! Cut vertices, cutpoint-free components and the cutpoint tree.
//!
//! Removing a vertex with its open star leaves the full subcomplex on the
//! remaining vertices, so cutpoints are exactly the articulation points of
//! the 1-skeleton and the cutpoint-free components are its blocks together
//! with the faces they span.

use std::collections::{BTreeMap, BTreeSet};

use crate::complex::{Cell, Complex2};
use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::group::GroupRegistry;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub vertices: BTreeSet<usize>,
    pub edges: BTreeSet<usize>,
    pub faces: BTreeSet<usize>,
}

/// Blocks of the 1-skeleton (with the faces they carry) and the cut vertices.
pub fn blocks(x: &Complex2) -> (Vec<Block>, BTreeSet<usize>) {
    let n = x.vertices().len();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (i, e) in x.edges().iter().enumerate() {
        adj[e.ends[0]].push((e.ends[1], i));
        adj[e.ends[1]].push((e.ends[0], i));
    }
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut time = 0;
    let mut cut = BTreeSet::new();
    let mut edge_blocks: Vec<BTreeSet<usize>> = Vec::new();
    let mut estack: Vec<usize> = Vec::new();
    let mut singletons = Vec::new();

    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        if adj[root].is_empty() {
            singletons.push(root);
        }
        disc[root] = time;
        low[root] = time;
        time += 1;
        let mut root_children = 0;
        // frame: (vertex, edge used to enter, next adjacency index)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        while let Some(&mut (v, pe, ref mut next)) = stack.last_mut() {
            if *next < adj[v].len() {
                let (w, e) = adj[v][*next];
                *next += 1;
                if e == pe {
                    continue;
                }
                if disc[w] == usize::MAX {
                    estack.push(e);
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    if v == root {
                        root_children += 1;
                    }
                    stack.push((w, e, 0));
                } else if disc[w] < disc[v] {
                    estack.push(e);
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[v]);
                    if low[v] >= disc[p] {
                        if p != root {
                            cut.insert(p);
                        }
                        let mut comp = BTreeSet::new();
                        while let Some(f) = estack.pop() {
                            comp.insert(f);
                            if f == pe {
                                break;
                            }
                        }
                        edge_blocks.push(comp);
                    }
                }
            }
        }
        if root_children > 1 {
            cut.insert(root);
        }
    }

    let mut edge_block = vec![usize::MAX; x.edges().len()];
    let mut out: Vec<Block> = edge_blocks
        .into_iter()
        .enumerate()
        .map(|(b, edges)| {
            let mut vertices = BTreeSet::new();
            for &e in &edges {
                edge_block[e] = b;
                vertices.extend(x.edges()[e].ends);
            }
            Block { vertices, edges, faces: BTreeSet::new() }
        })
        .collect();
    for (f, face) in x.faces().iter().enumerate() {
        let b = edge_block[face.edges()[0]];
        out[b].faces.insert(f);
    }
    for v in singletons {
        out.push(Block { vertices: [v].into(), edges: BTreeSet::new(), faces: BTreeSet::new() });
    }
    out.sort_by(|a, b| a.vertices.iter().next().cmp(&b.vertices.iter().next()).then(a.edges.cmp(&b.edges)));
    (out, cut)
}

/// Vertices whose removal, with their open star, disconnects the complex.
pub fn cutpoints(x: &Complex2) -> BTreeSet<usize> {
    blocks(x).1
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    /// A cutpoint-free component, by index into [`CutpointTree::blocks`].
    Piece(usize),
    Cut(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub stab: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeEdge {
    pub piece: usize,
    pub cut: usize,
    pub stab: String,
}

/// The bipartite tree B_X of cutpoint-free components and cut vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutpointTree {
    pub blocks: Vec<Block>,
    pub nodes: Vec<Node>,
    pub edges: Vec<TreeEdge>,
}

impl CutpointTree {
    pub fn is_tree(&self) -> bool {
        is_tree(self.nodes.len(), self.edges.iter().map(|e| (e.piece, e.cut)))
    }
}

/// Acyclic and connected; the empty graph is not a tree.
pub fn is_tree(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> bool {
    if n == 0 {
        return false;
    }
    let mut d = DisjointSets::new(n);
    let mut m = 0;
    for (a, b) in edges {
        if !d.union(a, b) {
            return false;
        }
        m += 1;
    }
    m == n - 1
}

/// A vertex of B'_X: the union of the B_X nodes joined by collapsed edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedNode {
    pub members: Vec<usize>,
    pub vertices: BTreeSet<usize>,
    pub edges: BTreeSet<usize>,
    pub faces: BTreeSet<usize>,
    pub stab: String,
    pub slender: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedCutpointTree {
    pub nodes: Vec<ReducedNode>,
    pub edges: Vec<(usize, usize, String)>,
}

impl ReducedCutpointTree {
    pub fn is_tree(&self) -> bool {
        is_tree(self.nodes.len(), self.edges.iter().map(|e| (e.0, e.1)))
    }

    /// Covolume of the depth-one structure whose terminal complexes are the
    /// subcomplexes of the non-slender vertices. Vertices sharing a triangle
    /// orbit lie in one orbit of vertices and are counted once.
    pub fn covolume(&self, x: &Complex2) -> usize {
        let mut tags = BTreeSet::new();
        for n in self.nodes.iter().filter(|n| !n.slender) {
            for &f in &n.faces {
                if x.faces()[f].is_triangle() {
                    tags.insert(x.faces()[f].label.orbit.as_str());
                }
            }
        }
        tags.len()
    }
}

fn piece_stab(x: &Complex2, block: &Block, whole: bool, ambient: Option<&str>, groups: &mut GroupRegistry, idx: usize) -> Result<String> {
    if whole {
        if let Some(a) = ambient {
            return Ok(a.to_string());
        }
    }
    let infinite = block.vertices.iter().any(|&v| x.is_marked(v));
    let mut slender_cells = true;
    let cells = block
        .vertices
        .iter()
        .map(|&v| Cell::Vertex(v))
        .chain(block.edges.iter().map(|&e| Cell::Edge(e)))
        .chain(block.faces.iter().map(|&f| Cell::Face(f)));
    for c in cells {
        slender_cells &= groups.is_slender(&x.label(c).stab)?;
    }
    let sups: Vec<&str> = ambient.into_iter().collect();
    let slender = !infinite && slender_cells;
    Ok(groups.derive(&format!("{}/B{idx}", x.name), &sups, slender, true))
}

/// Builds B_X. Block stabilizers are registered as fresh H-elliptic groups
/// (below `ambient` when given), slender exactly when the block is finite
/// (no marked vertex) with slender cell stabilizers; a complex without
/// cutpoints is its own single block with stabilizer `ambient`. The edge
/// from cut vertex v into a block carries stab(v) when stab(v) fixes a cell
/// of the block at v, and otherwise the stabilizer of the first block edge
/// at v.
pub fn cutpoint_tree(x: &Complex2, ambient: Option<&str>, groups: &mut GroupRegistry) -> Result<CutpointTree> {
    if x.vertices().is_empty() || !x.is_connected() {
        return Err(Error::precondition("cutpoint_tree", format!("complex `{}` is not connected", x.name)));
    }
    let (blocks, cut) = blocks(x);
    let whole = blocks.len() == 1;
    let mut nodes = Vec::new();
    for (i, b) in blocks.iter().enumerate() {
        let stab = piece_stab(x, b, whole, ambient, groups, i)?;
        nodes.push(Node { kind: NodeKind::Piece(i), stab });
    }
    let mut cut_node = BTreeMap::new();
    for &v in &cut {
        cut_node.insert(v, nodes.len());
        nodes.push(Node { kind: NodeKind::Cut(v), stab: x.vertices()[v].label.stab.clone() });
    }
    let mut edges = Vec::new();
    for (i, b) in blocks.iter().enumerate() {
        for &v in b.vertices.intersection(&cut) {
            let vstab = &x.vertices()[v].label.stab;
            let incident: Vec<Cell> = b
                .edges
                .iter()
                .filter(|&&e| x.edges()[e].ends.contains(&v))
                .map(|&e| Cell::Edge(e))
                .chain(
                    b.faces
                        .iter()
                        .filter(|&&f| x.face_vertices(f).contains(&v))
                        .map(|&f| Cell::Face(f)),
                )
                .collect();
            let fixes = incident.iter().any(|&c| groups.is_equal(&x.label(c).stab, vstab));
            let stab = if fixes {
                vstab.clone()
            } else {
                incident.first().map(|&c| x.label(c).stab.clone()).unwrap_or_else(|| vstab.clone())
            };
            edges.push(TreeEdge { piece: i, cut: cut_node[&v], stab });
        }
    }
    let t = CutpointTree { blocks, nodes, edges };
    if !t.is_tree() {
        return Err(Error::invariant(
            "cutpoint tree is acyclic and connected",
            format!("B_X of `{}` is not a tree", x.name),
        ));
    }
    Ok(t)
}

/// B'_X: B_X with every edge of non-slender stabilizer collapsed.
pub fn reduced_cutpoint_tree(
    x: &Complex2,
    ambient: Option<&str>,
    groups: &mut GroupRegistry,
) -> Result<(CutpointTree, ReducedCutpointTree)> {
    let t = cutpoint_tree(x, ambient, groups)?;
    let mut d = DisjointSets::new(t.nodes.len());
    for e in &t.edges {
        if !groups.is_slender(&e.stab)? {
            d.union(e.piece, e.cut);
        }
    }
    let (cls, count) = d.classes();
    let mut nodes: Vec<ReducedNode> = (0..count)
        .map(|_| ReducedNode {
            members: Vec::new(),
            vertices: BTreeSet::new(),
            edges: BTreeSet::new(),
            faces: BTreeSet::new(),
            stab: String::new(),
            slender: false,
        })
        .collect();
    for (i, node) in t.nodes.iter().enumerate() {
        let r = &mut nodes[cls[i]];
        r.members.push(i);
        match node.kind {
            NodeKind::Piece(b) => {
                let blk = &t.blocks[b];
                r.vertices.extend(&blk.vertices);
                r.edges.extend(&blk.edges);
                r.faces.extend(&blk.faces);
            }
            NodeKind::Cut(v) => {
                r.vertices.insert(v);
            }
        }
    }
    for (k, r) in nodes.iter_mut().enumerate() {
        r.stab = if r.members.len() == 1 {
            t.nodes[r.members[0]].stab.clone()
        } else {
            let sups: Vec<&str> = ambient.into_iter().collect();
            let id = groups.derive(&format!("{}/M{k}", x.name), &sups, false, true);
            for &m in &r.members {
                let s = t.nodes[m].stab.clone();
                groups.declare_subgroup(&s, &id)?;
            }
            id
        };
        r.slender = groups.is_slender(&r.stab)?;
    }
    let edges = t
        .edges
        .iter()
        .filter(|e| cls[e.piece] != cls[e.cut])
        .map(|e| (cls[e.piece], cls[e.cut], e.stab.clone()))
        .collect();
    Ok((t, ReducedCutpointTree { nodes, edges }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupRef;

    fn bowtie() -> Complex2 {
        let mut x = Complex2::new("bow");
        for n in ["a", "b", "v", "c", "d"] {
            x.add_vertex(n).unwrap();
        }
        x.add_triangle("t1", 0, 1, 2).unwrap();
        x.add_triangle("t2", 2, 3, 4).unwrap();
        x
    }

    /// Vertices whose deletion increases the number of components.
    fn brute_cutpoints(x: &Complex2) -> BTreeSet<usize> {
        let n = x.vertices().len();
        let base = x.vertex_components().1;
        (0..n)
            .filter(|&v| {
                let mut d = DisjointSets::new(n);
                for e in x.edges() {
                    if !e.ends.contains(&v) {
                        d.union(e.ends[0], e.ends[1]);
                    }
                }
                let roots: BTreeSet<usize> = (0..n).filter(|&w| w != v).map(|w| d.find(w)).collect();
                roots.len() > base
            })
            .collect()
    }

    #[test]
    fn two_triangles_sharing_a_vertex() {
        let x = bowtie();
        assert_eq!(cutpoints(&x), [2].into());
        let mut g = GroupRegistry::new();
        let t = cutpoint_tree(&x, None, &mut g).unwrap();
        assert_eq!(t.nodes.len(), 3);
        assert_eq!(t.edges.len(), 2);
        assert!(t.is_tree());
    }

    #[test]
    fn single_triangle_has_no_cutpoints() {
        let mut x = Complex2::new("t");
        for n in ["a", "b", "c"] {
            x.add_vertex(n).unwrap();
        }
        x.add_triangle("t", 0, 1, 2).unwrap();
        assert!(cutpoints(&x).is_empty());
        let mut g = GroupRegistry::new();
        g.insert(GroupRef::new("K")).unwrap();
        let t = cutpoint_tree(&x, Some("K"), &mut g).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.nodes[0].stab, "K");
    }

    #[test]
    fn chain_of_three_triangles() {
        let mut x = Complex2::new("chain");
        for i in 0..7 {
            x.add_vertex(format!("v{i}")).unwrap();
        }
        x.add_triangle("t0", 0, 1, 2).unwrap();
        x.add_triangle("t1", 2, 3, 4).unwrap();
        x.add_triangle("t2", 4, 5, 6).unwrap();
        assert_eq!(cutpoints(&x), brute_cutpoints(&x));
        assert_eq!(cutpoints(&x), [2, 4].into());
    }

    #[test]
    fn matches_brute_force_on_assorted_graphs() {
        let mut x = Complex2::new("g");
        for i in 0..9 {
            x.add_vertex(format!("v{i}")).unwrap();
        }
        for (a, b) in [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3), (5, 6), (7, 8)] {
            x.add_edge(format!("e{a}{b}"), a, b).unwrap();
        }
        assert_eq!(cutpoints(&x), brute_cutpoints(&x));
    }

    #[test]
    fn wedge_of_three_and_collapse() {
        // three cutpoint-free triangles glued at v
        let mut x = Complex2::new("wedge");
        let v = x.add_vertex("v").unwrap();
        for k in 0..3 {
            let a = x.add_vertex(format!("a{k}")).unwrap();
            let b = x.add_vertex(format!("b{k}")).unwrap();
            x.add_triangle(format!("t{k}"), v, a, b).unwrap();
        }
        let mut g = GroupRegistry::new();
        g.insert(GroupRef::new("V")).unwrap();
        g.insert(GroupRef::new("K")).unwrap();
        g.declare_subgroup("V", "K").unwrap();
        x.set_stab(Cell::Vertex(v), "V");
        // the V-stabilizer fixes the edges of piece 0 at v only
        let e0 = x.edge_between(v, 1).unwrap();
        x.set_stab(Cell::Edge(e0), "V");
        let t = cutpoint_tree(&x, Some("K"), &mut g).unwrap();
        assert_eq!(t.nodes.len(), 4);
        let star_center = t.nodes.iter().position(|n| n.kind == NodeKind::Cut(v)).unwrap();
        assert!(t.edges.iter().all(|e| e.cut == star_center));
        let (_, r) = reduced_cutpoint_tree(&x, Some("K"), &mut g).unwrap();
        // one non-slender edge collapsed: 4 nodes become 3
        assert_eq!(r.nodes.len(), 3);
        assert_eq!(r.edges.len(), 2);
        assert!(r.is_tree());
        assert!(r.covolume(&x) <= x.covolume());
    }

    #[test]
    fn disconnected_input_is_rejected() {
        let mut x = bowtie();
        x.add_vertex("far").unwrap();
        let mut g = GroupRegistry::new();
        assert!(matches!(cutpoint_tree(&x, None, &mut g), Err(Error::Precondition { .. })));
    }
}
