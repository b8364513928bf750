//! Hierarchies in quotient form, passing them down to vertex groups of a
//! tree, and the depth bound for JSJ hierarchies.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::gog::{GraphOfGroups, VertexKind};
use crate::group::GroupRegistry;
use crate::tree::{ActionClass, ActionDescriptor, Point, Subtree, TreeHat};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HNode {
    pub name: String,
    pub group: String,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// The node's splitting. Vertex orbits of the tree are the names of
    /// the children.
    pub tree: Option<TreeHat>,
    /// Rigid or flexible as a vertex of the parent's splitting.
    pub kind: VertexKind,
    /// A leaf cut off at the run horizon rather than a terminal node.
    pub truncated: bool,
    /// Node of the hierarchy this one was passed down from.
    pub origin: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hierarchy {
    pub name: String,
    nodes: Vec<HNode>,
    /// Every splitting is a JSJ decomposition.
    pub jsj: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HEllipticity {
    /// Contained in the group of this terminal node.
    Terminal(usize),
    /// Contained in a node at every level, down to truncated leaves.
    UpToHorizon,
    No,
}

impl Hierarchy {
    pub fn new(name: impl Into<String>, group: impl Into<String>) -> Self {
        let name = name.into();
        Hierarchy {
            nodes: vec![HNode {
                name: name.clone(),
                group: group.into(),
                parent: None,
                children: Vec::new(),
                tree: None,
                kind: VertexKind::Unknown,
                truncated: false,
                origin: None,
            }],
            name,
            jsj: false,
        }
    }

    pub fn add_child(
        &mut self,
        parent: usize,
        name: impl Into<String>,
        group: impl Into<String>,
        kind: VertexKind,
    ) -> Result<usize> {
        let name = name.into();
        if parent >= self.nodes.len() {
            return Err(Error::MalformedHierarchy(format!("parent of `{name}` does not exist")));
        }
        if self.node_named(&name).is_some() {
            return Err(Error::MalformedHierarchy(format!("duplicate node `{name}`")));
        }
        let idx = self.nodes.len();
        self.nodes.push(HNode {
            name,
            group: group.into(),
            parent: Some(parent),
            children: Vec::new(),
            tree: None,
            kind,
            truncated: false,
            origin: None,
        });
        self.nodes[parent].children.push(idx);
        Ok(idx)
    }

    pub fn set_tree(&mut self, node: usize, tree: TreeHat) {
        self.nodes[node].tree = Some(tree);
    }

    pub fn set_truncated(&mut self, node: usize, truncated: bool) {
        self.nodes[node].truncated = truncated;
    }

    pub fn set_origin(&mut self, node: usize, origin: usize) {
        self.nodes[node].origin = Some(origin);
    }

    pub fn nodes(&self) -> &[HNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &HNode {
        &self.nodes[i]
    }

    pub fn root_group(&self) -> &str {
        &self.nodes[0].group
    }

    pub fn node_named(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn is_trivial(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn is_terminal(&self, i: usize) -> bool {
        self.nodes[i].children.is_empty() && !self.nodes[i].truncated
    }

    pub fn terminals(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.is_terminal(i)).collect()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].children.is_empty()).collect()
    }

    pub fn depth_of(&self, mut i: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[i].parent {
            i = p;
            d += 1;
        }
        d
    }

    pub fn depth(&self) -> usize {
        (0..self.nodes.len()).map(|i| self.depth_of(i)).max().unwrap_or(0)
    }

    /// Height of the subtree below node `i`.
    pub fn subtree_depth(&self, i: usize) -> usize {
        self.nodes[i].children.iter().map(|&c| 1 + self.subtree_depth(c)).max().unwrap_or(0)
    }

    pub fn level(&self, n: usize) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.depth_of(i) == n).collect()
    }

    pub fn child_for_orbit(&self, u: usize, orbit: &str) -> Option<usize> {
        self.nodes[u].children.iter().copied().find(|&c| self.nodes[c].name == orbit)
    }

    pub fn validate(&self, groups: &GroupRegistry) -> Result<()> {
        for (i, n) in self.nodes.iter().enumerate() {
            let g = groups.get(&n.group)?;
            if let Some(p) = n.parent {
                if !groups.is_subgroup(&n.group, &self.nodes[p].group) {
                    return Err(Error::MalformedHierarchy(format!(
                        "group of `{}` is not declared ≤ the group of its parent",
                        n.name
                    )));
                }
            }
            match &n.tree {
                None if !n.children.is_empty() => {
                    return Err(Error::MalformedHierarchy(format!("`{}` has children but no splitting", n.name)))
                }
                None => {}
                Some(t) => {
                    t.validate(groups)?;
                    if t.vertices().len() == 1 {
                        return Err(Error::MalformedHierarchy(format!(
                            "`{}` acts on a single point and must be terminal",
                            n.name
                        )));
                    }
                    let orbits: BTreeSet<&str> = t.vertices().iter().map(|v| v.orbit.as_str()).collect();
                    let names: BTreeSet<&str> = n.children.iter().map(|&c| self.nodes[c].name.as_str()).collect();
                    if orbits != names {
                        return Err(Error::MalformedHierarchy(format!(
                            "children of `{}` do not match the vertex orbits of its tree",
                            n.name
                        )));
                    }
                    for &c in &n.children {
                        let rep = t.vertices().iter().find(|v| v.orbit == self.nodes[c].name).unwrap();
                        if !groups.is_equal(&rep.stab, &self.nodes[c].group) {
                            return Err(Error::MalformedHierarchy(format!(
                                "group of `{}` differs from its vertex stabilizer `{}`",
                                self.nodes[c].name, rep.stab
                            )));
                        }
                    }
                }
            }
            if self.jsj && g.is_slender && !n.children.is_empty() {
                return Err(Error::MalformedHierarchy(format!(
                    "slender node `{}` of a JSJ hierarchy must be terminal",
                    self.nodes[i].name
                )));
            }
        }
        Ok(())
    }

    /// Whether `g` is contained in a terminal group, or in some node of
    /// every level when the hierarchy was cut at a horizon. A non-slender
    /// group may lie in at most one node per level.
    pub fn is_h_elliptic(&self, g: &str, groups: &GroupRegistry) -> Result<HEllipticity> {
        let slender = groups.is_slender(g)?;
        for n in 0..=self.depth() {
            let cs: Vec<usize> =
                self.level(n).into_iter().filter(|&u| groups.is_subgroup(g, &self.nodes[u].group)).collect();
            if !slender && cs.len() > 1 {
                return Err(Error::invariant(
                    "a non-slender group lies in one node per level",
                    format!("`{g}` lies in {} nodes at level {n}", cs.len()),
                ));
            }
            if let Some(&u) = cs.iter().find(|&&u| self.is_terminal(u)) {
                return Ok(HEllipticity::Terminal(u));
            }
            if cs.is_empty() {
                return Ok(HEllipticity::No);
            }
        }
        Ok(HEllipticity::UpToHorizon)
    }
}

/// Whether group `g` is elliptic in `t` (as far as declared).
pub fn elliptic_orbits(t: &TreeHat, g: &str, groups: &GroupRegistry) -> Option<BTreeSet<String>> {
    let descs = t.action_of(g, groups)?;
    let c = t.classify(&descs).ok()?;
    (c.class == ActionClass::Elliptic).then(|| c.fixed.iter().map(|&y| t.vertices()[y].orbit.clone()).collect())
}

struct Passdown<'a> {
    k: &'a Hierarchy,
    t: &'a TreeHat,
    v: &'a str,
}

impl Passdown<'_> {
    /// Intersections with a group fixing a vertex of another orbit lie in an
    /// edge group, hence are slender.
    fn meet(&self, a: &str, b: &str, groups: &mut GroupRegistry) -> Result<String> {
        let force = [a, b].iter().any(|g| {
            elliptic_orbits(self.t, g, groups).is_some_and(|os| !os.contains(self.v))
        });
        groups.meet(a, b, force)
    }

    fn descend(
        &self,
        w: String,
        mut u: usize,
        parent: Option<usize>,
        out: &mut Hierarchy,
        groups: &mut GroupRegistry,
    ) -> Result<usize> {
        loop {
            let node = &self.k.nodes[u];
            if node.children.is_empty() {
                let idx = self.place(&w, u, parent, out);
                out.nodes[idx].truncated = node.truncated;
                return Ok(idx);
            }
            let tu = node.tree.as_ref().expect("validated: inner nodes carry a splitting");
            let descs = tu.action_of(&w, groups).ok_or_else(|| {
                Error::hypothesis(
                    "hierarchy passdown",
                    format!("action of `{w}` on the splitting of `{}` is not declared", node.name),
                )
            })?;
            let c = tu.classify(&descs)?;
            if c.class == ActionClass::Elliptic {
                let y = *c.fixed.first().expect("elliptic actions fix a vertex");
                let child = self.k.child_for_orbit(u, &tu.vertices()[y].orbit).expect("validated orbit");
                groups.declare_subgroup(&w, &self.k.nodes[child].group)?;
                u = child;
                continue;
            }
            let sub = tu.minimal_invariant_subtree(&descs)?;
            let idx = self.place(&w, u, parent, out);
            let mut orbit_child: BTreeMap<String, usize> = BTreeMap::new();
            for &y in &sub.vertices {
                let orbit = tu.vertices()[y].orbit.clone();
                if orbit_child.contains_key(&orbit) {
                    continue;
                }
                let cu = self.k.child_for_orbit(u, &orbit).expect("validated orbit");
                let cg = self.meet(&w, &self.k.nodes[cu].group, groups)?;
                let ci = self.descend(cg, cu, Some(idx), out, groups)?;
                orbit_child.insert(orbit, ci);
            }
            let names: BTreeMap<String, (String, String)> = orbit_child
                .iter()
                .map(|(o, &ci)| (o.clone(), (out.nodes[ci].name.clone(), out.nodes[ci].group.clone())))
                .collect();
            let tree = restrict(tu, &sub, &names, &w, &descs, groups, self)?;
            out.nodes[idx].tree = Some(tree);
            return Ok(idx);
        }
    }

    fn place(&self, w: &str, u: usize, parent: Option<usize>, out: &mut Hierarchy) -> usize {
        let name = format!("{}|{}", self.v, self.k.nodes[u].name);
        let idx = match parent {
            None => {
                out.nodes[0].group = w.to_string();
                out.nodes[0].name = name;
                0
            }
            Some(p) => {
                out.nodes.push(HNode {
                    name,
                    group: w.to_string(),
                    parent: Some(p),
                    children: Vec::new(),
                    tree: None,
                    kind: self.k.nodes[u].kind,
                    truncated: false,
                    origin: None,
                });
                let i = out.nodes.len() - 1;
                out.nodes[p].children.push(i);
                i
            }
        };
        out.nodes[idx].origin = Some(u);
        idx
    }
}

/// The tree `w` acts on: the minimal invariant subtree of `tu`, relabelled
/// with the intersected stabilizers and the new child names.
fn restrict(
    tu: &TreeHat,
    sub: &Subtree,
    names: &BTreeMap<String, (String, String)>,
    w: &str,
    descs: &[ActionDescriptor],
    groups: &mut GroupRegistry,
    pd: &Passdown<'_>,
) -> Result<TreeHat> {
    let mut t = TreeHat::new(format!("{}∩{w}", tu.name));
    let mut vmap = BTreeMap::new();
    for &y in &sub.vertices {
        let vy = &tu.vertices()[y];
        let i = t.add_vertex(vy.name.clone())?;
        let (child, group) = &names[&vy.orbit];
        t.set_vertex_orbit(i, child.clone());
        t.set_vertex_stab(i, group.clone());
        vmap.insert(y, i);
    }
    for e in tu.edges() {
        if let (Some(&a), Some(&b)) = (vmap.get(&e.ends[0]), vmap.get(&e.ends[1])) {
            let i = t.add_edge(e.name.clone(), a, b)?;
            let stab = pd.meet(w, &e.stab, groups)?;
            for y in [a, b] {
                groups.declare_subgroup(&stab, &t.vertices()[y].stab)?;
            }
            t.set_edge_stab(i, stab);
            t.set_edge_orbit(i, e.orbit.clone());
        }
    }
    let mut imap = BTreeMap::new();
    for &p in &sub.ideals {
        let ip = &tu.ideals()[p];
        let ray: Vec<usize> = ip.ray.iter().filter_map(|y| vmap.get(y).copied()).collect();
        imap.insert(p, t.add_ideal(ip.name.clone(), ray)?);
    }
    let remap = |d: &ActionDescriptor| -> Option<ActionDescriptor> {
        match d {
            ActionDescriptor::Elliptic { fixed } => {
                let f: BTreeSet<usize> = fixed.iter().filter_map(|y| vmap.get(y).copied()).collect();
                (!f.is_empty()).then_some(ActionDescriptor::Elliptic { fixed: f })
            }
            ActionDescriptor::Hyperbolic { ends, translation_length, swaps_ends } => Some(ActionDescriptor::Hyperbolic {
                ends: [*imap.get(&ends[0])?, *imap.get(&ends[1])?],
                translation_length: *translation_length,
                swaps_ends: *swaps_ends,
            }),
        }
    };
    for (g, ds) in &tu.actions {
        let kept: Option<Vec<ActionDescriptor>> = ds.iter().map(remap).collect();
        if let Some(kept) = kept {
            t.actions.insert(g.clone(), kept);
        }
    }
    if let Some(kept) = descs.iter().map(remap).collect::<Option<Vec<_>>>() {
        t.actions.insert(w.to_string(), kept);
    }
    for (name, p) in &tu.images {
        let q = match *p {
            Point::Vertex(y) => vmap.get(&y).map(|&i| Point::Vertex(i)),
            Point::Ideal(i) => imap.get(&i).map(|&j| Point::Ideal(j)),
        };
        if let Some(q) = q {
            t.images.insert(name.clone(), q);
        }
    }
    Ok(t)
}

/// Passes `k` down to the vertex groups of the splitting `t`, one
/// hierarchy per vertex orbit, and asserts the four properties of the
/// construction.
pub fn passdown_hierarchy(
    t: &TreeHat,
    gog: &GraphOfGroups,
    k: &Hierarchy,
    groups: &mut GroupRegistry,
) -> Result<BTreeMap<String, Hierarchy>> {
    for e in t.edges() {
        if !groups.is_slender(&e.stab)? {
            return Err(Error::hypothesis(
                "hierarchy passdown",
                format!("edge `{}` of `{}` has non-slender stabilizer `{}`", e.name, t.name, e.stab),
            ));
        }
    }
    let dk = k.depth();
    let terminals_ok = k.terminals().iter().all(|&u| {
        let g = &k.nodes[u].group;
        groups.is_slender(g).unwrap_or(false) || elliptic_orbits(t, g, groups).is_some()
    });
    let mut out = BTreeMap::new();
    for gv in &gog.vertices {
        let v = gv.name.as_str();
        let rigid_bound = !k.is_trivial() && gog.jsj && gv.kind == VertexKind::Rigid;
        if rigid_bound {
            let top = k.nodes[0].tree.as_ref().expect("nontrivial hierarchies split at the root");
            if elliptic_orbits(top, &gv.label, groups).is_none() {
                return Err(Error::hypothesis(
                    "hierarchy passdown",
                    format!("rigid vertex group `{}` is not elliptic in the top splitting of `{}`", gv.label, k.name),
                ));
            }
        }
        let pd = Passdown { k, t, v };
        let root = pd.meet(k.root_group(), &gv.label, groups)?;
        let mut kv = Hierarchy::new(v, root.clone());
        pd.descend(root, 0, None, &mut kv, groups)?;
        kv.name = v.to_string();

        let dv = kv.depth();
        if dv > dk {
            return Err(Error::invariant("passed-down depth ≤ original depth", format!("{v}: {dv} > {dk}")));
        }
        for (i, n) in kv.nodes.iter().enumerate() {
            let o = n.origin.expect("every passed-down node has an origin");
            if kv.depth_of(i) > k.depth_of(o) {
                return Err(Error::invariant(
                    "nodes sit no deeper than their origin",
                    format!("`{}` from `{}`", n.name, k.nodes[o].name),
                ));
            }
            if !groups.is_subgroup(&n.group, &k.nodes[o].group) {
                return Err(Error::invariant(
                    "node groups lie in their origin's group",
                    format!("`{}` from `{}`", n.name, k.nodes[o].name),
                ));
            }
        }
        if rigid_bound && dv >= dk {
            return Err(Error::invariant("rigid vertices lose a level", format!("{v}: depth {dv}")));
        }
        if terminals_ok {
            for u in kv.terminals() {
                let g = &kv.nodes[u].group;
                let ok = groups.is_slender(g)?
                    || k.terminals().iter().any(|&w| groups.is_equal(g, &k.nodes[w].group));
                if !ok {
                    return Err(Error::invariant(
                        "passed-down terminals are slender or original terminals",
                        format!("`{}` in {v}", kv.nodes[u].name),
                    ));
                }
            }
        }
        out.insert(v.to_string(), kv);
    }
    Ok(out)
}

/// Outcome of replaying the depth bound for a JSJ hierarchy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthReport {
    pub depth_h: usize,
    pub depth_k: usize,
    /// The offending branch, if the bound fails.
    pub violation: Option<String>,
    pub log: Vec<String>,
}

impl DepthReport {
    pub fn holds(&self) -> bool {
        self.violation.is_none() && self.depth_h <= self.depth_k + 1
    }
}

/// Replays the induction bounding the depth of a JSJ hierarchy `h` by
/// `depth(k) + 1`: flexible vertices are terminal after one more level,
/// rigid vertices receive a strictly shallower passed-down hierarchy.
pub fn jsj_depth_bound(h: &Hierarchy, k: &Hierarchy, groups: &mut GroupRegistry) -> Result<DepthReport> {
    if !h.jsj {
        return Err(Error::precondition("jsj_depth_bound", format!("`{}` is not flagged JSJ", h.name)));
    }
    let mut report = DepthReport { depth_h: h.depth(), depth_k: k.depth(), violation: None, log: Vec::new() };
    replay(h, 0, k, groups, &mut report)?;
    if report.violation.is_none() && report.depth_h > report.depth_k + 1 {
        return Err(Error::invariant(
            "replay accepted a hierarchy deeper than the bound",
            format!("{} > {} + 1", report.depth_h, report.depth_k),
        ));
    }
    Ok(report)
}

fn replay(h: &Hierarchy, u: usize, k: &Hierarchy, groups: &mut GroupRegistry, report: &mut DepthReport) -> Result<()> {
    let node = &h.nodes[u];
    report.log.push(format!("{}: depth(K) = {}", node.name, k.depth()));
    if k.depth() == 0 {
        if !node.children.is_empty() {
            report.violation.get_or_insert(format!("`{}` splits although its passed-down hierarchy is trivial", node.name));
        }
        return Ok(());
    }
    let Some(t) = &node.tree else { return Ok(()) };
    let mut gog = GraphOfGroups::quotient(t);
    gog.jsj = true;
    for gv in &mut gog.vertices {
        let c = h.child_for_orbit(u, &gv.name).expect("validated orbit");
        gv.kind = h.nodes[c].kind;
    }
    if let Some(gv) = gog.vertices.iter().find(|gv| gv.kind == VertexKind::Unknown) {
        return Err(Error::hypothesis("JSJ depth bound", format!("vertex `{}` is neither rigid nor flexible", gv.name)));
    }
    let passed = passdown_hierarchy(t, &gog, k, groups)?;
    for &c in &node.children {
        let child = &h.nodes[c];
        match child.kind {
            VertexKind::Flexible => {
                if h.subtree_depth(c) > 1 {
                    report.violation.get_or_insert(format!("flexible `{}` has depth {} > 1", child.name, h.subtree_depth(c)));
                }
            }
            _ => replay(h, c, &passed[&child.name], groups, report)?,
        }
    }
    Ok(())
}
