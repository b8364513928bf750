//! Cross-level bookkeeping of triangles: τ maps, stable pairs, the classes
//! they generate, the graphs B_w and B'_w, the cone criterion, and the
//! levels after which things stop changing.
//!
//! Triangles and edges are tracked by orbit tag. All stability notions are
//! relative to the last level computed.

use std::collections::{BTreeMap, BTreeSet};

use crate::cones::{enumerate_simple_cones, Cone};
use crate::complex::Complex2;
use crate::cutpoint::{cutpoints, is_tree};
use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::group::GroupRegistry;

/// τ between consecutive levels, on triangle orbit tags.
pub type TauMap = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TauFamily {
    /// `steps[n]` is τ from level n to level n + 1.
    pub steps: Vec<TauMap>,
}

impl TauFamily {
    /// τ from level `n` to level `m ≥ n`.
    pub fn compose(&self, n: usize, m: usize) -> TauMap {
        let mut acc: Option<TauMap> = None;
        for step in &self.steps[n..m] {
            acc = Some(match acc {
                None => step.clone(),
                Some(a) => a.into_iter().filter_map(|(k, v)| step.get(&v).map(|w| (k, w.clone()))).collect(),
            });
        }
        acc.unwrap_or_default()
    }

    pub fn apply(&self, n: usize, m: usize, t: &str) -> Option<String> {
        let mut cur = t.to_string();
        for step in &self.steps[n..m] {
            cur = step.get(&cur)?.clone();
        }
        Some(cur)
    }
}

/// Whether `tau` is total on `from` and a bijection onto `to`.
pub fn is_total_bijection(tau: &TauMap, from: &BTreeSet<String>, to: &BTreeSet<String>) -> bool {
    let images: BTreeSet<&String> = from.iter().filter_map(|t| tau.get(t)).collect();
    from.iter().all(|t| tau.contains_key(t)) && images.len() == from.len() && images.len() == to.len()
}

/// Two triangles of one complex sharing an edge, by orbit tags; `a ≤ b`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair {
    pub a: String,
    pub b: String,
    pub edge: String,
}

impl Pair {
    fn new(s: &str, t: &str, edge: &str) -> Self {
        let (a, b) = if s <= t { (s, t) } else { (t, s) };
        Pair { a: a.into(), b: b.into(), edge: edge.into() }
    }

    fn tags(&self) -> (&str, &str) {
        (&self.a, &self.b)
    }
}

/// All pairs of a complex.
pub fn pairs_of(x: &Complex2) -> BTreeSet<Pair> {
    let mut out = BTreeSet::new();
    for e in 0..x.edges().len() {
        let tris: Vec<usize> = x.edge_faces(e).into_iter().filter(|&f| x.faces()[f].is_triangle()).collect();
        for (i, &f) in tris.iter().enumerate() {
            for &g in &tris[i + 1..] {
                out.insert(Pair::new(&x.faces()[f].label.orbit, &x.faces()[g].label.orbit, &x.edges()[e].label.orbit));
            }
        }
    }
    out
}

/// The complexes of one level with their oriented edge stabilizers, by
/// edge orbit tag.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Level {
    pub complexes: Vec<Complex2>,
    pub stab_plus: BTreeMap<String, String>,
}

impl Level {
    pub fn triangles(&self) -> BTreeSet<String> {
        self.complexes.iter().flat_map(|x| x.triangle_orbits()).map(str::to_string).collect()
    }

    pub fn covolume(&self) -> usize {
        self.triangles().len()
    }

    pub fn pairs(&self) -> BTreeSet<Pair> {
        self.complexes.iter().flat_map(pairs_of).collect()
    }

    /// stab⁺ of an edge of complex `x`: the declared label, else the edge
    /// stabilizer.
    pub fn stab_plus_of<'a>(&'a self, x: &'a Complex2, e: usize) -> &'a str {
        let edge = &x.edges()[e];
        self.stab_plus.get(&edge.label.orbit).map_or(edge.label.stab.as_str(), String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSet {
    pub level: usize,
    pub horizon: usize,
    pub pairs: BTreeSet<Pair>,
    pub stable: BTreeSet<Pair>,
}

/// Pairs of level `n` whose images are pairs at every later level up to
/// the horizon.
pub fn stable_pairs(levels: &[Level], tau: &TauFamily, n: usize, horizon: usize) -> PairSet {
    let pairs = levels[n].pairs();
    let later: Vec<BTreeSet<(String, String)>> = (n + 1..=horizon)
        .map(|k| levels[k].pairs().into_iter().map(|p| (p.a, p.b)).collect())
        .collect();
    let stable = pairs
        .iter()
        .filter(|p| {
            let (a, b) = p.tags();
            (n + 1..=horizon).all(|k| match (tau.apply(n, k, a), tau.apply(n, k, b)) {
                (Some(x), Some(y)) if x != y || a == b => {
                    let key = if x <= y { (x, y) } else { (y, x) };
                    later[k - n - 1].contains(&key)
                }
                _ => false,
            })
        })
        .cloned()
        .collect();
    PairSet { level: n, horizon, pairs, stable }
}

/// One class of the relation generated by stable pairs, inside one complex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Class {
    pub complex: usize,
    pub triangles: BTreeSet<String>,
    pub subcomplex: Complex2,
}

impl Class {
    pub fn edge_orbits(&self) -> BTreeSet<&str> {
        self.subcomplex.edges().iter().map(|e| e.label.orbit.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classes {
    pub level: usize,
    pub classes: Vec<Class>,
    pub class_of: BTreeMap<String, usize>,
}

/// Closes the stable pairs of a level under transitivity. Each class is
/// the subcomplex of its triangles, which is cutpoint free since its
/// triangles are joined through shared edges.
pub fn equivalence_classes(level: &Level, ps: &PairSet) -> Result<Classes> {
    let mut classes = Vec::new();
    let mut class_of = BTreeMap::new();
    for (ci, x) in level.complexes.iter().enumerate() {
        let tags: Vec<&str> = x.triangle_orbits().into_iter().collect();
        let index: BTreeMap<&str, usize> = tags.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let mut d = DisjointSets::new(tags.len());
        for p in pairs_of(x) {
            if ps.stable.contains(&p) {
                d.union(index[p.a.as_str()], index[p.b.as_str()]);
            }
        }
        let (cls, count) = d.classes();
        let mut members: Vec<BTreeSet<String>> = vec![BTreeSet::new(); count];
        for (i, &c) in cls.iter().enumerate() {
            members[c].insert(tags[i].to_string());
        }
        for (k, m) in members.into_iter().enumerate() {
            let faces: BTreeSet<usize> = (0..x.faces().len())
                .filter(|&f| x.faces()[f].is_triangle() && m.contains(&x.faces()[f].label.orbit))
                .collect();
            let (sub, _) = x.triangles_subcomplex(format!("{}~{k}", x.name), &faces);
            if !cutpoints(&sub).is_empty() {
                return Err(Error::invariant(
                    "class subcomplexes are cutpoint free",
                    format!("class {k} of `{}` at level {}", x.name, ps.level),
                ));
            }
            for t in &m {
                class_of.insert(t.clone(), classes.len());
            }
            classes.push(Class { complex: ci, triangles: m, subcomplex: sub });
        }
    }
    Ok(Classes { level: ps.level, classes, class_of })
}

/// B_w for one complex: class nodes first, then one node per edge lying in
/// more than one class subcomplex; incidences carry the stab⁺ label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bw {
    pub classes: Vec<usize>,
    pub shared_edges: Vec<usize>,
    pub incidences: Vec<(usize, usize, String)>,
}

impl Bw {
    pub fn node_count(&self) -> usize {
        self.classes.len() + self.shared_edges.len()
    }

    pub fn is_tree(&self) -> bool {
        is_tree(self.node_count(), self.incidences.iter().map(|&(a, b, _)| (a, b)))
    }

    /// B'_w: incidences with non-slender label collapsed. Returns the node
    /// count and the surviving edges.
    pub fn collapse(&self, groups: &GroupRegistry) -> Result<(usize, Vec<(usize, usize)>)> {
        let mut d = DisjointSets::new(self.node_count());
        for (a, b, s) in &self.incidences {
            if !groups.is_slender(s)? {
                d.union(*a, *b);
            }
        }
        let (cls, count) = d.classes();
        let mut edges = Vec::new();
        for (a, b, s) in &self.incidences {
            if groups.is_slender(s)? {
                edges.push((cls[*a], cls[*b]));
            }
        }
        Ok((count, edges))
    }

    pub fn collapsed_is_tree(&self, groups: &GroupRegistry) -> Result<bool> {
        let (n, edges) = self.collapse(groups)?;
        Ok(is_tree(n, edges))
    }
}

pub fn build_bw(level: &Level, complex: usize, classes: &Classes) -> Bw {
    let x = &level.complexes[complex];
    let mine: Vec<usize> = (0..classes.classes.len()).filter(|&c| classes.classes[c].complex == complex).collect();
    let mut containing: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for f in 0..x.faces().len() {
        if !x.faces()[f].is_triangle() {
            continue;
        }
        let c = classes.class_of[&x.faces()[f].label.orbit];
        for &e in x.faces()[f].edges() {
            containing.entry(e).or_default().insert(c);
        }
    }
    let node: BTreeMap<usize, usize> = mine.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut shared_edges = Vec::new();
    let mut incidences = Vec::new();
    for (&e, cs) in &containing {
        if cs.len() < 2 {
            continue;
        }
        let en = mine.len() + shared_edges.len();
        shared_edges.push(e);
        for c in cs {
            incidences.push((node[c], en, level.stab_plus_of(x, e).to_string()));
        }
    }
    Bw { classes: mine, shared_edges, incidences }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConeVerdict {
    /// Every simple cone lies in one class, and B_w is a tree.
    Certified(Bw),
    /// A simple cone meeting two classes.
    Counterexample(Cone),
    /// Some link exceeded the cap and no counterexample was found.
    Inconclusive { capped: Vec<usize> },
}

/// Triangles joined through shared edges, so that B_w can only fail to be
/// a tree through a cycle.
pub fn is_edge_connected(x: &Complex2) -> bool {
    let tris: Vec<usize> = (0..x.faces().len()).filter(|&f| x.faces()[f].is_triangle()).collect();
    if tris.is_empty() {
        return true;
    }
    let index: BTreeMap<usize, usize> = tris.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let mut d = DisjointSets::new(tris.len());
    for e in 0..x.edges().len() {
        let fs: Vec<usize> = x.edge_faces(e).into_iter().filter(|f| index.contains_key(f)).collect();
        for w in fs.windows(2) {
            d.union(index[&w[0]], index[&w[1]]);
        }
    }
    d.classes().1 == 1
}

pub fn cone_criterion_check(level: &Level, complex: usize, classes: &Classes, cap: usize) -> Result<ConeVerdict> {
    let x = &level.complexes[complex];
    if !is_edge_connected(x) {
        return Err(Error::precondition("cone_criterion_check", format!("triangles of `{}` are not edge connected", x.name)));
    }
    let mut capped = Vec::new();
    for v in 0..x.vertices().len() {
        let search = enumerate_simple_cones(x, v, cap);
        if search.cap_reached {
            capped.push(v);
        }
        for c in search.cones {
            let cls: BTreeSet<usize> =
                c.triangles.iter().map(|&f| classes.class_of[&x.faces()[f].label.orbit]).collect();
            if cls.len() > 1 {
                return Ok(ConeVerdict::Counterexample(c));
            }
        }
    }
    if !capped.is_empty() {
        return Ok(ConeVerdict::Inconclusive { capped });
    }
    let bw = build_bw(level, complex, classes);
    if !bw.is_tree() {
        return Err(Error::invariant(
            "a complex whose simple cones lie in classes has B_w a tree",
            format!("B_w of `{}` has a cycle", x.name),
        ));
    }
    Ok(ConeVerdict::Certified(bw))
}

/// First level from which the covolume stays constant to the end.
pub fn detect_n_delta(ledger: &[usize]) -> Result<Option<usize>> {
    if let Some(w) = ledger.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::invariant(
            "covolume does not increase along the hierarchy",
            format!("level {} → {}: {} → {}", w, w + 1, ledger[w], ledger[w + 1]),
        ));
    }
    let Some(&last) = ledger.last() else { return Ok(None) };
    Ok(Some(ledger.iter().rposition(|&c| c != last).map_or(0, |i| i + 1)))
}

/// A strict increase of stab⁺ on an edge between consecutive levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccStep {
    pub level: usize,
    pub edge: String,
    pub from: String,
    pub to: String,
}

/// A chain of strict increases on one edge that is still growing at the
/// last level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccAlert {
    pub edge: String,
    pub chain: Vec<String>,
}

pub fn acc_monitor(levels: &[Level], groups: &GroupRegistry) -> (Vec<AccStep>, Vec<AccAlert>) {
    let mut steps = Vec::new();
    let mut chains: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    let mut last_growth: BTreeMap<&str, usize> = BTreeMap::new();
    for n in 0..levels.len().saturating_sub(1) {
        for (edge, from) in &levels[n].stab_plus {
            let Some(to) = levels[n + 1].stab_plus.get(edge) else { continue };
            if groups.is_proper_subgroup(from, to) {
                steps.push(AccStep { level: n, edge: edge.clone(), from: from.clone(), to: to.clone() });
                let chain = chains.entry(edge).or_default();
                if last_growth.get(edge.as_str()) != Some(&n) || chain.is_empty() {
                    chain.clear();
                    chain.push(from.clone());
                }
                chain.push(to.clone());
                last_growth.insert(edge, n + 1);
            }
        }
    }
    let end = levels.len().saturating_sub(1);
    let alerts = chains
        .into_iter()
        .filter(|(e, _)| last_growth.get(e) == Some(&end))
        .map(|(e, chain)| AccAlert { edge: e.to_string(), chain })
        .collect();
    (steps, alerts)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizationReport {
    pub horizon: usize,
    pub covolumes: Vec<usize>,
    pub class_counts: Vec<usize>,
    pub n_delta: Option<usize>,
    pub n_prime: Option<usize>,
    pub n_second: Option<usize>,
    pub acc_steps: Vec<AccStep>,
    pub acc_alerts: Vec<AccAlert>,
    pub diagnostics: Vec<String>,
}

/// Whether the class map σ from level `n` to `n + 1` is a bijection that
/// preserves the number of edge orbits of each class.
fn sigma_is_rigid(tau: &TauMap, a: &Classes, b: &Classes) -> bool {
    let mut sigma: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (t, &c) in &a.class_of {
        match tau.get(t).and_then(|u| b.class_of.get(u)) {
            Some(&d) => {
                sigma.entry(c).or_default().insert(d);
            }
            None => return false,
        }
    }
    let images: BTreeSet<usize> = sigma.values().flatten().copied().collect();
    sigma.len() == a.classes.len()
        && sigma.values().all(|s| s.len() == 1)
        && images.len() == a.classes.len()
        && images.len() == b.classes.len()
        && sigma.iter().all(|(&c, d)| {
            let d = *d.iter().next().unwrap();
            a.classes[c].edge_orbits().len() == b.classes[d].edge_orbits().len()
        })
}

/// τ maps stable pairs of level `n` onto those of `n + 1`, with nothing
/// left over, and no stab⁺ grows on the way.
fn pairs_pull_back(tau: &TauMap, a: &PairSet, b: &PairSet, grew: bool) -> bool {
    let image: BTreeSet<(String, String)> = a
        .stable
        .iter()
        .filter_map(|p| {
            let (x, y) = (tau.get(&p.a)?, tau.get(&p.b)?);
            Some(if x <= y { (x.clone(), y.clone()) } else { (y.clone(), x.clone()) })
        })
        .collect();
    let target: BTreeSet<(String, String)> = b.stable.iter().map(|p| (p.a.clone(), p.b.clone())).collect();
    !grew && image == target
}

/// Finds N_Δ, N′ and N″ relative to the last level, and runs the ACC
/// monitor.
pub fn stabilization_report(levels: &[Level], tau: &TauFamily, groups: &GroupRegistry) -> Result<StabilizationReport> {
    if levels.is_empty() || tau.steps.len() + 1 != levels.len() {
        return Err(Error::precondition("stabilization_report", "one τ map between each pair of levels"));
    }
    let horizon = levels.len() - 1;
    let covolumes: Vec<usize> = levels.iter().map(Level::covolume).collect();
    let n_delta = detect_n_delta(&covolumes)?;
    let pair_sets: Vec<PairSet> = (0..=horizon).map(|n| stable_pairs(levels, tau, n, horizon)).collect();
    let classes: Vec<Classes> =
        (0..=horizon).map(|n| equivalence_classes(&levels[n], &pair_sets[n])).collect::<Result<_>>()?;
    let class_counts: Vec<usize> = classes.iter().map(|c| c.classes.len()).collect();
    let (acc_steps, acc_alerts) = acc_monitor(levels, groups);
    let mut diagnostics = Vec::new();

    let first_good_from = |start: usize, ok: &dyn Fn(usize) -> bool| -> usize {
        (start..=horizon).find(|&n| (n..horizon).all(ok)).unwrap_or(horizon)
    };
    let n_delta_v = n_delta.unwrap_or(horizon);
    for n in n_delta_v..horizon {
        if !is_total_bijection(&tau.steps[n], &levels[n].triangles(), &levels[n + 1].triangles()) {
            return Err(Error::invariant(
                "τ is a bijection once the covolume is constant",
                format!("level {n} → {}", n + 1),
            ));
        }
    }
    let n_prime = first_good_from(n_delta_v, &|n| sigma_is_rigid(&tau.steps[n], &classes[n], &classes[n + 1]));
    let n_second = first_good_from(n_prime, &|n| {
        let grew = acc_steps.iter().any(|s| s.level == n);
        pairs_pull_back(&tau.steps[n], &pair_sets[n], &pair_sets[n + 1], grew)
    });
    if n_delta_v == horizon && horizon > 0 && covolumes[horizon - 1] != covolumes[horizon] {
        diagnostics.push(format!("covolume still dropping at level {horizon}"));
    }
    for a in &acc_alerts {
        diagnostics.push(format!("ACC alert: stab⁺ of `{}` still growing at level {horizon}: {}", a.edge, a.chain.join(" < ")));
    }
    Ok(StabilizationReport {
        horizon,
        covolumes,
        class_counts,
        n_delta,
        n_prime: Some(n_prime),
        n_second: Some(n_second),
        acc_steps,
        acc_alerts,
        diagnostics,
    })
}
