//! Acceptance suite: one pass/fail line per criterion.

mod common;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strongacc::resolution::{Resolution, ResolutionKind};
use strongacc::tracks::{essential_tracks, split_collapse, tracks_from_resolution};
use strongacc::hierarchy::{jsj_depth_bound, Hierarchy};
use strongacc::pipeline::VerdictSummary;
use strongacc::stability::{cone_criterion_check, equivalence_classes, Classes, ConeVerdict, Level, PairSet};
use strongacc::structure::{passdown_full, passdown_structure};
use strongacc::tree::Classification;
use strongacc::{ActionClass, ActionDescriptor, Cell, Complex2, Fixture, GraphOfGroups, GroupRef, GroupRegistry, HStructure, RunReport, TreeHat, VertexKind, run_pipeline};

use common::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("reduction suite", reduction_suite),
        ("h1 oracle", h1_oracle),
        ("splitting resolutions", splitting_suite),
        ("covolume accounting", covolume_accounting),
        ("depth bound", depth_bound),
        ("classification oracle", classification_oracle),
        ("cone criterion", cone_cross_check),
        ("pipeline end to end", pipeline_end_to_end),
        ("acc monitor", acc_monitor_fixtures),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let ms = t.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}; {ms} ms)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why}; {ms} ms)", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} passed in {:.1} s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn reduction_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut with_zero_h1 = 0;
    for i in 0..200 {
        let x = random_complex(&mut rng, 12);
        let r = x.reduce();
        ensure!(r.reduce() == r, "instance {i}: reduction is not idempotent");
        ensure!(r.is_simplicial(), "instance {i}: reduction is not simplicial");
        ensure!(r.is_connected() == x.is_connected(), "instance {i}: connectivity changed");
        if x.h1_z2().dim == 0 {
            with_zero_h1 += 1;
            ensure!(r.h1_z2().dim == 0, "instance {i}: h1 = 0 not preserved");
        }
        ensure!(r.covolume() <= x.covolume(), "instance {i}: covolume increased");
    }
    Ok(format!("200 complexes, {with_zero_h1} with h1 = 0"))
}

/// dim H¹(X; Z₂) = dim H₁ = b₀ − χ + b₂, with b₀ from a graph search and
/// b₂ = F − rank ∂₂ from dense elimination.
fn h1_by_euler(x: &Complex2) -> usize {
    let (nv, ne, nf) = (x.vertices().len(), x.edges().len(), x.faces().len());
    let mut seen = vec![false; nv];
    let mut b0 = 0;
    for s in 0..nv {
        if seen[s] {
            continue;
        }
        b0 += 1;
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for e in x.edges() {
                if e.ends.contains(&v) {
                    let w = e.other(v);
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
    }
    let mut rows: Vec<Vec<bool>> = x
        .faces()
        .iter()
        .map(|f| {
            let mut r = vec![false; ne];
            for &e in f.edges() {
                r[e] ^= true;
            }
            r
        })
        .collect();
    let mut rank = 0;
    for col in 0..ne {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][col]) else { continue };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[col] {
                for (a, b) in row.iter_mut().zip(&pivot) {
                    *a ^= b;
                }
            }
        }
        rank += 1;
    }
    let b2 = nf - rank;
    // χ = V − E + F = b₀ − b₁ + b₂
    (b0 + b2 + ne) - (nv + nf)
}

fn h1_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut positive = 0;
    for i in 0..500 {
        let x = random_complex(&mut rng, 8);
        let want = h1_by_euler(&x);
        let got = x.h1_z2();
        ensure!(got.dim == want, "instance {i}: h1_z2 = {}, oracle {want}", got.dim);
        positive += usize::from(want > 0);
    }
    Ok(format!("500 complexes, {positive} with h1 > 0"))
}

fn splitting_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut fixtures, mut with_tracks, mut components) = (0, 0, 0);
    for attempt in 0..1000 {
        if fixtures >= 80 {
            break;
        }
        let size = rng.gen_range(3..=14);
        let mut x = random_disk(&mut rng, size);
        let rim: Vec<usize> = disk_boundary(&x).into_iter().collect();
        for &v in &rim {
            if rng.gen_bool(0.5) {
                x.mark(v);
            }
        }
        let root = rng.gen_range(0..x.vertices().len());
        let len = rng.gen_range(2..=4);
        let images = height_images(&x, root, len);
        let r = Resolution::from_images(x.clone(), path_tree(len), images).map_err(|e| e.to_string())?;
        ensure!(r.kind == ResolutionKind::SplittingI, "attempt {attempt}: vertex images give a contracting resolution");
        let ts = tracks_from_resolution(&r).map_err(|e| e.to_string())?;
        // instances with a non-separating track fall outside the hypotheses
        let Ok(star) = essential_tracks(&ts) else { continue };
        fixtures += 1;
        with_tracks += usize::from(!star.tracks.is_empty());
        let split = split_collapse(&r, &star, &mut GroupRegistry::new()).map_err(|e| format!("attempt {attempt}: {e}"))?;
        for (c, _) in split.complex.components() {
            components += 1;
            ensure!(c.is_connected(), "attempt {attempt}: component `{}` is disconnected", c.name);
            ensure!(c.h1_z2().dim == 0, "attempt {attempt}: component `{}` has h1 > 0", c.name);
        }
    }
    ensure!(fixtures >= 50, "only {fixtures} instances satisfied the hypotheses");
    ensure!(with_tracks >= 20, "only {with_tracks} instances had essential tracks");
    Ok(format!("{fixtures} fixtures, {with_tracks} with essential tracks, {components} components"))
}

fn registry(spec: &[(&str, bool, &[&str])]) -> GroupRegistry {
    let mut g = GroupRegistry::new();
    for (id, slender, sups) in spec {
        let mut r = GroupRef::new(*id);
        r.is_slender = *slender;
        for s in *sups {
            r = r.within(*s);
        }
        g.insert(r).unwrap();
    }
    g.validate().unwrap();
    g
}

/// Path tree with vertex orbits alternating between `a` (stabilizer A)
/// and `b` (stabilizer B) and slender edge group C.
fn alternating_tree(len: usize) -> TreeHat {
    let mut t = path_tree(len);
    for v in 0..len {
        let (o, g) = if v % 2 == 0 { ("a", "A") } else { ("b", "B") };
        t.set_vertex_orbit(v, o);
        t.set_vertex_stab(v, g);
    }
    for e in 0..len - 1 {
        t.set_edge_stab(e, "C");
    }
    t
}

fn retag(x: &mut Complex2, prefix: &str) {
    for f in 0..x.faces().len() {
        let o = format!("{prefix}{}", x.faces()[f].label.orbit);
        x.set_orbit(Cell::Face(f), o);
    }
}

fn total_covolume(out: &BTreeMap<String, HStructure>) -> usize {
    out.values().map(HStructure::covolume).sum()
}

/// Pieces of groups elliptic in the tree, each with its own triangle tags.
fn elliptic_instance(rng: &mut ChaCha8Rng) -> (HStructure, TreeHat, GroupRegistry) {
    let groups = registry(&[
        ("G", false, &[]),
        ("A", false, &["G"]),
        ("B", false, &["G"]),
        ("C", true, &["A", "B"]),
        ("A1", false, &["A"]),
        ("B1", false, &["B"]),
    ]);
    let t = alternating_tree(rng.gen_range(2..=4));
    let mut k = HStructure::new(Hierarchy::new("K", "G"));
    for p in 0..rng.gen_range(1..=3) {
        let size = rng.gen_range(1..=8);
        let mut x = random_disk(rng, size);
        x.name = format!("X{p}");
        retag(&mut x, &format!("p{p}"));
        let g = ["A", "B", "A1", "B1"][rng.gen_range(0..4)];
        k.attach(0, g, x);
    }
    (k, t, groups)
}

/// A piece of G over the alternating tree, G generated by the two vertex
/// groups, with cells fixed by the slender group S acting trivially.
fn splitting_instance(rng: &mut ChaCha8Rng) -> (HStructure, TreeHat, GroupRegistry) {
    let mut groups = registry(&[
        ("G", false, &[]),
        ("A", false, &["G"]),
        ("B", false, &["G"]),
        ("C", true, &["A", "B"]),
    ]);
    groups.insert(GroupRef::new("S").slender().h_elliptic()).unwrap();
    let len = rng.gen_range(2..=4);
    let mut t = alternating_tree(len);
    t.actions.insert("S".into(), vec![ActionDescriptor::Elliptic { fixed: (0..len).collect() }]);
    t.actions.insert(
        "G".into(),
        vec![
            ActionDescriptor::Elliptic { fixed: BTreeSet::from([0]) },
            ActionDescriptor::Elliptic { fixed: BTreeSet::from([1]) },
        ],
    );
    let size = rng.gen_range(3..=12);
    let mut x = random_disk(rng, size);
    let cells: Vec<Cell> = x.cells().collect();
    for c in cells {
        x.set_stab(c, "S");
    }
    for v in disk_boundary(&x) {
        if rng.gen_bool(0.5) {
            x.mark(v);
        }
    }
    let root = rng.gen_range(0..x.vertices().len());
    for (v, p) in height_images(&x, root, len).into_iter().enumerate() {
        t.images.insert(x.vertices()[v].name.clone(), p);
    }
    let mut k = HStructure::new(Hierarchy::new("K", "G"));
    k.attach(0, "G", x);
    (k, t, groups)
}

fn root_split(name: &str) -> Result<(HStructure, TreeHat, GroupRegistry), String> {
    let fx = Fixture::load(fixture_path(name)).map_err(|e| e.to_string())?;
    let k = fx.structure(None).map_err(|e| e.to_string())?.clone();
    let t = fx.script.trees.get(&fx.config.root).ok_or(format!("{name}: no splitting of the root"))?.clone();
    Ok((k, t, fx.groups))
}

fn covolume_accounting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..40 {
        let (k, t, mut groups) = elliptic_instance(&mut rng);
        let gog = GraphOfGroups::quotient(&t);
        let out = passdown_structure(&k, &t, &gog, &mut groups).map_err(|e| format!("elliptic {i}: {e}"))?;
        ensure!(total_covolume(&out) == k.covolume(), "elliptic {i}: {} ≠ {}", total_covolume(&out), k.covolume());
        let full = passdown_full(&k, &t, &gog, true, &mut groups).map_err(|e| format!("elliptic {i}: {e}"))?;
        ensure!(total_covolume(&full.structures) == k.covolume(), "elliptic {i}: full passdown lost covolume");
    }
    let mut drops = 0;
    for i in 0..60 {
        let (k, t, mut groups) = splitting_instance(&mut rng);
        let gog = GraphOfGroups::quotient(&t);
        let full = passdown_full(&k, &t, &gog, true, &mut groups).map_err(|e| format!("splitting {i}: {e}"))?;
        let after = total_covolume(&full.structures);
        ensure!(after <= k.covolume(), "splitting {i}: {after} > {}", k.covolume());
        ensure!(full.ledger.is_monotone(), "splitting {i}: ledger {:?}", full.ledger);
        drops += usize::from(after < k.covolume());
    }
    for name in ["worked.fx", "contracting.fx", "pinched.fx"] {
        let (k, t, mut groups) = root_split(name)?;
        let gog = GraphOfGroups::quotient(&t);
        let full = passdown_full(&k, &t, &gog, true, &mut groups).map_err(|e| format!("{name}: {e}"))?;
        let after = total_covolume(&full.structures);
        ensure!(after <= k.covolume(), "{name}: {after} > {}", k.covolume());
        if name == "pinched.fx" {
            ensure!(after < k.covolume(), "pinched: no strict drop ({after})");
        }
    }
    Ok(format!("40 elliptic exact, 63 full passdowns bounded, {drops} random strict drops"))
}

/// Path tree whose vertices carry (orbit, stabilizer) pairs, with ideal
/// points beyond both ends.
fn labelled_path(name: &str, verts: &[(&str, &str)], edge_stab: &str) -> TreeHat {
    let mut t = TreeHat::new(name);
    for (i, (orbit, stab)) in verts.iter().enumerate() {
        let v = t.add_vertex(format!("{name}.{i}")).unwrap();
        t.set_vertex_orbit(v, *orbit);
        t.set_vertex_stab(v, *stab);
    }
    for i in 1..verts.len() {
        let e = t.add_edge(format!("{name}.e{i}"), i - 1, i).unwrap();
        t.set_edge_stab(e, edge_stab);
    }
    t.add_ideal(format!("{name}.minus"), vec![0]).unwrap();
    t.add_ideal(format!("{name}.plus"), vec![verts.len() - 1]).unwrap();
    t
}

/// K of depth `d`: G{i-1} acts along a line with vertex groups G{i} and
/// slender B{i}. H is a JSJ hierarchy of G0 whose rigid chain R1..Rm
/// follows G1..Gm; each level also has a flexible F{i}, which splits once
/// when `flex` asks for it (0: never, 1: deepest only, 2: always). F{i}
/// acts along the line of K at G{i-1}, and its intersection with G{i}
/// fixes a G-vertex further down.
fn depth_pair(d: usize, m: usize, flex: usize) -> (Hierarchy, Hierarchy, GroupRegistry) {
    let mut g = GroupRegistry::new();
    g.insert(GroupRef::new("G0")).unwrap();
    for i in 1..=d {
        g.insert(GroupRef::new(format!("G{i}")).within(format!("G{}", i - 1))).unwrap();
        g.insert(GroupRef::new(format!("B{i}")).slender().within(format!("G{}", i - 1))).unwrap();
        g.insert(GroupRef::new(format!("C{i}")).slender().within(format!("G{i}")).within(format!("B{i}"))).unwrap();
    }
    for i in 1..=m {
        g.insert(GroupRef::new(format!("F{i}")).within(format!("G{}", i - 1))).unwrap();
    }
    let along = || vec![ActionDescriptor::Hyperbolic { ends: [0, 1], translation_length: 2, swaps_ends: false }];
    let mut k = Hierarchy::new("K", "G0");
    let mut parent = 0;
    for i in 1..=d {
        let (gi, bi) = (format!("G{i}"), format!("B{i}"));
        let mut t = labelled_path(&format!("TK{i}"), &[(&gi, &gi), (&bi, &bi), (&gi, &gi)], &format!("C{i}"));
        t.actions.insert(format!("G{}", i - 1), along());
        for j in 1..=m.min(i) {
            let action = if j == i { along() } else { vec![ActionDescriptor::Elliptic { fixed: BTreeSet::from([0]) }] };
            t.actions.insert(format!("F{j}"), action);
        }
        k.set_tree(parent, t);
        let next = k.add_child(parent, gi.clone(), gi, VertexKind::Unknown).unwrap();
        k.add_child(parent, bi.clone(), bi, VertexKind::Unknown).unwrap();
        parent = next;
    }

    let mut h = Hierarchy::new("H", "G0");
    h.jsj = true;
    let mut parent = 0;
    for i in 1..=m {
        let (ri, gi, fi) = (format!("R{i}"), format!("G{i}"), format!("F{i}"));
        g.insert(GroupRef::new(format!("E{i}")).slender().within(gi.clone()).within(fi.clone())).unwrap();
        h.set_tree(parent, labelled_path(&format!("TH{i}"), &[(&ri, &gi), (&fi, &fi)], &format!("E{i}")));
        let next = h.add_child(parent, ri, gi, VertexKind::Rigid).unwrap();
        let f = h.add_child(parent, fi.clone(), fi.clone(), VertexKind::Flexible).unwrap();
        if flex == 2 || (flex == 1 && i == m) {
            let (fa, fb, fe) = (format!("{fi}a"), format!("{fi}b"), format!("{fi}e"));
            g.insert(GroupRef::new(fa.clone()).slender().within(fi.clone())).unwrap();
            g.insert(GroupRef::new(fb.clone()).slender().within(fi.clone())).unwrap();
            g.insert(GroupRef::new(fe.clone()).slender().within(fa.clone()).within(fb.clone())).unwrap();
            h.set_tree(f, labelled_path(&format!("TF{i}"), &[(&fa, &fa), (&fb, &fb)], &fe));
            h.add_child(f, fa.clone(), fa, VertexKind::Unknown).unwrap();
            h.add_child(f, fb.clone(), fb, VertexKind::Unknown).unwrap();
        }
        parent = next;
    }
    g.validate().unwrap();
    k.validate(&g).unwrap();
    h.validate(&g).unwrap();
    (h, k, g)
}

/// Depth by walking parent links, independent of the hierarchy's own count.
fn walk_depth(h: &Hierarchy) -> usize {
    (0..h.nodes().len())
        .map(|mut u| {
            let mut d = 0;
            while let Some(p) = h.node(u).parent {
                d += 1;
                u = p;
            }
            d
        })
        .max()
        .unwrap_or(0)
}

fn depth_bound() -> Outcome {
    let (mut pairs, mut tight) = (0, 0);
    for d in 1..=4 {
        for m in 1..=d {
            for flex in 0..3 {
                let (h, k, mut g) = depth_pair(d, m, flex);
                let r = jsj_depth_bound(&h, &k, &mut g).map_err(|e| format!("d={d} m={m} flex={flex}: {e}"))?;
                let (dh, dk) = (walk_depth(&h), walk_depth(&k));
                ensure!(r.holds(), "d={d} m={m} flex={flex}: bound fails: {:?}", r.violation);
                ensure!(dh <= dk + 1, "d={d} m={m} flex={flex}: depth {dh} > {dk} + 1");
                ensure!((r.depth_h, r.depth_k) == (dh, dk), "d={d} m={m} flex={flex}: reported depths differ");
                pairs += 1;
                tight += usize::from(dh == dk + 1);
            }
        }
    }
    ensure!(pairs >= 20, "only {pairs} pairs");
    ensure!(tight > 0, "no pair reaches the bound");

    let (h, _, mut g) = depth_pair(1, 1, 0);
    let trivial_k = Hierarchy::new("K", "G0");
    let r = jsj_depth_bound(&h, &trivial_k, &mut g).map_err(|e| e.to_string())?;
    ensure!(!r.holds(), "a splitting JSJ hierarchy passed against a trivial K");
    let mut trivial_h = Hierarchy::new("H", "G0");
    trivial_h.jsj = true;
    let r = jsj_depth_bound(&trivial_h, &trivial_k, &mut g).map_err(|e| e.to_string())?;
    ensure!(r.holds() && r.depth_h == 0, "depth-0 case did not give a trivial hierarchy");
    Ok(format!("{pairs} pairs, {tight} at depth(K) + 1, depth-0 case trivial"))
}

/// Tree from a Prüfer sequence on `seq.len() + 2` vertices, with an ideal
/// point at every leaf.
fn prufer_tree(seq: &[usize]) -> TreeHat {
    let n = seq.len() + 2;
    let mut t = TreeHat::new("T");
    for i in 0..n {
        t.add_vertex(format!("y{i}")).unwrap();
    }
    let mut degree = vec![1; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut k = 0;
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        t.add_edge(format!("f{k}"), leaf, s).unwrap();
        degree[leaf] -= 1;
        degree[s] -= 1;
        k += 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    t.add_edge(format!("f{k}"), rest[0], rest[1]).unwrap();
    add_leaf_ideals(&mut t);
    t
}

fn add_leaf_ideals(t: &mut TreeHat) {
    let n = t.vertices().len();
    for v in 0..n {
        let valence = t.edges().iter().filter(|e| e.ends.contains(&v)).count();
        if valence <= 1 {
            t.add_ideal(format!("p{v}"), vec![v]).unwrap();
        }
    }
}

/// Trees with at most 8 vertices: the point, paths, stars and seeded
/// random shapes.
fn oracle_trees() -> Vec<TreeHat> {
    let mut out = Vec::new();
    let mut point = TreeHat::new("T");
    point.add_vertex("y0").unwrap();
    add_leaf_ideals(&mut point);
    out.push(point);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in 2..=8 {
        out.push(prufer_tree(&(1..n - 1).collect::<Vec<_>>()));
        out.push(prufer_tree(&vec![0; n - 2]));
        for _ in 0..2 {
            let seq: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
            out.push(prufer_tree(&seq));
        }
    }
    out
}

fn is_connected_set(t: &TreeHat, set: &BTreeSet<usize>) -> bool {
    let Some(&s) = set.first() else { return false };
    let mut seen = BTreeSet::from([s]);
    let mut stack = vec![s];
    while let Some(v) = stack.pop() {
        for e in t.edges() {
            if e.ends.contains(&v) {
                let w = if e.ends[0] == v { e.ends[1] } else { e.ends[0] };
                if set.contains(&w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
    }
    seen.len() == set.len()
}

fn all_descriptors(t: &TreeHat) -> Vec<ActionDescriptor> {
    let n = t.vertices().len();
    let mut out = Vec::new();
    for mask in 1u32..1 << n {
        let set: BTreeSet<usize> = (0..n).filter(|v| mask >> v & 1 == 1).collect();
        if is_connected_set(t, &set) {
            out.push(ActionDescriptor::Elliptic { fixed: set });
        }
    }
    let ideals = t.ideals().len();
    for p in 0..ideals {
        for q in p + 1..ideals {
            for swaps_ends in [false, true] {
                out.push(ActionDescriptor::Hyperbolic { ends: [p, q], translation_length: 1, swaps_ends });
            }
        }
    }
    out
}

/// Direct evaluation of the five defining conditions on the generators.
/// Elliptic generators alongside hyperbolic ones carry no end data in
/// this model and are taken to preserve the hyperbolic structure.
fn classify_by_cases(t: &TreeHat, ds: &[&ActionDescriptor]) -> Option<Classification> {
    let axes: Vec<([usize; 2], bool)> = ds
        .iter()
        .filter_map(|d| match d {
            ActionDescriptor::Hyperbolic { ends, swaps_ends, .. } => Some((*ends, *swaps_ends)),
            _ => None,
        })
        .collect();
    let none = Classification { class: ActionClass::Hyperbolic, fixed: BTreeSet::new(), axis: None, fixed_end: None };
    if axes.is_empty() {
        let fixed: BTreeSet<usize> = (0..t.vertices().len())
            .filter(|v| ds.iter().all(|d| matches!(d, ActionDescriptor::Elliptic { fixed } if fixed.contains(v))))
            .collect();
        return (!fixed.is_empty()).then_some(Classification { class: ActionClass::Elliptic, fixed, ..none });
    }
    let ideals = t.ideals().len();
    let same_line = |p: usize, q: usize| axes.iter().all(|(a, _)| (a[0] == p && a[1] == q) || (a[0] == q && a[1] == p));
    for p in 0..ideals {
        for q in p + 1..ideals {
            if same_line(p, q) {
                let class = if axes.iter().any(|&(_, s)| s) { ActionClass::Dihedral } else { ActionClass::Linear };
                return Some(Classification { class, axis: Some([p, q]), ..none });
            }
        }
    }
    let fixed_ends: Vec<usize> = (0..ideals).filter(|p| axes.iter().all(|(a, _)| a.contains(p))).collect();
    if let [end] = fixed_ends[..] {
        return Some(Classification { class: ActionClass::Parabolic, fixed_end: Some(end), ..none });
    }
    Some(none)
}

fn classification_oracle() -> Outcome {
    let (mut sets, mut trees) = (0usize, 0);
    let mut seen = BTreeMap::<ActionClass, usize>::new();
    let mut unclassified = 0;
    for t in oracle_trees() {
        trees += 1;
        let ds = all_descriptors(&t);
        let n = ds.len();
        let mut check = |pick: &[&ActionDescriptor]| -> Result<(), String> {
            let owned: Vec<ActionDescriptor> = pick.iter().map(|&d| d.clone()).collect();
            let got = t.classify(&owned).ok();
            let want = classify_by_cases(&t, pick);
            if got != want {
                return Err(format!("{} vertices, descriptors {owned:?}: got {got:?}, expected {want:?}", t.vertices().len()));
            }
            match want {
                Some(c) => *seen.entry(c.class).or_default() += 1,
                None => unclassified += 1,
            }
            sets += 1;
            Ok(())
        };
        for i in 0..n {
            check(&[&ds[i]])?;
            for j in i + 1..n {
                check(&[&ds[i], &ds[j]])?;
                for k in j + 1..n {
                    check(&[&ds[i], &ds[j], &ds[k]])?;
                }
            }
        }
    }
    ensure!(seen.len() == 5, "not every class occurred: {seen:?}");
    Ok(format!("{sets} descriptor sets on {trees} trees, {unclassified} unclassified"))
}

/// Partition of triangle tags generated by the kept pairs, by repeated
/// relabelling.
fn tag_partition(x: &Complex2, kept: &BTreeSet<(String, String)>) -> BTreeMap<String, usize> {
    let mut label: BTreeMap<String, usize> =
        x.triangle_orbits().into_iter().enumerate().map(|(i, t)| (t.to_string(), i)).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for (a, b) in kept {
            let (la, lb) = (label[a], label[b]);
            if la != lb {
                let (lo, hi) = (la.min(lb), la.max(lb));
                for l in label.values_mut() {
                    if *l == hi {
                        *l = lo;
                    }
                }
                changed = true;
            }
        }
    }
    label
}

/// B_w built from scratch: class nodes and shared-edge nodes, joined when
/// the edge lies on a triangle of the class; a tree iff connected with one
/// edge fewer than nodes.
fn bw_is_tree(x: &Complex2, class_of: &BTreeMap<String, usize>) -> bool {
    let mut node: BTreeMap<(bool, usize), usize> = BTreeMap::new();
    for &c in class_of.values() {
        let n = node.len();
        node.entry((true, c)).or_insert(n);
    }
    let mut links = Vec::new();
    for e in 0..x.edges().len() {
        let cs: BTreeSet<usize> = x
            .faces()
            .iter()
            .filter(|f| f.is_triangle() && f.edges().contains(&e))
            .map(|f| class_of[&f.label.orbit])
            .collect();
        if cs.len() > 1 {
            let en = node.len();
            node.insert((false, e), en);
            links.extend(cs.iter().map(|c| (node[&(true, *c)], en)));
        }
    }
    let n = node.len();
    if links.len() + 1 != n {
        return false;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &(a, b) in &links {
            for (p, q) in [(a, b), (b, a)] {
                if p == u && !seen[q] {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn same_partition(a: &BTreeMap<String, usize>, b: &BTreeMap<String, usize>) -> bool {
    a.keys().eq(b.keys())
        && a.keys().all(|s| a.keys().all(|t| (a[s] == a[t]) == (b[s] == b[t])))
}

fn cone_cross_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut fixtures, mut certified, mut counter, mut skipped) = (0, 0, 0, 0);
    for attempt in 0..400 {
        if fixtures >= 60 {
            break;
        }
        let size = rng.gen_range(3..=12);
        let x = if rng.gen_bool(0.5) { random_disk(&mut rng, size) } else { random_sphere(&mut rng, size) };
        let level = Level { complexes: vec![x.clone()], stab_plus: BTreeMap::new() };
        let pairs = level.pairs();
        let keep = rng.gen_range(0.5..1.0);
        let stable: BTreeSet<_> = pairs.iter().filter(|_| rng.gen_bool(keep)).cloned().collect();
        let kept: BTreeSet<(String, String)> = stable.iter().map(|p| (p.a.clone(), p.b.clone())).collect();
        let ps = PairSet { level: 0, horizon: 0, pairs, stable };
        // classes with a cutpoint fall outside the hypotheses
        let Ok(cls): Result<Classes, _> = equivalence_classes(&level, &ps) else {
            skipped += 1;
            continue;
        };
        let mine = tag_partition(&x, &kept);
        ensure!(same_partition(&mine, &cls.class_of), "attempt {attempt}: class partitions differ");
        let direct = bw_is_tree(&x, &mine);
        match cone_criterion_check(&level, 0, &cls, 64).map_err(|e| format!("attempt {attempt}: {e}"))? {
            ConeVerdict::Certified(bw) => {
                ensure!(direct && bw.is_tree(), "attempt {attempt}: certified with a cyclic B_w");
                certified += 1;
            }
            ConeVerdict::Counterexample(_) => {
                ensure!(!direct, "attempt {attempt}: counterexample although B_w is a tree");
                counter += 1;
            }
            ConeVerdict::Inconclusive { .. } => {
                skipped += 1;
                continue;
            }
        }
        fixtures += 1;
    }
    ensure!(fixtures >= 30, "only {fixtures} fixtures");
    ensure!(certified > 0 && counter > 0, "verdicts not varied: {certified} certified, {counter} counterexamples");
    Ok(format!("{fixtures} fixtures: {certified} certified, {counter} counterexamples, {skipped} skipped"))
}

fn run_fixture(name: &str) -> Result<(RunReport, Fixture), String> {
    let mut fx = Fixture::load(fixture_path(name)).map_err(|e| format!("{name}: {e}"))?;
    let k = fx.structure(None).map_err(|e| e.to_string())?.clone();
    let r = run_pipeline(&fx.config, &k, &fx.script, &mut fx.groups).map_err(|e| format!("{name}: {e}"))?;
    Ok((r, fx))
}

fn pipeline_end_to_end() -> Outcome {
    let (r, fx) = run_fixture("worked.fx")?;
    let expected = fx.config.expect_certified.ok_or("worked.fx declares no expected level")?;
    ensure!(r.certified_level == Some(expected), "worked: certified at {:?}, expected {expected}", r.certified_level);
    let level = &r.levels[expected];
    ensure!(!level.verdicts.is_empty(), "worked: no verdicts at level {expected}");
    for v in &level.verdicts {
        ensure!(
            matches!(v.verdict, VerdictSummary::Certified { collapsed_tree: true, .. }),
            "worked: `{}` of `{}` is not a certified B'_w tree",
            v.complex,
            v.node
        );
    }
    ensure!(
        r.levels[..expected].iter().any(|l| l.verdicts.iter().any(|v| !matches!(v.verdict, VerdictSummary::Certified { .. }))),
        "worked: nothing to certify before level {expected}"
    );

    let (r, fx) = run_fixture("f2_loop.fx")?;
    ensure!(fx.config.horizon == 10, "f2 loop horizon is {}", fx.config.horizon);
    ensure!(r.certified_level.is_none(), "f2 loop certified at {:?}", r.certified_level);
    for want in ["no certificate within horizon 10", "ACC alert", "still splitting"] {
        ensure!(r.diagnostics.iter().any(|d| d.contains(want)), "f2 loop: missing diagnostic `{want}`: {:?}", r.diagnostics);
    }
    Ok(format!("worked certified at level {expected}; f2 loop: {}", r.diagnostics.join("; ")))
}

fn acc_monitor_fixtures() -> Outcome {
    let (r, _) = run_fixture("acc_chain.fx")?;
    let alerts = &r.stability.acc_alerts;
    ensure!(alerts.len() == 1, "acc_chain: {} alerts", alerts.len());
    ensure!(alerts[0].chain == ["Z1", "Z2", "Z4"], "acc_chain: chain {:?}", alerts[0].chain);
    ensure!(
        r.diagnostics.iter().filter(|d| d.starts_with("ACC alert") && d.contains("Z1 < Z2 < Z4")).count() == 1,
        "acc_chain: diagnostic does not name the chain: {:?}",
        r.diagnostics
    );
    for name in ["acc_stable.fx", "worked.fx", "pinched.fx", "contracting.fx"] {
        let (r, _) = run_fixture(name)?;
        ensure!(r.stability.acc_alerts.is_empty(), "{name}: unexpected alerts {:?}", r.stability.acc_alerts);
        ensure!(!r.diagnostics.iter().any(|d| d.starts_with("ACC alert")), "{name}: ACC diagnostic raised");
    }
    Ok("one alert Z1 < Z2 < Z4 on the growing chain; none on four stabilizing fixtures".into())
}
