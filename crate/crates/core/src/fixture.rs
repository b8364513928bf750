//! Line-oriented fixture files.
//!
//! A fixture is a sequence of sections, each opened by an upper-case
//! header line. `#` starts a comment. Records are whitespace separated:
//!
//! ```text
//! GROUPS
//! G
//! A < G
//! C slender < A
//! COMPLEX X
//! VERTICES
//! a b *c            # `*` marks a boundary vertex
//! EDGES
//! ab a b
//! FACES
//! t ab bc ca        # two or three edges
//! TRIANGLES
//! s a b d           # by vertices, creating missing edges
//! STABS
//! * S               # every cell so far
//! t A
//! ORBITS
//! t o1
//! TREE T
//! vertex a A [orbit]
//! edge e a b C [orbit]
//! ideal p a b       # ray ending at a leaf
//! image u a         # complex vertex to tree point
//! action G elliptic a b
//! action H hyperbolic p q 2 [swap]
//! IDEAL
//! q b a             # more ideal points of the current tree
//! HIERARCHY K G
//! node A A K [rigid|flexible|unknown]
//! split K T
//! truncated A
//! origin A 0
//! jsj
//! STRUCTURE K
//! attach A A X
//! SCRIPT
//! split v0 T
//! loop v{n}
//! LOOP
//! name T{n}
//! group F{n+1} < F{n}
//! vertex ... / edge ... / ideal ... / image ... / action ...
//! stabplus e Z{n}
//! STABPLUS
//! 0 e Z
//! CONFIG
//! horizon 4
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::complex::{Cell, CellLabel, Complex2};
use crate::error::{Error, Result};
use crate::gog::VertexKind;
use crate::group::{GroupRef, GroupRegistry, TRIVIAL};
use crate::hierarchy::Hierarchy;
use crate::pipeline::{substitute, LoopRule, PipelineConfig, Script};
use crate::structure::HStructure;
use crate::tree::{ActionDescriptor, TreeHat};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Fixture {
    pub groups: GroupRegistry,
    pub complexes: Vec<Complex2>,
    pub trees: Vec<TreeHat>,
    pub hierarchies: Vec<Hierarchy>,
    pub structures: Vec<HStructure>,
    pub script: Script,
    pub config: PipelineConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Groups,
    Vertices,
    Edges,
    Faces,
    Triangles,
    Stabs,
    Orbits,
    Tree,
    Ideal,
    Hierarchy,
    Structure,
    Script,
    Loop,
    StabPlus,
    Config,
}

#[derive(Debug, Clone, Copy)]
struct Tok<'a> {
    text: &'a str,
    col: usize,
}

fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let body = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in body.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Tok { text: &body[s..i], col: body[..s].chars().count() + 1 });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Tok { text: &body[s..], col: body[..s].chars().count() + 1 });
    }
    out
}

/// A parse failure before the line is known.
struct Fail {
    col: usize,
    message: String,
}

type Step<T> = std::result::Result<T, Fail>;

fn fail<T>(col: usize, message: impl Into<String>) -> Step<T> {
    Err(Fail { col, message: message.into() })
}

fn arity(toks: &[Tok], min: usize, max: usize, what: &str) -> Step<()> {
    if toks.len() < min {
        let col = toks.last().map_or(1, |t| t.col + t.text.chars().count());
        return fail(col, format!("{what} needs at least {min} fields"));
    }
    if toks.len() > max {
        return fail(toks[max].col, format!("unexpected field in {what}"));
    }
    Ok(())
}

fn number<T: std::str::FromStr>(t: Tok) -> Step<T> {
    t.text.parse().or_else(|_| fail(t.col, format!("expected a number, found `{}`", t.text)))
}

fn boolean(t: Tok) -> Step<bool> {
    match t.text {
        "true" | "yes" => Ok(true),
        "false" | "no" => Ok(false),
        _ => fail(t.col, format!("expected true or false, found `{}`", t.text)),
    }
}

fn group_line(toks: &[Tok]) -> Step<GroupRef> {
    arity(toks, 1, usize::MAX, "group")?;
    if toks[0].text == TRIVIAL {
        return fail(toks[0].col, "the trivial group is built in");
    }
    let mut g = GroupRef::new(toks[0].text);
    let mut sups = false;
    for t in &toks[1..] {
        match (sups, t.text) {
            (false, "slender") => g = g.slender(),
            (false, "finite") => g = g.finite(),
            (false, "h_elliptic") => g = g.h_elliptic(),
            (false, "<") => sups = true,
            (false, other) => return fail(t.col, format!("unknown group flag `{other}`")),
            (true, s) => g = g.within(s),
        }
    }
    Ok(g)
}

fn kind(t: Tok) -> Step<VertexKind> {
    match t.text {
        "rigid" => Ok(VertexKind::Rigid),
        "flexible" => Ok(VertexKind::Flexible),
        "unknown" => Ok(VertexKind::Unknown),
        _ => fail(t.col, format!("unknown vertex kind `{}`", t.text)),
    }
}

fn kind_name(k: VertexKind) -> &'static str {
    match k {
        VertexKind::Rigid => "rigid",
        VertexKind::Flexible => "flexible",
        VertexKind::Unknown => "unknown",
    }
}

/// Applies one keyworded tree record. Semantic failures are engine errors.
fn tree_record(t: &mut TreeHat, toks: &[Tok]) -> Step<Result<()>> {
    let vertex = |t: &TreeHat, tok: Tok| -> Step<usize> {
        t.vertex_named(tok.text).map_or_else(|| fail(tok.col, format!("unknown tree vertex `{}`", tok.text)), Ok)
    };
    let ideal = |t: &TreeHat, tok: Tok| -> Step<usize> {
        t.ideal_named(tok.text).map_or_else(|| fail(tok.col, format!("unknown ideal point `{}`", tok.text)), Ok)
    };
    match toks[0].text {
        "vertex" => {
            arity(toks, 2, 4, "vertex")?;
            let v = match t.add_vertex(toks[1].text) {
                Ok(v) => v,
                Err(e) => return Ok(Err(e)),
            };
            if let Some(s) = toks.get(2) {
                t.set_vertex_stab(v, s.text);
            }
            if let Some(o) = toks.get(3) {
                t.set_vertex_orbit(v, o.text);
            }
        }
        "edge" => {
            arity(toks, 4, 6, "edge")?;
            let (a, b) = (vertex(t, toks[2])?, vertex(t, toks[3])?);
            let e = match t.add_edge(toks[1].text, a, b) {
                Ok(e) => e,
                Err(e) => return Ok(Err(e)),
            };
            if let Some(s) = toks.get(4) {
                t.set_edge_stab(e, s.text);
            }
            if let Some(o) = toks.get(5) {
                t.set_edge_orbit(e, o.text);
            }
        }
        "ideal" => return ideal_record(t, &toks[1..]),
        "image" => {
            arity(toks, 3, 3, "image")?;
            let p = t.point_named(toks[2].text).map_or_else(
                || fail(toks[2].col, format!("unknown tree point `{}`", toks[2].text)),
                Ok,
            )?;
            t.images.insert(toks[1].text.to_string(), p);
        }
        "action" => {
            arity(toks, 3, usize::MAX, "action")?;
            let d = match toks[2].text {
                "elliptic" => {
                    arity(toks, 4, usize::MAX, "elliptic action")?;
                    let fixed = toks[3..].iter().map(|&v| vertex(t, v)).collect::<Step<BTreeSet<usize>>>()?;
                    ActionDescriptor::Elliptic { fixed }
                }
                "hyperbolic" => {
                    arity(toks, 6, 7, "hyperbolic action")?;
                    let swaps_ends = match toks.get(6) {
                        Some(s) if s.text == "swap" => true,
                        Some(s) => return fail(s.col, format!("expected `swap`, found `{}`", s.text)),
                        None => false,
                    };
                    ActionDescriptor::Hyperbolic {
                        ends: [ideal(t, toks[3])?, ideal(t, toks[4])?],
                        translation_length: number(toks[5])?,
                        swaps_ends,
                    }
                }
                other => return fail(toks[2].col, format!("unknown action kind `{other}`")),
            };
            if let Err(e) = t.validate_descriptor(&d) {
                return Ok(Err(e));
            }
            t.actions.entry(toks[1].text.to_string()).or_default().push(d);
        }
        other => return fail(toks[0].col, format!("unknown tree record `{other}`")),
    }
    Ok(Ok(()))
}

fn ideal_record(t: &mut TreeHat, toks: &[Tok]) -> Step<Result<()>> {
    arity(toks, 2, usize::MAX, "ideal point")?;
    let mut ray = Vec::new();
    for tok in &toks[1..] {
        ray.push(t.vertex_named(tok.text).map_or_else(|| fail(tok.col, format!("unknown tree vertex `{}`", tok.text)), Ok)?);
    }
    Ok(t.add_ideal(toks[0].text, ray).map(|_| ()))
}

/// Instantiates a loop rule at `level`: registers its groups and builds
/// its tree.
pub fn instantiate_loop(rule: &LoopRule, level: usize, groups: &mut GroupRegistry) -> Result<TreeHat> {
    let in_template = |f: Fail| Error::Parse { line: 0, column: f.col, message: format!("loop template: {}", f.message) };
    for line in &rule.groups {
        let text = substitute(line, level);
        let g = group_line(&tokenize(&text)).map_err(in_template)?;
        if groups.contains(&g.id) {
            for sup in &g.supergroups {
                groups.declare_subgroup(&g.id, sup)?;
            }
        } else {
            groups.insert(g)?;
        }
    }
    groups.validate()?;
    let mut t = TreeHat::new(format!("{}@{level}", rule.node));
    for line in &rule.tree {
        let text = substitute(line, level);
        let toks = tokenize(&text);
        if toks[0].text == "name" {
            t.name = toks.get(1).map_or(t.name.clone(), |n| n.text.to_string());
            continue;
        }
        tree_record(&mut t, &toks).map_err(in_template)??;
    }
    t.validate(groups)?;
    Ok(t)
}

struct Parser {
    fx: Fixture,
    section: Section,
    complex: Option<usize>,
    tree: Option<usize>,
    hierarchy: Option<usize>,
    structure: Option<usize>,
    /// Set by a `loop` record and filled by the LOOP section.
    looping: Option<LoopRule>,
}

impl Parser {
    fn header(&mut self, toks: &[Tok]) -> Step<Result<bool>> {
        let s = match toks[0].text {
            "GROUPS" => Section::Groups,
            "COMPLEX" => {
                arity(toks, 2, 2, "COMPLEX")?;
                if self.fx.complexes.iter().any(|x| x.name == toks[1].text) {
                    return fail(toks[1].col, format!("duplicate complex `{}`", toks[1].text));
                }
                self.fx.complexes.push(Complex2::new(toks[1].text));
                self.complex = Some(self.fx.complexes.len() - 1);
                Section::None
            }
            "VERTICES" => Section::Vertices,
            "EDGES" => Section::Edges,
            "FACES" => Section::Faces,
            "TRIANGLES" => Section::Triangles,
            "STABS" => Section::Stabs,
            "ORBITS" => Section::Orbits,
            "TREE" => {
                arity(toks, 2, 2, "TREE")?;
                if self.fx.trees.iter().any(|t| t.name == toks[1].text) {
                    return fail(toks[1].col, format!("duplicate tree `{}`", toks[1].text));
                }
                self.fx.trees.push(TreeHat::new(toks[1].text));
                self.tree = Some(self.fx.trees.len() - 1);
                Section::Tree
            }
            "IDEAL" => Section::Ideal,
            "HIERARCHY" => {
                arity(toks, 3, 3, "HIERARCHY")?;
                self.fx.hierarchies.push(Hierarchy::new(toks[1].text, toks[2].text));
                self.hierarchy = Some(self.fx.hierarchies.len() - 1);
                Section::Hierarchy
            }
            "STRUCTURE" => {
                arity(toks, 2, 2, "STRUCTURE")?;
                let h = self.fx.hierarchies.iter().find(|h| h.name == toks[1].text);
                let h = h.map_or_else(|| fail(toks[1].col, format!("unknown hierarchy `{}`", toks[1].text)), Ok)?;
                self.fx.structures.push(HStructure::new(h.clone()));
                self.structure = Some(self.fx.structures.len() - 1);
                Section::Structure
            }
            "SCRIPT" => Section::Script,
            "LOOP" => {
                if self.looping.is_none() {
                    return fail(toks[0].col, "LOOP section without a `loop` record in SCRIPT");
                }
                Section::Loop
            }
            "STABPLUS" => Section::StabPlus,
            "CONFIG" => Section::Config,
            _ => return Ok(Ok(false)),
        };
        if !matches!(toks[0].text, "COMPLEX" | "TREE" | "HIERARCHY" | "STRUCTURE") {
            arity(toks, 1, 1, toks[0].text)?;
        }
        self.section = if toks[0].text == "COMPLEX" { Section::Vertices } else { s };
        Ok(Ok(true))
    }

    fn complex(&mut self, col: usize) -> Step<&mut Complex2> {
        match self.complex {
            Some(i) => Ok(&mut self.fx.complexes[i]),
            None => fail(col, "complex section before any COMPLEX header"),
        }
    }

    fn record(&mut self, toks: &[Tok]) -> Step<Result<()>> {
        let first = toks[0];
        match self.section {
            Section::None => return fail(first.col, "record outside any section"),
            Section::Groups => {
                let g = group_line(toks)?;
                if self.fx.groups.contains(&g.id) {
                    return fail(first.col, format!("duplicate group `{}`", g.id));
                }
                return Ok(self.fx.groups.insert(g));
            }
            Section::Vertices => {
                let x = self.complex(first.col)?;
                for t in toks {
                    let (name, marked) = match t.text.strip_prefix('*') {
                        Some(n) => (n, true),
                        None => (t.text, false),
                    };
                    match x.add_vertex(name) {
                        Ok(v) if marked => x.mark(v),
                        Ok(_) => {}
                        Err(e) => return Ok(Err(e)),
                    }
                }
            }
            Section::Edges => {
                arity(toks, 3, 3, "edge")?;
                let x = self.complex(first.col)?;
                let (a, b) = (vertex_of(x, toks[1])?, vertex_of(x, toks[2])?);
                return Ok(x.add_edge(first.text, a, b).map(|_| ()));
            }
            Section::Faces => {
                arity(toks, 3, 4, "face")?;
                let x = self.complex(first.col)?;
                let mut es = Vec::new();
                for t in &toks[1..] {
                    match x.cell(t.text) {
                        Some(Cell::Edge(e)) => es.push(e),
                        _ => {
                            return Ok(Err(Error::MalformedComplex(format!(
                                "face `{}` references a missing edge `{}`",
                                first.text, t.text
                            ))))
                        }
                    }
                }
                return Ok(x.add_face(first.text, &es).map(|_| ()));
            }
            Section::Triangles => {
                arity(toks, 4, 4, "triangle")?;
                let x = self.complex(first.col)?;
                let (a, b, c) = (vertex_of(x, toks[1])?, vertex_of(x, toks[2])?, vertex_of(x, toks[3])?);
                return Ok(x.add_triangle(first.text, a, b, c).map(|_| ()));
            }
            Section::Stabs | Section::Orbits => {
                arity(toks, 2, 2, "label")?;
                let stabs = self.section == Section::Stabs;
                let x = self.complex(first.col)?;
                let cells: Vec<Cell> = if first.text == "*" {
                    x.cells().collect()
                } else {
                    vec![x.cell(first.text).map_or_else(|| fail(first.col, format!("unknown cell `{}`", first.text)), Ok)?]
                };
                for c in cells {
                    if stabs {
                        x.set_stab(c, toks[1].text);
                    } else {
                        x.set_orbit(c, toks[1].text);
                    }
                }
            }
            Section::Tree | Section::Ideal => {
                let Some(i) = self.tree else { return fail(first.col, "IDEAL section before any TREE") };
                let t = &mut self.fx.trees[i];
                return if self.section == Section::Tree { tree_record(t, toks) } else { ideal_record(t, toks) };
            }
            Section::Hierarchy => {
                let h = &mut self.fx.hierarchies[self.hierarchy.expect("set by header")];
                let node = |h: &Hierarchy, t: Tok| -> Step<usize> {
                    h.node_named(t.text).map_or_else(|| fail(t.col, format!("unknown node `{}`", t.text)), Ok)
                };
                match first.text {
                    "node" => {
                        arity(toks, 4, 5, "node")?;
                        let p = node(h, toks[3])?;
                        let k = toks.get(4).map_or(Ok(VertexKind::Unknown), |&t| kind(t))?;
                        return Ok(h.add_child(p, toks[1].text, toks[2].text, k).map(|_| ()));
                    }
                    "split" => {
                        arity(toks, 3, 3, "split")?;
                        let n = node(h, toks[1])?;
                        let t = self.fx.trees.iter().find(|t| t.name == toks[2].text);
                        let t = t.map_or_else(|| fail(toks[2].col, format!("unknown tree `{}`", toks[2].text)), Ok)?;
                        h.set_tree(n, t.clone());
                    }
                    "truncated" => {
                        arity(toks, 2, 2, "truncated")?;
                        let n = node(h, toks[1])?;
                        h.set_truncated(n, true);
                    }
                    "origin" => {
                        arity(toks, 3, 3, "origin")?;
                        let n = node(h, toks[1])?;
                        h.set_origin(n, number(toks[2])?);
                    }
                    "jsj" => {
                        arity(toks, 1, 1, "jsj")?;
                        h.jsj = true;
                    }
                    other => return fail(first.col, format!("unknown hierarchy record `{other}`")),
                }
            }
            Section::Structure => {
                if first.text != "attach" {
                    return fail(first.col, format!("unknown structure record `{}`", first.text));
                }
                arity(toks, 4, 4, "attach")?;
                let s = &mut self.fx.structures[self.structure.expect("set by header")];
                let n = s.hierarchy.node_named(toks[1].text);
                let n = n.map_or_else(|| fail(toks[1].col, format!("unknown node `{}`", toks[1].text)), Ok)?;
                let x = self.fx.complexes.iter().find(|x| x.name == toks[3].text);
                let x = x.map_or_else(|| fail(toks[3].col, format!("unknown complex `{}`", toks[3].text)), Ok)?;
                s.attach(n, toks[2].text, x.clone());
            }
            Section::Script => match first.text {
                "split" => {
                    arity(toks, 3, 3, "split")?;
                    let t = self.fx.trees.iter().find(|t| t.name == toks[2].text);
                    let t = t.map_or_else(|| fail(toks[2].col, format!("unknown tree `{}`", toks[2].text)), Ok)?;
                    if self.fx.script.trees.insert(toks[1].text.to_string(), t.clone()).is_some() {
                        return fail(toks[1].col, format!("node `{}` already splits", toks[1].text));
                    }
                }
                "loop" => {
                    arity(toks, 2, 2, "loop")?;
                    if self.looping.is_some() {
                        return fail(first.col, "only one loop is supported");
                    }
                    self.looping = Some(LoopRule { node: toks[1].text.to_string(), ..Default::default() });
                }
                other => return fail(first.col, format!("unknown script record `{other}`")),
            },
            Section::Loop => {
                let l = self.looping.as_mut().expect("checked by header");
                let rest = || toks[1..].iter().map(|t| t.text).collect::<Vec<_>>().join(" ");
                match first.text {
                    "group" => {
                        arity(toks, 2, usize::MAX, "group")?;
                        group_line(&toks[1..])?;
                        l.groups.push(rest());
                    }
                    "stabplus" => {
                        arity(toks, 3, 3, "stabplus")?;
                        l.stab_plus.push((toks[1].text.to_string(), toks[2].text.to_string()));
                    }
                    "name" | "vertex" | "edge" | "ideal" | "image" | "action" => {
                        l.tree.push(toks.iter().map(|t| t.text).collect::<Vec<_>>().join(" "));
                    }
                    other => return fail(first.col, format!("unknown loop record `{other}`")),
                }
            }
            Section::StabPlus => {
                arity(toks, 3, 3, "stab⁺ label")?;
                let level: usize = number(first)?;
                self.fx.script.stab_plus.entry(level).or_default().insert(toks[1].text.into(), toks[2].text.into());
            }
            Section::Config => {
                arity(toks, 2, usize::MAX, "config")?;
                let c = &mut self.fx.config;
                match first.text {
                    "horizon" => c.horizon = number(toks[1])?,
                    "link_cap" => c.link_cap = number(toks[1])?,
                    "seed" => c.seed = number(toks[1])?,
                    "no_dinfty" => c.no_dinfty_quotients = boolean(toks[1])?,
                    "jsj" => c.jsj = boolean(toks[1])?,
                    "root" => c.root = toks[1].text.to_string(),
                    "expect_certified" => c.expect_certified = Some(number(toks[1])?),
                    "relative_class" => c.relative_class.extend(toks[1..].iter().map(|t| t.text.to_string())),
                    other => return fail(first.col, format!("unknown config key `{other}`")),
                }
                if !matches!(first.text, "relative_class") {
                    arity(toks, 2, 2, first.text)?;
                }
            }
        }
        Ok(Ok(()))
    }
}

fn vertex_of(x: &Complex2, t: Tok) -> Step<usize> {
    x.vertex_named(t.text).map_or_else(|| fail(t.col, format!("unknown vertex `{}`", t.text)), Ok)
}

impl Fixture {
    pub fn parse(text: &str) -> Result<Fixture> {
        let mut p = Parser {
            fx: Fixture::default(),
            section: Section::None,
            complex: None,
            tree: None,
            hierarchy: None,
            structure: None,
            looping: None,
        };
        for (i, line) in text.lines().enumerate() {
            let toks = tokenize(line);
            if toks.is_empty() {
                continue;
            }
            let at = |f: Fail| Error::Parse { line: i + 1, column: f.col, message: f.message };
            if !p.header(&toks).map_err(at)?? {
                p.record(&toks).map_err(at)??;
            }
        }
        let mut fx = p.fx;
        fx.script.looping = p.looping;
        fx.validate()?;
        Ok(fx)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Fixture> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse { line: 0, column: 0, message: format!("{}: {e}", path.display()) })?;
        Fixture::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        self.groups.validate()?;
        for x in &self.complexes {
            x.validate_labels(&self.groups)?;
        }
        for t in &self.trees {
            t.validate(&self.groups)?;
        }
        for h in &self.hierarchies {
            h.validate(&self.groups)?;
        }
        for s in &self.structures {
            s.validate(&self.groups)?;
        }
        self.config.validate(&self.groups)
    }

    pub fn complex(&self, name: Option<&str>) -> Result<&Complex2> {
        find(&self.complexes, name, |x| &x.name, "complex")
    }

    pub fn tree(&self, name: Option<&str>) -> Result<&TreeHat> {
        find(&self.trees, name, |t| &t.name, "tree")
    }

    pub fn hierarchy(&self, name: Option<&str>) -> Result<&Hierarchy> {
        find(&self.hierarchies, name, |h| &h.name, "hierarchy")
    }

    pub fn structure(&self, name: Option<&str>) -> Result<&HStructure> {
        find(&self.structures, name, |s| &s.hierarchy.name, "structure")
    }

    /// Text that parses back to an equal fixture.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let groups: Vec<&GroupRef> = self.groups.iter().filter(|g| g.id != TRIVIAL).collect();
        if !groups.is_empty() {
            out.push_str("GROUPS\n");
            for g in groups {
                out.push_str(&group_text(g));
                out.push('\n');
            }
        }
        for x in &self.complexes {
            write_complex(&mut out, x);
        }
        for t in &self.trees {
            let _ = writeln!(out, "TREE {}", t.name);
            for r in tree_records(t) {
                let _ = writeln!(out, "{r}");
            }
        }
        for h in &self.hierarchies {
            write_hierarchy(&mut out, h);
        }
        for s in &self.structures {
            let _ = writeln!(out, "STRUCTURE {}", s.hierarchy.name);
            for (n, p) in s.all_pieces() {
                let _ = writeln!(out, "attach {} {} {}", s.hierarchy.node(n).name, p.group, p.complex.name);
            }
        }
        let sc = &self.script;
        if !sc.trees.is_empty() || sc.looping.is_some() {
            out.push_str("SCRIPT\n");
            for (n, t) in &sc.trees {
                let _ = writeln!(out, "split {n} {}", t.name);
            }
            if let Some(l) = &sc.looping {
                let _ = writeln!(out, "loop {}\nLOOP", l.node);
                for g in &l.groups {
                    let _ = writeln!(out, "group {g}");
                }
                for r in &l.tree {
                    let _ = writeln!(out, "{r}");
                }
                for (e, g) in &l.stab_plus {
                    let _ = writeln!(out, "stabplus {e} {g}");
                }
            }
        }
        if !sc.stab_plus.is_empty() {
            out.push_str("STABPLUS\n");
            for (level, m) in &sc.stab_plus {
                for (e, g) in m {
                    let _ = writeln!(out, "{level} {e} {g}");
                }
            }
        }
        let c = &self.config;
        let _ = writeln!(
            out,
            "CONFIG\nhorizon {}\nlink_cap {}\nseed {}\nno_dinfty {}\njsj {}\nroot {}",
            c.horizon, c.link_cap, c.seed, c.no_dinfty_quotients, c.jsj, c.root
        );
        if let Some(l) = c.expect_certified {
            let _ = writeln!(out, "expect_certified {l}");
        }
        if !c.relative_class.is_empty() {
            let _ = writeln!(out, "relative_class {}", c.relative_class.iter().cloned().collect::<Vec<_>>().join(" "));
        }
        out
    }
}

fn find<'a, T>(items: &'a [T], name: Option<&str>, key: impl Fn(&T) -> &String, what: &str) -> Result<&'a T> {
    let found = match name {
        Some(n) => items.iter().find(|i| key(i) == n),
        None => items.first(),
    };
    found.ok_or_else(|| Error::MalformedConfig(format!("fixture has no {what}{}", name.map_or(String::new(), |n| format!(" `{n}`")))))
}

fn group_text(g: &GroupRef) -> String {
    let mut s = g.id.clone();
    if g.is_finite {
        s.push_str(" finite");
    } else if g.is_slender {
        s.push_str(" slender");
    }
    if g.is_h_elliptic {
        s.push_str(" h_elliptic");
    }
    if !g.supergroups.is_empty() {
        s.push_str(" <");
        for sup in &g.supergroups {
            s.push(' ');
            s.push_str(sup);
        }
    }
    s
}

/// A single COMPLEX section.
pub fn complex_text(x: &Complex2) -> String {
    let mut out = String::new();
    write_complex(&mut out, x);
    out
}

fn write_complex(out: &mut String, x: &Complex2) {
    let _ = writeln!(out, "COMPLEX {}", x.name);
    if !x.vertices().is_empty() {
        out.push_str("VERTICES\n");
        for (i, v) in x.vertices().iter().enumerate() {
            let _ = writeln!(out, "{}{}", if x.is_marked(i) { "*" } else { "" }, v.name);
        }
    }
    if !x.edges().is_empty() {
        out.push_str("EDGES\n");
        for e in x.edges() {
            let _ = writeln!(out, "{} {} {}", e.name, x.vertices()[e.ends[0]].name, x.vertices()[e.ends[1]].name);
        }
    }
    if !x.faces().is_empty() {
        out.push_str("FACES\n");
        for f in x.faces() {
            let es: Vec<&str> = f.edges().iter().map(|&e| x.edges()[e].name.as_str()).collect();
            let _ = writeln!(out, "{} {}", f.name, es.join(" "));
        }
    }
    let cells: Vec<(String, &CellLabel)> = x.cells().map(|c| (cell_name(x, c).to_string(), x.label(c))).collect();
    let stabs: Vec<_> = cells.iter().filter(|(_, l)| l.stab != TRIVIAL).collect();
    if !stabs.is_empty() {
        out.push_str("STABS\n");
        for (n, l) in stabs {
            let _ = writeln!(out, "{n} {}", l.stab);
        }
    }
    let orbits: Vec<_> = cells.iter().filter(|(n, l)| &l.orbit != n).collect();
    if !orbits.is_empty() {
        out.push_str("ORBITS\n");
        for (n, l) in orbits {
            let _ = writeln!(out, "{n} {}", l.orbit);
        }
    }
}

fn cell_name(x: &Complex2, c: Cell) -> &str {
    match c {
        Cell::Vertex(i) => &x.vertices()[i].name,
        Cell::Edge(i) => &x.edges()[i].name,
        Cell::Face(i) => &x.faces()[i].name,
    }
}

fn tree_records(t: &TreeHat) -> Vec<String> {
    let mut out = Vec::new();
    for v in t.vertices() {
        out.push(format!("vertex {} {} {}", v.name, v.stab, v.orbit));
    }
    for e in t.edges() {
        let [a, b] = e.ends.map(|v| t.vertices()[v].name.as_str());
        out.push(format!("edge {} {a} {b} {} {}", e.name, e.stab, e.orbit));
    }
    for p in t.ideals() {
        let ray: Vec<&str> = p.ray.iter().map(|&v| t.vertices()[v].name.as_str()).collect();
        out.push(format!("ideal {} {}", p.name, ray.join(" ")));
    }
    for (g, ds) in &t.actions {
        for d in ds {
            out.push(match d {
                ActionDescriptor::Elliptic { fixed } => {
                    let vs: Vec<&str> = fixed.iter().map(|&v| t.vertices()[v].name.as_str()).collect();
                    format!("action {g} elliptic {}", vs.join(" "))
                }
                ActionDescriptor::Hyperbolic { ends, translation_length, swaps_ends } => format!(
                    "action {g} hyperbolic {} {} {translation_length}{}",
                    t.ideals()[ends[0]].name,
                    t.ideals()[ends[1]].name,
                    if *swaps_ends { " swap" } else { "" }
                ),
            });
        }
    }
    for (v, p) in &t.images {
        out.push(format!("image {v} {}", t.point_name(*p)));
    }
    out
}

fn write_hierarchy(out: &mut String, h: &Hierarchy) {
    let _ = writeln!(out, "HIERARCHY {} {}", h.name, h.root_group());
    for n in &h.nodes()[1..] {
        let p = &h.node(n.parent.expect("non-root nodes have parents")).name;
        let _ = writeln!(out, "node {} {} {p} {}", n.name, n.group, kind_name(n.kind));
    }
    for n in h.nodes() {
        if let Some(t) = &n.tree {
            let _ = writeln!(out, "split {} {}", n.name, t.name);
        }
        if n.truncated {
            let _ = writeln!(out, "truncated {}", n.name);
        }
        if let Some(o) = n.origin {
            let _ = writeln!(out, "origin {} {o}", n.name);
        }
    }
    if h.jsj {
        out.push_str("jsj\n");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "COMPLEX X\nVERTICES\na b c\nTRIANGLES\nt a b c\n";

    #[test]
    fn minimal_triangle() {
        let fx = Fixture::parse(TRIANGLE).unwrap();
        assert_eq!(fx.complexes[0].vertices().len(), 3);
        assert_eq!(fx.complexes[0].num_triangles(), 1);
    }

    #[test]
    fn face_with_missing_edge_is_malformed() {
        let text = "COMPLEX X\nVERTICES\na b c\nEDGES\nab a b\nbc b c\nFACES\nt ab bc ca\n";
        assert!(matches!(Fixture::parse(text), Err(Error::MalformedComplex(_))));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let text = "COMPLEX X\nVERTICES\na b\nEDGES\nab a  q\n";
        match Fixture::parse(text) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (5, 7)),
            other => panic!("{other:?}"),
        }
        match Fixture::parse("GROUPS\nA bendy\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip() {
        let text = "\
GROUPS
G
A < G
B < G
C slender < A B
S slender h_elliptic
COMPLEX X
VERTICES
*u0 u1 w0
TRIANGLES
t u0 u1 w0
STABS
* S
ORBITS
t o1
TREE T
vertex a A
vertex b B
edge e a b C
ideal p b
image u0 a
action S elliptic a b
HIERARCHY K G
origin K 0
STRUCTURE K
attach K G X
SCRIPT
split v0 T
STABPLUS
0 e C
CONFIG
horizon 3
expect_certified 1
";
        let fx = Fixture::parse(text).unwrap();
        assert_eq!(fx.structures[0].covolume(), 1);
        let again = Fixture::parse(&fx.to_text()).unwrap();
        assert_eq!(again, fx);
        assert_eq!(again.to_text(), fx.to_text());
    }

    #[test]
    fn loop_instantiates_per_level() {
        let text = "\
GROUPS
F0
SCRIPT
loop v{n}
LOOP
name T{n}
group F{n+1} < F{n}
vertex v{n+1} F{n+1}
stabplus e Z{n}
";
        let mut fx = Fixture::parse(text).unwrap();
        let rule = fx.script.looping.clone().unwrap();
        let t = instantiate_loop(&rule, 0, &mut fx.groups).unwrap();
        assert_eq!(t.name, "T0");
        assert_eq!(t.vertices()[0].orbit, "v1");
        assert!(fx.groups.is_subgroup("F1", "F0"));
        assert_eq!(Fixture::parse(&fx.to_text()).unwrap().script, fx.script);
    }
}
