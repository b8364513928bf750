use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use strongacc::cutpoint::{cutpoint_tree, cutpoints, reduced_cutpoint_tree};
use strongacc::fixture::complex_text;
use strongacc::resolution::{build_resolution, contract, CellClasses, Resolution, ResolutionKind};
use strongacc::structure::passdown_full;
use strongacc::tracks::{essential_tracks, split_collapse, tracks_from_resolution};
use strongacc::{dot, run_pipeline, Error, Fixture, GraphOfGroups, RunReport, TreeHat};

/// Runs the constructions of the strong accessibility argument on
/// fixture files.
///
/// Exit codes: 0 success or certified, 1 hypothesis violation or no
/// certificate, 2 malformed input, 3 internal invariant failure.
#[derive(Parser)]
#[command(name = "strongacc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Merge parallel edges and repeated triangles, drop bigons; print the reduced complex.
    Reduce(Common),
    /// Dimension of H¹(X; Z₂) and number of components.
    H1(Common),
    /// Cut vertices, the cutpoint tree and its reduction.
    Cutpoints(Common),
    /// Classify the action of each declared group on a tree.
    Classify(Classify),
    /// Build the resolution of a complex to a tree.
    Resolve(Common),
    /// Tracks of a resolution, with essential ones flagged.
    Tracks(Common),
    /// Collapse essential tracks of a splitting resolution.
    Split(Common),
    /// Collapse the boundary preimage of a contracting resolution.
    Contract(Common),
    /// Pass an H-structure down to the vertex groups of a tree.
    Passdown(Common),
    /// Run the level-by-level pipeline and print the full report.
    Pipeline(Run),
    /// Run the pipeline and print only the certificate.
    Certify(Run),
}

#[derive(Args)]
struct Common {
    /// Fixture file.
    fixture: PathBuf,
    /// Complex to use; defaults to the first in the fixture.
    #[arg(long)]
    complex: Option<String>,
    /// Tree to use; defaults to the first in the fixture.
    #[arg(long)]
    tree: Option<String>,
    /// H-structure to use, by hierarchy name; defaults to the first.
    #[arg(long)]
    structure: Option<String>,
    /// Directory to write DOT files into.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct Classify {
    #[command(flatten)]
    common: Common,
    /// Classify only this group.
    #[arg(long)]
    group: Option<String>,
}

#[derive(Args)]
struct Run {
    #[command(flatten)]
    common: Common,
    /// Override the configured horizon.
    #[arg(long)]
    horizon: Option<usize>,
    /// Override the configured link size cap for cone enumeration.
    #[arg(long)]
    link_cap: Option<usize>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok((text, code)) => {
            print!("{text}");
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(2, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn write_dot(dir: Option<&Path>, name: &str, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(format!("{name}.dot"));
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn resolution(fx: &Fixture, c: &Common) -> anyhow::Result<Resolution> {
    let (x, t) = (fx.complex(c.complex.as_deref())?, fx.tree(c.tree.as_deref())?);
    let cls = CellClasses::compute(x, t, &fx.groups)?;
    Ok(build_resolution(x, t, &cls, fx.config.no_dinfty_quotients)?)
}

fn execute(command: Command) -> anyhow::Result<(String, u8)> {
    let mut out = String::new();
    let code = match command {
        Command::Reduce(c) => {
            let fx = Fixture::load(&c.fixture)?;
            let x = fx.complex(c.complex.as_deref())?;
            let r = x.reduce();
            writeln!(out, "covolume {} -> {}", x.covolume(), r.covolume())?;
            out.push_str(&complex_text(&r));
            0
        }
        Command::H1(c) => {
            let fx = Fixture::load(&c.fixture)?;
            let h = fx.complex(c.complex.as_deref())?.h1_z2();
            writeln!(out, "components {}\nh1 {}", h.components, h.dim)?;
            0
        }
        Command::Cutpoints(c) => {
            let mut fx = Fixture::load(&c.fixture)?;
            let x = fx.complex(c.complex.as_deref())?.clone();
            let names: Vec<&str> = cutpoints(&x).into_iter().map(|v| x.vertices()[v].name.as_str()).collect();
            writeln!(out, "cutpoints {}", names.join(" "))?;
            let b = cutpoint_tree(&x, None, &mut fx.groups)?;
            writeln!(out, "blocks {} nodes {} tree {}", b.blocks.len(), b.nodes.len(), b.is_tree())?;
            let (_, rb) = reduced_cutpoint_tree(&x, None, &mut fx.groups)?;
            writeln!(out, "reduced nodes {} tree {}", rb.nodes.len(), rb.is_tree())?;
            for (i, n) in rb.nodes.iter().enumerate() {
                writeln!(
                    out,
                    "  node {i}: {} faces, stabilizer {}{}",
                    n.faces.len(),
                    n.stab,
                    if n.slender { " (slender)" } else { "" }
                )?;
            }
            write_dot(c.dot.as_deref(), "cutpoint_tree", &dot::cutpoint_tree(&x, &b))?;
            write_dot(c.dot.as_deref(), "reduced_cutpoint_tree", &dot::reduced_cutpoint_tree(&x, &rb))?;
            0
        }
        Command::Classify(cl) => {
            let fx = Fixture::load(&cl.common.fixture)?;
            let t = fx.tree(cl.common.tree.as_deref())?;
            let groups: Vec<String> = match &cl.group {
                Some(g) => vec![g.clone()],
                None => t.actions.keys().cloned().collect(),
            };
            let mut code = 0;
            for g in groups {
                match t.classify_group(fx.groups.get(&g)?, &fx.groups) {
                    Ok(c) => writeln!(out, "{g}: {}", c.class)?,
                    Err(e @ (Error::Classification(_) | Error::SlenderConsistency { .. })) => {
                        writeln!(out, "{g}: unclassified ({e})")?;
                        code = 1;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            write_dot(cl.common.dot.as_deref(), "quotient", &dot::graph_of_groups(&GraphOfGroups::quotient(t)))?;
            code
        }
        Command::Resolve(c) => {
            let fx = Fixture::load(&c.fixture)?;
            let r = resolution(&fx, &c)?;
            r.check()?;
            writeln!(out, "{}", kind_name(r.kind))?;
            for (v, vx) in r.source.vertices().iter().enumerate() {
                writeln!(out, "  {} -> {}", vx.name, r.image_name(v))?;
            }
            for (e, ex) in r.source.edges().iter().enumerate() {
                let path: Vec<&str> = r.edge_path[e].iter().map(|&p| r.target.point_name(p)).collect();
                writeln!(out, "  {}: {}", ex.name, path.join(" "))?;
            }
            write_dot(c.dot.as_deref(), "quotient", &dot::graph_of_groups(&GraphOfGroups::quotient(&r.target)))?;
            0
        }
        Command::Tracks(c) => {
            let fx = Fixture::load(&c.fixture)?;
            let r = resolution(&fx, &c)?;
            let ts = tracks_from_resolution(&r)?;
            for tr in &ts.tracks {
                writeln!(
                    out,
                    "{}: {} arcs, {} sides, {}",
                    tr.name,
                    tr.arcs.len(),
                    tr.sides.len(),
                    if tr.is_essential() { "essential" } else { "inessential" }
                )?;
            }
            for a in ts.arc_listing(&r.source) {
                writeln!(out, "  {a}")?;
            }
            0
        }
        Command::Split(c) => {
            let mut fx = Fixture::load(&c.fixture)?;
            let r = resolution(&fx, &c)?;
            let ts = essential_tracks(&tracks_from_resolution(&r)?)?;
            let s = split_collapse(&r, &ts, &mut fx.groups)?;
            writeln!(out, "covolume {} -> {}", r.source.covolume(), s.complex.covolume())?;
            for (comp, _) in s.complex.components() {
                let h = comp.h1_z2();
                writeln!(out, "component {}: {} triangles, h1 {}", comp.name, comp.num_triangles(), h.dim)?;
            }
            out.push_str(&complex_text(&s.complex));
            0
        }
        Command::Contract(c) => {
            let mut fx = Fixture::load(&c.fixture)?;
            let r = resolution(&fx, &c)?;
            let k = contract(&r, &mut fx.groups)?;
            writeln!(out, "covolume {} -> {}", r.source.covolume(), k.complex.covolume())?;
            out.push_str(&complex_text(&k.complex));
            0
        }
        Command::Passdown(c) => {
            let mut fx = Fixture::load(&c.fixture)?;
            let k = fx.structure(c.structure.as_deref())?.clone();
            let t: TreeHat = fx.tree(c.tree.as_deref())?.clone();
            let gog = GraphOfGroups::quotient(&t);
            let full = passdown_full(&k, &t, &gog, fx.config.no_dinfty_quotients, &mut fx.groups)?;
            let stages: Vec<String> = full.ledger.stages().iter().map(|(s, n)| format!("{s} {n}")).collect();
            writeln!(out, "covolume {}", stages.join(", "))?;
            for (w, s) in &full.structures {
                writeln!(out, "{w}: root {} covolume {}", s.hierarchy.root_group(), s.covolume())?;
                for (n, p) in s.all_pieces() {
                    writeln!(out, "  {} {}: {} triangles", s.hierarchy.node(n).name, p.group, p.complex.num_triangles())?;
                }
            }
            write_dot(c.dot.as_deref(), "quotient", &dot::graph_of_groups(&gog))?;
            0
        }
        Command::Pipeline(r) => {
            let report = pipeline(&r)?;
            out.push_str(&report.to_string());
            dot_certificates(&r, &report)?;
            if report.certified() { 0 } else { 1 }
        }
        Command::Certify(r) => {
            let report = pipeline(&r)?;
            match report.certified_level {
                Some(l) => {
                    writeln!(out, "certified at level {l}")?;
                    for v in &report.levels[l].verdicts {
                        writeln!(out, "  {} {}: B'_w is a tree", v.node, v.complex)?;
                    }
                }
                None => {
                    writeln!(out, "not certified")?;
                    for d in &report.diagnostics {
                        writeln!(out, "  {d}")?;
                    }
                }
            }
            dot_certificates(&r, &report)?;
            if report.certified() { 0 } else { 1 }
        }
    };
    Ok((out, code))
}

fn pipeline(r: &Run) -> anyhow::Result<RunReport> {
    let mut fx = Fixture::load(&r.common.fixture)?;
    let mut config = fx.config.clone();
    config.horizon = r.horizon.unwrap_or(config.horizon);
    config.link_cap = r.link_cap.unwrap_or(config.link_cap);
    config.seed = r.seed.unwrap_or(config.seed);
    let k = fx.structure(r.common.structure.as_deref())?.clone();
    Ok(run_pipeline(&config, &k, &fx.script, &mut fx.groups)?)
}

/// B_w of every piece at the certified level, or the last level.
fn dot_certificates(r: &Run, report: &RunReport) -> anyhow::Result<()> {
    let level = report.certified_level.unwrap_or(report.horizon);
    for v in &report.levels[level].verdicts {
        if let Some(d) = &v.dot {
            let name = format!("bw_{level}_{}_{}", v.node, v.complex).replace(['/', ' '], "_");
            write_dot(r.common.dot.as_deref(), &name, d)?;
        }
    }
    Ok(())
}

fn kind_name(k: ResolutionKind) -> &'static str {
    match k {
        ResolutionKind::SplittingI => "splitting (type I)",
        ResolutionKind::ContractingII => "contracting (type II)",
    }
}
