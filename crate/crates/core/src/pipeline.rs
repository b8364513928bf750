//! Level-by-level runs: pass an H-structure down a scripted hierarchy,
//! track triangles across levels, and look for a level at which every
//! terminal complex certifies its B'_w as a tree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::cones::DEFAULT_LINK_CAP;
use crate::error::{Error, Result};
use crate::fixture::instantiate_loop;
use crate::gog::GraphOfGroups;
use crate::group::GroupRegistry;
use crate::stability::{
    cone_criterion_check, equivalence_classes, stabilization_report, stable_pairs, ConeVerdict, Level,
    StabilizationReport, TauFamily, TauMap,
};
use crate::structure::{passdown_full, CovolumeLedger, HStructure};
use crate::tree::TreeHat;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    /// No subgroup of the run surjects onto D∞; required by the full passdown.
    pub no_dinfty_quotients: bool,
    pub jsj: bool,
    pub relative_class: BTreeSet<String>,
    pub horizon: usize,
    pub link_cap: usize,
    pub seed: u64,
    /// Name of the root node of the run.
    pub root: String,
    /// Level the run is expected to certify at, if any; only checked by tests.
    pub expect_certified: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            no_dinfty_quotients: true,
            jsj: false,
            relative_class: BTreeSet::new(),
            horizon: 4,
            link_cap: DEFAULT_LINK_CAP,
            seed: 0,
            root: "v0".into(),
            expect_certified: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self, groups: &GroupRegistry) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::MalformedConfig("horizon must be at least 1".into()));
        }
        if self.link_cap < 3 {
            return Err(Error::MalformedConfig("link cap must be at least 3".into()));
        }
        for g in &self.relative_class {
            groups.get(g)?;
        }
        Ok(())
    }
}

/// A splitting repeated at every level, written with `{n}` and `{n+1}`
/// placeholders for the level and the next one.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LoopRule {
    pub node: String,
    /// Group declarations, one per line in fixture syntax.
    pub groups: Vec<String>,
    /// Tree section body in fixture syntax.
    pub tree: Vec<String>,
    /// Edge tag and stab⁺ label, per level.
    pub stab_plus: Vec<(String, String)>,
}

/// The hierarchy being followed: the splitting of each node that splits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Script {
    pub trees: BTreeMap<String, TreeHat>,
    pub looping: Option<LoopRule>,
    /// Level to edge tag to stab⁺ label.
    pub stab_plus: BTreeMap<usize, BTreeMap<String, String>>,
}

pub fn substitute(s: &str, n: usize) -> String {
    s.replace("{n+1}", &(n + 1).to_string()).replace("{n}", &n.to_string())
}

impl Script {
    fn splitting(&self, node: &str, level: usize, groups: &mut GroupRegistry) -> Result<Option<TreeHat>> {
        if let Some(t) = self.trees.get(node) {
            return Ok(Some(t.clone()));
        }
        match &self.looping {
            Some(l) if substitute(&l.node, level) == node => Ok(Some(instantiate_loop(l, level, groups)?)),
            _ => Ok(None),
        }
    }

    fn splits(&self, node: &str, level: usize) -> bool {
        self.trees.contains_key(node) || self.looping.as_ref().is_some_and(|l| substitute(&l.node, level) == node)
    }

    fn stab_plus_at(&self, level: usize) -> BTreeMap<String, String> {
        let mut out = self.stab_plus.get(&level).cloned().unwrap_or_default();
        if let Some(l) = &self.looping {
            for (e, g) in &l.stab_plus {
                out.insert(substitute(e, level), substitute(g, level));
            }
        }
        out
    }
}

/// One H-node of a level with the structure passed down to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeState {
    pub name: String,
    pub group: String,
    pub structure: HStructure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerdictSummary {
    Certified { nodes: usize, collapsed_nodes: usize, collapsed_tree: bool },
    Counterexample { center: String, boundary: Vec<String> },
    Inconclusive { capped: Vec<String> },
    NotEdgeConnected,
}

impl VerdictSummary {
    fn passes(&self) -> bool {
        matches!(self, VerdictSummary::Certified { collapsed_tree: true, .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PieceVerdict {
    pub node: String,
    pub complex: String,
    pub verdict: VerdictSummary,
    /// B_w in DOT form, when the cone criterion certified it.
    pub dot: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelReport {
    pub level: usize,
    pub nodes: Vec<(String, String, usize)>,
    pub covolume: usize,
    /// Per split node, the covolume through the stages of the passdown
    /// that produced the next level.
    pub ledgers: Vec<(String, CovolumeLedger)>,
    pub classes: usize,
    pub verdicts: Vec<PieceVerdict>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub horizon: usize,
    pub seed: u64,
    pub levels: Vec<LevelReport>,
    pub stability: StabilizationReport,
    /// First level at or after N″ at which every piece certifies, unless
    /// an ACC alert is raised.
    pub certified_level: Option<usize>,
    pub diagnostics: Vec<String>,
}

impl RunReport {
    pub fn certified(&self) -> bool {
        self.certified_level.is_some()
    }
}

pub fn run_pipeline(
    config: &PipelineConfig,
    root: &HStructure,
    script: &Script,
    groups: &mut GroupRegistry,
) -> Result<RunReport> {
    config.validate(groups)?;
    root.validate(groups)?;
    let mut states = vec![vec![NodeState {
        name: config.root.clone(),
        group: root.hierarchy.root_group().to_string(),
        structure: root.clone(),
    }]];
    let mut taus = TauFamily::default();
    let mut ledgers = Vec::new();
    for n in 0..config.horizon {
        let mut next: Vec<NodeState> = Vec::new();
        let mut tau = TauMap::new();
        let mut lg = Vec::new();
        for s in &states[n] {
            match script.splitting(&s.name, n, groups)? {
                Some(t) => {
                    let gog = GraphOfGroups::quotient(&t);
                    let full = passdown_full(&s.structure, &t, &gog, config.no_dinfty_quotients, groups)?;
                    lg.push((s.name.clone(), full.ledger));
                    tau.extend(full.tau);
                    for (w, k) in full.structures {
                        let v = gog.vertex_named(&w).expect("passdown is keyed by vertex orbits");
                        next.push(NodeState { name: w, group: gog.vertices[v].label.clone(), structure: k });
                    }
                }
                None => {
                    for t in s.structure.triangle_tags() {
                        tau.insert(t.to_string(), t.to_string());
                    }
                    next.push(s.clone());
                }
            }
        }
        next.sort_by(|a, b| a.name.cmp(&b.name));
        if let Some(w) = next.windows(2).find(|w| w[0].name == w[1].name) {
            return Err(Error::MalformedConfig(format!("node `{}` appears twice at level {}", w[0].name, n + 1)));
        }
        states.push(next);
        taus.steps.push(tau);
        ledgers.push(lg);
    }
    ledgers.push(Vec::new());

    let levels: Vec<Level> = (0..=config.horizon)
        .map(|n| Level {
            complexes: states[n].iter().flat_map(|s| s.structure.all_pieces().map(|(_, p)| p.complex.clone())).collect(),
            stab_plus: script.stab_plus_at(n),
        })
        .collect();
    let stability = stabilization_report(&levels, &taus, groups)?;
    let mut diagnostics = stability.diagnostics.clone();

    let mut reports = Vec::new();
    for (n, lv) in levels.iter().enumerate() {
        let ps = stable_pairs(&levels, &taus, n, config.horizon);
        let classes = equivalence_classes(lv, &ps)?;
        let mut verdicts = Vec::new();
        let owners = states[n].iter().flat_map(|s| s.structure.all_pieces().map(move |_| s.name.clone()));
        for (i, owner) in owners.enumerate() {
            let x = &lv.complexes[i];
            let mut dot = None;
            let verdict = match cone_criterion_check(lv, i, &classes, config.link_cap) {
                Ok(ConeVerdict::Certified(bw)) => {
                    dot = Some(crate::dot::bw(x, &bw));
                    let (m, edges) = bw.collapse(groups)?;
                    VerdictSummary::Certified {
                        nodes: bw.node_count(),
                        collapsed_nodes: m,
                        collapsed_tree: crate::cutpoint::is_tree(m, edges),
                    }
                }
                Ok(ConeVerdict::Counterexample(c)) => VerdictSummary::Counterexample {
                    center: x.vertices()[c.center].name.clone(),
                    boundary: c.boundary.iter().map(|&v| x.vertices()[v].name.clone()).collect(),
                },
                Ok(ConeVerdict::Inconclusive { capped }) => VerdictSummary::Inconclusive {
                    capped: capped.iter().map(|&v| x.vertices()[v].name.clone()).collect(),
                },
                Err(Error::Precondition { .. }) => VerdictSummary::NotEdgeConnected,
                Err(e) => return Err(e),
            };
            verdicts.push(PieceVerdict { node: owner, complex: x.name.clone(), verdict, dot });
        }
        reports.push(LevelReport {
            level: n,
            nodes: states[n].iter().map(|s| (s.name.clone(), s.group.clone(), s.structure.covolume())).collect(),
            covolume: lv.covolume(),
            ledgers: std::mem::take(&mut ledgers[n]),
            classes: classes.classes.len(),
            verdicts,
        });
    }

    for s in &states[config.horizon] {
        if script.splits(&s.name, config.horizon) {
            diagnostics.push(format!("hierarchy still splitting `{}` at level {}", s.name, config.horizon));
        }
    }
    let start = stability.n_second.unwrap_or(config.horizon);
    let certified_level = if stability.acc_alerts.is_empty() {
        reports[start..].iter().find(|r| r.verdicts.iter().all(|v| v.verdict.passes())).map(|r| r.level)
    } else {
        None
    };
    if certified_level.is_none() {
        diagnostics.push(format!("no certificate within horizon {}", config.horizon));
    }
    Ok(RunReport {
        horizon: config.horizon,
        seed: config.seed,
        levels: reports,
        stability,
        certified_level,
        diagnostics,
    })
}

fn opt(v: Option<usize>) -> String {
    v.map_or("-".into(), |v| v.to_string())
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "horizon {} seed {}", self.horizon, self.seed)?;
        for r in &self.levels {
            writeln!(f, "level {}: covolume {} classes {}", r.level, r.covolume, r.classes)?;
            for (name, group, c) in &r.nodes {
                writeln!(f, "  node {name} group {group} covolume {c}")?;
            }
            for (name, l) in &r.ledgers {
                let stages: Vec<String> = l.stages().iter().map(|(s, c)| format!("{s} {c}")).collect();
                writeln!(f, "  passdown {name}: {}", stages.join(", "))?;
            }
            for v in &r.verdicts {
                let text = match &v.verdict {
                    VerdictSummary::Certified { nodes, collapsed_nodes, collapsed_tree } => format!(
                        "B_w has {nodes} nodes, B'_w has {collapsed_nodes} and is {}a tree",
                        if *collapsed_tree { "" } else { "not " }
                    ),
                    VerdictSummary::Counterexample { center, boundary } => {
                        format!("cone at {center} with boundary {} meets two classes", boundary.join(" "))
                    }
                    VerdictSummary::Inconclusive { capped } => format!("link cap reached at {}", capped.join(" ")),
                    VerdictSummary::NotEdgeConnected => "triangles not edge connected".into(),
                };
                writeln!(f, "  {} {}: {text}", v.node, v.complex)?;
            }
        }
        let s = &self.stability;
        writeln!(f, "N_delta {} N' {} N'' {}", opt(s.n_delta), opt(s.n_prime), opt(s.n_second))?;
        for a in &s.acc_alerts {
            writeln!(f, "ACC alert on {}: {}", a.edge, a.chain.join(" < "))?;
        }
        match self.certified_level {
            Some(l) => writeln!(f, "certified at level {l}")?,
            None => writeln!(f, "not certified")?,
        }
        for d in &self.diagnostics {
            writeln!(f, "diagnostic: {d}")?;
        }
        Ok(())
    }
}
