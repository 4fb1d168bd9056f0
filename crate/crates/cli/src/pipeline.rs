//! Staged translation: path quantifiers, then preference, then strategies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use atlscpref_core::atlsc::{translate_atlsc, QuantCount, TranslateError, TranslateOptions};
use atlscpref_core::models::{build_mb, Cgm, Kripke, ModelError, PrefTables, PreferenceDescription};
use atlscpref_core::path_quant::{eliminate_path_quant, PathQuantError, PathQuantOptions};
use atlscpref_core::pref_elim::{eliminate_preference, PrefElimError, PrefElimOptions, PrefMode};
use atlscpref_core::{Agent, Formula, Node, Sym};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Paths,
    Pref,
    Atlsc,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Paths => "paths",
            Stage::Pref => "pref",
            Stage::Atlsc => "atlsc",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stages out of order: {0} after {1}")]
    Order(Stage, Stage),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Paths(#[from] PathQuantError),
    #[error(transparent)]
    Pref(#[from] PrefElimError),
    #[error(transparent)]
    Atlsc(#[from] TranslateError),
    #[error("strategy translation needs a game model")]
    NotAGame,
    #[error("after stage {stage}: `{node}` is still present")]
    Postcondition { stage: Stage, node: String },
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub stages: Vec<Stage>,
    pub pref_mode: PrefMode,
    pub collapse_root: bool,
    pub translate: TranslateOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stages: vec![Stage::Paths, Stage::Pref, Stage::Atlsc],
            pref_mode: PrefMode::ForMB,
            collapse_root: true,
            translate: TranslateOptions::default(),
        }
    }
}

/// The model a pipeline runs against.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Kripke(&'a Kripke),
    Game(&'a Cgm),
}

impl Target<'_> {
    fn prefs(&self) -> &BTreeMap<Agent, PreferenceDescription> {
        match self {
            Target::Kripke(k) => &k.prefs,
            Target::Game(m) => &m.prefs,
        }
    }

    fn reserved(&self) -> BTreeSet<Sym> {
        match self {
            Target::Kripke(k) => k.vocabulary(),
            Target::Game(m) => m.vocabulary().into_iter().chain(m.action_atoms()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StageOutput {
    pub stage: Stage,
    pub formula: Formula,
    /// Product with the objective labels, when the preference stage ran
    /// in `ForMB` mode on a Kripke model.
    pub mb: Option<Kripke>,
    pub quantifiers: Vec<QuantCount>,
}

fn first_node(f: &Formula, pred: &dyn Fn(&Node) -> bool) -> Option<String> {
    let mut out = None;
    f.visit(&mut |g| {
        if out.is_none() && pred(g.node()) {
            out = Some(g.to_string());
        }
    });
    out
}

fn postcondition(stage: Stage, f: &Formula) -> Result<(), PipelineError> {
    let bad: &dyn Fn(&Node) -> bool = match stage {
        Stage::Paths => &|n| {
            matches!(n, Node::PathAtom(_) | Node::SimQuant(..) | Node::SimForall(..) | Node::OneQuant(..))
        },
        Stage::Pref => &|n| matches!(n, Node::Pref(..)),
        Stage::Atlsc => &|n| matches!(n, Node::StratMod(..) | Node::StratBox(..) | Node::Relax(..)),
    };
    match first_node(f, bad) {
        Some(node) => Err(PipelineError::Postcondition { stage, node }),
        None => Ok(()),
    }
}

/// Run the configured stages in order; every output is checked for the
/// operators its stage removes.
pub fn run_pipeline(target: Target, a: &Formula, cfg: &PipelineConfig) -> Result<Vec<StageOutput>, PipelineError> {
    for w in cfg.stages.windows(2) {
        if w[1] <= w[0] {
            return Err(PipelineError::Order(w[1], w[0]));
        }
    }
    let agents: BTreeSet<Agent> = {
        let mut s = a.pref_agents();
        a.visit(&mut |g| {
            if let Node::SimQuant(i, ..) | Node::SimForall(i, ..) | Node::OneQuant(i, ..) = g.node() {
                s.insert(*i);
            }
        });
        s
    };
    let tables = PrefTables::new(target.prefs(), &agents, &target.reserved())?;
    let mut cur = a.clone();
    let mut out = Vec::new();
    for &stage in &cfg.stages {
        let mut mb = None;
        let mut quantifiers = Vec::new();
        cur = match stage {
            Stage::Paths => {
                let log_guards = cfg.pref_mode == PrefMode::LogVars;
                eliminate_path_quant(&cur, &tables, PathQuantOptions { collapse_root: cfg.collapse_root, log_guards })?
            }
            Stage::Pref => {
                let opts = PrefElimOptions { mode: cfg.pref_mode, collapse_root: cfg.collapse_root };
                let f = eliminate_preference(&cur, &tables, opts)?;
                if let (PrefMode::ForMB, Target::Kripke(k)) = (cfg.pref_mode, target) {
                    mb = Some(build_mb(k, &tables)?.kripke);
                }
                f
            }
            Stage::Atlsc => {
                let Target::Game(m) = target else { return Err(PipelineError::NotAGame) };
                let t = translate_atlsc(&cur, m, cfg.translate)?;
                quantifiers = t.quantifiers;
                t.formula
            }
        };
        postcondition(stage, &cur)?;
        out.push(StageOutput { stage, formula: cur.clone(), mb, quantifiers });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use atlscpref_core::parse;

    fn game() -> Cgm {
        let text = "agents: 1 2\nactions 1: a b\nactions 2: c\nstates: s t\ninit: s\nlabel t: p\n\
                    outcome s a c -> s\noutcome s b c -> t\noutcome t a c -> t\noutcome t b c -> t\n";
        match atlscpref_core::models::load_model(text).unwrap() {
            atlscpref_core::models::Model::Cgm(m) => m,
            _ => unreachable!(),
        }
    }

    #[test]
    fn identity_on_plain_formulas() {
        let m = game();
        let a = parse("E F p & A G (p -> A X p)").unwrap();
        let cfg = PipelineConfig { stages: vec![Stage::Paths, Stage::Pref], ..Default::default() };
        let out = run_pipeline(Target::Game(&m), &a, &cfg).unwrap();
        assert!(out.iter().all(|s| s.formula == a));
    }

    #[test]
    fn strategies_are_translated() {
        let m = game();
        let out = run_pipeline(Target::Game(&m), &parse("<<1>> F p").unwrap(), &PipelineConfig::default()).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[2].quantifiers.len(), 1);
        assert!(out[2].formula.has_prop_quant());
    }

    #[test]
    fn order_is_enforced() {
        let m = game();
        let cfg = PipelineConfig { stages: vec![Stage::Pref, Stage::Paths], ..Default::default() };
        assert!(matches!(
            run_pipeline(Target::Game(&m), &parse("p").unwrap(), &cfg),
            Err(PipelineError::Order(Stage::Paths, Stage::Pref))
        ));
    }
}
