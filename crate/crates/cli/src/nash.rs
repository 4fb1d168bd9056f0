//! End-to-end run of the Nash equilibrium encoding on a two-player game
//! with three ordered outcome classes per player.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use atlscpref_core::atlsc::{solution_concept, Template};
use atlscpref_core::check::{atlsc_bounded_eval, translated_eval, CheckError};
use atlscpref_core::models::{load_model, Cgm, Model};
use atlscpref_core::{Agent, Formula, Node, Variant};

use crate::pipeline::{run_pipeline, PipelineConfig, PipelineError, Stage, Target};

pub const NASH_MODEL: &str = include_str!("../models/nash.cgm");

const AGENTS: [Agent; 2] = [1, 2];

#[derive(Debug, thiserror::Error)]
pub enum NashError {
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("bad built-in model: {0}")]
    Model(String),
}

pub fn nash_model() -> Result<Cgm, NashError> {
    match load_model(NASH_MODEL) {
        Ok(Model::Cgm(m)) => Ok(m),
        Ok(_) => Err(NashError::Model("not a game".into())),
        Err(e) => Err(NashError::Model(e.to_string())),
    }
}

/// One line of the report.
#[derive(Debug, Clone)]
pub struct Line {
    pub name: String,
    pub value: bool,
    pub expected: Option<bool>,
}

impl Line {
    pub fn ok(&self) -> bool {
        self.expected.map_or(true, |e| e == self.value)
    }
}

#[derive(Debug, Clone)]
pub struct NashReport {
    pub lines: Vec<Line>,
    pub stages: Vec<(Stage, Formula)>,
    pub elapsed: Duration,
}

impl NashReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(Line::ok)
    }
}

impl fmt::Display for NashReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, g) in &self.stages {
            writeln!(f, "stage {s}: {} nodes", g.size())?;
        }
        for l in &self.lines {
            let verdict = if l.ok() { "ok" } else { "MISMATCH" };
            writeln!(f, "{:<48} {:<5} {verdict}", l.name, l.value)?;
        }
        write!(f, "{} in {:.2?}", if self.passed() { "passed" } else { "failed" }, self.elapsed)
    }
}

/// Objective `k` (1-based) of agent `i`.
fn class(m: &Cgm, i: Agent, k: usize) -> Formula {
    m.prefs[&i].objectives[k - 1].clone()
}

fn goal(m: &Cgm, i: Agent) -> Formula {
    Formula::or(class(m, i, 2), class(m, i, 3))
}

fn others(m: &Cgm, i: Agent, k: usize) -> Formula {
    Formula::or_all((1..=3).filter(|&j| j != k).map(|j| class(m, i, j)))
}

fn grand(body: Formula) -> Formula {
    Formula::strat(AGENTS, body)
}

/// Goal-class form: one implication per class that can beat the goal.
fn k_index_body(m: &Cgm) -> Formula {
    Formula::and_all(AGENTS.map(|i| {
        let g = goal(m, i);
        let ks = (2..=3).map(|k| {
            Formula::implies(
                Formula::pref(Variant::EA, i, g.clone(), class(m, i, k)),
                Formula::strat_box([i], Formula::next(others(m, i, k))),
            )
        });
        Formula::and(Formula::next(g.clone()), Formula::and_all(ks))
    }))
}

/// The form after preference elimination, written out for the total order.
fn eliminated_body(m: &Cgm) -> Formula {
    Formula::and_all(AGENTS.map(|i| {
        let g = goal(m, i);
        let ks = (2..=3).map(|k| {
            let lower = Formula::or_all(
                (1..k).map(|k2| Formula::exists(Formula::next(Formula::and(g.clone(), class(m, i, k2))))),
            );
            Formula::implies(lower, Formula::strat_box([i], Formula::next(others(m, i, k))))
        });
        Formula::and(Formula::next(g.clone()), Formula::and_all(ks))
    }))
}

fn h(m: &Cgm, i: Agent) -> Formula {
    let g = goal(m, i);
    let ks: Vec<Formula> = (2..=3)
        .map(|k| {
            let up = Formula::or_all((k..=3).map(|k2| class(m, i, k2)));
            Formula::implies(
                Formula::strat([i], Formula::next(class(m, i, k))),
                Formula::forall(Formula::next(Formula::implies(g.clone(), up))),
            )
        })
        .collect();
    Formula::and(Formula::next(g), Formula::and_all(ks))
}

/// After contraposition: a profitable deviation only exists where the
/// goal is already as good.
fn contrapositive_body(m: &Cgm) -> Formula {
    Formula::and_all(AGENTS.map(|i| h(m, i)))
}

/// Player 1's part reduced to "no deviation reaches the top class".
fn final_body(m: &Cgm) -> Formula {
    Formula::and_all([
        Formula::next(goal(m, 1)),
        Formula::not(Formula::strat([1], Formula::next(class(m, 1, 3)))),
        h(m, 2),
    ])
}

fn body(f: &Formula) -> Formula {
    match f.node() {
        Node::StratMod(_, b) => b.clone(),
        _ => f.clone(),
    }
}

/// Equivalence of two bodies under every strategy profile of both players.
fn same_under_all_profiles(m: &Cgm, a: &Formula, b: &Formula) -> Result<bool, CheckError> {
    let f = Formula::strat_box(AGENTS, Formula::iff(a.clone(), b.clone()));
    atlsc_bounded_eval(m, &f, 0)
}

pub fn nash_formula(m: &Cgm) -> Formula {
    let goals: BTreeMap<Agent, Formula> = AGENTS.iter().map(|&i| (i, goal(m, i))).collect();
    solution_concept(Template::Nash, &AGENTS, &goals).expect("goals for both players")
}

/// Run the encoding through every stage and compare each stage and each
/// simplification step with the original on the built-in game.
pub fn repro_nash() -> Result<NashReport, NashError> {
    let start = Instant::now();
    let m = nash_model()?;
    let e9 = nash_formula(&m);
    let cfg = PipelineConfig::default();
    let stages = run_pipeline(Target::Game(&m), &e9, &cfg)?;
    let mut lines = Vec::new();
    let mut line = |name: &str, value: bool, expected: Option<bool>| {
        lines.push(Line { name: name.to_string(), value, expected })
    };

    let truth = atlsc_bounded_eval(&m, &e9, 0)?;
    line("equilibrium formula holds", truth, None);
    let b9 = body(&e9);
    for s in &stages[..2] {
        let v = atlsc_bounded_eval(&m, &s.formula, 0)?;
        line(&format!("{} stage agrees", s.stage), v == truth, Some(true));
        let same = same_under_all_profiles(&m, &b9, &body(&s.formula))?;
        line(&format!("{} stage body equivalent", s.stage), same, Some(true));
    }
    let q = &stages[2];
    let v = translated_eval(&m, &q.formula, 0)?;
    line("quantified translation agrees", v == truth, Some(true));
    // one deviation box per subset of the three classes and player
    let expanded = q.quantifiers.first().is_some_and(|c| c.vars == 2)
        && q.quantifiers.len() == 1 + 2 * 8
        && q.quantifiers[1..].iter().all(|c| c.coalition.len() == 1 && c.vars == 1);
    line("outer pair then single-player deviations", expanded, Some(true));
    let k_form = run_pipeline(Target::Game(&m), &grand(k_index_body(&m)), &cfg)?;
    let skeleton: Vec<usize> = k_form[2].quantifiers.iter().map(|c| c.vars).collect();
    line("goal-class form has skeleton 2,1,1,1,1", skeleton == [2, 1, 1, 1, 1], Some(true));

    let steps = [
        ("goal-class form", k_index_body(&m)),
        ("eliminated form", eliminated_body(&m)),
        ("contrapositive form", contrapositive_body(&m)),
        ("no-improvement form", final_body(&m)),
    ];
    for (name, b) in &steps {
        let v = atlsc_bounded_eval(&m, &grand(b.clone()), 0)?;
        line(&format!("{name} agrees"), v == truth, Some(true));
        let same = same_under_all_profiles(&m, &b9, b)?;
        line(&format!("{name} body equivalent"), same, Some(true));
    }

    // drop (2,3): the goal class no longer beats the middle one
    let mut weak = m.clone();
    for d in weak.prefs.values_mut() {
        d.better = d.better.iter().copied().filter(|&p| p != (2, 3)).collect::<BTreeSet<_>>();
    }
    let same = same_under_all_profiles(&weak, &body(&nash_formula(&weak)), &eliminated_body(&weak))?;
    line("weakened order breaks the eliminated form", same, Some(false));

    Ok(NashReport {
        lines,
        stages: stages.iter().map(|s| (s.stage, s.formula.clone())).collect(),
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_loads_with_full_systems() {
        let m = nash_model().unwrap();
        for i in AGENTS {
            let d = &m.prefs[&i];
            let own = Default::default();
            assert!(atlscpref_core::gnf::full_system_check(&d.objectives, &own, 4).holds());
            assert!(atlscpref_core::models::lint_order(d).is_empty());
        }
    }

    #[test]
    fn the_middle_outcome_is_an_equilibrium() {
        let m = nash_model().unwrap();
        assert!(atlsc_bounded_eval(&m, &nash_formula(&m), 0).unwrap());
    }

    #[test]
    fn reproduction_passes() {
        let r = repro_nash().unwrap();
        assert!(r.passed(), "{r}");
    }
}
