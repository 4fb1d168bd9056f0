//! Explicit-state checkers used as ground truth for the translations.
//!
//! All engines share one evaluator. It works on a product of the model with
//! the objective lists in force, so preference needs no tree unfolding, and
//! with a window of recent states when strategies are involved.

mod eval;
mod ltl;
mod world;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::formula::{Agent, Formula, Node, Sym};
use crate::models::{Cgm, Kripke, ModelError, PreferenceDescription};
use eval::Engine;

pub use eval::DEFAULT_STRATEGY_LIMIT;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("path variable `{0}` is free")]
    FreePathVar(Sym),
    #[error("agent {0} has no preference description")]
    NoPreference(Agent),
    #[error("agent {0} is not a player of the model")]
    UnknownAgent(Agent),
    #[error("{0} until-subformulas in one path formula (at most 64)")]
    TooManyUntils(usize),
    #[error("{0} strategy combinations exceed the enumeration limit")]
    TooManyStrategies(u128),
    #[error("`{0}` is a path formula")]
    PathFormula(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    True,
    False,
    Unknown,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::True => 0,
            Verdict::False => 1,
            Verdict::Unknown => 3,
        }
    }
}

impl From<bool> for Verdict {
    fn from(b: bool) -> Self {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }
}

fn reject(f: &Formula, what: &str, bad: bool) -> Result<(), CheckError> {
    if bad {
        Err(CheckError::Unsupported(format!("{what} in `{f}`")))
    } else {
        Ok(())
    }
}

fn no_free_path_vars(a: &Formula) -> Result<(), CheckError> {
    match a.free_path_vars().into_iter().next() {
        Some(c) => Err(CheckError::FreePathVar(c)),
        None => Ok(()),
    }
}

/// Satisfaction of a CTL* formula at every state of `k`.
pub fn ctlstar_check(k: &Kripke, a: &Formula) -> Result<Vec<bool>, CheckError> {
    reject(a, "preference", a.has_pref())?;
    reject(a, "path-set quantifier", a.has_path_quant())?;
    reject(a, "strategy modality", a.has_game())?;
    reject(a, "propositional quantifier", a.has_prop_quant())?;
    let w = world::kripke_world(k, &BTreeMap::new())?;
    let v = Engine::new(&w).eval_all(a)?;
    let mut out = vec![false; k.len()];
    for n in (0..w.len()).rev() {
        if w.ann[n] == 0 {
            out[w.origin[n]] = v[n];
        }
    }
    Ok(out)
}

/// CTL* with preference, at the initial state of `k`.
pub fn direct_pref_check(
    k: &Kripke,
    descriptions: &BTreeMap<Agent, PreferenceDescription>,
    a: &Formula,
) -> Result<bool, CheckError> {
    reject(a, "path-set quantifier", a.has_path_quant())?;
    reject(a, "strategy modality", a.has_game())?;
    reject(a, "propositional quantifier", a.has_prop_quant())?;
    let w = world::kripke_world(k, descriptions)?;
    Engine::new(&w).eval_root(a)
}

/// CTL* with preference and path-set quantifiers, at the initial state of `k`.
pub fn quant_sem_check(
    k: &Kripke,
    descriptions: &BTreeMap<Agent, PreferenceDescription>,
    a: &Formula,
) -> Result<bool, CheckError> {
    reject(a, "strategy modality", a.has_game())?;
    reject(a, "propositional quantifier", a.has_prop_quant())?;
    no_free_path_vars(a)?;
    let w = world::kripke_world(k, descriptions)?;
    Engine::new(&w).eval_root(a)
}

/// Strategy-context formula (possibly with preference) evaluated with
/// strategies that look at the last `h + 1` states only.
pub fn atlsc_bounded_eval(m: &Cgm, a: &Formula, h: usize) -> Result<bool, CheckError> {
    atlsc_bounded_eval_with(m, &m.prefs, a, h, DEFAULT_STRATEGY_LIMIT)
}

pub fn atlsc_bounded_eval_with(
    m: &Cgm,
    descriptions: &BTreeMap<Agent, PreferenceDescription>,
    a: &Formula,
    h: usize,
    limit: u128,
) -> Result<bool, CheckError> {
    reject(a, "propositional quantifier", a.has_prop_quant())?;
    no_free_path_vars(a)?;
    let w = world::game_world(m, h, descriptions)?;
    let mut e = Engine::new(&w);
    e.limit = limit;
    e.eval_root(a)
}

/// Like [`atlsc_bounded_eval`], reporting only what bounded strategies can
/// establish: existential claims that hold, universal claims that fail.
pub fn atlsc_bounded_check(m: &Cgm, a: &Formula, h: usize) -> Result<Verdict, CheckError> {
    let b = atlsc_bounded_eval(m, a, h)?;
    Ok(bounded_verdict(a, b))
}

/// Quantified CTL* formula produced by the strategy translation, evaluated
/// on the move-storing unfolding of `m` with strategy variables ranging
/// over `h`-bounded strategies.
pub fn translated_eval(m: &Cgm, t: &Formula, h: usize) -> Result<bool, CheckError> {
    translated_eval_with(m, t, h, DEFAULT_STRATEGY_LIMIT)
}

pub fn translated_eval_with(m: &Cgm, t: &Formula, h: usize, limit: u128) -> Result<bool, CheckError> {
    reject(t, "strategy modality", t.has_game())?;
    reject(t, "preference", t.has_pref())?;
    reject(t, "path-set quantifier", t.has_path_quant())?;
    let u = world::unfolded_world(m, h)?;
    let mut e = Engine::translated(&u, m);
    e.limit = limit;
    e.eval_root(t)
}

pub fn translated_check(m: &Cgm, t: &Formula, h: usize) -> Result<Verdict, CheckError> {
    let b = translated_eval(m, t, h)?;
    Ok(bounded_verdict(t, b))
}

#[derive(Default)]
struct Polarity {
    existential: bool,
    universal: bool,
}

fn polarity(f: &Formula, positive: bool, both: bool, acc: &mut Polarity) {
    use Node::*;
    let mut mark = |exist: bool| {
        if both {
            acc.existential = true;
            acc.universal = true;
        } else if exist == positive {
            acc.existential = true;
        } else {
            acc.universal = true;
        }
    };
    match f.node() {
        StratMod(g, b) | StratBox(g, b) => {
            if !g.is_empty() {
                mark(matches!(f.node(), StratMod(..)));
            }
            polarity(b, positive, both, acc);
        }
        ExistsProp(_, a) => {
            mark(true);
            polarity(a, positive, both, acc);
        }
        ForallProp(_, a) => {
            mark(false);
            polarity(a, positive, both, acc);
        }
        Not(a) => polarity(a, !positive, both, acc),
        Implies(a, b) => {
            polarity(a, !positive, both, acc);
            polarity(b, positive, both, acc);
        }
        Iff(a, b) | Pref(_, _, a, b) => {
            polarity(a, positive, true, acc);
            polarity(b, positive, true, acc);
        }
        _ => {
            for c in f.children() {
                polarity(c, positive, both, acc);
            }
        }
    }
}

/// Soundness of a bounded result: enumerating fewer strategies can only
/// under-approximate existential choices.
fn bounded_verdict(f: &Formula, b: bool) -> Verdict {
    let mut p = Polarity::default();
    polarity(f, true, false, &mut p);
    match (p.existential, p.universal, b) {
        (false, false, _) => b.into(),
        (true, false, true) | (false, true, false) => b.into(),
        _ => Verdict::Unknown,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse, sym};
    use crate::gnf::{all_lassos, ltl_eval};
    use std::collections::BTreeSet;

    fn cycle3() -> Kripke {
        Kripke {
            names: vec!["a".into(), "b".into(), "c".into()],
            initial: 0,
            succ: vec![vec![1], vec![2], vec![0]],
            labels: vec![BTreeSet::new(), BTreeSet::new(), [sym("p")].into()],
            prefs: BTreeMap::new(),
        }
    }

    fn single(p: bool) -> Kripke {
        Kripke {
            names: vec!["s".into()],
            initial: 0,
            succ: vec![vec![0]],
            labels: vec![if p { [sym("p")].into() } else { BTreeSet::new() }],
            prefs: BTreeMap::new(),
        }
    }

    #[test]
    fn self_loop() {
        let k = single(true);
        assert_eq!(ctlstar_check(&k, &parse("E G p").unwrap()).unwrap(), [true]);
        assert_eq!(ctlstar_check(&k, &parse("A X !p").unwrap()).unwrap(), [false]);
    }

    #[test]
    fn three_cycle() {
        let k = cycle3();
        assert_eq!(ctlstar_check(&k, &parse("A F p").unwrap()).unwrap(), [true; 3]);
        assert_eq!(ctlstar_check(&k, &parse("E G !p").unwrap()).unwrap(), [false; 3]);
        assert_eq!(ctlstar_check(&k, &parse("E X p").unwrap()).unwrap(), [false, true, false]);
    }

    #[test]
    fn rejects_other_fragments() {
        let k = single(true);
        assert!(matches!(
            ctlstar_check(&k, &parse("<<1>> X p").unwrap()),
            Err(CheckError::Unsupported(_))
        ));
    }

    /// A lasso becomes a deterministic model; `A B` there is `B` on the word.
    fn lasso_model(w: &crate::gnf::LassoWord) -> Kripke {
        let n = w.prefix.len() + w.cycle.len();
        let labels: Vec<_> = w.prefix.iter().chain(&w.cycle).cloned().collect();
        let succ = (0..n).map(|i| vec![if i + 1 < n { i + 1 } else { w.prefix.len() }]).collect();
        Kripke { names: (0..n).map(|i| i.to_string()).collect(), initial: 0, succ, labels, prefs: BTreeMap::new() }
    }

    #[test]
    fn agrees_with_lasso_evaluation() {
        let alphabet = [sym("p"), sym("q")];
        let formulas = ["p U q", "G F p", "F G !q", "X (p W q)", "G (p -> X q)", "!(p U (q & X p))"];
        for w in all_lassos(&alphabet, 3) {
            let k = lasso_model(&w);
            for s in formulas {
                let b = parse(s).unwrap();
                let want = ltl_eval(&w, &b).unwrap();
                let got = ctlstar_check(&k, &Formula::forall(b.clone())).unwrap()[0];
                assert_eq!(got, want, "{s} on {w:?}");
            }
        }
    }

    #[test]
    fn bottom_is_incomparable() {
        let mut k = cycle3();
        let d = PreferenceDescription::new(vec![parse("F p").unwrap(), parse("G !p").unwrap()], [(2, 1)]);
        k.prefs.insert(1, d.clone());
        let descs = k.prefs.clone();
        assert!(direct_pref_check(&k, &descs, &parse("X p <ff[1] false").unwrap()).unwrap());
        assert!(direct_pref_check(&k, &descs, &parse("false <ff[1] X p").unwrap()).unwrap());
        assert!(matches!(
            direct_pref_check(&k, &BTreeMap::new(), &parse("true <ff[1] true").unwrap()),
            Err(CheckError::NoPreference(1))
        ));
    }

    #[test]
    fn matching_pennies() {
        let m = crate::models::tests::pennies();
        let one = parse("<<1>> X win").unwrap();
        let both = parse("<<1,2>> X win").unwrap();
        assert!(!atlsc_bounded_eval(&m, &one, 0).unwrap());
        assert!(atlsc_bounded_eval(&m, &both, 0).unwrap());
        assert_eq!(atlsc_bounded_check(&m, &one, 0).unwrap(), Verdict::Unknown);
        assert_eq!(atlsc_bounded_check(&m, &both, 0).unwrap(), Verdict::True);
        // the empty coalition forces only what every play does
        assert!(!atlsc_bounded_eval(&m, &parse("<<>> F win").unwrap(), 0).unwrap());
        assert!(atlsc_bounded_eval(&m, &parse("[[]] F win").unwrap(), 0).unwrap());
    }

    #[test]
    fn context_is_kept_and_relaxed() {
        let m = crate::models::tests::pennies();
        // 1 fixes a coin, then 2 can match it
        assert!(atlsc_bounded_eval(&m, &parse("<<1>> <<2>> X win").unwrap(), 0).unwrap());
        assert!(!atlsc_bounded_eval(&m, &parse("<<2>> <<1>> X !win & <<1>> X win").unwrap(), 0).unwrap());
        assert!(atlsc_bounded_eval(&m, &parse("<<2>> <<1>> X win").unwrap(), 0).unwrap());
        assert!(!atlsc_bounded_eval(&m, &parse("<<2>> ]2[ <<1>> X win").unwrap(), 0).unwrap());
    }

    #[test]
    fn translated_pennies() {
        use crate::atlsc::{translate_atlsc, TranslateOptions};
        let m = crate::models::tests::pennies();
        for (s, want) in [("<<1>> X win", false), ("<<1,2>> X win", true), ("<<1>> <<2>> X win", true)] {
            let f = parse(s).unwrap();
            for merge in [false, true] {
                for log_actions in [false, true] {
                    let t = translate_atlsc(&f, &m, TranslateOptions { merge, log_actions }).unwrap();
                    assert_eq!(translated_eval(&m, &t.formula, 0).unwrap(), want, "{s} {merge} {log_actions}");
                }
            }
        }
    }
}
