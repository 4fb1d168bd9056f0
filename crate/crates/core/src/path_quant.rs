//! Path-set quantifiers over preference-indiscernibility classes, and their
//! elimination through the finite preference descriptions.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::formula::{subst_path, Agent, Formula, Node, Sym};
use crate::models::PrefTables;
use crate::pref_elim::{is_temporal, reachable_tuples, tuple_guard, tuple_objectives};
use crate::simp;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PathQuantError {
    #[error("agent {0} has no preference description")]
    NoPreference(Agent),
    #[error("path variable `{0}` is free")]
    FreePathVar(Sym),
}

/// Which step the occurrences of the variable are kept at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sep {
    /// At the reference state (start of the reference path).
    Zero,
    /// One step ahead of it.
    One,
}

fn bot_for(f: &Formula, v: &str) -> Formula {
    subst_path(f, v, &Formula::bot())
}

/// Rewrite `f` so that the free occurrences of `v` sit at the step given
/// by `mode`; all other occurrences become false.
pub fn t_sep(f: &Formula, v: &str, mode: Sep) -> Formula {
    if !f.free_path_vars().iter().any(|c| &**c == v) {
        return f.clone();
    }
    let t = |g: &Formula| t_sep(g, v, mode);
    use Node::*;
    match f.node() {
        PathAtom(c) if &**c == v && mode == Sep::One => Formula::bot(),
        PathAtom(_) => f.clone(),
        Next(b) => match mode {
            Sep::One => Formula::next(t_sep(b, v, Sep::Zero)),
            Sep::Zero => Formula::next(bot_for(b, v)),
        },
        Pref(var, i, a, b) => match mode {
            Sep::One => Formula::pref(*var, *i, t_sep(a, v, Sep::Zero), t_sep(b, v, Sep::Zero)),
            Sep::Zero => Formula::pref(*var, *i, bot_for(a, v), bot_for(b, v)),
        },
        Until(a, b) | WeakUntil(a, b) => {
            simp::or(t(b), simp::and(t(a), t(&Formula::next(f.clone()))))
        }
        Eventually(b) => simp::or(t(b), t(&Formula::next(f.clone()))),
        Always(b) => simp::and(t(b), t(&Formula::next(f.clone()))),
        SimQuant(i, q, a) => Formula::sim_quant(*i, q, t(&t_sep(a, q, Sep::One))),
        SimForall(i, q, a) => Formula::sim_forall(*i, q, t(&t_sep(a, q, Sep::One))),
        OneQuant(i, q, a) => Formula::one_quant(*i, q, t(&t_sep(a, q, Sep::One))),
        _ => f.with_children(f.children().into_iter().map(t).collect()),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PathQuantOptions {
    /// Quantifiers evaluated at the initial state use the initial
    /// objectives without guards.
    pub collapse_root: bool,
    /// Guards use the binary label codes.
    pub log_guards: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Some,
    All,
    One,
}

struct Eliminator<'a> {
    tables: &'a PrefTables,
    opts: PathQuantOptions,
    tuples: BTreeMap<Agent, Vec<Vec<usize>>>,
}

impl Eliminator<'_> {
    fn go(&mut self, f: &Formula, at_root: bool) -> Result<Formula, PathQuantError> {
        use Node::*;
        match f.node() {
            SimQuant(i, c, a) => self.quant(Kind::Some, *i, c, a, at_root),
            SimForall(i, c, a) => self.quant(Kind::All, *i, c, a, at_root),
            OneQuant(i, c, a) => self.quant(Kind::One, *i, c, a, at_root),
            Pref(v, i, a, b) => Ok(Formula::pref(*v, *i, self.go(a, false)?, self.go(b, false)?)),
            n => {
                let below = at_root && !is_temporal(n);
                let ch = f.children().into_iter().map(|c| self.go(c, below)).collect::<Result<Vec<_>, _>>()?;
                Ok(f.with_children(ch))
            }
        }
    }

    fn quant(&mut self, kind: Kind, i: Agent, c: &Sym, body: &Formula, at_root: bool) -> Result<Formula, PathQuantError> {
        if !self.tables.better.contains_key(&i) {
            return Err(PathQuantError::NoPreference(i));
        }
        let body = self.go(body, at_root)?;
        let t1 = t_sep(&body, c, Sep::One);
        let tables = self.tables;
        let tuples = self.tuples.entry(i).or_insert_with(|| reachable_tuples(tables, i)).clone();
        let inst = |tuple: &[usize]| {
            let bs = tuple_objectives(tables, i, tuple);
            match kind {
                // a single class must be nonempty to be one
                Kind::One => simp::or_all(bs.iter().map(|b| {
                    simp::and(simp::ex(b.clone()), simp::simplify(&subst_path(&t1, c, b)))
                })),
                Kind::Some | Kind::All => {
                    let copies = (0..1usize << bs.len()).map(|x| {
                        let union = simp::or_all((0..bs.len()).filter(|k| x >> k & 1 == 1).map(|k| bs[k].clone()));
                        simp::simplify(&subst_path(&t1, c, &union))
                    });
                    if kind == Kind::All {
                        simp::and_all(copies)
                    } else {
                        simp::or_all(copies)
                    }
                }
            }
        };
        if at_root && self.opts.collapse_root {
            return Ok(inst(&tuples[0]));
        }
        let log = self.opts.log_guards;
        let parts = tuples.iter().map(|t| (tuple_guard(tables, i, t, log), inst(t)));
        Ok(if kind == Kind::All {
            simp::and_all(parts.map(|(g, b)| simp::implies(g, b)))
        } else {
            simp::or_all(parts.map(|(g, b)| simp::and(g, b)))
        })
    }
}

/// Replace every path-set quantifier, innermost first. The label
/// propositions in the guards are those of `tables`.
pub fn eliminate_path_quant(
    a: &Formula,
    tables: &PrefTables,
    opts: PathQuantOptions,
) -> Result<Formula, PathQuantError> {
    if let Some(c) = a.free_path_vars().into_iter().next() {
        return Err(PathQuantError::FreePathVar(c));
    }
    if !a.has_path_quant() {
        return Ok(a.clone());
    }
    let mut e = Eliminator { tables, opts, tuples: BTreeMap::new() };
    e.go(a, true)
}

/// Membership in the restricted syntax where every free occurrence of `p`
/// is exactly `n` steps ahead of the reference state. Preference and
/// strategy modalities are read like the path quantifier.
pub fn in_a_pn(f: &Formula, p: &str, n: usize) -> bool {
    state_ok(f, p, n)
}

fn free_of(f: &Formula, p: &str) -> bool {
    !f.free_path_vars().iter().any(|c| &**c == p)
}

fn state_ok(f: &Formula, p: &str, n: usize) -> bool {
    if free_of(f, p) {
        return true;
    }
    use Node::*;
    match f.node() {
        Not(a) | ExistsProp(_, a) | ForallProp(_, a) => state_ok(a, p, n),
        And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b) => state_ok(a, p, n) && state_ok(b, p, n),
        ExistsPath(b) | ForallPath(b) | StratMod(_, b) | StratBox(_, b) | Relax(_, b) => path_ok(b, p, n),
        Pref(_, _, a, b) => n >= 1 && path_ok(a, p, n - 1) && path_ok(b, p, n - 1),
        _ => false,
    }
}

fn path_ok(f: &Formula, p: &str, n: usize) -> bool {
    if free_of(f, p) {
        return true;
    }
    use Node::*;
    match f.node() {
        PathAtom(_) => n == 0,
        Not(a) => path_ok(a, p, n),
        And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b) => path_ok(a, p, n) && path_ok(b, p, n),
        Next(b) => n >= 1 && path_ok(b, p, n - 1),
        _ => state_ok(f, p, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::{ctlstar_check, quant_sem_check};
    use crate::formula::{parse, sym};
    use crate::models::{build_mb, Kripke, PreferenceDescription};
    use crate::pref_elim::{eliminate_preference, PrefElimOptions, PrefMode};
    use std::collections::BTreeSet;

    fn t1(s: &str) -> Formula {
        t_sep(&parse(s).unwrap(), "p", Sep::One)
    }

    #[test]
    fn separation_table() {
        assert_eq!(t1("~p"), Formula::bot());
        assert_eq!(t1("X ~p"), parse("X ~p").unwrap());
        assert_eq!(t1("~p U q"), parse("q").unwrap());
        assert_eq!(t1("E X X ~p"), parse("E X X false").unwrap());
        // other variables are left at every depth
        assert_eq!(t1("X X ~q"), parse("X X ~q").unwrap());
    }

    #[test]
    fn restricted_syntax() {
        let f = |s: &str| parse(s).unwrap();
        assert!(in_a_pn(&f("E X ~p"), "p", 1));
        assert!(!in_a_pn(&f("E X ~p"), "p", 0));
        assert!(!in_a_pn(&f("E (~p U q)"), "p", 1));
        assert!(in_a_pn(&f("E X (a U b) & A X (~p -> E X c)"), "p", 1));
        assert!(in_a_pn(&f("g <ea[1] ~p"), "p", 1));
        assert!(in_a_pn(&t1("E F X ~p"), "p", 1));
        assert!(in_a_pn(&t1("A (q U (~p & X ~p))"), "p", 1));
    }

    fn two_state() -> (Kripke, BTreeMap<Agent, PreferenceDescription>) {
        let k = Kripke {
            names: vec!["a".into(), "b".into()],
            initial: 0,
            succ: vec![vec![0, 1], vec![0, 1]],
            labels: vec![BTreeSet::new(), [sym("p")].into()],
            prefs: BTreeMap::new(),
        };
        let d = PreferenceDescription::new(vec![parse("X p").unwrap(), parse("X !p").unwrap()], [(2, 1)]);
        (k, BTreeMap::from([(1, d)]))
    }

    #[test]
    fn separation_preserves_meaning() {
        let (k, prefs) = two_state();
        for s in ["E (~c U p)", "E F ~c", "A G (p | ~c)", "E X (~c & E X ~c)", "E (~c W p)", "E X p <ff[1] ~c"] {
            let c = parse(s).unwrap();
            for q in [Formula::sim_quant(1, "c", c.clone()), Formula::one_quant(1, "c", c.clone())] {
                let want = quant_sem_check(&k, &prefs, &q).unwrap();
                let sep = q.with_children(vec![t_sep(&c, "c", Sep::One)]);
                assert_eq!(quant_sem_check(&k, &prefs, &sep).unwrap(), want, "{q}");
            }
        }
    }

    #[test]
    fn elimination_matches_quantifier_semantics() {
        let (k, prefs) = two_state();
        let t = PrefTables::new(&prefs, &BTreeSet::from([1]), &k.vocabulary()).unwrap();
        let mb = build_mb(&k, &t).unwrap();
        for s in [
            "Es[1] ~c . E X ~c",
            "Es[1] ~c . (E X ~c & A X !~c)",
            "E1[1] ~c . A X ~c",
            "As[1] ~c . (E X ~c -> (E X p <ff[1] ~c))",
            "E X E1[1] ~c . (E X (~c & p) & (~c <ea[1] X p))",
            "A G As[1] ~c . (E X ~c | A X !~c)",
        ] {
            let a = parse(s).unwrap();
            let want = quant_sem_check(&k, &prefs, &a).unwrap();
            for collapse_root in [false, true] {
                let opts = PathQuantOptions { collapse_root, log_guards: false };
                let e = eliminate_path_quant(&a, &t, opts).unwrap();
                assert!(!e.has_path_quant() && e.free_path_vars().is_empty());
                let e = eliminate_preference(&e, &t, PrefElimOptions { mode: PrefMode::ForMB, collapse_root }).unwrap();
                assert_eq!(ctlstar_check(&mb.kripke, &e).unwrap()[0], want, "{s} {collapse_root}");
            }
        }
    }

    #[test]
    fn trivial_body_and_errors() {
        let (k, prefs) = two_state();
        let t = PrefTables::new(&prefs, &BTreeSet::from([1]), &k.vocabulary()).unwrap();
        let opts = PathQuantOptions { collapse_root: true, log_guards: false };
        assert!(simp::is_top(&eliminate_path_quant(&parse("Es[1] ~c . true").unwrap(), &t, opts).unwrap()));
        assert_eq!(
            eliminate_path_quant(&parse("Es[2] ~c . true").unwrap(), &t, opts),
            Err(PathQuantError::NoPreference(2))
        );
        assert_eq!(
            eliminate_path_quant(&parse("E X ~c").unwrap(), &t, opts),
            Err(PathQuantError::FreePathVar(sym("c")))
        );
    }
}
