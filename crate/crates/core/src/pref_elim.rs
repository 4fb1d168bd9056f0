//! Elimination of the preference operator against finite preference
//! descriptions.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::formula::{Agent, Formula, Node, Sym, Variant};
use crate::gnf;
use crate::models::{Kripke, MbModel, PrefTables, SlotTable};
use crate::simp;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PrefElimError {
    #[error("agent {0} has no preference description")]
    NoPreference(Agent),
    #[error("path variable `{0}` must be eliminated first")]
    PathVar(Sym),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrefMode {
    /// `EXISTS q (L(q) & A')` with one label variable per closure member.
    QVars,
    /// Same with `ceil(log2 |Cl|)` independent variables per slot.
    LogVars,
    /// `A'` alone, with the label variables free, for checking on `M_B`.
    ForMB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrefElimOptions {
    pub mode: PrefMode,
    /// Occurrences evaluated at the initial state use the initial
    /// objectives directly instead of a guarded disjunction.
    pub collapse_root: bool,
}

impl Default for PrefElimOptions {
    fn default() -> Self {
        PrefElimOptions { mode: PrefMode::ForMB, collapse_root: false }
    }
}

/// `B' < B''` at a state whose classes are `bs` and whose ordered pairs
/// (1-based) are `better`.
pub fn elim_pref_at(b1: &Formula, b2: &Formula, bs: &[Formula], better: &BTreeSet<(usize, usize)>) -> Formula {
    let mut ex = ExCache::default();
    eq5(b1, b2, bs, better, &mut ex)
}

#[derive(Default)]
struct ExCache {
    memo: HashMap<(Formula, Formula), Formula>,
}

impl ExCache {
    /// `EX(b & bk)`, shared between occurrences.
    fn get(&mut self, b: &Formula, bk: &Formula) -> Formula {
        self.memo
            .entry((b.clone(), bk.clone()))
            .or_insert_with(|| simp::ex(simp::and(b.clone(), bk.clone())))
            .clone()
    }
}

fn eq5(
    b1: &Formula,
    b2: &Formula,
    bs: &[Formula],
    better: &BTreeSet<(usize, usize)>,
    ex: &mut ExCache,
) -> Formula {
    let kk = bs.len();
    let mut parts = Vec::new();
    for k1 in 0..kk {
        for k2 in 0..kk {
            if better.contains(&(k1 + 1, k2 + 1)) {
                continue;
            }
            parts.push(simp::not(simp::and(ex.get(b1, &bs[k1]), ex.get(b2, &bs[k2]))));
        }
    }
    simp::and_all(parts)
}

/// The expansion of a preference variant over the classes `bs`, with
/// `ff(k1, k2)` standing for `B_k1 < B_k2`.
fn expand_with(
    v: Variant,
    b1: &Formula,
    b2: &Formula,
    bs: &[Formula],
    ex: &mut ExCache,
    ff: &mut dyn FnMut(usize, usize, &mut ExCache) -> Formula,
) -> Formula {
    let kk = bs.len();
    let ne1: Vec<Formula> = bs.iter().map(|b| ex.get(b1, b)).collect();
    let ne2: Vec<Formula> = bs.iter().map(|b| ex.get(b2, b)).collect();
    match v {
        Variant::FF => {
            let mut parts = Vec::new();
            for k1 in 0..kk {
                for k2 in 0..kk {
                    let c = ff(k1, k2, ex);
                    parts.push(simp::implies(simp::and(ne1[k1].clone(), ne2[k2].clone()), c));
                }
            }
            simp::and_all(parts)
        }
        Variant::EA | Variant::GEA => simp::or_all((0..kk).map(|k1| {
            let all = simp::and_all((0..kk).map(|k2| {
                let c = if v == Variant::EA { ff(k1, k2, ex) } else { ff(k2, k1, ex) };
                simp::implies(ne2[k2].clone(), c)
            }));
            simp::and(ne1[k1].clone(), all)
        })),
        Variant::AE | Variant::GAE => simp::and_all((0..kk).map(|k1| {
            let some = simp::or_all((0..kk).map(|k2| {
                let c = if v == Variant::AE { ff(k1, k2, ex) } else { ff(k2, k1, ex) };
                simp::and(ne2[k2].clone(), c)
            }));
            simp::implies(ne1[k1].clone(), some)
        })),
        Variant::EE => simp::or_all((0..kk).flat_map(|k1| (0..kk).map(move |k2| (k1, k2))).map(|(k1, k2)| {
            let c = ff(k1, k2, ex);
            simp::and_all([ne1[k1].clone(), ne2[k2].clone(), c])
        })),
    }
}

/// Rewrite a preference variant into plain `<` between members of `bs`.
pub fn expand_variant(v: Variant, agent: Agent, b1: &Formula, b2: &Formula, bs: &[Formula]) -> Formula {
    let mut ex = ExCache::default();
    expand_with(v, b1, b2, bs, &mut ex, &mut |k1, k2, _| {
        Formula::pref(Variant::FF, agent, bs[k1].clone(), bs[k2].clone())
    })
}

/// `B_k1 < B_k2` between two classes of a full system.
fn class_pref(k1: usize, k2: usize, bs: &[Formula], better: &BTreeSet<(usize, usize)>, ex: &mut ExCache) -> Formula {
    if better.contains(&(k1 + 1, k2 + 1)) {
        Formula::top()
    } else {
        let t = Formula::top();
        simp::not(simp::and(ex.get(&t, &bs[k1]), ex.get(&t, &bs[k2])))
    }
}

/// Combinations of closure indices an agent's slots can reach from the
/// initial objectives, initial combination first.
pub fn reachable_tuples(tables: &PrefTables, agent: Agent) -> Vec<Vec<usize>> {
    let slots: Vec<&SlotTable> = tables.agent_slots(agent).map(|(_, s)| s).collect();
    let atoms: Vec<Sym> = slots
        .iter()
        .flat_map(|s| s.atoms.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let vals = gnf::valuations(&atoms);
    let start = vec![0; slots.len()];
    let mut seen: BTreeSet<Vec<usize>> = [start.clone()].into();
    let mut out = vec![start.clone()];
    let mut queue = VecDeque::from([start]);
    while let Some(t) = queue.pop_front() {
        for v in &vals {
            let n: Vec<usize> = slots.iter().zip(&t).map(|(s, &j)| s.step(j, v)).collect();
            if seen.insert(n.clone()) {
                out.push(n.clone());
                queue.push_back(n);
            }
        }
    }
    out
}

/// Guard asserting that the slots of an agent hold the combination `tuple`.
pub fn tuple_guard(tables: &PrefTables, agent: Agent, tuple: &[usize], log: bool) -> Formula {
    Formula::and_all(tables.agent_slots(agent).zip(tuple).map(|((_, s), &j)| {
        if log {
            s.code(j)
        } else {
            Formula::atom(&s.q_names[j])
        }
    }))
}

/// Objectives of an agent under a combination of closure indices.
pub fn tuple_objectives(tables: &PrefTables, agent: Agent, tuple: &[usize]) -> Vec<Formula> {
    tables.agent_slots(agent).zip(tuple).map(|((_, s), &j)| s.closure[j].clone()).collect()
}

/// The formula fixing the label variables along every path: initial
/// labels, uniqueness (unless `log`), and the tail update.
pub fn labeling_formula(tables: &PrefTables, log: bool) -> Formula {
    let mark = |s: &SlotTable, j: usize| if log { s.code(j) } else { Formula::atom(&s.q_names[j]) };
    let init = Formula::and_all(tables.slots.iter().map(|s| mark(s, 0)));
    let mut body = Vec::new();
    for s in &tables.slots {
        let n = s.closure.len();
        if !log {
            for j in 0..n {
                for j2 in j + 1..n {
                    body.push(Formula::not(Formula::and(mark(s, j), mark(s, j2))));
                }
            }
        }
        let vals = gnf::valuations(&s.atoms);
        for j in 0..n {
            let step = Formula::and_all(
                vals.iter()
                    .enumerate()
                    .map(|(v, val)| Formula::implies(gnf::minterm(&s.atoms, val), mark(s, s.next[j][v]))),
            );
            body.push(Formula::implies(mark(s, j), Formula::forall(Formula::next(step))));
        }
    }
    Formula::and(init, Formula::forall(Formula::always(Formula::and_all(body))))
}

/// `OR_j code_j` for every slot: the bits spell a closure member.
pub fn range_restriction(tables: &PrefTables) -> Formula {
    Formula::and_all(
        tables.slots.iter().map(|s| Formula::or_all((0..s.closure.len()).map(|j| s.code(j)))),
    )
}

/// Temporal operators move evaluation away from the current state.
pub(crate) fn is_temporal(n: &Node) -> bool {
    matches!(n, Node::Next(_) | Node::Until(..) | Node::Eventually(_) | Node::Always(_) | Node::WeakUntil(..))
}

struct Eliminator<'a> {
    tables: &'a PrefTables,
    opts: PrefElimOptions,
    ex: ExCache,
    tuples: BTreeMap<Agent, Vec<Vec<usize>>>,
}

impl Eliminator<'_> {
    fn go(&mut self, f: &Formula, at_root: bool) -> Result<Formula, PrefElimError> {
        use Node::*;
        match f.node() {
            PathAtom(c) | SimQuant(_, c, _) | SimForall(_, c, _) | OneQuant(_, c, _) => {
                Err(PrefElimError::PathVar(c.clone()))
            }
            Pref(v, i, b1, b2) => {
                let b1 = self.go(b1, false)?;
                let b2 = self.go(b2, false)?;
                self.pref(*v, *i, &b1, &b2, at_root)
            }
            n => {
                let below = at_root && !is_temporal(n);
                let ch = f.children().into_iter().map(|c| self.go(c, below)).collect::<Result<Vec<_>, _>>()?;
                Ok(f.with_children(ch))
            }
        }
    }

    fn pref(&mut self, v: Variant, i: Agent, b1: &Formula, b2: &Formula, at_root: bool) -> Result<Formula, PrefElimError> {
        let better = self.tables.better.get(&i).cloned().ok_or(PrefElimError::NoPreference(i))?;
        let tables = self.tables;
        let tuples = self.tuples.entry(i).or_insert_with(|| reachable_tuples(tables, i)).clone();
        let log = self.opts.mode == PrefMode::LogVars;
        let at = |tuple: &[usize], ex: &mut ExCache| {
            let bs = tuple_objectives(tables, i, tuple);
            if v == Variant::FF {
                eq5(b1, b2, &bs, &better, ex)
            } else {
                let bs2 = bs.clone();
                expand_with(v, b1, b2, &bs, ex, &mut |k1, k2, ex| class_pref(k1, k2, &bs2, &better, ex))
            }
        };
        if at_root && self.opts.collapse_root {
            return Ok(at(&tuples[0], &mut self.ex));
        }
        let mut parts = Vec::new();
        for t in &tuples {
            let body = at(t, &mut self.ex);
            parts.push(simp::and(tuple_guard(tables, i, t, log), body));
        }
        Ok(simp::or_all(parts))
    }
}

/// Replace every preference occurrence, innermost first.
pub fn eliminate_preference(a: &Formula, tables: &PrefTables, opts: PrefElimOptions) -> Result<Formula, PrefElimError> {
    if !a.has_pref() {
        if let Some(c) = a.free_path_vars().into_iter().next() {
            return Err(PrefElimError::PathVar(c));
        }
        return Ok(a.clone());
    }
    let mut e = Eliminator { tables, opts, ex: ExCache::default(), tuples: BTreeMap::new() };
    let body = e.go(a, true)?;
    Ok(match opts.mode {
        PrefMode::ForMB => body,
        PrefMode::QVars => {
            let mut out = Formula::and(labeling_formula(tables, false), body);
            for s in tables.slots.iter().rev() {
                for q in s.q_names.iter().rev() {
                    out = Formula::exists_prop(q, out);
                }
            }
            out
        }
        PrefMode::LogVars => {
            let mut out = Formula::and(
                range_restriction(tables),
                Formula::and(labeling_formula(tables, true), body),
            );
            for s in tables.slots.iter().rev() {
                for r in s.r_names.iter().rev() {
                    out = Formula::exists_prop(r, out);
                }
            }
            out
        }
    })
}

/// `M_B` with the label propositions replaced by their binary codes.
pub fn relabel_log(mb: &MbModel, tables: &PrefTables) -> Kripke {
    let q = tables.q_atoms();
    let mut k = mb.kripke.clone();
    for (lab, (_, tuple)) in k.labels.iter_mut().zip(&mb.origin) {
        lab.retain(|p| !q.contains(p));
        for (s, &j) in tables.slots.iter().zip(tuple) {
            for (bit, r) in s.r_names.iter().enumerate() {
                if j >> bit & 1 == 1 {
                    lab.insert(r.clone());
                }
            }
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::{ctlstar_check, direct_pref_check};
    use crate::formula::{parse, sym};
    use crate::models::{build_mb, PreferenceDescription};

    fn ring(labels: &[&[&str]]) -> Kripke {
        let n = labels.len();
        Kripke {
            names: (0..n).map(|i| format!("w{i}")).collect(),
            initial: 0,
            succ: (0..n).map(|i| vec![(i + 1) % n, i]).collect(),
            labels: labels.iter().map(|l| l.iter().map(|p| sym(p)).collect()).collect(),
            prefs: BTreeMap::new(),
        }
    }

    fn setup(d: PreferenceDescription, k: &Kripke) -> (BTreeMap<Agent, PreferenceDescription>, PrefTables) {
        let prefs = BTreeMap::from([(1, d)]);
        let t = PrefTables::new(&prefs, &BTreeSet::from([1]), &k.vocabulary()).unwrap();
        (prefs, t)
    }

    #[test]
    fn complement_of_the_order() {
        let bs = [parse("F p").unwrap(), parse("G !p").unwrap()];
        let f = elim_pref_at(&parse("X p").unwrap(), &parse("p").unwrap(), &bs, &[(1, 2)].into());
        // three pairs outside the order
        assert_eq!(f.to_string().matches('!').count() - f.to_string().matches("!p").count(), 3);
        assert!(simp::is_top(&elim_pref_at(&Formula::bot(), &parse("p").unwrap(), &bs, &BTreeSet::new())));
    }

    #[test]
    fn variant_expansion_has_only_class_operands() {
        let bs = [parse("F p").unwrap()];
        let f = expand_variant(Variant::EE, 1, &parse("p").unwrap(), &parse("q").unwrap(), &bs);
        let mut prefs = Vec::new();
        f.visit(&mut |g| {
            if let Node::Pref(v, _, a, b) = g.node() {
                prefs.push((*v, a.clone(), b.clone()));
            }
        });
        assert_eq!(prefs, [(Variant::FF, bs[0].clone(), bs[0].clone())]);
    }

    #[test]
    fn labeling_holds_on_mb() {
        let k = ring(&[&["p"], &[]]);
        let d = PreferenceDescription::new(vec![parse("G p").unwrap(), parse("F !p").unwrap()], [(2, 1)]);
        let (_, t) = setup(d, &k);
        let mb = build_mb(&k, &t).unwrap();
        assert!(ctlstar_check(&mb.kripke, &labeling_formula(&t, false)).unwrap()[0]);
        let lk = relabel_log(&mb, &t);
        assert!(ctlstar_check(&lk, &labeling_formula(&t, true)).unwrap()[0]);
        assert!(ctlstar_check(&lk, &range_restriction(&t)).unwrap()[0]);
        // a wrong initial label is caught
        let mut bad = mb.kripke.clone();
        bad.initial = 1;
        let at1 = ctlstar_check(&bad, &labeling_formula(&t, false)).unwrap();
        assert!(!at1[1] || mb.origin[1].1 == vec![0, 0]);
    }

    #[test]
    fn mb_elimination_matches_direct_evaluation() {
        let k = ring(&[&["p"], &[], &["p"]]);
        let d = PreferenceDescription::new(vec![parse("G p").unwrap(), parse("F !p").unwrap()], [(2, 1)]);
        let (prefs, t) = setup(d, &k);
        let mb = build_mb(&k, &t).unwrap();
        for s in [
            "X p <ff[1] G p",
            "E X (p <ff[1] !p)",
            "A G (F !p <ea[1] G p)",
            "E F (X !p <ae[1] true) | (p >ea[1] !p)",
            "(X p <ee[1] X !p) <ff[1] p",
        ] {
            let a = parse(s).unwrap();
            let want = direct_pref_check(&k, &prefs, &a).unwrap();
            for collapse_root in [false, true] {
                let e = eliminate_preference(&a, &t, PrefElimOptions { mode: PrefMode::ForMB, collapse_root }).unwrap();
                assert!(!e.has_pref());
                assert_eq!(ctlstar_check(&mb.kripke, &e).unwrap()[0], want, "{s}");
            }
        }
    }

    #[test]
    fn quantified_modes_wrap_the_labeling() {
        let k = ring(&[&["p"], &[]]);
        let d = PreferenceDescription::new(vec![parse("G p").unwrap(), parse("F !p").unwrap()], [(2, 1)]);
        let (_, t) = setup(d, &k);
        let a = parse("X p <ff[1] p").unwrap();
        let q = eliminate_preference(&a, &t, PrefElimOptions { mode: PrefMode::QVars, collapse_root: false }).unwrap();
        let r = eliminate_preference(&a, &t, PrefElimOptions { mode: PrefMode::LogVars, collapse_root: false }).unwrap();
        let count = |f: &Formula| {
            let mut n = 0;
            f.visit(&mut |g| n += matches!(g.node(), Node::ExistsProp(..)) as usize);
            n
        };
        let z: usize = t.slots.iter().map(|s| s.closure.len()).sum();
        let zr: usize = t.slots.iter().map(|s| s.r_names.len()).sum();
        assert_eq!(count(&q), z);
        assert_eq!(count(&r), zr);
        let plain = parse("E X p").unwrap();
        assert_eq!(eliminate_preference(&plain, &t, PrefElimOptions::default()).unwrap(), plain);
    }
}
