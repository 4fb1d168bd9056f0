//! Randomized and curated differential checks. Every check compares two
//! independent engines (or an engine against a hand-known value) and
//! collects the instances on which they disagree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use atlscpref_core::atlsc::{translate_atlsc, TranslateOptions};
use atlscpref_core::check::{
    atlsc_bounded_check, atlsc_bounded_eval, ctlstar_check, direct_pref_check, quant_sem_check, translated_eval,
};
use atlscpref_core::gen::{alphabet, Gen, Vocab};
use atlscpref_core::gnf::{self, closure, gnf, ltl_eval_lanes, minterm, tail, valuations, LassoShape};
use atlscpref_core::models::{
    build_mb, load_model, pref_update_path, to_kripke, Cgm, Kripke, Model, PrefTables, PreferenceDescription,
};
use atlscpref_core::path_quant::{eliminate_path_quant, PathQuantOptions};
use atlscpref_core::pref_elim::{eliminate_preference, expand_variant, PrefElimOptions, PrefMode};
use atlscpref_core::{parse, sym, Agent, Formula, Node, Sym, Variant};

/// Outcome of one check.
#[derive(Debug, Clone)]
pub struct Report {
    pub id: usize,
    pub name: &'static str,
    pub instances: usize,
    pub min_instances: usize,
    pub failures: Vec<String>,
    pub elapsed: Duration,
    pub limit: Option<Duration>,
    /// One line per instance: id, engine values, agreement.
    pub records: Vec<String>,
}

impl Report {
    fn new(id: usize, name: &'static str, min_instances: usize, limit: Option<Duration>) -> Self {
        Report {
            id,
            name,
            instances: 0,
            min_instances,
            failures: Vec::new(),
            elapsed: Duration::ZERO,
            limit,
            records: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
            && self.instances >= self.min_instances
            && self.limit.map_or(true, |l| self.elapsed <= l)
    }

    fn record(&mut self, what: impl fmt::Display, values: impl fmt::Display, agree: bool) {
        let n = self.instances;
        self.instances += 1;
        self.records.push(format!("{}.{n}\t{values}\t{}", self.id, if agree { "agree" } else { "DISAGREE" }));
        if !agree {
            self.failures.push(format!("#{n}: {what} ({values})"));
        }
    }

    fn error(&mut self, what: impl fmt::Display, e: impl fmt::Display) {
        let n = self.instances;
        self.instances += 1;
        self.records.push(format!("{}.{n}\terror: {e}\tDISAGREE", self.id));
        self.failures.push(format!("#{n}: {what}: {e}"));
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}. {}: {} instances, {} failures, {:.2?}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.instances,
            self.failures.len(),
            self.elapsed
        )?;
        if self.instances < self.min_instances {
            write!(f, " (needs {})", self.min_instances)?;
        }
        if let Some(l) = self.limit.filter(|l| self.elapsed > *l) {
            write!(f, " (over {l:?})")?;
        }
        for x in self.failures.iter().take(5) {
            write!(f, "\n    {x}")?;
        }
        Ok(())
    }
}

fn timed(mut r: Report, body: impl FnOnce(&mut Report)) -> Report {
    let start = Instant::now();
    body(&mut r);
    r.elapsed = start.elapsed();
    r
}

pub fn load_game(text: &str) -> Cgm {
    match load_model(text) {
        Ok(Model::Cgm(m)) => m,
        Ok(_) => panic!("built-in model is not a game"),
        Err(e) => panic!("built-in model: {e}"),
    }
}

fn ltl_corpus(seed: u64, n: usize) -> Vec<Formula> {
    let mut g = Gen::new(seed);
    let atoms = alphabet(3);
    (0..n).map(|_| g.ltl(&atoms, 3)).collect()
}

// lane l of a batch carries bit `b` of its word index in bit `b` of `l`
const LANE_BITS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// First lasso (as shape and word index) on which `a` and `b` differ.
/// Words assign a valuation over `atoms` to every position of the shape.
fn lasso_difference(
    a: &Formula,
    b: &Formula,
    atoms: &[Sym],
    bound: usize,
) -> Result<Option<(LassoShape, u64)>, gnf::GnfError> {
    let na = atoms.len();
    for shape in LassoShape::all(bound) {
        let bits = na * shape.len;
        let words = 1u64 << bits;
        let lanes = if words >= 64 { !0 } else { (1u64 << words) - 1 };
        for base in 0..(words / 64).max(1) {
            let atom = |p: &Sym, i: usize| match atoms.iter().position(|q| q == p) {
                None => 0,
                Some(j) => {
                    let bit = i * na + j;
                    if bit < 6 {
                        LANE_BITS[bit]
                    } else if base >> (bit - 6) & 1 == 1 {
                        !0
                    } else {
                        0
                    }
                }
            };
            let diff = (ltl_eval_lanes(shape, a, &atom)? ^ ltl_eval_lanes(shape, b, &atom)?) & lanes;
            if diff != 0 {
                return Ok(Some((shape, base * 64 + diff.trailing_zeros() as u64)));
            }
        }
    }
    Ok(None)
}

/// The guarded normal form agrees with its source on every short lasso.
pub fn gnf_soundness(seed: u64, n: usize) -> Report {
    timed(Report::new(1, "normal form soundness", 500, Some(Duration::from_secs(120))), |r| {
        for b in ltl_corpus(seed, n) {
            let atoms: Vec<Sym> = b.atoms().into_iter().collect();
            let g = match gnf(&b) {
                Ok(g) => g.as_formula(),
                Err(e) => {
                    r.error(&b, e);
                    continue;
                }
            };
            match lasso_difference(&b, &g, &atoms, 6) {
                Ok(None) => r.record(&b, "equal on all lassos", true),
                Ok(Some((s, w))) => r.record(&b, format!("differ at len {} loop {} word {w}", s.len, s.loop_start), false),
                Err(e) => r.error(&b, e),
            }
        }
    })
}

/// Closures contain the tails of their members and never deepen.
pub fn closure_discipline(seed: u64, n: usize) -> Report {
    timed(Report::new(2, "closure discipline", 500, None), |r| {
        for b in ltl_corpus(seed, n) {
            let cl = match closure(&b) {
                Ok(c) => c,
                Err(e) => {
                    r.error(&b, e);
                    continue;
                }
            };
            let atoms: Vec<Sym> = b.atoms().into_iter().collect();
            let members: BTreeSet<&Formula> = cl.iter().collect();
            let depth = b.modal_depth();
            let open = cl
                .iter()
                .flat_map(|f| valuations(&atoms).into_iter().map(move |v| tail(f, &v)))
                .filter(|t| !members.contains(t))
                .count();
            let deep = cl.iter().filter(|f| f.modal_depth() > depth).count();
            r.record(&b, format!("{} members, {open} escaping tails, {deep} deeper", cl.len()), open == 0 && deep == 0);
        }
    })
}

fn pref_vocab(atoms: &[Sym], d: &PreferenceDescription) -> Vocab {
    Vocab { atoms: atoms.to_vec(), pref_agents: vec![1], path_vars: vec![], classes: d.objectives.clone() }
}

fn single(d: PreferenceDescription) -> BTreeMap<Agent, PreferenceDescription> {
    BTreeMap::from([(1, d)])
}

/// Mostly two or three objectives; a single objective makes every
/// preference trivial.
fn objective_count(g: &mut Gen) -> usize {
    *[1, 2, 2, 3, 3, 3].choose(g.rng()).unwrap()
}

/// A model with at most `max_states` states and a description with `k`
/// objectives of which at least two are realized from the root when
/// `k > 1`; a preference between a single class and nothing is vacuous.
fn informative(g: &mut Gen, atoms: &[Sym], max_states: usize, k: usize) -> (Kripke, PreferenceDescription) {
    loop {
        let size = g.rng().gen_range(1..=max_states);
        let m = g.kripke(size, atoms);
        for _ in 0..20 {
            let d = g.description(atoms, k, 2);
            if k < 2 {
                return (m, d);
            }
            let descs = single(d.clone());
            let realized = d
                .objectives
                .iter()
                .filter(|b| direct_pref_check(&m, &descs, &ex((*b).clone())).unwrap_or(false))
                .count();
            if realized >= 2 {
                return (m, d);
            }
        }
    }
}

/// Direct preference semantics against the labeled product.
pub fn pref_elimination(seed: u64, n: usize) -> Report {
    timed(Report::new(3, "preference elimination", 200, Some(Duration::from_secs(300))), |r| {
        let mut g = Gen::new(seed);
        let atoms = alphabet(2);
        for i in 0..n {
            let kk = objective_count(&mut g);
            let (k, d) = informative(&mut g, &atoms, 5, kk);
            let v = pref_vocab(&atoms, &d);
            let descs = single(d);
            let a = loop {
                let a = g.state(&v, 4);
                if a.has_pref() {
                    break a;
                }
            };
            // a comparison at the root, where the class order decides
            let var = if g.rng().gen_bool(0.5) { Variant::FF } else { g.variant() };
            let b = Formula::pref(var, 1, g.operand(&v, 2), g.operand(&v, 2));
            let collapse_root = i % 2 == 1;
            let run = || -> Result<Vec<(bool, bool)>, String> {
                let t = PrefTables::new(&descs, &BTreeSet::from([1]), &k.vocabulary()).map_err(|e| e.to_string())?;
                let mb = build_mb(&k, &t).map_err(|e| e.to_string())?;
                let opts = PrefElimOptions { mode: PrefMode::ForMB, collapse_root };
                let mut out = Vec::new();
                for f in [&a, &b] {
                    let want = direct_pref_check(&k, &descs, f).map_err(|e| e.to_string())?;
                    let e = eliminate_preference(f, &t, opts).map_err(|e| e.to_string())?;
                    let got = ctlstar_check(&mb.kripke, &e).map_err(|e| e.to_string())?[mb.kripke.initial];
                    out.push((want, got));
                }
                Ok(out)
            };
            let what = format!("{a} / {b}");
            match run() {
                Ok(v) => {
                    let values = v.iter().map(|(w, g)| format!("direct={w} eliminated={g}")).collect::<Vec<_>>();
                    r.record(what, values.join(" "), v.iter().all(|(w, g)| w == g))
                }
                Err(e) => r.error(what, e),
            }
        }
    })
}

fn ex(f: Formula) -> Formula {
    Formula::exists(Formula::next(f))
}

fn ax(f: Formula) -> Formula {
    Formula::forall(Formula::next(f))
}

fn ag(f: Formula) -> Formula {
    Formula::forall(Formula::always(f))
}

fn lt(a: Formula, b: Formula) -> Formula {
    Formula::pref(Variant::FF, 1, a, b)
}

fn propositional(g: &mut Gen, atoms: &[Sym]) -> Formula {
    loop {
        let b = g.ltl(atoms, 2);
        if b.is_propositional() {
            return b;
        }
    }
}

/// The preference axioms and the variant expansions, checked directly.
pub fn axioms(seed: u64, n: usize) -> Report {
    timed(Report::new(4, "preference axioms", 200, None), |r| {
        let mut g = Gen::new(seed);
        let atoms = alphabet(2);
        for _ in 0..n {
            let kk = objective_count(&mut g);
            let (k, d) = informative(&mut g, &atoms, 4, kk);
            let [b1, b2, c1, c2] = [0; 4].map(|_| g.ltl(&atoms, 2));
            let b = propositional(&mut g, &atoms);
            let mut laws = vec![
                (
                    "<1",
                    ag(Formula::implies(
                        Formula::and(
                            ax(Formula::implies(b1.clone(), b2.clone())),
                            ax(Formula::implies(c1.clone(), c2.clone())),
                        ),
                        Formula::implies(lt(b2.clone(), c2.clone()), lt(b1.clone(), c1.clone())),
                    )),
                ),
                (
                    "<2",
                    ag(Formula::iff(
                        lt(Formula::or(b1.clone(), b2.clone()), Formula::or(c1.clone(), c2.clone())),
                        Formula::and_all([
                            lt(b1.clone(), c1.clone()),
                            lt(b1.clone(), c2.clone()),
                            lt(b2.clone(), c1.clone()),
                            lt(b2.clone(), c2.clone()),
                        ]),
                    )),
                ),
                ("<3", ag(Formula::and(lt(Formula::bot(), b1.clone()), lt(b1.clone(), Formula::bot())))),
                (
                    "<4",
                    ag(Formula::implies(
                        lt(Formula::and(b.clone(), Formula::next(b1.clone())), Formula::and(b.clone(), Formula::next(c1.clone()))),
                        ax(Formula::implies(b.clone(), lt(b1.clone(), c1.clone()))),
                    )),
                ),
            ];
            // guard-shaped operands: a full valuation and the tails it selects
            let val: BTreeSet<Sym> = atoms.iter().filter(|_| g.rng().gen_bool(0.5)).cloned().collect();
            let m = minterm(&atoms, &val);
            let ks = d.objectives.len();
            let (k1, k2) = (g.rng().gen_range(0..ks), g.rng().gen_range(0..ks));
            let (t1, t2) = (tail(&d.objectives[k1], &val), tail(&d.objectives[k2], &val));
            laws.push((
                "<5",
                Formula::implies(
                    Formula::and(
                        ex(Formula::and_all([m.clone(), ex(t1.clone()), ex(t2.clone())])),
                        ax(Formula::implies(m.clone(), lt(t1.clone(), t2.clone()))),
                    ),
                    lt(Formula::and(m.clone(), Formula::next(t1)), Formula::and(m, Formula::next(t2))),
                ),
            ));
            for v in [Variant::EA, Variant::AE, Variant::EE, Variant::GEA, Variant::GAE] {
                let e = expand_variant(v, 1, &b1, &c1, &d.objectives);
                laws.push((v.token(), Formula::iff(Formula::pref(v, 1, b1.clone(), c1.clone()), e)));
            }
            let descs = single(d);
            let mut bad = Vec::new();
            let mut err = None;
            for (name, law) in &laws {
                match direct_pref_check(&k, &descs, law) {
                    Ok(true) => {}
                    Ok(false) => bad.push(*name),
                    Err(e) => err = Some(e),
                }
            }
            let what = format!("operands {b1}, {b2}, {c1}, {c2}, b = {b}");
            match err {
                Some(e) => r.error(what, e),
                None => r.record(what, format!("{} laws, violated: {bad:?}", laws.len()), bad.is_empty()),
            }
        }
    })
}

/// One step along a transition only adds ordered pairs between classes
/// that became empty. Steps after which fewer than two classes are
/// realizable say nothing about `P` and are skipped.
pub fn propagation(seed: u64, n: usize) -> Report {
    timed(Report::new(5, "pair propagation", 200, None), |r| {
        let mut g = Gen::new(seed);
        let atoms = alphabet(2);
        let marker = sym("mk");
        let mut skipped = 0;
        while r.instances < n && skipped < 50 * n {
            let size = g.rng().gen_range(2..=5);
            let k = g.kripke(size, &atoms);
            let kk = g.rng().gen_range(2..=3);
            let d = g.description(&atoms, kk, 3);
            let descs = single(d.clone());
            for &w in &k.succ[k.initial] {
                let mut km = k.clone();
                km.labels[w].insert(marker.clone());
                let tails: Vec<Formula> = d.objectives.iter().map(|b| tail(b, &k.labels[w])).collect();
                let at_w = |f: Formula| ex(Formula::and(Formula::atom(&marker), f));
                let holds = |f: Formula| direct_pref_check(&km, &descs, &f).map_err(|e| e.to_string());
                let run = || -> Result<Option<(BTreeSet<(usize, usize)>, BTreeSet<(usize, usize)>)>, String> {
                    let mut empty = Vec::new();
                    for t in &tails {
                        empty.push(!holds(at_w(ex(t.clone())))?);
                    }
                    if empty.iter().filter(|e| !**e).count() < 2 {
                        return Ok(None);
                    }
                    let mut next = BTreeSet::new();
                    for k1 in 1..=tails.len() {
                        for k2 in (1..=tails.len()).filter(|&k2| k2 != k1) {
                            if holds(at_w(lt(tails[k1 - 1].clone(), tails[k2 - 1].clone())))? {
                                next.insert((k1, k2));
                            }
                        }
                    }
                    let unexplained =
                        next.difference(&d.better).filter(|&&(k1, k2)| !empty[k1 - 1] && !empty[k2 - 1]).copied().collect();
                    Ok(Some((next, unexplained)))
                };
                let what = format!(
                    "objectives {:?} step to {}",
                    d.objectives.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
                    k.names[w]
                );
                match (run(), pref_update_path(&d, &[k.initial, w], &k)) {
                    (Ok(None), _) => skipped += 1,
                    (Ok(Some((next, unexplained))), Ok(path_tails)) => {
                        let ok = next.is_superset(&d.better) && unexplained.is_empty() && path_tails == tails;
                        let values = format!("P={:?} P'={next:?} unexplained={unexplained:?}", d.better);
                        r.record(what, values, ok);
                    }
                    (Err(e), _) => r.error(what, e),
                    (_, Err(e)) => r.error(what, e),
                }
            }
        }
    })
}

fn exists_one_defined(c: &str, d: &str, body: Formula) -> Formula {
    let cv = Formula::path_atom(c);
    let dv = Formula::path_atom(d);
    let single = Formula::sim_forall(
        1,
        d,
        Formula::implies(ex(Formula::and(cv.clone(), dv.clone())), ax(Formula::implies(cv.clone(), dv))),
    );
    Formula::sim_quant(1, c, Formula::and_all([ex(cv), single, body]))
}

/// Path-set quantifier semantics against their elimination on the product.
pub fn path_quantifiers(seed: u64, n: usize) -> Report {
    timed(Report::new(6, "path-set quantifier elimination", 100, None), |r| {
        let mut g = Gen::new(seed);
        let atoms = alphabet(2);
        for i in 0..n {
            let kk = objective_count(&mut g);
            let (k, d) = informative(&mut g, &atoms, 4, kk);
            let v = pref_vocab(&atoms, &d);
            let descs = single(d);
            let a = g.quantified(&v, 1, 3);
            let c = "c";
            let mut inner = v.clone();
            inner.path_vars.push(sym(c));
            let body = loop {
                let b = g.state(&inner, 3);
                if b.free_path_vars().contains(c) {
                    break b;
                }
            };
            let one = Formula::one_quant(1, c, body.clone());
            let defined = exists_one_defined(c, "d", body);
            let shallow = g.quantified(&v, 1, 2);
            let collapse_root = i % 2 == 0;
            let run = || -> Result<(Vec<(bool, bool)>, bool), String> {
                let s = |e: atlscpref_core::check::CheckError| e.to_string();
                let t = PrefTables::new(&descs, &BTreeSet::from([1]), &k.vocabulary()).map_err(|e| e.to_string())?;
                let mb = build_mb(&k, &t).map_err(|e| e.to_string())?;
                let opts = PathQuantOptions { collapse_root, log_guards: false };
                let mut out = Vec::new();
                for f in [&a, &one, &shallow] {
                    let want = quant_sem_check(&k, &descs, f).map_err(s)?;
                    let e = eliminate_path_quant(f, &t, opts).map_err(|e| e.to_string())?;
                    out.push((want, direct_pref_check(&mb.kripke, &descs, &e).map_err(s)?));
                }
                let y = quant_sem_check(&k, &descs, &defined).map_err(s)?;
                Ok((out, y))
            };
            let what = format!("{a} / {one} / {shallow}");
            match run() {
                Ok((v, y)) => {
                    let mut values: Vec<String> = v.iter().map(|(w, g)| format!("semantics={w} eliminated={g}")).collect();
                    values.push(format!("defined={y}"));
                    r.record(what, values.join(" "), v.iter().all(|(w, g)| w == g) && v[1].0 == y);
                }
                Err(e) => r.error(what, e),
            }
        }
    })
}

pub const THREE_PLAYERS: &str = "\
agents: 1 2 3
actions 1: a b
actions 2: c d e
actions 3: f
states: s t
init: s
label s: p
label t: q
";

fn three_player_game() -> Cgm {
    let mut text = THREE_PLAYERS.to_string();
    for s in ["s", "t"] {
        for (i, x) in ["a", "b"].iter().enumerate() {
            for (j, y) in ["c", "d", "e"].iter().enumerate() {
                let to = if (i + j) % 2 == 0 { "s" } else { "t" };
                text.push_str(&format!("outcome {s} {x} {y} f -> {to}\n"));
            }
        }
    }
    load_game(&text)
}

pub const STRUCTURE_SUITE: [&str; 20] = [
    "<<1>> X p",
    "<<1,2>> F p",
    "<<1,2,3>> G p",
    "<<>> F p",
    "[[2]] X p",
    "<<1,3>> (p U q)",
    "<<1,2>> X <<1>> F p",
    "<<2,3>> X [[2,3]] G q",
    "<<1>> X <<2>> X <<3>> X p",
    "<<1,2>> X ]1[ <<2>> F p",
    "[[1,2,3]] F q",
    "<<1,2>> (X p & <<3>> F q)",
    "E X <<2>> G p",
    "<<2>> F <<1,3>> X q",
    "<<1,2,3>> X ]2[ <<2>> X p",
    "!<<1,3>> G !p",
    "<<2,3>> F p | [[1]] G q",
    "[[]] X p",
    "<<1,2>> G (p -> <<1,2>> X q)",
    "<<3>> X p & <<1,2,3>> X q",
];

fn log2_ceil(n: usize) -> usize {
    let mut b = 0;
    while (1usize << b) < n {
        b += 1;
    }
    b
}

/// Expected variable counts per strategy modality, in pre-order.
fn expected_counts(m: &Cgm, f: &Formula, opts: TranslateOptions, out: &mut Vec<usize>) {
    let acts = |i: &Agent| m.actions[m.agent_pos(*i).unwrap()].len();
    match f.node() {
        Node::StratMod(g, b) | Node::StratBox(g, b) => {
            let separated = b.any(&|n| match n {
                Node::StratMod(h, _) | Node::StratBox(h, _) | Node::Relax(h, _) => {
                    g.intersection(h).next().is_some() && !g.is_subset(h)
                }
                _ => false,
            });
            let merged = opts.merge && g.len() > 1 && !separated;
            out.push(match (merged, opts.log_actions) {
                (true, false) => 1,
                (true, true) => log2_ceil(g.iter().map(acts).product()),
                (false, false) => g.len(),
                (false, true) => g.iter().map(|i| log2_ceil(acts(i))).sum(),
            });
            expected_counts(m, b, opts, out);
        }
        _ => {
            for c in f.children() {
                expected_counts(m, c, opts, out);
            }
        }
    }
}

fn prop_quantifiers(f: &Formula) -> usize {
    let mut n = 0;
    f.visit(&mut |g| n += matches!(g.node(), Node::ExistsProp(..) | Node::ForallProp(..)) as usize);
    n
}

pub const TRANSLATE_MODES: [TranslateOptions; 4] = [
    TranslateOptions { merge: false, log_actions: false },
    TranslateOptions { merge: false, log_actions: true },
    TranslateOptions { merge: true, log_actions: false },
    TranslateOptions { merge: true, log_actions: true },
];

/// Quantifier counts of the strategy translation.
pub fn translation_structure() -> Report {
    timed(Report::new(7, "translation structure", 20, None), |r| {
        let m = three_player_game();
        for s in STRUCTURE_SUITE {
            let a = parse(s).expect("suite formula parses");
            let mut got_all = Vec::new();
            let mut ok = true;
            let mut err = None;
            for opts in TRANSLATE_MODES {
                let mut want = Vec::new();
                expected_counts(&m, &a, opts, &mut want);
                match translate_atlsc(&a, &m, opts) {
                    Ok(t) => {
                        let got: Vec<usize> = t.quantifiers.iter().map(|q| q.vars).collect();
                        let merged_ok = t.quantifiers.iter().all(|q| !q.merged || opts.merge);
                        ok &= got == want && prop_quantifiers(&t.formula) == want.iter().sum::<usize>() && merged_ok;
                        got_all.push(format!("{got:?}/{want:?}"));
                    }
                    Err(e) => err = Some(e),
                }
            }
            match err {
                Some(e) => r.error(s, e),
                None => r.record(s, got_all.join(" "), ok),
            }
        }
    })
}

pub const PENNIES: &str = "\
agents: 1 2
actions 1: h1 t1
actions 2: h2 t2
states: s0 w l
init: s0
label w: win
outcome s0 h1 h2 -> w
outcome s0 h1 t2 -> l
outcome s0 t1 h2 -> l
outcome s0 t1 t2 -> w
outcome w h1 h2 -> w
outcome w h1 t2 -> w
outcome w t1 h2 -> w
outcome w t1 t2 -> w
outcome l h1 h2 -> l
outcome l h1 t2 -> l
outcome l t1 h2 -> l
outcome l t1 t2 -> l
";

pub const SOLE_CONTROLLER: &str = "\
agents: 1 2
actions 1: a b
actions 2: c
states: s0 u v
init: s0
label u: p
outcome s0 a c -> u
outcome s0 b c -> v
outcome u a c -> u
outcome u b c -> u
outcome v a c -> v
outcome v b c -> v
";

pub const ALTERNATION: &str = "\
agents: 1
actions 1: a b
states: s0 x y
init: s0
label x: pa
label y: pb
outcome s0 a -> x
outcome s0 b -> y
outcome x a -> s0
outcome x b -> s0
outcome y a -> s0
outcome y b -> s0
";

/// Hand-verified instances: game, formula, history bound, value.
pub const CURATED: [(&str, &str, usize, bool); 19] = [
    ("pennies", "<<1>> X win", 0, false),
    ("pennies", "<<1,2>> X win", 0, true),
    ("pennies", "<<1>> <<2>> X win", 0, true),
    ("pennies", "<<2>> <<1>> X win", 0, true),
    ("pennies", "<<2>> ]2[ <<1>> X win", 0, false),
    ("pennies", "<<>> F win", 0, false),
    ("pennies", "[[]] F win", 0, true),
    ("pennies", "<<1,2>> X G win", 0, true),
    ("pennies", "[[1]] X win", 0, true),
    ("pennies", "[[2]] <<1>> X win", 0, true),
    ("pennies", "<<1>> [[2]] X win", 0, false),
    ("sole", "<<1>> X p", 0, true),
    ("sole", "<<2>> X p", 0, false),
    ("sole", "<<1>> G !p", 0, true),
    ("sole", "<<1>> F p", 0, true),
    ("sole", "<<1>> (X p & X !p)", 0, false),
    ("alternation", "<<1>> (G F pa & G F pb)", 0, false),
    ("alternation", "<<1>> (G F pa & G F pb)", 1, true),
    ("alternation", "<<1>> G F pa", 0, true),
];

pub fn curated_game(name: &str) -> Cgm {
    load_game(match name {
        "pennies" => PENNIES,
        "sole" => SOLE_CONTROLLER,
        _ => ALTERNATION,
    })
}

/// Bounded strategy semantics against the translated formula on the curated games.
pub fn semantic_spot_checks() -> Report {
    timed(Report::new(8, "strategy semantics spot checks", 15, None), |r| {
        for (game, s, h, expected) in CURATED {
            let m = curated_game(game);
            let a = parse(s).expect("curated formula parses");
            let what = format!("{game}: {s} (h={h})");
            let run = || -> Result<(bool, Vec<bool>, String, Option<bool>), String> {
                let direct = atlsc_bounded_eval(&m, &a, h).map_err(|e| e.to_string())?;
                let verdict = atlsc_bounded_check(&m, &a, h).map_err(|e| e.to_string())?;
                let mut translated = Vec::new();
                for opts in TRANSLATE_MODES {
                    let t = translate_atlsc(&a, &m, opts).map_err(|e| e.to_string())?;
                    translated.push(translated_eval(&m, &t.formula, h).map_err(|e| e.to_string())?);
                }
                // the empty coalition quantifies over all plays
                let plain = match a.node() {
                    Node::StratMod(g, b) if g.is_empty() => Some(Formula::forall(b.clone())),
                    Node::StratBox(g, b) if g.is_empty() => Some(Formula::exists(b.clone())),
                    _ => None,
                };
                let ctl = match plain {
                    Some(f) => Some(ctlstar_check(&to_kripke(&m), &f).map_err(|e| e.to_string())?[m.initial]),
                    None => None,
                };
                Ok((direct, translated, format!("{verdict:?}"), ctl))
            };
            match run() {
                Ok((direct, translated, verdict, ctl)) => {
                    let ok = direct == expected
                        && translated.iter().all(|&t| t == direct)
                        && ctl.map_or(true, |c| c == direct);
                    r.record(
                        what,
                        format!("expected={expected} bounded={direct} verdict={verdict} translated={translated:?} ctl={ctl:?}"),
                        ok,
                    );
                }
                Err(e) => r.error(what, e),
            }
        }
    })
}

/// Everything but the Nash reproduction, with the default instance counts.
pub fn run_all(seed: u64) -> Vec<Report> {
    vec![
        gnf_soundness(seed, 500),
        closure_discipline(seed, 500),
        pref_elimination(seed, 200),
        axioms(seed, 200),
        propagation(seed, 200),
        path_quantifiers(seed, 120),
        translation_structure(),
        semantic_spot_checks(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lane_patterns_match_word_bits() {
        for (b, m) in LANE_BITS.iter().enumerate() {
            for l in 0..64 {
                assert_eq!(m >> l & 1, (l >> b) & 1);
            }
        }
    }

    #[test]
    fn lasso_difference_finds_a_witness() {
        let atoms = vec![sym("p")];
        let (a, b) = (parse("F p").unwrap(), parse("G F p").unwrap());
        assert!(lasso_difference(&a, &b, &atoms, 2).unwrap().is_some());
        assert!(lasso_difference(&a, &parse("p | X F p").unwrap(), &atoms, 4).unwrap().is_none());
    }

    #[test]
    fn small_runs_pass() {
        for r in [
            gnf_soundness(1, 10),
            closure_discipline(1, 10),
            pref_elimination(1, 10),
            axioms(1, 10),
            propagation(1, 10),
            path_quantifiers(1, 10),
        ] {
            assert!(r.failures.is_empty(), "{r}");
        }
    }
}
