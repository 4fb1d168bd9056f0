//! Guarded normal forms, tail closures and the lasso-word LTL oracle.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::formula::{Formula, Node, Sym};
use crate::simp;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GnfError {
    #[error("not an LTL formula: `{0}`")]
    NotLtl(String),
    #[error("closure exceeded {0} members")]
    ClosureTooLarge(usize),
}

fn require_ltl(b: &Formula) -> Result<(), GnfError> {
    if b.is_ltl() {
        Ok(())
    } else {
        Err(GnfError::NotLtl(b.to_string()))
    }
}

/// `⋁ guard ∧ X tail`, one disjunct per minterm over `atoms`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gnf {
    pub atoms: Vec<Sym>,
    pub disjuncts: Vec<(Formula, Formula)>,
}

impl Gnf {
    pub fn as_formula(&self) -> Formula {
        Formula::or_all(
            self.disjuncts
                .iter()
                .map(|(g, t)| Formula::and(g.clone(), Formula::next(t.clone()))),
        )
    }
}

/// The conjunction of literals selecting `val` among `atoms`.
pub fn minterm(atoms: &[Sym], val: &BTreeSet<Sym>) -> Formula {
    Formula::and_all(atoms.iter().map(|p| {
        let a = Formula::from(Node::Atom(p.clone()));
        if val.contains(p) {
            a
        } else {
            Formula::not(a)
        }
    }))
}

/// All subsets of `atoms`, in binary-counter order (atom 0 is the low bit).
pub fn valuations(atoms: &[Sym]) -> Vec<BTreeSet<Sym>> {
    (0..1usize << atoms.len())
        .map(|bits| {
            atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| bits >> i & 1 == 1)
                .map(|(_, p)| p.clone())
                .collect()
        })
        .collect()
}

pub fn gnf(b: &Formula) -> Result<Gnf, GnfError> {
    require_ltl(b)?;
    let atoms: Vec<Sym> = b.atoms().into_iter().collect();
    let disjuncts = valuations(&atoms)
        .into_iter()
        .map(|v| (minterm(&atoms, &v), tail(b, &v)))
        .collect();
    Ok(Gnf { atoms, disjuncts })
}

/// The GNF tail of `b` for the minterm that makes exactly `val` true
/// (atoms outside `b` are ignored), in normal form.
pub fn tail(b: &Formula, val: &BTreeSet<Sym>) -> Formula {
    normalize(&derive(b, val))
}

fn derive(b: &Formula, val: &BTreeSet<Sym>) -> Formula {
    use Node::*;
    let d = |x: &Formula| derive(x, val);
    match b.node() {
        Bot => Formula::bot(),
        Top => Formula::top(),
        Atom(p) => {
            if val.contains(p) {
                Formula::top()
            } else {
                Formula::bot()
            }
        }
        Not(a) => simp::not(d(a)),
        And(a, c) => simp::and(d(a), d(c)),
        Or(a, c) => simp::or(d(a), d(c)),
        Implies(a, c) => simp::implies(d(a), d(c)),
        Iff(a, c) => simp::iff(d(a), d(c)),
        Next(a) => a.clone(),
        Until(a, c) | WeakUntil(a, c) => simp::or(d(c), simp::and(d(a), b.clone())),
        Eventually(a) => simp::or(d(a), b.clone()),
        Always(a) => simp::and(d(a), b.clone()),
        _ => unreachable!("derive called on non-LTL formula"),
    }
}

type Cube = BTreeMap<Formula, bool>;

fn dnf(f: &Formula, pos: bool) -> Vec<Cube> {
    use Node::*;
    match f.node() {
        Top => {
            if pos {
                vec![Cube::new()]
            } else {
                vec![]
            }
        }
        Bot => {
            if pos {
                vec![]
            } else {
                vec![Cube::new()]
            }
        }
        Not(a) => dnf(a, !pos),
        And(a, b) => {
            if pos {
                product(dnf(a, true), dnf(b, true))
            } else {
                union(dnf(a, false), dnf(b, false))
            }
        }
        Or(a, b) => {
            if pos {
                union(dnf(a, true), dnf(b, true))
            } else {
                product(dnf(a, false), dnf(b, false))
            }
        }
        Implies(a, b) => {
            if pos {
                union(dnf(a, false), dnf(b, true))
            } else {
                product(dnf(a, true), dnf(b, false))
            }
        }
        Iff(a, b) => {
            let (x, y) = if pos { (true, true) } else { (true, false) };
            union(
                product(dnf(a, x), dnf(b, y)),
                product(dnf(a, !x), dnf(b, !y)),
            )
        }
        _ => vec![Cube::from([(f.clone(), pos)])],
    }
}

fn product(a: Vec<Cube>, b: Vec<Cube>) -> Vec<Cube> {
    let mut out = Vec::new();
    for x in &a {
        'next: for y in &b {
            let mut c = x.clone();
            for (lit, pol) in y {
                if let Some(old) = c.insert(lit.clone(), *pol) {
                    if old != *pol {
                        continue 'next;
                    }
                }
            }
            out.push(c);
        }
    }
    reduce(out)
}

fn union(mut a: Vec<Cube>, b: Vec<Cube>) -> Vec<Cube> {
    a.extend(b);
    reduce(a)
}

/// Deduplicate, drop subsumed cubes and merge cubes differing in one polarity.
fn reduce(cubes: Vec<Cube>) -> Vec<Cube> {
    let mut set: BTreeSet<Cube> = cubes.into_iter().collect();
    loop {
        let list: Vec<Cube> = set.iter().cloned().collect();
        let mut changed = false;
        // resolution: (x & l) | (x & !l) = x
        'outer: for (i, c) in list.iter().enumerate() {
            for d in &list[i + 1..] {
                if c.len() != d.len() {
                    continue;
                }
                let mut diff = None;
                for ((l1, p1), (l2, p2)) in c.iter().zip(d.iter()) {
                    if l1 != l2 {
                        diff = None;
                        break;
                    }
                    if p1 != p2 {
                        if diff.is_some() {
                            diff = None;
                            break;
                        }
                        diff = Some(l1.clone());
                    }
                }
                if let Some(l) = diff {
                    let mut m = c.clone();
                    m.remove(&l);
                    set.remove(c);
                    set.remove(d);
                    set.insert(m);
                    changed = true;
                    break 'outer;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let list: Vec<Cube> = set.into_iter().collect();
    list.iter()
        .filter(|c| {
            !list
                .iter()
                .any(|d| d != *c && d.len() < c.len() && d.iter().all(|(l, p)| c.get(l) == Some(p)))
        })
        .cloned()
        .collect()
}

fn cube_formula(c: &Cube) -> Formula {
    Formula::and_all(c.iter().map(|(l, p)| if *p { l.clone() } else { Formula::not(l.clone()) }))
}

/// Canonical disjunctive normal form over atoms and temporal subformulas.
/// Equal outputs imply equivalence; the converse need not hold.
pub fn normalize(f: &Formula) -> Formula {
    let cubes = dnf(f, true);
    if cubes.iter().any(|c| c.is_empty()) {
        return Formula::top();
    }
    Formula::or_all(cubes.iter().map(cube_formula))
}

pub const CLOSURE_LIMIT: usize = 4096;

/// Fixpoint of GNF tails starting from `b`; `b` is the first element and the
/// rest follow in discovery order.
pub fn closure(b: &Formula) -> Result<Vec<Formula>, GnfError> {
    require_ltl(b)?;
    let mut seen: BTreeSet<Formula> = BTreeSet::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::from([b.clone()]);
    seen.insert(b.clone());
    while let Some(f) = queue.pop_front() {
        let atoms: Vec<Sym> = f.atoms().into_iter().collect();
        for v in valuations(&atoms) {
            let t = tail(&f, &v);
            if seen.insert(t.clone()) {
                queue.push_back(t);
            }
        }
        order.push(f);
        if order.len() > CLOSURE_LIMIT {
            return Err(GnfError::ClosureTooLarge(CLOSURE_LIMIT));
        }
    }
    Ok(order)
}

/// Ultimately periodic word `prefix · loop^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LassoWord {
    pub prefix: Vec<BTreeSet<Sym>>,
    pub cycle: Vec<BTreeSet<Sym>>,
}

impl LassoWord {
    pub fn new(prefix: Vec<BTreeSet<Sym>>, cycle: Vec<BTreeSet<Sym>>) -> Self {
        assert!(!cycle.is_empty(), "lasso loop must be non-empty");
        LassoWord { prefix, cycle }
    }

    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn letter(&self, i: usize) -> &BTreeSet<Sym> {
        if i < self.prefix.len() {
            &self.prefix[i]
        } else {
            &self.cycle[i - self.prefix.len()]
        }
    }

    fn succ(&self, i: usize) -> usize {
        if i + 1 < self.len() {
            i + 1
        } else {
            self.prefix.len()
        }
    }
}

/// Exact LTL satisfaction at position 0 of the lasso.
pub fn ltl_eval(w: &LassoWord, b: &Formula) -> Result<bool, GnfError> {
    require_ltl(b)?;
    Ok(eval_positions(w, b)[0])
}

fn eval_positions(w: &LassoWord, b: &Formula) -> Vec<bool> {
    use Node::*;
    let n = w.len();
    let map = |v: &[bool], f: &dyn Fn(bool) -> bool| v.iter().map(|x| f(*x)).collect::<Vec<_>>();
    let zip = |a: &[bool], c: &[bool], f: &dyn Fn(bool, bool) -> bool| {
        a.iter().zip(c).map(|(x, y)| f(*x, *y)).collect::<Vec<_>>()
    };
    // least (init false) or greatest (init true) fixpoint of v = now | (keep & v∘succ)
    let fix = |now: &[bool], keep: &[bool], init: bool| {
        let mut v = vec![init; n];
        loop {
            let nv: Vec<bool> = (0..n).map(|i| now[i] || (keep[i] && v[w.succ(i)])).collect();
            if nv == v {
                return v;
            }
            v = nv;
        }
    };
    match b.node() {
        Bot => vec![false; n],
        Top => vec![true; n],
        Atom(p) => (0..n).map(|i| w.letter(i).contains(p)).collect(),
        Not(a) => map(&eval_positions(w, a), &|x| !x),
        And(a, c) => zip(&eval_positions(w, a), &eval_positions(w, c), &|x, y| x && y),
        Or(a, c) => zip(&eval_positions(w, a), &eval_positions(w, c), &|x, y| x || y),
        Implies(a, c) => zip(&eval_positions(w, a), &eval_positions(w, c), &|x, y| !x || y),
        Iff(a, c) => zip(&eval_positions(w, a), &eval_positions(w, c), &|x, y| x == y),
        Next(a) => {
            let v = eval_positions(w, a);
            (0..n).map(|i| v[w.succ(i)]).collect()
        }
        Until(a, c) => fix(&eval_positions(w, c), &eval_positions(w, a), false),
        WeakUntil(a, c) => fix(&eval_positions(w, c), &eval_positions(w, a), true),
        Eventually(a) => fix(&eval_positions(w, a), &vec![true; n], false),
        Always(a) => {
            let v = eval_positions(w, a);
            fix(&vec![false; n], &v, true)
        }
        _ => unreachable!("non-LTL node in lasso evaluation"),
    }
}

/// Shape of a batch of lassos: total length and loop start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LassoShape {
    pub len: usize,
    pub loop_start: usize,
}

impl LassoShape {
    pub fn succ(&self, i: usize) -> usize {
        if i + 1 < self.len {
            i + 1
        } else {
            self.loop_start
        }
    }

    /// All shapes with `1 <= len <= bound`.
    pub fn all(bound: usize) -> Vec<LassoShape> {
        (1..=bound)
            .flat_map(|len| (0..len).map(move |loop_start| LassoShape { len, loop_start }))
            .collect()
    }
}

/// Bit-parallel evaluation of `b` on up to 64 lassos sharing one shape.
/// `atom(p, i)` gives the lane mask of lassos where `p` holds at position `i`.
/// Returns the lane mask of lassos satisfying `b` at position 0.
pub fn ltl_eval_lanes(
    shape: LassoShape,
    b: &Formula,
    atom: &dyn Fn(&Sym, usize) -> u64,
) -> Result<u64, GnfError> {
    require_ltl(b)?;
    Ok(lanes(shape, b, atom)[0])
}

fn lanes(s: LassoShape, b: &Formula, atom: &dyn Fn(&Sym, usize) -> u64) -> Vec<u64> {
    use Node::*;
    let n = s.len;
    let pw = |a: &Formula, c: &Formula, f: fn(u64, u64) -> u64| {
        let (x, y) = (lanes(s, a, atom), lanes(s, c, atom));
        (0..n).map(|i| f(x[i], y[i])).collect::<Vec<_>>()
    };
    let fix = |now: &[u64], keep: &[u64], init: u64| {
        let mut v = vec![init; n];
        loop {
            let nv: Vec<u64> = (0..n).map(|i| now[i] | (keep[i] & v[s.succ(i)])).collect();
            if nv == v {
                return v;
            }
            v = nv;
        }
    };
    match b.node() {
        Bot => vec![0; n],
        Top => vec![!0; n],
        Atom(p) => (0..n).map(|i| atom(p, i)).collect(),
        Not(a) => lanes(s, a, atom).into_iter().map(|x| !x).collect(),
        And(a, c) => pw(a, c, |x, y| x & y),
        Or(a, c) => pw(a, c, |x, y| x | y),
        Implies(a, c) => pw(a, c, |x, y| !x | y),
        Iff(a, c) => pw(a, c, |x, y| !(x ^ y)),
        Next(a) => {
            let v = lanes(s, a, atom);
            (0..n).map(|i| v[s.succ(i)]).collect()
        }
        Until(a, c) => fix(&lanes(s, c, atom), &lanes(s, a, atom), 0),
        WeakUntil(a, c) => fix(&lanes(s, c, atom), &lanes(s, a, atom), !0),
        Eventually(a) => fix(&lanes(s, a, atom), &vec![!0; n], 0),
        Always(a) => fix(&vec![0; n], &lanes(s, a, atom), !0),
        _ => unreachable!("non-LTL node in lasso evaluation"),
    }
}

/// Every lasso over subsets of `alphabet` with `|prefix| + |loop| <= bound`.
pub fn all_lassos(alphabet: &[Sym], bound: usize) -> impl Iterator<Item = LassoWord> + '_ {
    let letters = valuations(alphabet);
    let k = letters.len();
    LassoShape::all(bound).into_iter().flat_map(move |shape| {
        let letters = letters.clone();
        let total = (k as u128).pow(shape.len as u32);
        (0..total).map(move |mut code| {
            let mut word = Vec::with_capacity(shape.len);
            for _ in 0..shape.len {
                word.push(letters[(code % k as u128) as usize].clone());
                code /= k as u128;
            }
            let cycle = word.split_off(shape.loop_start);
            LassoWord::new(word, cycle)
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FullSystem {
    Exact(bool),
    Sampled(bool),
}

impl FullSystem {
    pub fn holds(self) -> bool {
        matches!(self, FullSystem::Exact(true) | FullSystem::Sampled(true))
    }
}

/// Check that exactly one of `bs` holds on every valuation (propositional
/// input) or on every lasso up to `bound` (temporal input).
pub fn full_system_check(bs: &[Formula], alphabet: &BTreeSet<Sym>, bound: usize) -> FullSystem {
    let mut atoms: BTreeSet<Sym> = alphabet.clone();
    for b in bs {
        atoms.extend(b.atoms());
    }
    let atoms: Vec<Sym> = atoms.into_iter().collect();
    if bs.iter().all(|b| b.is_propositional()) {
        let ok = valuations(&atoms).iter().all(|v| {
            let w = LassoWord::new(vec![], vec![v.clone()]);
            bs.iter().filter(|b| eval_positions(&w, b)[0]).count() == 1
        });
        return FullSystem::Exact(ok);
    }
    let ok = all_lassos(&atoms, bound)
        .all(|w| bs.iter().filter(|b| eval_positions(&w, b)[0]).count() == 1);
    FullSystem::Sampled(ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse, sym};

    fn set(xs: &[&str]) -> BTreeSet<Sym> {
        xs.iter().map(|x| sym(x)).collect()
    }

    #[test]
    fn until_table() {
        let f = parse("p U q").unwrap();
        let g = gnf(&f).unwrap();
        let find = |v: &[&str]| tail(&f, &set(v));
        assert_eq!(g.disjuncts.len(), 4);
        assert_eq!(find(&["p", "q"]), Formula::top());
        assert_eq!(find(&["q"]), Formula::top());
        assert_eq!(find(&["p"]), f);
        assert_eq!(find(&[]), Formula::bot());
    }

    #[test]
    fn next_and_bot() {
        let g = gnf(&parse("X p").unwrap()).unwrap();
        assert!(g.disjuncts.iter().all(|(_, t)| *t == parse("p").unwrap()));
        let g = gnf(&Formula::bot()).unwrap();
        assert_eq!(g.disjuncts, vec![(Formula::top(), Formula::bot())]);
    }

    #[test]
    fn closures() {
        let c: BTreeSet<_> = closure(&parse("p U q").unwrap()).unwrap().into_iter().collect();
        let want: BTreeSet<_> = ["p U q", "true", "false"].iter().map(|s| parse(s).unwrap()).collect();
        assert_eq!(c, want);
        let c: BTreeSet<_> = closure(&parse("X p").unwrap()).unwrap().into_iter().collect();
        let want: BTreeSet<_> = ["X p", "p", "true", "false"].iter().map(|s| parse(s).unwrap()).collect();
        assert_eq!(c, want);
        assert_eq!(closure(&parse("p").unwrap()).unwrap().len(), 3);
    }

    #[test]
    fn lasso_examples() {
        let w = LassoWord::new(vec![], vec![set(&["p"])]);
        assert!(ltl_eval(&w, &parse("G p").unwrap()).unwrap());
        let w = LassoWord::new(vec![set(&[])], vec![set(&["p"])]);
        assert!(ltl_eval(&w, &parse("F p").unwrap()).unwrap());
        assert!(!ltl_eval(&w, &parse("p").unwrap()).unwrap());
        let w = LassoWord::new(vec![set(&["p"])], vec![set(&[])]);
        assert!(!ltl_eval(&w, &parse("p U q").unwrap()).unwrap());
    }

    #[test]
    fn full_systems() {
        let al = set(&["p", "q"]);
        let bs = [parse("p").unwrap(), parse("!p").unwrap()];
        assert_eq!(full_system_check(&bs, &al, 4), FullSystem::Exact(true));
        let bs = [parse("p U q").unwrap(), parse("!(p U q)").unwrap()];
        assert_eq!(full_system_check(&bs, &al, 4), FullSystem::Sampled(true));
        let bs = [parse("p").unwrap(), parse("q").unwrap()];
        assert_eq!(full_system_check(&bs, &al, 4), FullSystem::Exact(false));
    }

    #[test]
    fn lanes_match_single_evaluation() {
        let atoms = vec![sym("p"), sym("q")];
        let fs: Vec<Formula> = ["p U q", "G F p", "X (p W q)", "F G !q & p", "(p <-> X q) U G p"]
            .iter()
            .map(|s| parse(s).unwrap())
            .collect();
        for shape in LassoShape::all(4) {
            let words: Vec<Vec<usize>> = (0..4usize.pow(shape.len as u32))
                .take(64)
                .map(|mut c| (0..shape.len).map(|_| { let l = c % 4; c /= 4; l }).collect())
                .collect();
            let atom = |p: &Sym, i: usize| {
                let bit = atoms.iter().position(|a| a == p).unwrap();
                words.iter().enumerate().fold(0u64, |m, (lane, w)| m | (((w[i] >> bit) as u64 & 1) << lane))
            };
            for f in &fs {
                let mask = ltl_eval_lanes(shape, f, &atom).unwrap();
                for (lane, w) in words.iter().enumerate() {
                    let letters: Vec<BTreeSet<Sym>> = w
                        .iter()
                        .map(|l| atoms.iter().enumerate().filter(|(b, _)| l >> b & 1 == 1).map(|(_, a)| a.clone()).collect())
                        .collect();
                    let mut pre = letters;
                    let cyc = pre.split_off(shape.loop_start);
                    let lw = LassoWord::new(pre, cyc);
                    assert_eq!(mask >> lane & 1 == 1, ltl_eval(&lw, f).unwrap(), "{f} on {lw:?}");
                }
            }
        }
    }
}
