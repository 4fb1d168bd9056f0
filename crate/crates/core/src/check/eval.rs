//! The state-formula evaluator shared by every engine.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use super::ltl::{self, Arena, Ln};
use super::world::{layered, Unfolded, World};
use super::CheckError;
use crate::atlsc::{recognize_block, UnitMode};
use crate::formula::{subst_path, sym, Agent, Coalition, Formula, Node, Sym, Variant};
use crate::models::Cgm;
use crate::simp;

pub const DEFAULT_STRATEGY_LIMIT: u128 = 1 << 16;
const BRUTE_FORCE_CELLS: usize = 16;

type Vector = Rc<Vec<bool>>;

/// Strategy context plus bindings of quantified propositions.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
struct Ctx {
    strat: Vec<Option<Rc<Vec<usize>>>>,
    env: Vec<(Sym, Vector)>,
}

#[derive(Clone, Copy)]
enum QuantKind {
    Some,
    All,
    One,
}

pub(crate) struct Engine<'a> {
    w: &'a World,
    tr: Option<(&'a Unfolded, &'a Cgm)>,
    pub limit: u128,
    depth: usize,
    ctxs: Vec<Ctx>,
    ctx_index: HashMap<Ctx, usize>,
    cache: HashMap<(usize, usize), (Formula, Vector)>,
    free: HashMap<usize, (Formula, Rc<BTreeSet<Sym>>)>,
    game_free: HashMap<usize, (Formula, bool)>,
}

fn addr(f: &Formula) -> usize {
    f.node() as *const Node as usize
}

/// True when `f` has no temporal operator or path variable outside a
/// state-level binder.
fn is_state(f: &Formula) -> bool {
    use Node::*;
    match f.node() {
        Bot | Top | Atom(_) => true,
        PathAtom(_) | Next(_) | Until(..) | Eventually(_) | Always(_) | WeakUntil(..) => false,
        Not(a) => is_state(a),
        Implies(a, b) | And(a, b) | Or(a, b) | Iff(a, b) => is_state(a) && is_state(b),
        _ => true,
    }
}

impl<'a> Engine<'a> {
    pub fn new(w: &'a World) -> Self {
        let agents = w.game.as_ref().map_or(0, |g| g.agents.len());
        let mut e = Engine {
            w,
            tr: None,
            limit: DEFAULT_STRATEGY_LIMIT,
            depth: 0,
            ctxs: Vec::new(),
            ctx_index: HashMap::new(),
            cache: HashMap::new(),
            free: HashMap::new(),
            game_free: HashMap::new(),
        };
        e.intern(Ctx { strat: vec![None; agents], env: Vec::new() });
        e
    }

    pub fn translated(u: &'a Unfolded, m: &'a Cgm) -> Self {
        let mut e = Engine::new(&u.world);
        e.tr = Some((u, m));
        e
    }

    fn intern(&mut self, c: Ctx) -> usize {
        if let Some(&i) = self.ctx_index.get(&c) {
            return i;
        }
        let i = self.ctxs.len();
        self.ctxs.push(c.clone());
        self.ctx_index.insert(c, i);
        i
    }

    fn free_props(&mut self, f: &Formula) -> Rc<BTreeSet<Sym>> {
        let k = addr(f);
        if let Some((_, s)) = self.free.get(&k) {
            return s.clone();
        }
        let s = Rc::new(f.free_props());
        self.free.insert(k, (f.clone(), s.clone()));
        s
    }

    fn is_game_free(&mut self, f: &Formula) -> bool {
        let k = addr(f);
        if let Some((_, b)) = self.game_free.get(&k) {
            return *b;
        }
        let b = !f.has_game();
        self.game_free.insert(k, (f.clone(), b));
        b
    }

    /// The context restricted to what `f` can observe.
    fn key_ctx(&mut self, f: &Formula, cid: usize) -> usize {
        let c = &self.ctxs[cid];
        let no_strat = c.strat.iter().all(Option::is_none);
        let no_env = c.env.is_empty();
        if no_strat && no_env {
            return cid;
        }
        let strat_len = c.strat.len();
        let keep_strat = !no_strat && !self.is_game_free(f);
        let env = if no_env {
            Vec::new()
        } else {
            let fv = self.free_props(f);
            let mut seen = BTreeSet::new();
            let mut env: Vec<(Sym, Vector)> = Vec::new();
            for (s, v) in self.ctxs[cid].env.iter().rev() {
                if fv.contains(s) && seen.insert(s.clone()) {
                    env.push((s.clone(), v.clone()));
                }
            }
            env.reverse();
            env
        };
        let strat = if keep_strat { self.ctxs[cid].strat.clone() } else { vec![None; strat_len] };
        self.intern(Ctx { strat, env })
    }

    pub fn eval_root(&mut self, f: &Formula) -> Result<bool, CheckError> {
        Ok(self.eval(f, 0)?[self.w.root])
    }

    pub fn eval_all(&mut self, f: &Formula) -> Result<Vector, CheckError> {
        self.eval(f, 0)
    }

    fn eval(&mut self, f: &Formula, cid: usize) -> Result<Vector, CheckError> {
        let cid = self.key_ctx(f, cid);
        let key = (addr(f), cid);
        if let Some((_, v)) = self.cache.get(&key) {
            return Ok(v.clone());
        }
        let v = Rc::new(self.compute(f, cid)?);
        self.cache.insert(key, (f.clone(), v.clone()));
        Ok(v)
    }

    fn compute(&mut self, f: &Formula, cid: usize) -> Result<Vec<bool>, CheckError> {
        use Node::*;
        let n = self.w.len();
        let pointwise = |a: &[bool], b: &[bool], op: fn(bool, bool) -> bool| -> Vec<bool> {
            a.iter().zip(b).map(|(&x, &y)| op(x, y)).collect()
        };
        Ok(match f.node() {
            Bot => vec![false; n],
            Top => vec![true; n],
            Atom(p) => match self.ctxs[cid].env.iter().rev().find(|(s, _)| s == p) {
                Some((_, v)) => v.as_ref().clone(),
                None => self.w.labels.iter().map(|l| l.contains(p)).collect(),
            },
            PathAtom(c) => return Err(CheckError::FreePathVar(c.clone())),
            Not(a) => self.eval(a, cid)?.iter().map(|b| !b).collect(),
            And(a, b) => pointwise(&self.eval(a, cid)?, &self.eval(b, cid)?, |x, y| x && y),
            Or(a, b) => pointwise(&self.eval(a, cid)?, &self.eval(b, cid)?, |x, y| x || y),
            Implies(a, b) => pointwise(&self.eval(a, cid)?, &self.eval(b, cid)?, |x, y| !x || y),
            Iff(a, b) => pointwise(&self.eval(a, cid)?, &self.eval(b, cid)?, |x, y| x == y),
            ExistsPath(a) => self.exists_path(a, false, cid, None, None)?,
            ForallPath(a) => {
                self.exists_path(a, true, cid, None, None)?.into_iter().map(|b| !b).collect()
            }
            Next(_) | Until(..) | Eventually(_) | Always(_) | WeakUntil(..) => {
                return Err(CheckError::PathFormula(f.to_string()))
            }
            Pref(v, i, a, b) => self.pref(*v, *i, a, b, cid)?,
            SimQuant(i, c, a) => self.quant(QuantKind::Some, *i, c, a, cid)?,
            SimForall(i, c, a) => self.quant(QuantKind::All, *i, c, a, cid)?,
            OneQuant(i, c, a) => self.quant(QuantKind::One, *i, c, a, cid)?,
            StratMod(g, b) => self.strat(g, b, false, cid)?,
            StratBox(g, b) => self.strat(g, b, true, cid)?.into_iter().map(|x| !x).collect(),
            Relax(g, a) => {
                let game = self.w.game.as_ref().ok_or_else(|| {
                    CheckError::Unsupported("strategy modality on a model without agents".into())
                })?;
                let mut c = self.ctxs[cid].clone();
                for i in g {
                    let pos = game.agents.iter().position(|x| x == i).ok_or(CheckError::UnknownAgent(*i))?;
                    c.strat[pos] = None;
                }
                let c2 = self.intern(c);
                self.eval(a, c2)?.as_ref().clone()
            }
            ExistsProp(..) => self.prop_quant(f, cid)?,
            ForallProp(p, a) => {
                let g = Formula::exists_prop(p, Formula::not(a.clone()));
                self.eval(&g, cid)?.iter().map(|b| !b).collect()
            }
        })
    }

    /// `E a` (or `E !a` when `negate`) over `succ` (default: all moves).
    fn exists_path(
        &mut self,
        a: &Formula,
        negate: bool,
        cid: usize,
        succ: Option<&[Vec<usize>]>,
        starts: Option<&[usize]>,
    ) -> Result<Vec<bool>, CheckError> {
        let mut arena = Arena::default();
        let mut lits: Vec<Vector> = Vec::new();
        let mut lit_index: HashMap<usize, u32> = HashMap::new();
        let root = self.to_ln(a, negate, cid, &mut arena, &mut lits, &mut lit_index)?;
        let w = self.w;
        ltl::exists(&arena, root, succ.unwrap_or(&w.succ), &lits, starts)
    }

    fn to_ln(
        &mut self,
        f: &Formula,
        neg: bool,
        cid: usize,
        ar: &mut Arena,
        lits: &mut Vec<Vector>,
        li: &mut HashMap<usize, u32>,
    ) -> Result<u32, CheckError> {
        use Node::*;
        if is_state(f) {
            match f.node() {
                Top => return Ok(if neg { ar.ff() } else { ar.tt() }),
                Bot => return Ok(if neg { ar.tt() } else { ar.ff() }),
                Not(a) => return self.to_ln(a, !neg, cid, ar, lits, li),
                _ => {}
            }
            let id = match li.get(&addr(f)) {
                Some(&id) => id,
                None => {
                    let v = self.eval(f, cid)?;
                    let id = lits.len() as u32;
                    lits.push(v);
                    li.insert(addr(f), id);
                    id
                }
            };
            return Ok(ar.mk(Ln::Lit(id, !neg)));
        }
        let mut go = |s: &mut Self, g: &Formula, n: bool, ar: &mut Arena| s.to_ln(g, n, cid, ar, lits, li);
        Ok(match f.node() {
            Not(a) => go(self, a, !neg, ar)?,
            And(a, b) | Or(a, b) => {
                let x = go(self, a, neg, ar)?;
                let y = go(self, b, neg, ar)?;
                let conj = matches!(f.node(), And(..)) != neg;
                ar.mk(if conj { Ln::And(x, y) } else { Ln::Or(x, y) })
            }
            Implies(a, b) => {
                let x = go(self, a, !neg, ar)?;
                let y = go(self, b, neg, ar)?;
                ar.mk(if neg { Ln::And(x, y) } else { Ln::Or(x, y) })
            }
            Iff(a, b) => {
                let ap = go(self, a, false, ar)?;
                let an = go(self, a, true, ar)?;
                let bp = go(self, b, neg, ar)?;
                let bn = go(self, b, !neg, ar)?;
                let l = ar.mk(Ln::And(ap, bp));
                let r = ar.mk(Ln::And(an, bn));
                ar.mk(Ln::Or(l, r))
            }
            Next(a) => {
                let x = go(self, a, neg, ar)?;
                ar.mk(Ln::Next(x))
            }
            Until(a, b) => {
                let x = go(self, a, neg, ar)?;
                let y = go(self, b, neg, ar)?;
                ar.mk(if neg { Ln::Release(x, y) } else { Ln::Until(x, y) })
            }
            Eventually(a) => {
                let x = go(self, a, neg, ar)?;
                if neg {
                    let f = ar.ff();
                    ar.mk(Ln::Release(f, x))
                } else {
                    let t = ar.tt();
                    ar.mk(Ln::Until(t, x))
                }
            }
            Always(a) => {
                let x = go(self, a, neg, ar)?;
                if neg {
                    let t = ar.tt();
                    ar.mk(Ln::Until(t, x))
                } else {
                    let f = ar.ff();
                    ar.mk(Ln::Release(f, x))
                }
            }
            WeakUntil(a, b) => {
                // a W b == b R (a | b)
                let x = go(self, a, neg, ar)?;
                let y = go(self, b, neg, ar)?;
                if neg {
                    let both = ar.mk(Ln::And(x, y));
                    ar.mk(Ln::Until(y, both))
                } else {
                    let either = ar.mk(Ln::Or(x, y));
                    ar.mk(Ln::Release(y, either))
                }
            }
            PathAtom(c) => return Err(CheckError::FreePathVar(c.clone())),
            _ => unreachable!("state formulas are literals"),
        })
    }

    fn groups(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut g: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (n, &a) in self.w.ann.iter().enumerate() {
            g.entry(a).or_default().push(n);
        }
        g
    }

    fn objectives(&self, ann: usize, i: Agent) -> Result<Vec<Formula>, CheckError> {
        self.w.anns[ann].get(&i).cloned().ok_or(CheckError::NoPreference(i))
    }

    fn pref(
        &mut self,
        v: Variant,
        i: Agent,
        a: &Formula,
        b: &Formula,
        cid: usize,
    ) -> Result<Vec<bool>, CheckError> {
        let better = self.w.better.get(&i).cloned().ok_or(CheckError::NoPreference(i))?;
        let p = |k1: usize, k2: usize| better.contains(&(k1 + 1, k2 + 1));
        let mut res = vec![false; self.w.len()];
        for (g, nodes) in self.groups() {
            let objs = self.objectives(g, i)?;
            let kk = objs.len();
            let mut ne1 = Vec::with_capacity(kk);
            let mut ne2 = Vec::with_capacity(kk);
            for bk in &objs {
                let x1 = Formula::next(Formula::and(a.clone(), bk.clone()));
                ne1.push(self.exists_path(&x1, false, cid, None, Some(&nodes))?);
                let x2 = Formula::next(Formula::and(b.clone(), bk.clone()));
                ne2.push(self.exists_path(&x2, false, cid, None, Some(&nodes))?);
            }
            for &n in &nodes {
                let e1 = |k: usize| ne1[k][n];
                let e2 = |k: usize| ne2[k][n];
                let ks = 0..kk;
                res[n] = match v {
                    Variant::FF => ks.clone().all(|k1| (0..kk).all(|k2| !(e1(k1) && e2(k2)) || p(k1, k2))),
                    Variant::EA => ks.clone().any(|k1| e1(k1) && (0..kk).all(|k2| !e2(k2) || p(k1, k2))),
                    Variant::AE => ks.clone().all(|k1| !e1(k1) || (0..kk).any(|k2| e2(k2) && p(k1, k2))),
                    Variant::EE => ks.clone().any(|k1| e1(k1) && (0..kk).any(|k2| e2(k2) && p(k1, k2))),
                    Variant::GEA => ks.clone().any(|k1| e1(k1) && (0..kk).all(|k2| !e2(k2) || p(k2, k1))),
                    Variant::GAE => ks.clone().all(|k1| !e1(k1) || (0..kk).any(|k2| e2(k2) && p(k2, k1))),
                };
            }
        }
        Ok(res)
    }

    /// Path-set quantifiers: the body is evaluated on a three-layer copy of
    /// the world in which the variable denotes the chosen classes of paths
    /// that start one step after the quantification point.
    fn quant(
        &mut self,
        kind: QuantKind,
        i: Agent,
        c: &Sym,
        body: &Formula,
        cid: usize,
    ) -> Result<Vec<bool>, CheckError> {
        if !self.ctxs[cid].env.is_empty() {
            return Err(CheckError::Unsupported(
                "path-set quantifier under a propositional quantifier".into(),
            ));
        }
        let marker = sym(&format!("#d{}", self.depth));
        let lw = layered(self.w, &marker);
        let mut res = vec![matches!(kind, QuantKind::All); self.w.len()];
        let groups = self.groups();
        let strat = self.ctxs[cid].strat.clone();
        let mut sub = Engine::new(&lw);
        sub.limit = self.limit;
        sub.depth = self.depth + 1;
        let sub_cid = sub.intern(Ctx { strat, env: Vec::new() });
        for (g, nodes) in groups {
            let objs = self.objectives(g, i)?;
            let kk = objs.len();
            let subsets: Vec<Vec<usize>> = match kind {
                QuantKind::One => (0..kk).map(|k| vec![k]).collect(),
                _ => (0..1usize << kk).map(|m| (0..kk).filter(|k| m >> k & 1 == 1).collect()).collect(),
            };
            for s in subsets {
                let repl = simp::and(
                    Formula::atom(&marker),
                    simp::or_all(s.iter().map(|&k| objs[k].clone())),
                );
                let inst = subst_path(body, c, &repl);
                let v = sub.eval(&inst, sub_cid)?;
                let nonempty = match kind {
                    QuantKind::One => {
                        Some(self.exists_path(&Formula::next(objs[s[0]].clone()), false, cid, None, Some(&nodes))?)
                    }
                    _ => None,
                };
                for &n in &nodes {
                    let val = v[3 * n];
                    match kind {
                        QuantKind::Some => res[n] |= val,
                        QuantKind::All => res[n] &= val,
                        QuantKind::One => res[n] |= val && nonempty.as_ref().unwrap()[n],
                    }
                }
            }
        }
        Ok(res)
    }

    /// `<<g>> b` (or `<<g>> !b` when `negate`) by enumerating window strategies.
    fn strat(&mut self, g: &Coalition, b: &Formula, negate: bool, cid: usize) -> Result<Vec<bool>, CheckError> {
        let w = self.w;
        let game = w.game.as_ref().ok_or_else(|| {
            CheckError::Unsupported("strategy modality on a model without agents".into())
        })?;
        let mut positions = Vec::new();
        for i in g {
            positions.push(game.agents.iter().position(|x| x == i).ok_or(CheckError::UnknownAgent(*i))?);
        }
        let cells: Vec<(usize, usize, usize)> = positions
            .iter()
            .flat_map(|&p| {
                (0..game.nwindows()).filter_map(move |win| {
                    let k = game.choices[win][p];
                    (k > 1).then_some((p, win, k))
                })
            })
            .collect();
        let total = cells.iter().fold(1u128, |acc, c| acc.saturating_mul(c.2 as u128));
        if total > self.limit {
            return Err(CheckError::TooManyStrategies(total));
        }
        let n = w.len();
        let mut res = vec![false; n];
        let mut digits = vec![0usize; cells.len()];
        loop {
            let mut c = self.ctxs[cid].clone();
            let mut tables: BTreeMap<usize, Vec<usize>> =
                positions.iter().map(|&p| (p, vec![0; game.nwindows()])).collect();
            for (d, &(p, win, _)) in digits.iter().zip(&cells) {
                tables.get_mut(&p).unwrap()[win] = *d;
            }
            for (p, t) in tables {
                c.strat[p] = Some(Rc::new(t));
            }
            let succ: Vec<Vec<usize>> = (0..n)
                .map(|v| {
                    let win = game.window[v];
                    let mut out: Vec<usize> = game.out[v]
                        .iter()
                        .enumerate()
                        .filter(|(mv, _)| {
                            c.strat.iter().enumerate().all(|(p, s)| match s {
                                Some(t) => game.decode[*mv][p] == t[win],
                                None => true,
                            })
                        })
                        .map(|(_, &u)| u)
                        .collect();
                    out.sort_unstable();
                    out.dedup();
                    out
                })
                .collect();
            let c2 = self.intern(c);
            let bad = self.exists_path(b, !negate, c2, Some(&succ), None)?;
            for v in 0..n {
                res[v] |= !bad[v];
            }
            if res.iter().all(|&x| x) || !advance(&mut digits, cells.iter().map(|c| c.2)) {
                break;
            }
        }
        Ok(res)
    }

    /// Propositional quantification on the windowed unfolding. Blocks that
    /// encode strategies are enumerated over window strategies; anything
    /// else is brute-forced when tiny.
    fn prop_quant(&mut self, f: &Formula, cid: usize) -> Result<Vec<bool>, CheckError> {
        let (u, m) = self.tr.ok_or_else(|| {
            CheckError::Unsupported("propositional quantifier outside the translated engine".into())
        })?;
        let mut vars = Vec::new();
        let mut body = f;
        while let Node::ExistsProp(p, a) = body.node() {
            vars.push(p.clone());
            body = a;
        }
        let n = self.w.len();
        let mut res = vec![false; n];
        if let Some(units) = recognize_block(m, &vars, body) {
            let nwin = u.choices.len();
            // cell = (unit, window, per-member allowed action counts)
            let mut cells: Vec<(usize, usize, Vec<usize>)> = Vec::new();
            for (ui, unit) in units.iter().enumerate() {
                for win in 0..nwin {
                    let allowed: Vec<usize> = unit.members.iter().map(|&p| u.choices[win][p]).collect();
                    if allowed.iter().product::<usize>() > 1 {
                        cells.push((ui, win, allowed));
                    }
                }
            }
            let radix: Vec<usize> = cells.iter().map(|c| c.2.iter().product()).collect();
            let total = radix.iter().fold(1u128, |acc, &r| acc.saturating_mul(r as u128));
            if total > self.limit {
                return Err(CheckError::TooManyStrategies(total));
            }
            let mut digits = vec![0usize; cells.len()];
            loop {
                // joint[unit][win] = action of every member
                let mut joint: Vec<Vec<Vec<usize>>> =
                    units.iter().map(|un| vec![vec![0; un.members.len()]; nwin]).collect();
                for (d, (ui, win, allowed)) in digits.iter().zip(&cells) {
                    let mut d = *d;
                    for (slot, &k) in allowed.iter().enumerate() {
                        joint[*ui][*win][slot] = d % k;
                        d /= k;
                    }
                }
                let mut c = self.ctxs[cid].clone();
                for (ui, unit) in units.iter().enumerate() {
                    match unit.mode {
                        UnitMode::Q => {
                            let v: Vec<bool> = (0..n)
                                .map(|node| match (u.parent_win[node], u.last_move[node]) {
                                    (Some(pw), Some(mv)) => unit
                                        .members
                                        .iter()
                                        .enumerate()
                                        .all(|(s, &p)| u.decode[mv][p] == joint[ui][pw][s]),
                                    _ => false,
                                })
                                .collect();
                            c.env.push((unit.vars[0].clone(), Rc::new(v)));
                        }
                        UnitMode::Log => {
                            for (bit, var) in unit.vars.iter().enumerate() {
                                let v: Vec<bool> = (0..n)
                                    .map(|node| {
                                        let acts = &joint[ui][u.own_win[node]];
                                        let idx = unit.joint_index(acts, &u.nacts);
                                        idx >> bit & 1 == 1
                                    })
                                    .collect();
                                c.env.push((var.clone(), Rc::new(v)));
                            }
                        }
                    }
                }
                let c2 = self.intern(c);
                let v = self.eval(body, c2)?;
                for x in 0..n {
                    res[x] |= v[x];
                }
                if res.iter().all(|&x| x) || !advance(&mut digits, radix.iter().copied()) {
                    break;
                }
            }
            return Ok(res);
        }
        if vars.len() * n > BRUTE_FORCE_CELLS {
            return Err(CheckError::Unsupported(format!(
                "propositional quantifier over {} variables that does not encode a strategy",
                vars.len()
            )));
        }
        let bits = vars.len() * n;
        for mask in 0..1u64 << bits {
            let mut c = self.ctxs[cid].clone();
            for (j, var) in vars.iter().enumerate() {
                let v: Vec<bool> = (0..n).map(|x| mask >> (j * n + x) & 1 == 1).collect();
                c.env.push((var.clone(), Rc::new(v)));
            }
            let c2 = self.intern(c);
            let v = self.eval(body, c2)?;
            for x in 0..n {
                res[x] |= v[x];
            }
        }
        Ok(res)
    }
}

/// Mixed-radix increment; false on wrap-around.
fn advance(digits: &mut [usize], radix: impl Iterator<Item = usize>) -> bool {
    for (d, r) in digits.iter_mut().zip(radix) {
        *d += 1;
        if *d < r {
            return true;
        }
        *d = 0;
    }
    false
}
