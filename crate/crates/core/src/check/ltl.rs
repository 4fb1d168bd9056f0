//! Existential path checking over an explicit graph. State subformulas are
//! evaluated by the caller and enter as literals; the temporal skeleton is
//! expanded into a tableau and searched for a fair lasso in the product.

use std::collections::HashMap;
use std::rc::Rc;

use super::CheckError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Ln {
    True,
    False,
    Lit(u32, bool),
    And(u32, u32),
    Or(u32, u32),
    Next(u32),
    Until(u32, u32),
    Release(u32, u32),
}

/// Hash-consed negation normal form.
#[derive(Default)]
pub(crate) struct Arena {
    nodes: Vec<Ln>,
    index: HashMap<Ln, u32>,
    untils: Vec<u32>,
}

impl Arena {
    pub fn tt(&mut self) -> u32 {
        self.mk(Ln::True)
    }

    pub fn ff(&mut self) -> u32 {
        self.mk(Ln::False)
    }

    pub fn mk(&mut self, n: Ln) -> u32 {
        let n = match n {
            Ln::And(a, b) => {
                let (a, b) = (a.min(b), a.max(b));
                match (self.get(a), self.get(b)) {
                    (Ln::False, _) | (_, Ln::False) => Ln::False,
                    (Ln::True, _) => return b,
                    (_, Ln::True) => return a,
                    _ if a == b => return a,
                    _ => Ln::And(a, b),
                }
            }
            Ln::Or(a, b) => {
                let (a, b) = (a.min(b), a.max(b));
                match (self.get(a), self.get(b)) {
                    (Ln::True, _) | (_, Ln::True) => Ln::True,
                    (Ln::False, _) => return b,
                    (_, Ln::False) => return a,
                    _ if a == b => return a,
                    _ => Ln::Or(a, b),
                }
            }
            Ln::Next(a) if matches!(self.get(a), Ln::True | Ln::False) => return a,
            Ln::Until(_, b) if matches!(self.get(b), Ln::True | Ln::False) => return b,
            Ln::Release(_, b) if matches!(self.get(b), Ln::True | Ln::False) => return b,
            n => n,
        };
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(n);
        self.index.insert(n, id);
        if matches!(n, Ln::Until(..)) {
            self.untils.push(id);
        }
        id
    }

    pub fn get(&self, id: u32) -> Ln {
        self.nodes.get(id as usize).copied().unwrap_or(Ln::True)
    }

    fn until_bit(&self, id: u32) -> u64 {
        let pos = self.untils.iter().position(|&u| u == id).expect("registered until");
        1u64 << pos
    }
}

#[derive(Clone, Default, Debug)]
struct Cover {
    pos: Vec<u32>,
    neg: Vec<u32>,
    next: Vec<u32>,
    pending: u64,
}

fn insert_sorted(v: &mut Vec<u32>, x: u32) {
    if let Err(i) = v.binary_search(&x) {
        v.insert(i, x);
    }
}

impl Arena {
    fn covers(&self, obligations: &[u32]) -> Vec<Cover> {
        let mut out = Vec::new();
        self.expand(obligations.to_vec(), Vec::new(), Cover::default(), &mut out);
        out
    }

    fn expand(&self, mut todo: Vec<u32>, mut done: Vec<u32>, mut c: Cover, out: &mut Vec<Cover>) {
        while let Some(f) = todo.pop() {
            if done.contains(&f) {
                continue;
            }
            done.push(f);
            match self.get(f) {
                Ln::True => {}
                Ln::False => return,
                Ln::Lit(l, true) => {
                    if c.neg.contains(&l) {
                        return;
                    }
                    insert_sorted(&mut c.pos, l);
                }
                Ln::Lit(l, false) => {
                    if c.pos.contains(&l) {
                        return;
                    }
                    insert_sorted(&mut c.neg, l);
                }
                Ln::And(a, b) => {
                    todo.push(a);
                    todo.push(b);
                }
                Ln::Or(a, b) => {
                    let mut t = todo.clone();
                    t.push(b);
                    self.expand(t, done.clone(), c.clone(), out);
                    todo.push(a);
                }
                Ln::Next(a) => insert_sorted(&mut c.next, a),
                Ln::Until(a, b) => {
                    let mut t = todo.clone();
                    t.push(b);
                    self.expand(t, done.clone(), c.clone(), out);
                    todo.push(a);
                    insert_sorted(&mut c.next, f);
                    c.pending |= self.until_bit(f);
                }
                Ln::Release(a, b) => {
                    let mut t = todo.clone();
                    t.push(a);
                    t.push(b);
                    self.expand(t, done.clone(), c.clone(), out);
                    todo.push(b);
                    insert_sorted(&mut c.next, f);
                }
            }
        }
        out.push(c);
    }
}

/// States of `succ` from which some path satisfies `root`. `lits[l][n]` is
/// the value of literal `l` at node `n`. With `starts`, only those entries
/// of the result are meaningful.
pub(crate) fn exists(
    arena: &Arena,
    root: u32,
    succ: &[Vec<usize>],
    lits: &[Rc<Vec<bool>>],
    starts: Option<&[usize]>,
) -> Result<Vec<bool>, CheckError> {
    let n = succ.len();
    match arena.get(root) {
        Ln::True => return Ok(vec![true; n]),
        Ln::False => return Ok(vec![false; n]),
        Ln::Lit(l, pol) => return Ok(lits[l as usize].iter().map(|&b| b == pol).collect()),
        Ln::Next(a) => {
            if let Ln::Lit(l, pol) = arena.get(a) {
                let v = &lits[l as usize];
                return Ok(succ.iter().map(|s| s.iter().any(|&m| v[m] == pol)).collect());
            }
        }
        _ => {}
    }
    if arena.untils.len() > 64 {
        return Err(CheckError::TooManyUntils(arena.untils.len()));
    }
    let full: u64 = if arena.untils.len() == 64 { u64::MAX } else { (1u64 << arena.untils.len()) - 1 };

    let mut obl_index: HashMap<Vec<u32>, u32> = HashMap::new();
    let mut obl_covers: Vec<Rc<Vec<Cover>>> = Vec::new();
    let mut intern = |o: Vec<u32>, oc: &mut Vec<Rc<Vec<Cover>>>| -> u32 {
        if let Some(&i) = obl_index.get(&o) {
            return i;
        }
        let i = oc.len() as u32;
        oc.push(Rc::new(arena.covers(&o)));
        obl_index.insert(o, i);
        i
    };

    let mut state_index: HashMap<(usize, u32), usize> = HashMap::new();
    let mut states: Vec<(usize, u32)> = Vec::new();
    let mut edges: Vec<Vec<(usize, u64)>> = Vec::new();
    let root_obl = intern(vec![root], &mut obl_covers);
    let all: Vec<usize>;
    let starts = match starts {
        Some(s) => s,
        None => {
            all = (0..n).collect();
            &all
        }
    };
    for &v in starts {
        if state_index.contains_key(&(v, root_obl)) {
            continue;
        }
        state_index.insert((v, root_obl), states.len());
        states.push((v, root_obl));
        edges.push(Vec::new());
    }
    let mut i = 0;
    while i < states.len() {
        let (v, o) = states[i];
        let covers = obl_covers[o as usize].clone();
        let mut out = Vec::new();
        for c in covers.iter() {
            if c.pos.iter().any(|&l| !lits[l as usize][v]) || c.neg.iter().any(|&l| lits[l as usize][v]) {
                continue;
            }
            let o2 = intern(c.next.clone(), &mut obl_covers);
            let mask = !c.pending & full;
            for &m in &succ[v] {
                let j = *state_index.entry((m, o2)).or_insert_with(|| {
                    states.push((m, o2));
                    edges.push(Vec::new());
                    states.len() - 1
                });
                out.push((j, mask));
            }
        }
        edges[i] = out;
        i += 1;
    }

    let scc = tarjan(&edges);
    let ncomp = scc.iter().copied().max().map_or(0, |x| x + 1);
    let mut acc = vec![0u64; ncomp];
    let mut nontrivial = vec![false; ncomp];
    for (s, es) in edges.iter().enumerate() {
        for &(t, mask) in es {
            if scc[s] == scc[t] {
                nontrivial[scc[s]] = true;
                acc[scc[s]] |= mask;
            }
        }
    }
    let mut good = vec![false; states.len()];
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); states.len()];
    for (s, es) in edges.iter().enumerate() {
        for &(t, _) in es {
            rev[t].push(s);
        }
    }
    let mut stack = Vec::new();
    for s in 0..states.len() {
        let c = scc[s];
        if nontrivial[c] && acc[c] & full == full {
            good[s] = true;
            stack.push(s);
        }
    }
    while let Some(t) = stack.pop() {
        for &s in &rev[t] {
            if !good[s] {
                good[s] = true;
                stack.push(s);
            }
        }
    }
    let mut res = vec![false; n];
    for &v in starts {
        res[v] = good[state_index[&(v, root_obl)]];
    }
    Ok(res)
}

/// Iterative Tarjan; returns the component id of every vertex.
fn tarjan(edges: &[Vec<(usize, u64)>]) -> Vec<usize> {
    let n = edges.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut ncomp = 0;
    let mut call: Vec<(usize, usize)> = Vec::new();
    for start in 0..n {
        if index[start] != UNSEEN {
            continue;
        }
        call.push((start, 0));
        while let Some(&mut (v, ref mut ei)) = call.last_mut() {
            if *ei == 0 && index[v] == UNSEEN {
                index[v] = counter;
                low[v] = counter;
                counter += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *ei < edges[v].len() {
                let w = edges[v][*ei].0;
                *ei += 1;
                if index[w] == UNSEEN {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(p, _)) = call.last() {
                low[p] = low[p].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp[w] = ncomp;
                    if w == v {
                        break;
                    }
                }
                ncomp += 1;
            }
        }
    }
    comp
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(v: &[bool]) -> Rc<Vec<bool>> {
        Rc::new(v.to_vec())
    }

    #[test]
    fn eventually_and_globally_on_a_cycle() {
        // 0 -> 1 -> 2 -> 0, p only at 2
        let succ = vec![vec![1], vec![2], vec![0]];
        let lits = vec![lit(&[false, false, true])];
        let mut a = Arena::default();
        let p = a.mk(Ln::Lit(0, true));
        let np = a.mk(Ln::Lit(0, false));
        let t = a.tt();
        let f = a.ff();
        let fp = a.mk(Ln::Until(t, p));
        assert_eq!(exists(&a, fp, &succ, &lits, None).unwrap(), vec![true; 3]);
        let gnp = a.mk(Ln::Release(f, np));
        assert_eq!(exists(&a, gnp, &succ, &lits, None).unwrap(), vec![false; 3]);
    }

    #[test]
    fn fairness_rejects_postponed_untils() {
        // 0 loops on itself and may move to the p-sink 1
        let succ = vec![vec![0, 1], vec![1]];
        let lits = vec![lit(&[false, true])];
        let mut a = Arena::default();
        let p = a.mk(Ln::Lit(0, true));
        let np = a.mk(Ln::Lit(0, false));
        let t = a.tt();
        let f = a.ff();
        // G F p holds only by leaving 0
        let fp = a.mk(Ln::Until(t, p));
        let gfp = a.mk(Ln::Release(f, fp));
        assert_eq!(exists(&a, gfp, &succ, &lits, None).unwrap(), vec![true, true]);
        // G !p needs to stay in 0 forever
        let gnp = a.mk(Ln::Release(f, np));
        assert_eq!(exists(&a, gnp, &succ, &lits, None).unwrap(), vec![true, false]);
        // G !p & F p is unsatisfiable
        let both = a.mk(Ln::And(gnp, fp));
        assert_eq!(exists(&a, both, &succ, &lits, None).unwrap(), vec![false, false]);
    }

    #[test]
    fn tarjan_components() {
        let e = |v: &[usize]| v.iter().map(|&x| (x, 0)).collect::<Vec<_>>();
        let edges = vec![e(&[1]), e(&[0, 2]), e(&[2]), e(&[])];
        let c = tarjan(&edges);
        assert_eq!(c[0], c[1]);
        assert_ne!(c[1], c[2]);
        assert_ne!(c[2], c[3]);
    }
}
