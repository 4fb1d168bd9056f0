//! Seeded random instances for the differential suites.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{sym, Agent, Formula, Sym, Variant};
use crate::models::{Kripke, PreferenceDescription};

pub const VARIANTS: [Variant; 6] = [Variant::FF, Variant::EA, Variant::AE, Variant::EE, Variant::GEA, Variant::GAE];

/// What a generated state or path formula may mention.
#[derive(Debug, Clone, Default)]
pub struct Vocab {
    pub atoms: Vec<Sym>,
    /// Agents whose preference operators may occur.
    pub pref_agents: Vec<Agent>,
    /// Path variables in scope.
    pub path_vars: Vec<Sym>,
    /// Objectives that preference operands may be built from, so that the
    /// order between classes decides the comparison.
    pub classes: Vec<Formula>,
}

pub struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn atom(&mut self, atoms: &[Sym]) -> Formula {
        Formula::atom(atoms.choose(&mut self.rng).expect("nonempty alphabet"))
    }

    /// LTL formula of depth at most `depth`.
    pub fn ltl(&mut self, atoms: &[Sym], depth: usize) -> Formula {
        if depth == 0 || self.rng.gen_bool(0.2) {
            return match self.rng.gen_range(0..12) {
                0 => Formula::top(),
                1 => Formula::bot(),
                _ => self.atom(atoms),
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..9) {
            0 => Formula::not(self.ltl(atoms, d)),
            1 => Formula::and(self.ltl(atoms, d), self.ltl(atoms, d)),
            2 => Formula::or(self.ltl(atoms, d), self.ltl(atoms, d)),
            3 => Formula::implies(self.ltl(atoms, d), self.ltl(atoms, d)),
            4 => Formula::next(self.ltl(atoms, d)),
            5 => Formula::eventually(self.ltl(atoms, d)),
            6 => Formula::always(self.ltl(atoms, d)),
            7 => Formula::until(self.ltl(atoms, d), self.ltl(atoms, d)),
            _ => Formula::weak_until(self.ltl(atoms, d), self.ltl(atoms, d)),
        }
    }

    /// Serial Kripke model with `n` states and one or two successors each.
    pub fn kripke(&mut self, n: usize, atoms: &[Sym]) -> Kripke {
        let succ = (0..n)
            .map(|_| {
                let mut s: Vec<usize> = (0..self.rng.gen_range(1..=2)).map(|_| self.rng.gen_range(0..n)).collect();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        let labels = (0..n)
            .map(|_| atoms.iter().filter(|_| self.rng.gen_bool(0.5)).cloned().collect())
            .collect();
        Kripke { names: (0..n).map(|i| format!("s{i}")).collect(), initial: 0, succ, labels, prefs: BTreeMap::new() }
    }

    /// A full system of `k` objectives (at most 3) built from random LTL
    /// formulas, ordered by a random nonempty antisymmetric relation.
    pub fn description(&mut self, atoms: &[Sym], k: usize, depth: usize) -> PreferenceDescription {
        let phi = self.ltl(atoms, depth);
        let psi = self.ltl(atoms, depth);
        let nphi = Formula::not(phi.clone());
        let objectives = match k {
            0 | 1 => vec![Formula::top()],
            2 => vec![phi, nphi],
            _ => vec![phi, Formula::and(nphi.clone(), psi.clone()), Formula::and(nphi, Formula::not(psi))],
        };
        let k = objectives.len();
        let mut order: Vec<usize> = (1..=k).collect();
        order.shuffle(&mut self.rng);
        let mut better = BTreeSet::new();
        for i in 0..k {
            for j in i + 1..k {
                if self.rng.gen_bool(0.6) {
                    better.insert((order[i], order[j]));
                }
            }
        }
        if better.is_empty() && k > 1 {
            better.insert((order[0], order[1]));
        }
        PreferenceDescription { objectives, better }
    }

    pub fn variant(&mut self) -> Variant {
        *VARIANTS.choose(&mut self.rng).unwrap()
    }

    /// State formula of depth at most `depth`.
    pub fn state(&mut self, v: &Vocab, depth: usize) -> Formula {
        if depth == 0 || self.rng.gen_bool(0.15) {
            return if self.rng.gen_bool(0.1) { Formula::top() } else { self.atom(&v.atoms) };
        }
        let d = depth - 1;
        let prefs = !v.pref_agents.is_empty();
        match self.rng.gen_range(0..if prefs { 9 } else { 7 }) {
            0 => Formula::not(self.state(v, d)),
            1 => Formula::and(self.state(v, d), self.state(v, d)),
            2 => Formula::or(self.state(v, d), self.state(v, d)),
            3 => Formula::implies(self.state(v, d), self.state(v, d)),
            4 | 5 => Formula::exists(self.path(v, d)),
            6 => Formula::forall(self.path(v, d)),
            _ => {
                let i = *v.pref_agents.choose(&mut self.rng).unwrap();
                let var = self.variant();
                Formula::pref(var, i, self.operand(v, d), self.operand(v, d))
            }
        }
    }

    /// Preference operand: a union of classes (possibly narrowed by a
    /// random path formula) or an arbitrary path formula.
    pub fn operand(&mut self, v: &Vocab, depth: usize) -> Formula {
        if v.classes.is_empty() || self.rng.gen_bool(0.4) {
            return self.path(v, depth);
        }
        let mut union: Vec<Formula> = v.classes.iter().filter(|_| self.rng.gen_bool(0.4)).cloned().collect();
        if union.is_empty() {
            union.push(v.classes.choose(&mut self.rng).unwrap().clone());
        }
        let u = Formula::or_all(union);
        if self.rng.gen_bool(0.3) {
            Formula::and(u, self.path(v, depth))
        } else {
            u
        }
    }

    /// Path formula of depth at most `depth`.
    pub fn path(&mut self, v: &Vocab, depth: usize) -> Formula {
        if depth == 0 || self.rng.gen_bool(0.15) {
            if !v.path_vars.is_empty() && self.rng.gen_bool(0.5) {
                return Formula::path_atom(v.path_vars.choose(&mut self.rng).unwrap());
            }
            return self.atom(&v.atoms);
        }
        let d = depth - 1;
        match self.rng.gen_range(0..10) {
            0 => Formula::not(self.path(v, d)),
            1 => Formula::and(self.path(v, d), self.path(v, d)),
            2 => Formula::or(self.path(v, d), self.path(v, d)),
            3 | 4 => Formula::next(self.path(v, d)),
            5 => Formula::eventually(self.path(v, d)),
            6 => Formula::always(self.path(v, d)),
            7 => Formula::until(self.path(v, d), self.path(v, d)),
            _ => self.state(v, d),
        }
    }

    /// A path-set quantifier for agent `i` over a fresh variable, whose body
    /// mentions the variable, optionally below a temporal prefix.
    pub fn quantified(&mut self, v: &Vocab, i: Agent, depth: usize) -> Formula {
        let c = sym(&format!("c{}", v.path_vars.len()));
        let mut inner = v.clone();
        inner.path_vars.push(c.clone());
        let body = loop {
            let b = self.state(&inner, depth);
            if b.free_path_vars().contains(&c) {
                break b;
            }
        };
        let q = match self.rng.gen_range(0..3) {
            0 => Formula::sim_quant(i, &c, body),
            1 => Formula::sim_forall(i, &c, body),
            _ => Formula::one_quant(i, &c, body),
        };
        match self.rng.gen_range(0..5) {
            0 => Formula::exists(Formula::next(q)),
            1 => Formula::forall(Formula::always(q)),
            2 => Formula::and(self.state(v, 1), q),
            _ => q,
        }
    }
}

pub fn alphabet(n: usize) -> Vec<Sym> {
    ["p", "q", "r", "s"].iter().take(n).map(|p| sym(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnf::{full_system_check, FullSystem};

    #[test]
    fn same_seed_same_instances() {
        let atoms = alphabet(2);
        let (mut g, mut h) = (Gen::new(7), Gen::new(7));
        let a: Vec<Formula> = (0..5).map(|_| g.ltl(&atoms, 3)).collect();
        let b: Vec<Formula> = (0..5).map(|_| h.ltl(&atoms, 3)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn descriptions_are_full_systems() {
        let atoms = alphabet(2);
        let mut g = Gen::new(3);
        for k in 1..=3 {
            let d = g.description(&atoms, k, 2);
            assert_eq!(d.objectives.len(), k);
            assert!(d.better.iter().all(|&(a, b)| a != b && !d.better.contains(&(b, a))));
            let set: BTreeSet<Sym> = atoms.iter().cloned().collect();
            assert!(matches!(
                full_system_check(&d.objectives, &set, 4),
                FullSystem::Exact(true) | FullSystem::Sampled(true)
            ));
        }
    }

    #[test]
    fn quantified_bodies_use_their_variable() {
        let v = Vocab { atoms: alphabet(2), pref_agents: vec![1], ..Default::default() };
        let mut g = Gen::new(11);
        for _ in 0..20 {
            let f = g.quantified(&v, 1, 3);
            assert!(f.has_path_quant());
            assert!(f.free_path_vars().is_empty());
        }
    }
}
