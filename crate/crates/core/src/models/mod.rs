//! Finite Kripke structures, concurrent game models and the constructions
//! built on top of them.

mod load;
mod pref;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::{Agent, Formula, Sym};
use crate::gnf;

pub use load::{load_model, write_cgm, write_kripke, LoadError, Model};
pub use pref::{build_mb, lint_order, pref_update_path, MbModel, PrefTables, SlotTable};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("state `{0}` has no successor")]
    NotSerial(String),
    #[error("state index {0} out of range")]
    BadState(usize),
    #[error("path is not a history of the model: {0}")]
    BadPath(String),
    #[error("agent {0} has no preference description")]
    NoPreference(Agent),
    #[error("objective `{0}` is not an LTL formula")]
    BadObjective(String),
    #[error(transparent)]
    Gnf(#[from] gnf::GnfError),
}

/// Objectives `B_1..B_K` plus the pairs `(k1, k2)` with `B_k1 < B_k2`.
/// Pair indices are 1-based, as in model files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceDescription {
    pub objectives: Vec<Formula>,
    pub better: BTreeSet<(usize, usize)>,
}

impl PreferenceDescription {
    pub fn new(objectives: Vec<Formula>, better: impl IntoIterator<Item = (usize, usize)>) -> Self {
        PreferenceDescription { objectives, better: better.into_iter().collect() }
    }

    pub fn prefers(&self, k1: usize, k2: usize) -> bool {
        self.better.contains(&(k1, k2))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kripke {
    pub names: Vec<String>,
    pub initial: usize,
    pub succ: Vec<Vec<usize>>,
    pub labels: Vec<BTreeSet<Sym>>,
    pub prefs: BTreeMap<Agent, PreferenceDescription>,
}

impl Kripke {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn check_serial(&self) -> Result<(), ModelError> {
        match self.succ.iter().position(|s| s.is_empty()) {
            Some(w) => Err(ModelError::NotSerial(self.names[w].clone())),
            None => Ok(()),
        }
    }

    pub fn holds(&self, w: usize, p: &str) -> bool {
        self.labels[w].contains(p)
    }

    pub fn vocabulary(&self) -> BTreeSet<Sym> {
        self.labels.iter().flatten().cloned().collect()
    }

    pub fn state(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![self.initial];
        seen[self.initial] = true;
        while let Some(w) = stack.pop() {
            for &v in &self.succ[w] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

/// Concurrent game model. Moves are indexed in mixed radix over `actions`,
/// the first agent being the least significant digit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cgm {
    pub names: Vec<String>,
    pub initial: usize,
    pub agents: Vec<Agent>,
    pub actions: Vec<Vec<Sym>>,
    pub outcome: Vec<Vec<usize>>,
    pub labels: Vec<BTreeSet<Sym>>,
    pub prefs: BTreeMap<Agent, PreferenceDescription>,
}

impl Cgm {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn move_count(&self) -> usize {
        self.actions.iter().map(Vec::len).product()
    }

    pub fn agent_pos(&self, a: Agent) -> Option<usize> {
        self.agents.iter().position(|x| *x == a)
    }

    pub fn decode_move(&self, mut m: usize) -> Vec<usize> {
        self.actions
            .iter()
            .map(|acts| {
                let d = m % acts.len();
                m /= acts.len();
                d
            })
            .collect()
    }

    pub fn encode_move(&self, choice: &[usize]) -> usize {
        let mut m = 0;
        for (acts, c) in self.actions.iter().zip(choice).rev() {
            m = m * acts.len() + c;
        }
        m
    }

    pub fn action_name(&self, agent_pos: usize, a: usize) -> &Sym {
        &self.actions[agent_pos][a]
    }

    pub fn vocabulary(&self) -> BTreeSet<Sym> {
        self.labels.iter().flatten().cloned().collect()
    }

    pub fn action_atoms(&self) -> BTreeSet<Sym> {
        self.actions.iter().flatten().cloned().collect()
    }

    pub fn state(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Projection `R(w) = { o(w, a) : a }`.
pub fn to_kripke(m: &Cgm) -> Kripke {
    let succ = m
        .outcome
        .iter()
        .map(|row| row.iter().copied().collect::<BTreeSet<_>>().into_iter().collect())
        .collect();
    Kripke {
        names: m.names.clone(),
        initial: m.initial,
        succ,
        labels: m.labels.clone(),
        prefs: m.prefs.clone(),
    }
}

/// Index of `(w, b)` in the move-storing unfolding; state 0 is `(w_I, *)`.
pub fn unfold_index(m: &Cgm, w: usize, mv: usize) -> usize {
    1 + w * m.move_count() + mv
}

/// Inverse of [`unfold_index`]: `None` for the initial `(w_I, *)`.
pub fn unfold_origin(m: &Cgm, idx: usize) -> (usize, Option<usize>) {
    if idx == 0 {
        (m.initial, None)
    } else {
        let nm = m.move_count();
        ((idx - 1) / nm, Some((idx - 1) % nm))
    }
}

/// Move-storing unfolding: every state remembers the move that led into it,
/// exposed as action atoms.
pub fn unfold1(m: &Cgm) -> Cgm {
    let nm = m.move_count();
    let total = 1 + m.len() * nm;
    let mut names = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut outcome = Vec::with_capacity(total);
    let row = |w: usize| (0..nm).map(|a| unfold_index(m, m.outcome[w][a], a)).collect::<Vec<_>>();
    names.push(format!("({},*)", m.names[m.initial]));
    labels.push(m.labels[m.initial].clone());
    outcome.push(row(m.initial));
    for w in 0..m.len() {
        for mv in 0..nm {
            let choice = m.decode_move(mv);
            let acts: Vec<&str> =
                choice.iter().enumerate().map(|(i, a)| &*m.actions[i][*a]).collect();
            names.push(format!("({},{})", m.names[w], acts.join(".")));
            let mut l = m.labels[w].clone();
            l.extend(choice.iter().enumerate().map(|(i, a)| m.actions[i][*a].clone()));
            labels.push(l);
            outcome.push(row(w));
        }
    }
    Cgm {
        names,
        initial: 0,
        agents: m.agents.clone(),
        actions: m.actions.clone(),
        outcome,
        labels,
        prefs: m.prefs.clone(),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::formula::sym;

    pub(crate) fn pennies() -> Cgm {
        Cgm {
            names: vec!["w0".into(), "w1".into()],
            initial: 0,
            agents: vec![1, 2],
            actions: vec![vec![sym("h1"), sym("t1")], vec![sym("h2"), sym("t2")]],
            // win (w1) when the coins match
            outcome: vec![vec![1, 0, 0, 1], vec![1, 0, 0, 1]],
            labels: vec![BTreeSet::new(), [sym("win")].into()],
            prefs: BTreeMap::new(),
        }
    }

    #[test]
    fn projection_enumerates_moves() {
        let k = to_kripke(&pennies());
        assert_eq!(k.succ, vec![vec![0, 1], vec![0, 1]]);
        k.check_serial().unwrap();
        let mut one = pennies();
        one.names.truncate(1);
        one.labels.truncate(1);
        one.outcome = vec![vec![0; 4]];
        assert_eq!(to_kripke(&one).succ, vec![vec![0]]);
    }

    #[test]
    fn moves_roundtrip() {
        let m = pennies();
        for mv in 0..m.move_count() {
            assert_eq!(m.encode_move(&m.decode_move(mv)), mv);
        }
        assert_eq!(m.decode_move(1), vec![1, 0]);
    }

    #[test]
    fn unfolding_shape() {
        let m = pennies();
        let u = unfold1(&m);
        assert_eq!(u.len(), 1 + 2 * 4);
        assert!(u.labels[0].is_disjoint(&m.action_atoms()));
        for idx in 1..u.len() {
            let (w, mv) = unfold_origin(&m, idx);
            let mv = mv.unwrap();
            let acts: BTreeSet<Sym> = u.labels[idx].intersection(&m.action_atoms()).cloned().collect();
            assert_eq!(acts.len(), 2);
            for (i, a) in m.decode_move(mv).into_iter().enumerate() {
                assert!(acts.contains(&m.actions[i][a]));
            }
            let props: BTreeSet<Sym> = u.labels[idx].difference(&m.action_atoms()).cloned().collect();
            assert_eq!(props, m.labels[w]);
            assert_eq!(unfold_index(&m, w, mv), idx);
        }
    }
}
