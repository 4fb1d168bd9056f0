use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::{Kripke, ModelError, PreferenceDescription};
use crate::formula::{Agent, Formula, FreshVarSupply, Sym};
use crate::gnf;

/// Closure and tail-transition table of one objective slot `k` of one agent.
#[derive(Debug, Clone)]
pub struct SlotTable {
    pub agent: Agent,
    /// 1-based slot index.
    pub slot: usize,
    /// `closure[0]` is the objective itself.
    pub closure: Vec<Formula>,
    pub atoms: Vec<Sym>,
    /// `next[j][v]`: closure index of the tail of member `j` under valuation
    /// index `v` over `atoms` (bit `i` set iff `atoms[i]` holds).
    pub next: Vec<Vec<usize>>,
    /// One label proposition per closure member.
    pub q_names: Vec<Sym>,
    /// `ceil(log2 |closure|)` independent bits for the compact encoding.
    pub r_names: Vec<Sym>,
}

impl SlotTable {
    pub fn valuation_index(&self, label: &BTreeSet<Sym>) -> usize {
        self.atoms
            .iter()
            .enumerate()
            .filter(|(_, p)| label.contains(*p))
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    pub fn step(&self, j: usize, label: &BTreeSet<Sym>) -> usize {
        self.next[j][self.valuation_index(label)]
    }

    /// The elementary conjunction over `r_names` that encodes member `j`.
    pub fn code(&self, j: usize) -> Formula {
        Formula::and_all(self.r_names.iter().enumerate().map(|(s, r)| {
            let a = Formula::from(crate::formula::Node::Atom(r.clone()));
            if j >> s & 1 == 1 {
                a
            } else {
                Formula::not(a)
            }
        }))
    }
}

/// Tail tables for every agent's preference description, sharing one
/// naming of the label propositions.
#[derive(Debug, Clone)]
pub struct PrefTables {
    pub slots: Vec<SlotTable>,
    pub better: BTreeMap<Agent, BTreeSet<(usize, usize)>>,
}

fn ceil_log2(n: usize) -> usize {
    let mut b = 0;
    while (1usize << b) < n {
        b += 1;
    }
    b
}

impl PrefTables {
    /// Tables for `agents`; label names avoid `reserved`.
    pub fn new(
        prefs: &BTreeMap<Agent, PreferenceDescription>,
        agents: &BTreeSet<Agent>,
        reserved: &BTreeSet<Sym>,
    ) -> Result<Self, ModelError> {
        let mut supply = FreshVarSupply::new(reserved.iter().cloned());
        for d in prefs.values() {
            for b in &d.objectives {
                supply.reserve_formula(b);
            }
        }
        let mut slots = Vec::new();
        let mut better = BTreeMap::new();
        for &agent in agents {
            let d = prefs.get(&agent).ok_or(ModelError::NoPreference(agent))?;
            better.insert(agent, d.better.clone());
            for (k0, b) in d.objectives.iter().enumerate() {
                if !b.is_ltl() {
                    return Err(ModelError::BadObjective(b.to_string()));
                }
                let slot = k0 + 1;
                let closure = gnf::closure(b)?;
                let index: HashMap<&Formula, usize> =
                    closure.iter().enumerate().map(|(i, f)| (f, i)).collect();
                let atoms: Vec<Sym> = b.atoms().into_iter().collect();
                let vals = gnf::valuations(&atoms);
                let next = closure
                    .iter()
                    .map(|f| vals.iter().map(|v| index[&gnf::tail(f, v)]).collect())
                    .collect();
                let q_names = (0..closure.len())
                    .map(|j| supply.claim(&format!("q{agent}_{slot}_{}", j + 1)))
                    .collect();
                let r_names = (0..ceil_log2(closure.len()))
                    .map(|s| supply.claim(&format!("r{agent}_{slot}_{}", s + 1)))
                    .collect();
                slots.push(SlotTable { agent, slot, closure, atoms, next, q_names, r_names });
            }
        }
        Ok(PrefTables { slots, better })
    }

    pub fn agent_slots(&self, agent: Agent) -> impl Iterator<Item = (usize, &SlotTable)> {
        self.slots.iter().enumerate().filter(move |(_, s)| s.agent == agent)
    }

    pub fn initial_label(&self) -> Vec<usize> {
        vec![0; self.slots.len()]
    }

    pub fn step(&self, label: &[usize], val: &BTreeSet<Sym>) -> Vec<usize> {
        self.slots.iter().zip(label).map(|(s, &j)| s.step(j, val)).collect()
    }

    pub fn q_atoms(&self) -> BTreeSet<Sym> {
        self.slots.iter().flat_map(|s| s.q_names.iter().cloned()).collect()
    }
}

/// Product of a Kripke model with the objective labels, restricted to
/// reachable states. `origin[i]` is the model state and label of state `i`.
#[derive(Debug, Clone)]
pub struct MbModel {
    pub kripke: Kripke,
    pub origin: Vec<(usize, Vec<usize>)>,
}

pub fn build_mb(k: &Kripke, tables: &PrefTables) -> Result<MbModel, ModelError> {
    k.check_serial()?;
    let mut index: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
    let mut origin = Vec::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let start = (k.initial, tables.initial_label());
    index.insert(start.clone(), 0);
    origin.push(start);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let (w, label) = origin[i].clone();
        let mut out = BTreeSet::new();
        for &v in &k.succ[w] {
            let key = (v, tables.step(&label, &k.labels[v]));
            let j = match index.get(&key) {
                Some(&j) => j,
                None => {
                    let j = origin.len();
                    index.insert(key.clone(), j);
                    origin.push(key);
                    queue.push_back(j);
                    j
                }
            };
            out.insert(j);
        }
        if succ.len() <= i {
            succ.resize(i + 1, Vec::new());
        }
        succ[i] = out.into_iter().collect();
    }
    succ.resize(origin.len(), Vec::new());
    let names = origin
        .iter()
        .map(|(w, l)| {
            let l: Vec<String> = l.iter().map(|j| (j + 1).to_string()).collect();
            format!("{}|{}", k.names[*w], l.join("."))
        })
        .collect();
    let labels = origin
        .iter()
        .map(|(w, l)| {
            let mut v = k.labels[*w].clone();
            v.extend(tables.slots.iter().zip(l).map(|(s, &j)| s.q_names[j].clone()));
            v
        })
        .collect();
    Ok(MbModel {
        kripke: Kripke { names, initial: 0, succ, labels, prefs: BTreeMap::new() },
        origin,
    })
}

/// The objectives in force after walking `path` (which starts at the
/// initial state) from the root.
pub fn pref_update_path(
    d: &PreferenceDescription,
    path: &[usize],
    m: &Kripke,
) -> Result<Vec<Formula>, ModelError> {
    let mut cur = d.objectives.clone();
    if path.is_empty() {
        return Ok(cur);
    }
    if path[0] != m.initial {
        return Err(ModelError::BadPath(format!("starts at state {}", path[0])));
    }
    for pair in path.windows(2) {
        let (u, v) = (pair[0], pair[1]);
        if v >= m.len() || !m.succ[u].contains(&v) {
            return Err(ModelError::BadPath(format!("no transition {u} -> {v}")));
        }
        for b in cur.iter_mut() {
            if !b.is_ltl() {
                return Err(ModelError::BadObjective(b.to_string()));
            }
            *b = gnf::tail(b, &m.labels[v]);
        }
    }
    Ok(cur)
}

/// Warnings about `P` that is not a strict partial order.
pub fn lint_order(d: &PreferenceDescription) -> Vec<String> {
    let mut out = Vec::new();
    for &(a, b) in &d.better {
        if a == b {
            out.push(format!("pair ({a},{a}) is reflexive"));
        } else if d.better.contains(&(b, a)) && a < b {
            out.push(format!("pairs ({a},{b}) and ({b},{a}) are symmetric"));
        }
        for &(c, e) in &d.better {
            if c == b && !d.better.contains(&(a, e)) {
                out.push(format!("({a},{b}) and ({b},{e}) without ({a},{e})"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse, sym};

    fn ring(labels: &[&[&str]]) -> Kripke {
        let n = labels.len();
        Kripke {
            names: (0..n).map(|i| format!("w{i}")).collect(),
            initial: 0,
            succ: (0..n).map(|i| vec![(i + 1) % n]).collect(),
            labels: labels.iter().map(|l| l.iter().map(|p| sym(p)).collect()).collect(),
            prefs: BTreeMap::new(),
        }
    }

    fn tables(d: PreferenceDescription, k: &Kripke) -> PrefTables {
        PrefTables::new(&BTreeMap::from([(1, d)]), &BTreeSet::from([1]), &k.vocabulary()).unwrap()
    }

    #[test]
    fn always_p_everywhere_keeps_one_label() {
        let k = ring(&[&["p"], &["p"]]);
        let d = PreferenceDescription::new(vec![parse("G p").unwrap()], []);
        let mb = build_mb(&k, &tables(d, &k)).unwrap();
        assert_eq!(mb.kripke.len(), 2);
        assert!(mb.origin.iter().all(|(_, l)| l == &vec![0]));
        assert!(mb.kripke.labels.iter().all(|l| l.contains("q1_1_1")));
    }

    #[test]
    fn alternating_model_follows_updates() {
        // Operands range over paths from the successors, so the example's
        // X(!p & X p) vs X X(!p & X p) becomes (!p & X p) vs X(!p & X p).
        let b1 = parse("!p & X p").unwrap();
        let b2 = parse("X (!p & X p)").unwrap();
        let b3 = parse("!(!p & X p) & !X (!p & X p)").unwrap();
        let d = PreferenceDescription::new(vec![b1, b2, b3], [(2, 1)]);
        let k = ring(&[&["p"], &[]]);
        let t = tables(d.clone(), &k);
        let mb = build_mb(&k, &t).unwrap();
        let check = |path: &[usize], want: [&str; 2]| {
            let after = pref_update_path(&d, path, &k).unwrap();
            assert_eq!(after[0], parse(want[0]).unwrap());
            assert_eq!(after[1], parse(want[1]).unwrap());
        };
        // into a !p state: X p suffixes now beat X(!p & X p) ones
        check(&[0, 1], ["p", "!p & X p"]);
        // then into a p state: bottom against top
        check(&[0, 1, 0], ["true", "false"]);
        let mut node = 0;
        for (n, w) in [0usize, 1, 0, 1].iter().enumerate() {
            let (st, label) = &mb.origin[node];
            assert_eq!(st, w);
            let want = pref_update_path(&d, &[0, 1, 0, 1][..=n], &k).unwrap();
            for (slot, j) in label.iter().enumerate() {
                assert_eq!(t.slots[slot].closure[*j], want[slot], "slot {slot} after {n} steps");
            }
            node = mb.kripke.succ[node][0];
        }
        // into a p state first: the preferred class is forfeited
        let k2 = ring(&[&[], &["p"]]);
        assert_eq!(pref_update_path(&d, &[0, 1], &k2).unwrap()[0], Formula::bot());
    }

    #[test]
    fn updates_compose() {
        let d = PreferenceDescription::new(
            vec![parse("p U q").unwrap(), parse("!(p U q)").unwrap()],
            [(2, 1)],
        );
        let k = ring(&[&["p"], &["p"], &["q"]]);
        let full = pref_update_path(&d, &[0, 1, 2], &k).unwrap();
        let first = pref_update_path(&d, &[0, 1], &k).unwrap();
        let mut k2 = k.clone();
        k2.initial = 1;
        let d2 = PreferenceDescription::new(first, d.better.clone());
        assert_eq!(pref_update_path(&d2, &[1, 2], &k2).unwrap(), full);
        assert!(pref_update_path(&d, &[0, 2], &k).is_err());
    }

    #[test]
    fn lint_flags_non_orders() {
        let d = PreferenceDescription::new(vec![], [(1, 2), (2, 3)]);
        assert_eq!(lint_order(&d).len(), 1);
        let d = PreferenceDescription::new(vec![], [(1, 2), (2, 3), (1, 3)]);
        assert!(lint_order(&d).is_empty());
        let d = PreferenceDescription::new(vec![], [(1, 1)]);
        assert!(!lint_order(&d).is_empty());
    }
}
