//! Finite graphs the evaluator runs on: a model, optionally paired with the
//! objective list in force (for preference) and with a bounded window of
//! recent states (for strategies).

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::CheckError;
use crate::formula::{Agent, Formula, Sym};
use crate::gnf;
use crate::models::{Cgm, Kripke, ModelError, PreferenceDescription};

/// Current objectives of every agent that has a description.
pub(crate) type Annotation = BTreeMap<Agent, Vec<Formula>>;

#[derive(Debug, Clone)]
pub(crate) struct Game {
    pub agents: Vec<Agent>,
    /// `out[n][mv]`: node reached from `n` by move `mv`.
    pub out: Vec<Vec<usize>>,
    /// `decode[mv][i]`: action of agent position `i` in move `mv`.
    pub decode: Vec<Vec<usize>>,
    pub window: Vec<usize>,
    /// `choices[win][i]`: 1 where agent `i` cannot influence the outcome.
    pub choices: Vec<Vec<usize>>,
}

impl Game {
    pub fn nwindows(&self) -> usize {
        self.choices.len()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct World {
    pub labels: Vec<BTreeSet<Sym>>,
    pub succ: Vec<Vec<usize>>,
    pub ann: Vec<usize>,
    pub anns: Vec<Annotation>,
    pub better: BTreeMap<Agent, BTreeSet<(usize, usize)>>,
    pub game: Option<Game>,
    pub root: usize,
    /// Model state of every node.
    pub origin: Vec<usize>,
}

impl World {
    pub fn len(&self) -> usize {
        self.labels.len()
    }
}

struct AnnTable<'a> {
    prefs: &'a BTreeMap<Agent, PreferenceDescription>,
    anns: Vec<Annotation>,
    index: HashMap<Annotation, usize>,
    steps: HashMap<(usize, usize), usize>,
}

impl<'a> AnnTable<'a> {
    fn new(prefs: &'a BTreeMap<Agent, PreferenceDescription>) -> Result<Self, CheckError> {
        for d in prefs.values() {
            if let Some(b) = d.objectives.iter().find(|b| !b.is_ltl()) {
                return Err(ModelError::BadObjective(b.to_string()).into());
            }
        }
        let init: Annotation = prefs.iter().map(|(i, d)| (*i, d.objectives.clone())).collect();
        let mut t = AnnTable { prefs, anns: Vec::new(), index: HashMap::new(), steps: HashMap::new() };
        t.intern(init);
        Ok(t)
    }

    fn intern(&mut self, a: Annotation) -> usize {
        if let Some(&i) = self.index.get(&a) {
            return i;
        }
        let i = self.anns.len();
        self.anns.push(a.clone());
        self.index.insert(a, i);
        i
    }

    /// Annotation after stepping into a state labelled `label` (keyed by `state`).
    fn step(&mut self, ann: usize, state: usize, label: &BTreeSet<Sym>) -> usize {
        if let Some(&j) = self.steps.get(&(ann, state)) {
            return j;
        }
        let next: Annotation = self.anns[ann]
            .iter()
            .map(|(i, bs)| (*i, bs.iter().map(|b| gnf::tail(b, label)).collect()))
            .collect();
        let j = self.intern(next);
        self.steps.insert((ann, state), j);
        j
    }

    fn better(&self) -> BTreeMap<Agent, BTreeSet<(usize, usize)>> {
        self.prefs.iter().map(|(i, d)| (*i, d.better.clone())).collect()
    }
}

/// Kripke model paired with the objective lists reachable along histories.
pub(crate) fn kripke_world(
    k: &Kripke,
    prefs: &BTreeMap<Agent, PreferenceDescription>,
) -> Result<World, CheckError> {
    k.check_serial()?;
    let mut t = AnnTable::new(prefs)?;
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut nodes: Vec<(usize, usize)> = Vec::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    // every state is a possible evaluation point, the initial one with the
    // initial objectives
    let mut queue = VecDeque::new();
    for w in std::iter::once(k.initial).chain(0..k.len()) {
        if index.contains_key(&(w, 0)) {
            continue;
        }
        index.insert((w, 0), nodes.len());
        nodes.push((w, 0));
        succ.push(Vec::new());
        queue.push_back(nodes.len() - 1);
    }
    while let Some(i) = queue.pop_front() {
        let (w, a) = nodes[i];
        let mut out = BTreeSet::new();
        for &v in &k.succ[w] {
            let b = t.step(a, v, &k.labels[v]);
            let j = *index.entry((v, b)).or_insert_with(|| {
                nodes.push((v, b));
                succ.push(Vec::new());
                queue.push_back(nodes.len() - 1);
                nodes.len() - 1
            });
            out.insert(j);
        }
        succ[i] = out.into_iter().collect();
    }
    Ok(World {
        labels: nodes.iter().map(|(w, _)| k.labels[*w].clone()).collect(),
        succ,
        ann: nodes.iter().map(|(_, a)| *a).collect(),
        better: t.better(),
        anns: t.anns,
        game: None,
        root: 0,
        origin: nodes.iter().map(|(w, _)| *w).collect(),
    })
}

/// Whether agent position `i` can change the outcome at state `w`.
pub(crate) fn relevant(m: &Cgm, w: usize, i: usize) -> bool {
    let n = m.actions[i].len();
    (0..m.move_count()).any(|mv| {
        let mut c = m.decode_move(mv);
        let base = m.outcome[w][mv];
        (0..n).any(|a| {
            c[i] = a;
            m.outcome[w][m.encode_move(&c)] != base
        })
    })
}

pub(crate) fn check_game(m: &Cgm) -> Result<(), CheckError> {
    let nm = m.move_count();
    for (w, row) in m.outcome.iter().enumerate() {
        if row.len() != nm || row.iter().any(|&v| v >= m.len()) {
            return Err(ModelError::BadState(w).into());
        }
    }
    Ok(())
}

/// Game nodes are (window of the last `h + 1` states, objectives). The
/// window includes states before the evaluation point, so shifting a
/// window strategy along a history gives a window strategy again.
pub(crate) fn game_world(
    m: &Cgm,
    h: usize,
    prefs: &BTreeMap<Agent, PreferenceDescription>,
) -> Result<World, CheckError> {
    check_game(m)?;
    let mut t = AnnTable::new(prefs)?;
    let nm = m.move_count();
    let mut win_index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut windows: Vec<Vec<usize>> = Vec::new();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut nodes: Vec<(usize, usize)> = Vec::new();
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut intern_win = |w: Vec<usize>, windows: &mut Vec<Vec<usize>>| -> usize {
        *win_index.entry(w.clone()).or_insert_with(|| {
            windows.push(w);
            windows.len() - 1
        })
    };
    let w0 = intern_win(vec![m.initial], &mut windows);
    index.insert((w0, 0), 0);
    nodes.push((w0, 0));
    out.push(Vec::new());
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let (win, a) = nodes[i];
        let cur = *windows[win].last().expect("non-empty window");
        let mut row = Vec::with_capacity(nm);
        for mv in 0..nm {
            let v = m.outcome[cur][mv];
            let mut nw = windows[win].clone();
            nw.push(v);
            if nw.len() > h + 1 {
                nw.remove(0);
            }
            let nwin = intern_win(nw, &mut windows);
            let b = t.step(a, v, &m.labels[v]);
            let j = *index.entry((nwin, b)).or_insert_with(|| {
                nodes.push((nwin, b));
                out.push(Vec::new());
                queue.push_back(nodes.len() - 1);
                nodes.len() - 1
            });
            row.push(j);
        }
        out[i] = row;
    }
    let rel: Vec<Vec<bool>> =
        (0..m.len()).map(|w| (0..m.agents.len()).map(|i| relevant(m, w, i)).collect()).collect();
    let choices = windows
        .iter()
        .map(|win| {
            let w = *win.last().expect("non-empty window");
            (0..m.agents.len()).map(|i| if rel[w][i] { m.actions[i].len() } else { 1 }).collect()
        })
        .collect();
    let succ = out
        .iter()
        .map(|row| row.iter().copied().collect::<BTreeSet<_>>().into_iter().collect())
        .collect();
    Ok(World {
        labels: nodes.iter().map(|(win, _)| m.labels[*windows[*win].last().unwrap()].clone()).collect(),
        succ,
        ann: nodes.iter().map(|(_, a)| *a).collect(),
        better: t.better(),
        anns: t.anns,
        game: Some(Game {
            agents: m.agents.clone(),
            out,
            decode: (0..nm).map(|mv| m.decode_move(mv)).collect(),
            window: nodes.iter().map(|(win, _)| *win).collect(),
            choices,
        }),
        root: 0,
        origin: nodes.iter().map(|(win, _)| *windows[*win].last().unwrap()).collect(),
    })
}

/// Three copies of the world: layer 0 is the evaluation point, layer 1 its
/// successors (marked by `marker`), layer 2 everything later.
pub(crate) fn layered(w: &World, marker: &Sym) -> World {
    let n = w.len();
    let idx = |v: usize, l: usize| 3 * v + l;
    let mut labels = Vec::with_capacity(3 * n);
    let mut succ = Vec::with_capacity(3 * n);
    let mut ann = Vec::with_capacity(3 * n);
    for v in 0..n {
        for l in 0..3 {
            let mut lab = w.labels[v].clone();
            if l == 1 {
                lab.insert(marker.clone());
            }
            labels.push(lab);
            let nl = (l + 1).min(2);
            succ.push(w.succ[v].iter().map(|&u| idx(u, nl)).collect());
            ann.push(w.ann[v]);
        }
    }
    let game = w.game.as_ref().map(|g| {
        let mut out = Vec::with_capacity(3 * n);
        let mut window = Vec::with_capacity(3 * n);
        for v in 0..n {
            for l in 0..3 {
                let nl = (l + 1).min(2);
                out.push(g.out[v].iter().map(|&u| idx(u, nl)).collect());
                window.push(g.window[v]);
            }
        }
        Game { out, window, ..g.clone() }
    });
    World {
        labels,
        succ,
        ann,
        anns: w.anns.clone(),
        better: w.better.clone(),
        game,
        root: idx(w.root, 0),
        origin: w.origin.iter().flat_map(|&o| [o, o, o]).collect(),
    }
}

/// Windowed move-storing unfolding used to evaluate translated formulas.
#[derive(Debug, Clone)]
pub(crate) struct Unfolded {
    pub world: World,
    /// Window of the parent node (`None` at the root).
    pub parent_win: Vec<Option<usize>>,
    pub own_win: Vec<usize>,
    /// Move that led into the node.
    pub last_move: Vec<Option<usize>>,
    pub decode: Vec<Vec<usize>>,
    /// `choices[win][i]` as in [`Game`].
    pub choices: Vec<Vec<usize>>,
    pub nacts: Vec<usize>,
}

/// Nodes carry the last `h + 2` states and the last move; labels are those
/// of the move-storing unfolding.
pub(crate) fn unfolded_world(m: &Cgm, h: usize) -> Result<Unfolded, CheckError> {
    check_game(m)?;
    let flat = crate::models::unfold1(m);
    let nm = m.move_count();
    let mut win_index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut windows: Vec<Vec<usize>> = Vec::new();
    let mut intern_win = |w: &[usize], windows: &mut Vec<Vec<usize>>| -> usize {
        let start = w.len().saturating_sub(h + 1);
        let w = w[start..].to_vec();
        *win_index.entry(w.clone()).or_insert_with(|| {
            windows.push(w);
            windows.len() - 1
        })
    };
    type Key = (Vec<usize>, Option<usize>);
    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut nodes: Vec<Key> = Vec::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let start: Key = (vec![m.initial], None);
    index.insert(start.clone(), 0);
    nodes.push(start);
    succ.push(Vec::new());
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let (hist, _) = nodes[i].clone();
        let cur = *hist.last().unwrap();
        let mut row = BTreeSet::new();
        for mv in 0..nm {
            let mut nh = hist.clone();
            nh.push(m.outcome[cur][mv]);
            if nh.len() > h + 2 {
                nh.remove(0);
            }
            let key = (nh, Some(mv));
            let j = *index.entry(key.clone()).or_insert_with(|| {
                nodes.push(key);
                succ.push(Vec::new());
                queue.push_back(nodes.len() - 1);
                nodes.len() - 1
            });
            row.insert(j);
        }
        succ[i] = row.into_iter().collect();
    }
    let mut parent_win = Vec::with_capacity(nodes.len());
    let mut own_win = Vec::with_capacity(nodes.len());
    let mut labels = Vec::with_capacity(nodes.len());
    for (hist, mv) in &nodes {
        own_win.push(intern_win(hist, &mut windows));
        parent_win.push(match mv {
            None => None,
            Some(_) => Some(intern_win(&hist[..hist.len() - 1], &mut windows)),
        });
        let cur = *hist.last().unwrap();
        labels.push(match mv {
            None => flat.labels[0].clone(),
            Some(mv) => flat.labels[crate::models::unfold_index(m, cur, *mv)].clone(),
        });
    }
    let rel: Vec<Vec<bool>> =
        (0..m.len()).map(|w| (0..m.agents.len()).map(|i| relevant(m, w, i)).collect()).collect();
    let choices = windows
        .iter()
        .map(|win| {
            let w = *win.last().unwrap();
            (0..m.agents.len()).map(|i| if rel[w][i] { m.actions[i].len() } else { 1 }).collect()
        })
        .collect();
    let n = nodes.len();
    Ok(Unfolded {
        world: World {
            labels,
            succ,
            ann: vec![0; n],
            anns: vec![Annotation::new()],
            better: BTreeMap::new(),
            game: None,
            root: 0,
            origin: nodes.iter().map(|(hist, _)| *hist.last().unwrap()).collect(),
        },
        parent_win,
        own_win,
        last_move: nodes.iter().map(|(_, mv)| *mv).collect(),
        decode: (0..nm).map(|mv| m.decode_move(mv)).collect(),
        choices,
        nacts: m.actions.iter().map(Vec::len).collect(),
    })
}
