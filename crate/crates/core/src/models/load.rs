use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use super::{Cgm, Kripke, PreferenceDescription};
use crate::formula::{parse, sym, Agent, Formula, ParseError, Sym};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LoadError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: bad objective: {err}")]
    Objective { line: usize, err: ParseError },
    #[error("missing `{0}` declaration")]
    Missing(&'static str),
    #[error("no outcome for state `{state}` under move {moves}")]
    NotTotal { state: String, moves: String },
    #[error("state `{0}` has no successor")]
    NotSerial(String),
    #[error("file mixes `outcome` and `trans` lines")]
    Mixed,
    #[error("name `{0}` is used both as an action and as a proposition or another action")]
    NameClash(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Model {
    Cgm(Cgm),
    Kripke(Kripke),
}

impl Model {
    pub fn kripke(&self) -> Kripke {
        match self {
            Model::Cgm(m) => super::to_kripke(m),
            Model::Kripke(k) => k.clone(),
        }
    }

    pub fn prefs(&self) -> &BTreeMap<Agent, PreferenceDescription> {
        match self {
            Model::Cgm(m) => &m.prefs,
            Model::Kripke(k) => &k.prefs,
        }
    }
}

#[derive(Default)]
struct Raw {
    agents: Option<Vec<Agent>>,
    actions: BTreeMap<Agent, Vec<Sym>>,
    states: Option<Vec<String>>,
    init: Option<(usize, String)>,
    labels: Vec<(usize, String, Vec<Sym>)>,
    outcomes: Vec<(usize, String, Vec<String>, String)>,
    trans: Vec<(usize, String, Vec<String>)>,
    objectives: BTreeMap<Agent, Vec<Formula>>,
    orders: Vec<(usize, Agent, usize, usize)>,
}

fn err(line: usize, msg: impl Into<String>) -> LoadError {
    LoadError::Syntax { line, msg: msg.into() }
}

fn agent_id(line: usize, s: &str) -> Result<Agent, LoadError> {
    s.parse().map_err(|_| err(line, format!("bad agent id `{s}`")))
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn parse_lines(text: &str) -> Result<Raw, LoadError> {
    let mut raw = Raw::default();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (head, rest) = match line.split_once(':') {
            Some((h, r)) if !line.starts_with("outcome") && !line.starts_with("trans") => {
                (h.trim(), Some(r.trim()))
            }
            _ => (line, None),
        };
        let hw = words(head);
        match (hw.first().map(String::as_str), rest) {
            (Some("agents"), Some(r)) => {
                raw.agents = Some(words(r).iter().map(|a| agent_id(n, a)).collect::<Result<_, _>>()?)
            }
            (Some("actions"), Some(r)) if hw.len() == 2 => {
                let a = agent_id(n, &hw[1])?;
                let acts: Vec<Sym> = words(r).iter().map(|x| sym(x)).collect();
                if acts.is_empty() {
                    return Err(err(n, format!("agent {a} has no actions")));
                }
                raw.actions.insert(a, acts);
            }
            (Some("states"), Some(r)) => raw.states = Some(words(r)),
            (Some("init"), Some(r)) => raw.init = Some((n, r.to_string())),
            (Some("label"), Some(r)) if hw.len() == 2 => {
                raw.labels.push((n, hw[1].clone(), words(r).iter().map(|x| sym(x)).collect()))
            }
            (Some("pref"), Some(r)) if hw.len() == 3 => {
                let a = agent_id(n, &hw[1])?;
                match hw[2].as_str() {
                    "objective" => {
                        let f = parse(r).map_err(|e| LoadError::Objective { line: n, err: e })?;
                        if !f.is_ltl() {
                            return Err(err(n, format!("objective `{f}` is not LTL")));
                        }
                        raw.objectives.entry(a).or_default().push(f);
                    }
                    "order" => {
                        let (x, y) = r.split_once('<').ok_or_else(|| err(n, "expected `k1 < k2`"))?;
                        let x = x.trim().parse().map_err(|_| err(n, "bad objective index"))?;
                        let y = y.trim().parse().map_err(|_| err(n, "bad objective index"))?;
                        raw.orders.push((n, a, x, y));
                    }
                    other => return Err(err(n, format!("unknown pref field `{other}`"))),
                }
            }
            (Some("outcome"), None) => {
                let (l, r) = line.split_once("->").ok_or_else(|| err(n, "expected `->`"))?;
                let lw = words(l);
                if lw.len() < 2 {
                    return Err(err(n, "expected `outcome STATE ACTIONS.. -> STATE`"));
                }
                raw.outcomes.push((n, lw[1].clone(), lw[2..].to_vec(), r.trim().to_string()));
            }
            (Some("trans"), None) => {
                let (l, r) = line.split_once("->").ok_or_else(|| err(n, "expected `->`"))?;
                let lw = words(l);
                if lw.len() != 2 {
                    return Err(err(n, "expected `trans STATE -> STATE..`"));
                }
                raw.trans.push((n, lw[1].clone(), words(r)));
            }
            _ => return Err(err(n, format!("unrecognized line `{line}`"))),
        }
    }
    Ok(raw)
}

/// Parse the section-based text format; `outcome` lines give a game model,
/// `trans` lines a Kripke model.
pub fn load_model(text: &str) -> Result<Model, LoadError> {
    let raw = parse_lines(text)?;
    let names = raw.states.clone().ok_or(LoadError::Missing("states"))?;
    let idx: HashMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let state = |line: usize, s: &str| {
        idx.get(s).copied().ok_or_else(|| err(line, format!("unknown state `{s}`")))
    };
    let initial = match &raw.init {
        Some((n, s)) => state(*n, s)?,
        None => return Err(LoadError::Missing("init")),
    };
    let mut labels = vec![BTreeSet::new(); names.len()];
    for (n, s, props) in &raw.labels {
        labels[state(*n, s)?].extend(props.iter().cloned());
    }
    let mut prefs = BTreeMap::new();
    for (a, objs) in &raw.objectives {
        prefs.insert(*a, PreferenceDescription::new(objs.clone(), []));
    }
    for &(n, a, x, y) in &raw.orders {
        let d = prefs.get_mut(&a).ok_or_else(|| err(n, format!("agent {a} has no objectives")))?;
        let k = d.objectives.len();
        if x == 0 || y == 0 || x > k || y > k {
            return Err(err(n, format!("objective index out of range 1..{k}")));
        }
        d.better.insert((x, y));
    }
    if !raw.outcomes.is_empty() && !raw.trans.is_empty() {
        return Err(LoadError::Mixed);
    }
    if raw.outcomes.is_empty() {
        let mut succ = vec![BTreeSet::new(); names.len()];
        for (n, s, ts) in &raw.trans {
            let u = state(*n, s)?;
            for t in ts {
                succ[u].insert(state(*n, t)?);
            }
        }
        let k = Kripke {
            names: names.clone(),
            initial,
            succ: succ.into_iter().map(|s| s.into_iter().collect()).collect(),
            labels,
            prefs,
        };
        if let Some(w) = k.succ.iter().position(Vec::is_empty) {
            return Err(LoadError::NotSerial(names[w].clone()));
        }
        return Ok(Model::Kripke(k));
    }
    let agents = raw.agents.clone().ok_or(LoadError::Missing("agents"))?;
    let mut actions = Vec::new();
    for a in &agents {
        actions.push(raw.actions.get(a).cloned().ok_or(LoadError::Missing("actions"))?);
    }
    let props: BTreeSet<Sym> = labels.iter().flatten().cloned().collect();
    let mut seen = BTreeSet::new();
    for act in actions.iter().flatten() {
        if props.contains(act) || !seen.insert(act.clone()) {
            return Err(LoadError::NameClash(act.to_string()));
        }
    }
    let mut m = Cgm {
        names: names.clone(),
        initial,
        agents,
        actions,
        outcome: Vec::new(),
        labels,
        prefs,
    };
    let nm = m.move_count();
    let mut table = vec![vec![None; nm]; names.len()];
    for (n, s, acts, t) in &raw.outcomes {
        let u = state(*n, s)?;
        if acts.len() != m.agents.len() {
            return Err(err(*n, format!("expected {} actions", m.agents.len())));
        }
        let mut choice = Vec::new();
        for (i, a) in acts.iter().enumerate() {
            let pos = m.actions[i]
                .iter()
                .position(|x| &**x == a)
                .ok_or_else(|| err(*n, format!("`{a}` is not an action of agent {}", m.agents[i])))?;
            choice.push(pos);
        }
        table[u][m.encode_move(&choice)] = Some(state(*n, t)?);
    }
    let mut outcome = Vec::new();
    for (u, row) in table.into_iter().enumerate() {
        let mut out = Vec::new();
        for (mv, v) in row.into_iter().enumerate() {
            match v {
                Some(v) => out.push(v),
                None => {
                    let acts: Vec<String> = m
                        .decode_move(mv)
                        .iter()
                        .enumerate()
                        .map(|(i, a)| m.actions[i][*a].to_string())
                        .collect();
                    return Err(LoadError::NotTotal { state: names[u].clone(), moves: acts.join(" ") });
                }
            }
        }
        outcome.push(out);
    }
    m.outcome = outcome;
    Ok(Model::Cgm(m))
}

fn write_common(
    out: &mut String,
    names: &[String],
    initial: usize,
    labels: &[BTreeSet<Sym>],
) {
    let _ = writeln!(out, "states: {}", names.join(" "));
    let _ = writeln!(out, "init: {}", names[initial]);
    for (w, l) in labels.iter().enumerate() {
        if !l.is_empty() {
            let ps: Vec<&str> = l.iter().map(|p| &**p).collect();
            let _ = writeln!(out, "label {}: {}", names[w], ps.join(" "));
        }
    }
}

fn write_prefs(out: &mut String, prefs: &BTreeMap<Agent, PreferenceDescription>) {
    for (a, d) in prefs {
        for b in &d.objectives {
            let _ = writeln!(out, "pref {a} objective: {b}");
        }
        for (x, y) in &d.better {
            let _ = writeln!(out, "pref {a} order: {x} < {y}");
        }
    }
}

pub fn write_cgm(m: &Cgm) -> String {
    let mut out = String::new();
    let ags: Vec<String> = m.agents.iter().map(|a| a.to_string()).collect();
    let _ = writeln!(out, "agents: {}", ags.join(" "));
    for (a, acts) in m.agents.iter().zip(&m.actions) {
        let acts: Vec<&str> = acts.iter().map(|x| &**x).collect();
        let _ = writeln!(out, "actions {a}: {}", acts.join(" "));
    }
    write_common(&mut out, &m.names, m.initial, &m.labels);
    for (w, row) in m.outcome.iter().enumerate() {
        for (mv, v) in row.iter().enumerate() {
            let acts: Vec<&str> = m
                .decode_move(mv)
                .iter()
                .enumerate()
                .map(|(i, a)| &*m.actions[i][*a])
                .collect();
            let _ = writeln!(out, "outcome {} {} -> {}", m.names[w], acts.join(" "), m.names[*v]);
        }
    }
    write_prefs(&mut out, &m.prefs);
    out
}

pub fn write_kripke(k: &Kripke) -> String {
    let mut out = String::new();
    write_common(&mut out, &k.names, k.initial, &k.labels);
    for (w, s) in k.succ.iter().enumerate() {
        let ts: Vec<&str> = s.iter().map(|v| k.names[*v].as_str()).collect();
        let _ = writeln!(out, "trans {} -> {}", k.names[w], ts.join(" "));
    }
    write_prefs(&mut out, &k.prefs);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAME: &str = "\
agents: 1 2
actions 1: a b
actions 2: c d
states: w0 w1
init: w0
label w0: p
label w1: p q
outcome w0 a c -> w1
outcome w0 a d -> w0
outcome w0 b c -> w0
outcome w0 b d -> w1
outcome w1 a c -> w1
outcome w1 a d -> w1
outcome w1 b c -> w1
outcome w1 b d -> w1   # sink
pref 1 objective: G p
pref 1 objective: F !p
pref 1 order: 2 < 1
";

    #[test]
    fn loads_game_and_roundtrips() {
        let Model::Cgm(m) = load_model(GAME).unwrap() else { panic!("expected a game") };
        assert_eq!(m.move_count(), 4);
        assert_eq!(m.outcome[0], vec![1, 0, 0, 1]);
        assert!(m.prefs[&1].prefers(2, 1));
        assert_eq!(load_model(&write_cgm(&m)).unwrap(), Model::Cgm(m));
    }

    #[test]
    fn rejects_partial_outcomes() {
        let text = GAME.replace("outcome w1 b d -> w1   # sink\n", "");
        assert!(matches!(load_model(&text), Err(LoadError::NotTotal { .. })));
    }

    #[test]
    fn loads_kripke() {
        let text = "states: a b\ninit: a\nlabel b: p\ntrans a -> a b\ntrans b -> b\n";
        let Model::Kripke(k) = load_model(text).unwrap() else { panic!("expected kripke") };
        assert_eq!(k.succ, vec![vec![0, 1], vec![1]]);
        assert_eq!(load_model(&write_kripke(&k)).unwrap(), Model::Kripke(k));
        let bad = "states: a b\ninit: a\ntrans a -> b\n";
        assert!(matches!(load_model(bad), Err(LoadError::NotSerial(_))));
    }

    #[test]
    fn action_names_must_be_fresh() {
        let text = GAME.replace("actions 2: c d", "actions 2: c p").replace(" d ", " p ");
        assert!(matches!(load_model(&text), Err(LoadError::NameClash(_))));
    }
}
