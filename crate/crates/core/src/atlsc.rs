//! Translation of strategy-context formulas into quantified CTL* over the
//! move-storing unfolding, plus the equilibrium templates.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::{Agent, Coalition, Formula, FreshVarSupply, Node, Sym, Variant};
use crate::models::Cgm;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TranslateError {
    #[error("agent {0} is not a player of the model")]
    UnknownAgent(Agent),
    #[error("`{0}` is outside the strategy-context fragment")]
    NotAtlsc(String),
    #[error("no goal given for agent {0}")]
    MissingGoal(Agent),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TranslateOptions {
    /// One variable per coalition when no subformula separates its members.
    pub merge: bool,
    /// Binary-coded actions instead of one variable per player.
    pub log_actions: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Player {
    One(Agent),
    Merged(Coalition),
}

impl Player {
    pub fn members(&self) -> Vec<Agent> {
        match self {
            Player::One(i) => vec![*i],
            Player::Merged(g) => g.iter().copied().collect(),
        }
    }
}

/// Players whose strategies are fixed by the context, with the variables
/// encoding them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContextBinding {
    pub entries: Vec<(Player, Vec<Sym>)>,
}

impl ContextBinding {
    fn without(&self, g: &Coalition) -> ContextBinding {
        ContextBinding {
            entries: self
                .entries
                .iter()
                .filter(|(p, _)| p.members().iter().all(|i| !g.contains(i)))
                .cloned()
                .collect(),
        }
    }
}

/// One translated strategy modality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantCount {
    pub coalition: Coalition,
    pub merged: bool,
    pub vars: usize,
}

#[derive(Debug, Clone)]
pub struct Translation {
    pub formula: Formula,
    /// Per strategy modality, in pre-order.
    pub quantifiers: Vec<QuantCount>,
    /// Coalitions for which merging was requested but not possible.
    pub merge_fallbacks: Vec<Coalition>,
}

fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

fn positions(m: &Cgm, members: &[Agent]) -> Result<Vec<usize>, TranslateError> {
    members.iter().map(|&i| m.agent_pos(i).ok_or(TranslateError::UnknownAgent(i))).collect()
}

/// Action choices of `members` for every joint index (first member varies fastest).
pub fn joint_actions(m: &Cgm, members: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = members.iter().map(|&p| m.actions[p].len()).product();
    (0..total)
        .map(|mut j| {
            members
                .iter()
                .map(|&p| {
                    let k = m.actions[p].len();
                    let a = j % k;
                    j /= k;
                    a
                })
                .collect()
        })
        .collect()
}

fn action_conj(m: &Cgm, members: &[usize], acts: &[usize]) -> Formula {
    Formula::and_all(members.iter().zip(acts).map(|(&p, &a)| Formula::atom(&m.actions[p][a])))
}

/// Minterm over `vars` with `vars[s]` true iff bit `s` of `j` is set.
pub fn code(vars: &[Sym], j: usize) -> Formula {
    Formula::and_all(vars.iter().enumerate().map(|(s, v)| {
        let a = Formula::atom(v);
        if j >> s & 1 == 1 {
            a
        } else {
            Formula::not(a)
        }
    }))
}

/// `AG OR_a AX(var <-> a)` over the joint actions of `members`.
pub fn strategy_constraint(m: &Cgm, members: &[Agent], var: &Sym) -> Result<Formula, TranslateError> {
    let pos = positions(m, members)?;
    let q = Formula::atom(var);
    let disj = joint_actions(m, &pos)
        .into_iter()
        .map(|acts| Formula::forall(Formula::next(Formula::iff(q.clone(), action_conj(m, &pos, &acts)))));
    Ok(Formula::forall(Formula::always(Formula::or_all(disj))))
}

/// `AG OR_j code_j`: the variables always spell a valid joint action.
pub fn log_constraint(m: &Cgm, members: &[Agent], vars: &[Sym]) -> Result<Formula, TranslateError> {
    let pos = positions(m, members)?;
    let total = joint_actions(m, &pos).len();
    Ok(Formula::forall(Formula::always(Formula::or_all((0..total).map(|j| code(vars, j))))))
}

/// `AND_j (code_j -> X a_j)`: the next move follows the coded action.
fn log_guard(m: &Cgm, members: &[Agent], vars: &[Sym]) -> Result<Formula, TranslateError> {
    let pos = positions(m, members)?;
    Ok(Formula::and_all(
        joint_actions(m, &pos)
            .iter()
            .enumerate()
            .map(|(j, acts)| Formula::implies(code(vars, j), Formula::next(action_conj(m, &pos, acts)))),
    ))
}

/// True when some modality or relaxation in `f` treats members of `g` apart.
fn splits(g: &Coalition, f: &Formula) -> bool {
    f.any(&|n| match n {
        Node::StratMod(h, _) | Node::StratBox(h, _) | Node::Relax(h, _) => {
            !g.is_disjoint(h) && !g.is_subset(h)
        }
        _ => false,
    })
}

struct Translator<'a> {
    m: &'a Cgm,
    opts: TranslateOptions,
    fresh: FreshVarSupply,
    counts: Vec<QuantCount>,
    fallbacks: Vec<Coalition>,
}

impl Translator<'_> {
    fn nvars(&self, members: &[Agent]) -> Result<usize, TranslateError> {
        if !self.opts.log_actions {
            return Ok(1);
        }
        let pos = positions(self.m, members)?;
        Ok(ceil_log2(pos.iter().map(|&p| self.m.actions[p].len()).product()))
    }

    fn name(members: &[Agent]) -> String {
        members.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("")
    }

    fn go(&mut self, f: &Formula, ctx: &ContextBinding) -> Result<Formula, TranslateError> {
        use Node::*;
        match f.node() {
            Bot | Top | Atom(_) => Ok(f.clone()),
            PathAtom(_) | Pref(..) | SimQuant(..) | SimForall(..) | OneQuant(..) | ExistsProp(..)
            | ForallProp(..) => Err(TranslateError::NotAtlsc(f.to_string())),
            StratMod(g, b) => self.strat(g, b, ctx),
            StratBox(g, b) => {
                let inner = self.strat(g, &Formula::not(b.clone()), ctx)?;
                Ok(Formula::not(inner))
            }
            Relax(g, a) => {
                for i in g {
                    self.m.agent_pos(*i).ok_or(TranslateError::UnknownAgent(*i))?;
                }
                self.go(a, &ctx.without(g))
            }
            _ => {
                let ch = f.children().into_iter().map(|c| self.go(c, ctx)).collect::<Result<Vec<_>, _>>()?;
                Ok(f.with_children(ch))
            }
        }
    }

    fn strat(&mut self, g: &Coalition, b: &Formula, ctx: &ContextBinding) -> Result<Formula, TranslateError> {
        for i in g {
            self.m.agent_pos(*i).ok_or(TranslateError::UnknownAgent(*i))?;
        }
        let merge = self.opts.merge && g.len() > 1 && {
            let ok = !splits(g, b);
            if !ok {
                self.fallbacks.push(g.clone());
            }
            ok
        };
        let players: Vec<Player> = if merge {
            vec![Player::Merged(g.clone())]
        } else {
            g.iter().map(|&i| Player::One(i)).collect()
        };
        let slot = self.counts.len();
        self.counts.push(QuantCount { coalition: g.clone(), merged: merge, vars: 0 });
        let mut inner = ctx.without(g);
        let mut quantified = Vec::new();
        let mut constraints = Vec::new();
        for p in players {
            let members = p.members();
            let n = self.nvars(&members)?;
            let vars: Vec<Sym> = if self.opts.log_actions {
                (0..n).map(|_| self.fresh.fresh(&format!("r{}", Self::name(&members)))).collect()
            } else {
                vec![self.fresh.fresh(&format!("q{}", Self::name(&members)))]
            };
            if self.opts.log_actions {
                if !vars.is_empty() {
                    constraints.push(log_constraint(self.m, &members, &vars)?);
                }
            } else {
                constraints.push(strategy_constraint(self.m, &members, &vars[0])?);
            }
            quantified.extend(vars.iter().cloned());
            inner.entries.push((p, vars));
        }
        self.counts[slot].vars = quantified.len();
        let tb = self.go(b, &inner)?;
        let body = if inner.entries.is_empty() {
            Formula::forall(tb)
        } else {
            let guard = if self.opts.log_actions {
                let parts = inner
                    .entries
                    .iter()
                    .map(|(p, vars)| log_guard(self.m, &p.members(), vars))
                    .collect::<Result<Vec<_>, _>>()?;
                Formula::always(Formula::and_all(parts))
            } else {
                let vars = inner.entries.iter().flat_map(|(_, v)| v.iter()).map(|v| Formula::atom(v));
                Formula::next(Formula::always(Formula::and_all(vars)))
            };
            Formula::forall(Formula::implies(guard, tb))
        };
        if quantified.is_empty() {
            return Ok(body);
        }
        let mut out = Formula::and(Formula::and_all(constraints), body);
        for v in quantified.iter().rev() {
            out = Formula::exists_prop(v, out);
        }
        Ok(out)
    }
}

/// Translate `a` (evaluated under the empty context) for the unfolding of `m`.
pub fn translate_atlsc(a: &Formula, m: &Cgm, opts: TranslateOptions) -> Result<Translation, TranslateError> {
    let mut fresh = FreshVarSupply::new(m.vocabulary().into_iter().chain(m.action_atoms()));
    fresh.reserve_formula(a);
    let mut t = Translator { m, opts, fresh, counts: Vec::new(), fallbacks: Vec::new() };
    let formula = t.go(a, &ContextBinding::default())?;
    Ok(Translation { formula, quantifiers: t.counts, merge_fallbacks: t.fallbacks })
}

/// How a block of quantified variables encodes a strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum UnitMode {
    /// One variable true at successors reached by the chosen action.
    Q,
    /// Binary code of the chosen action, held at the deciding state.
    Log,
}

#[derive(Debug, Clone)]
pub(crate) struct Unit {
    /// Agent positions.
    pub members: Vec<usize>,
    pub vars: Vec<Sym>,
    pub mode: UnitMode,
}

impl Unit {
    pub fn joint_index(&self, acts: &[usize], nacts: &[usize]) -> usize {
        let mut idx = 0;
        let mut scale = 1;
        for (&p, &a) in self.members.iter().zip(acts) {
            idx += a * scale;
            scale *= nacts[p];
        }
        idx
    }
}

fn flatten<'f>(f: &'f Formula, conj: bool, out: &mut Vec<&'f Formula>) {
    match (f.node(), conj) {
        (Node::And(a, b), true) | (Node::Or(a, b), false) => {
            flatten(a, conj, out);
            flatten(b, conj, out);
        }
        _ => out.push(f),
    }
}

fn action_owner(m: &Cgm, a: &Formula) -> Option<Vec<usize>> {
    let mut atoms = Vec::new();
    flatten(a, true, &mut atoms);
    atoms
        .iter()
        .map(|x| match x.node() {
            Node::Atom(s) => m.actions.iter().position(|acts| acts.contains(s)),
            _ => None,
        })
        .collect()
}

/// Recognize `EXISTS vars (constraints & rest)` as produced by
/// [`translate_atlsc`]; returns the strategy units covering `vars`.
pub(crate) fn recognize_block(m: &Cgm, vars: &[Sym], body: &Formula) -> Option<Vec<Unit>> {
    let Node::And(cs, rest) = body.node() else { return None };
    let mut conj = Vec::new();
    flatten(cs, true, &mut conj);
    let agents_of = |pos: &[usize]| -> Vec<Agent> { pos.iter().map(|&p| m.agents[p]).collect() };
    let mut units = Vec::new();
    for c in conj {
        let Node::ForallPath(g) = c.node() else { return None };
        let Node::Always(d) = g.node() else { return None };
        let mut disj = Vec::new();
        flatten(d, false, &mut disj);
        let first = disj.first()?;
        if let Node::ForallPath(x) = first.node() {
            let Node::Next(iff) = x.node() else { return None };
            let Node::Iff(q, act) = iff.node() else { return None };
            let Node::Atom(q) = q.node() else { return None };
            let members = action_owner(m, act)?;
            if strategy_constraint(m, &agents_of(&members), q).ok()? != *c {
                return None;
            }
            units.push(Unit { members, vars: vec![q.clone()], mode: UnitMode::Q });
        } else {
            let own: BTreeSet<Sym> = d.free_props();
            let uvars: Vec<Sym> = vars.iter().filter(|v| own.contains(*v)).cloned().collect();
            // the guard in `rest` names the actions
            let mut members = None;
            rest.visit(&mut |f| {
                if let Node::Implies(code, next) = f.node() {
                    if let Node::Next(act) = next.node() {
                        let cv = code.free_props();
                        if !cv.is_empty() && cv.iter().all(|v| own.contains(v)) && members.is_none() {
                            members = action_owner(m, act);
                        }
                    }
                }
            });
            let members = members?;
            if log_constraint(m, &agents_of(&members), &uvars).ok()? != *c {
                return None;
            }
            units.push(Unit { members, vars: uvars, mode: UnitMode::Log });
        }
    }
    let covered: BTreeSet<&Sym> = units.iter().flat_map(|u| u.vars.iter()).collect();
    let wanted: BTreeSet<&Sym> = vars.iter().collect();
    let total: usize = units.iter().map(|u| u.vars.len()).sum();
    (covered == wanted && total == vars.len()).then_some(units)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    Nash,
    Secure,
}

/// Equilibrium existence for the grand coalition with goals `goals[i]`.
pub fn solution_concept(
    template: Template,
    agents: &[Agent],
    goals: &BTreeMap<Agent, Formula>,
) -> Result<Formula, TranslateError> {
    let mut fresh = FreshVarSupply::default();
    for g in goals.values() {
        fresh.reserve_formula(g);
    }
    let c = fresh.claim("c");
    let cv = Formula::path_atom(&c);
    let goal = |i: Agent| goals.get(&i).cloned().ok_or(TranslateError::MissingGoal(i));
    let mut parts = Vec::new();
    for &i in agents {
        let gi = goal(i)?;
        let trigger = match template {
            Template::Nash => Formula::pref(Variant::EA, i, gi.clone(), cv.clone()),
            Template::Secure => {
                let mut hurts = Vec::new();
                for &j in agents.iter().filter(|&&j| j != i) {
                    let gj = goal(j)?;
                    hurts.push(Formula::or(
                        Formula::pref(Variant::EA, j, cv.clone(), gj.clone()),
                        Formula::pref(Variant::AE, j, cv.clone(), gj),
                    ));
                }
                Formula::or_all(hurts)
            }
        };
        let deviation = Formula::strat_box([i], Formula::next(Formula::not(cv.clone())));
        parts.push(Formula::and(
            Formula::next(gi),
            Formula::sim_forall(i, &c, Formula::implies(trigger, deviation)),
        ));
    }
    Ok(Formula::strat(agents.iter().copied(), Formula::and_all(parts)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse, sym};
    use crate::models::tests::pennies;

    fn count(t: &Translation) -> Vec<usize> {
        t.quantifiers.iter().map(|q| q.vars).collect()
    }

    #[test]
    fn log2_rounds_up() {
        assert_eq!([1, 2, 3, 4, 5, 8, 9].map(ceil_log2), [0, 1, 2, 2, 3, 3, 4]);
    }

    #[test]
    fn constraint_has_one_disjunct_per_action() {
        let m = pennies();
        let disjuncts = |members: &[Agent]| {
            let c = strategy_constraint(&m, members, &sym("q")).unwrap();
            let Node::ForallPath(g) = c.node() else { panic!() };
            let Node::Always(d) = g.node() else { panic!() };
            let mut out = Vec::new();
            flatten(d, false, &mut out);
            out.len()
        };
        assert_eq!(disjuncts(&[1]), 2);
        assert_eq!(disjuncts(&[1, 2]), 4);
    }

    #[test]
    fn quantifier_counts() {
        let m = pennies();
        let f = parse("<<1,2>> X win").unwrap();
        let d = translate_atlsc(&f, &m, TranslateOptions::default()).unwrap();
        assert_eq!(count(&d), [2]);
        let d = translate_atlsc(&f, &m, TranslateOptions { merge: true, log_actions: false }).unwrap();
        assert_eq!(count(&d), [1]);
        let d = translate_atlsc(&f, &m, TranslateOptions { merge: true, log_actions: true }).unwrap();
        assert_eq!(count(&d), [2]);
        let e = translate_atlsc(&parse("<<>> X win").unwrap(), &m, TranslateOptions::default()).unwrap();
        assert_eq!(count(&e), [0]);
        assert!(!e.formula.has_prop_quant());
    }

    #[test]
    fn split_coalition_is_not_merged() {
        let m = pennies();
        let f = parse("<<1,2>> X <<1>> X win").unwrap();
        let d = translate_atlsc(&f, &m, TranslateOptions { merge: true, log_actions: false }).unwrap();
        assert_eq!(count(&d), [2, 1]);
        assert_eq!(d.merge_fallbacks.len(), 1);
    }

    #[test]
    fn blocks_are_recognized() {
        let m = pennies();
        for opts in [
            TranslateOptions::default(),
            TranslateOptions { merge: true, log_actions: false },
            TranslateOptions { merge: false, log_actions: true },
            TranslateOptions { merge: true, log_actions: true },
        ] {
            let d = translate_atlsc(&parse("<<1,2>> X win").unwrap(), &m, opts).unwrap();
            let mut vars = Vec::new();
            let mut body = &d.formula;
            while let Node::ExistsProp(p, a) = body.node() {
                vars.push(p.clone());
                body = a;
            }
            let units = recognize_block(&m, &vars, body).expect("block");
            assert_eq!(units.len(), if opts.merge { 1 } else { 2 });
        }
    }

    #[test]
    fn nash_template_shape() {
        let goals: BTreeMap<Agent, Formula> = [(1, parse("F g1").unwrap())].into();
        let f = solution_concept(Template::Nash, &[1], &goals).unwrap();
        assert!(f.has_pref() && f.has_path_quant() && f.has_game());
        assert_eq!(
            solution_concept(Template::Secure, &[1, 2], &goals).unwrap_err(),
            TranslateError::MissingGoal(2)
        );
    }
}
