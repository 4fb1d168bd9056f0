//! Unified formula AST for LTL, CTL*, QCTL* and ATLSC* with preference.
//!
//! Core variants are the ones every engine understands. The remaining
//! variants are surface sugar produced by the parser and removed by
//! [`desugar`].

mod desugar;
mod fresh;
mod parse;
mod print;
mod subst;

pub use desugar::desugar;
pub use fresh::FreshVarSupply;
pub use parse::{parse, parse_formula, ParseError};
pub use print::print_formula;
pub use subst::{subst_path, subst_prop, substitute, SubstError, Var};

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use thiserror::Error;

pub type Sym = Arc<str>;
pub type Agent = u32;
pub type Coalition = BTreeSet<Agent>;

/// Preference operator variants: `<ff`, `<ea`, `<ae`, `<ee`, `>ea`, `>ae`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    FF,
    EA,
    AE,
    EE,
    GEA,
    GAE,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::FF,
        Variant::EA,
        Variant::AE,
        Variant::EE,
        Variant::GEA,
        Variant::GAE,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Variant::FF => "<ff",
            Variant::EA => "<ea",
            Variant::AE => "<ae",
            Variant::EE => "<ee",
            Variant::GEA => ">ea",
            Variant::GAE => ">ae",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    // core
    Bot,
    Atom(Sym),
    PathAtom(Sym),
    Implies(Formula, Formula),
    ExistsPath(Formula),
    ExistsProp(Sym, Formula),
    Next(Formula),
    Until(Formula, Formula),
    StratMod(Coalition, Formula),
    Relax(Coalition, Formula),
    Pref(Variant, Agent, Formula, Formula),
    SimQuant(Agent, Sym, Formula),
    OneQuant(Agent, Sym, Formula),
    // sugar
    Top,
    Not(Formula),
    And(Formula, Formula),
    Or(Formula, Formula),
    Iff(Formula, Formula),
    ForallPath(Formula),
    ForallProp(Sym, Formula),
    Eventually(Formula),
    Always(Formula),
    WeakUntil(Formula, Formula),
    StratBox(Coalition, Formula),
    SimForall(Agent, Sym, Formula),
}

/// Shared, immutable formula node. Equality, ordering and hashing are structural.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Formula(Arc<Node>);

impl Deref for Formula {
    type Target = Node;
    fn deref(&self) -> &Node {
        &self.0
    }
}

impl From<Node> for Formula {
    fn from(n: Node) -> Self {
        Formula(Arc::new(n))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_formula(self))
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_formula(self))
    }
}

pub fn sym(s: &str) -> Sym {
    Arc::from(s)
}

// Constructors. These build the node literally; use the helpers in
// `simp` when constant folding is wanted.
impl Formula {
    pub fn bot() -> Self {
        Node::Bot.into()
    }
    pub fn top() -> Self {
        Node::Top.into()
    }
    pub fn atom(p: &str) -> Self {
        Node::Atom(sym(p)).into()
    }
    pub fn path_atom(p: &str) -> Self {
        Node::PathAtom(sym(p)).into()
    }
    pub fn implies(a: Formula, b: Formula) -> Self {
        Node::Implies(a, b).into()
    }
    pub fn not(a: Formula) -> Self {
        Node::Not(a).into()
    }
    pub fn and(a: Formula, b: Formula) -> Self {
        Node::And(a, b).into()
    }
    pub fn or(a: Formula, b: Formula) -> Self {
        Node::Or(a, b).into()
    }
    pub fn iff(a: Formula, b: Formula) -> Self {
        Node::Iff(a, b).into()
    }
    pub fn exists(a: Formula) -> Self {
        Node::ExistsPath(a).into()
    }
    pub fn forall(a: Formula) -> Self {
        Node::ForallPath(a).into()
    }
    pub fn exists_prop(p: &str, a: Formula) -> Self {
        Node::ExistsProp(sym(p), a).into()
    }
    pub fn forall_prop(p: &str, a: Formula) -> Self {
        Node::ForallProp(sym(p), a).into()
    }
    pub fn next(a: Formula) -> Self {
        Node::Next(a).into()
    }
    pub fn until(a: Formula, b: Formula) -> Self {
        Node::Until(a, b).into()
    }
    pub fn eventually(a: Formula) -> Self {
        Node::Eventually(a).into()
    }
    pub fn always(a: Formula) -> Self {
        Node::Always(a).into()
    }
    pub fn weak_until(a: Formula, b: Formula) -> Self {
        Node::WeakUntil(a, b).into()
    }
    pub fn strat(g: impl IntoIterator<Item = Agent>, a: Formula) -> Self {
        Node::StratMod(g.into_iter().collect(), a).into()
    }
    pub fn strat_box(g: impl IntoIterator<Item = Agent>, a: Formula) -> Self {
        Node::StratBox(g.into_iter().collect(), a).into()
    }
    pub fn relax(g: impl IntoIterator<Item = Agent>, a: Formula) -> Self {
        Node::Relax(g.into_iter().collect(), a).into()
    }
    pub fn pref(v: Variant, i: Agent, a: Formula, b: Formula) -> Self {
        Node::Pref(v, i, a, b).into()
    }
    pub fn sim_quant(i: Agent, c: &str, a: Formula) -> Self {
        Node::SimQuant(i, sym(c), a).into()
    }
    pub fn sim_forall(i: Agent, c: &str, a: Formula) -> Self {
        Node::SimForall(i, sym(c), a).into()
    }
    pub fn one_quant(i: Agent, c: &str, a: Formula) -> Self {
        Node::OneQuant(i, sym(c), a).into()
    }

    /// Left-nested conjunction; empty input is `true`.
    pub fn and_all(items: impl IntoIterator<Item = Formula>) -> Self {
        items
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or_else(Formula::top)
    }

    /// Left-nested disjunction; empty input is `false`.
    pub fn or_all(items: impl IntoIterator<Item = Formula>) -> Self {
        items
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or_else(Formula::bot)
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn ptr_eq(&self, other: &Formula) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Immediate subformulas, left to right.
    pub fn children(&self) -> Vec<&Formula> {
        use Node::*;
        match self.node() {
            Bot | Top | Atom(_) | PathAtom(_) => vec![],
            Not(a) | ExistsPath(a) | ForallPath(a) | ExistsProp(_, a) | ForallProp(_, a)
            | Next(a) | Eventually(a) | Always(a) | StratMod(_, a) | StratBox(_, a)
            | Relax(_, a) | SimQuant(_, _, a) | SimForall(_, _, a) | OneQuant(_, _, a) => {
                vec![a]
            }
            Implies(a, b) | And(a, b) | Or(a, b) | Iff(a, b) | Until(a, b)
            | WeakUntil(a, b) | Pref(_, _, a, b) => vec![a, b],
        }
    }

    /// Rebuild this node with new children (same arity and order as `children`).
    pub fn with_children(&self, mut ch: Vec<Formula>) -> Formula {
        use Node::*;
        let mut take = || ch.remove(0);
        let n = match self.node() {
            Bot | Top | Atom(_) | PathAtom(_) => return self.clone(),
            Not(_) => Not(take()),
            ExistsPath(_) => ExistsPath(take()),
            ForallPath(_) => ForallPath(take()),
            ExistsProp(p, _) => ExistsProp(p.clone(), take()),
            ForallProp(p, _) => ForallProp(p.clone(), take()),
            Next(_) => Next(take()),
            Eventually(_) => Eventually(take()),
            Always(_) => Always(take()),
            StratMod(g, _) => StratMod(g.clone(), take()),
            StratBox(g, _) => StratBox(g.clone(), take()),
            Relax(g, _) => Relax(g.clone(), take()),
            SimQuant(i, c, _) => SimQuant(*i, c.clone(), take()),
            SimForall(i, c, _) => SimForall(*i, c.clone(), take()),
            OneQuant(i, c, _) => OneQuant(*i, c.clone(), take()),
            Implies(..) => {
                let a = take();
                Implies(a, take())
            }
            And(..) => {
                let a = take();
                And(a, take())
            }
            Or(..) => {
                let a = take();
                Or(a, take())
            }
            Iff(..) => {
                let a = take();
                Iff(a, take())
            }
            Until(..) => {
                let a = take();
                Until(a, take())
            }
            WeakUntil(..) => {
                let a = take();
                WeakUntil(a, take())
            }
            Pref(v, i, ..) => {
                let a = take();
                Pref(*v, *i, a, take())
            }
        };
        n.into()
    }

    /// Bottom-up rewrite: `f` sees each node after its children were rewritten.
    pub fn map_bottom_up(&self, f: &mut dyn FnMut(Formula) -> Formula) -> Formula {
        let ch: Vec<Formula> = self.children().into_iter().map(|c| c.map_bottom_up(f)).collect();
        let rebuilt = if ch.is_empty() { self.clone() } else { self.with_children(ch) };
        f(rebuilt)
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut dyn FnMut(&Formula)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    pub fn any(&self, pred: &dyn Fn(&Node) -> bool) -> bool {
        pred(self.node()) || self.children().into_iter().any(|c| c.any(pred))
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(|c| c.size()).sum::<usize>()
    }

    /// Height of the AST (an atom has depth 0).
    pub fn depth(&self) -> usize {
        self.children()
            .into_iter()
            .map(|c| c.depth() + 1)
            .max()
            .unwrap_or(0)
    }

    /// Nesting depth of temporal operators (X, U, F, G, W).
    pub fn modal_depth(&self) -> usize {
        use Node::*;
        let inner = self
            .children()
            .into_iter()
            .map(|c| c.modal_depth())
            .max()
            .unwrap_or(0);
        match self.node() {
            Next(_) | Until(..) | Eventually(_) | Always(_) | WeakUntil(..) => inner + 1,
            _ => inner,
        }
    }

    /// Every proposition name occurring in the formula, bound or free.
    pub fn atoms(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        self.visit(&mut |g| {
            if let Node::Atom(p) = g.node() {
                out.insert(p.clone());
            }
        });
        out
    }

    pub fn free_props(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        free_vars(self, &mut Vec::new(), &mut out, false);
        out
    }

    pub fn free_path_vars(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        free_vars(self, &mut Vec::new(), &mut out, true);
        out
    }

    /// True for formulas built from atoms, constants and boolean connectives only.
    pub fn is_propositional(&self) -> bool {
        use Node::*;
        match self.node() {
            Bot | Top | Atom(_) => true,
            Not(a) => a.is_propositional(),
            Implies(a, b) | And(a, b) | Or(a, b) | Iff(a, b) => {
                a.is_propositional() && b.is_propositional()
            }
            _ => false,
        }
    }

    /// True for LTL formulas: atoms, constants, boolean connectives and temporal operators.
    pub fn is_ltl(&self) -> bool {
        use Node::*;
        match self.node() {
            Bot | Top | Atom(_) => true,
            Not(a) | Next(a) | Eventually(a) | Always(a) => a.is_ltl(),
            Implies(a, b) | And(a, b) | Or(a, b) | Iff(a, b) | Until(a, b) | WeakUntil(a, b) => {
                a.is_ltl() && b.is_ltl()
            }
            _ => false,
        }
    }

    pub fn has_pref(&self) -> bool {
        self.any(&|n| matches!(n, Node::Pref(..)))
    }

    pub fn has_path_quant(&self) -> bool {
        self.any(&|n| {
            matches!(
                n,
                Node::SimQuant(..) | Node::SimForall(..) | Node::OneQuant(..) | Node::PathAtom(_)
            )
        })
    }

    pub fn has_game(&self) -> bool {
        self.any(&|n| matches!(n, Node::StratMod(..) | Node::StratBox(..) | Node::Relax(..)))
    }

    pub fn has_prop_quant(&self) -> bool {
        self.any(&|n| matches!(n, Node::ExistsProp(..) | Node::ForallProp(..)))
    }

    pub fn is_core(&self) -> bool {
        !self.any(&|n| {
            use Node::*;
            matches!(
                n,
                Top | Not(_)
                    | And(..)
                    | Or(..)
                    | Iff(..)
                    | ForallPath(_)
                    | ForallProp(..)
                    | Eventually(_)
                    | Always(_)
                    | WeakUntil(..)
                    | StratBox(..)
                    | SimForall(..)
            )
        })
    }

    /// Agents that index a `Pref` node or a path-set quantifier.
    pub fn pref_agents(&self) -> BTreeSet<Agent> {
        let mut out = BTreeSet::new();
        self.visit(&mut |g| match g.node() {
            Node::Pref(_, i, ..) | Node::SimQuant(i, ..) | Node::SimForall(i, ..) | Node::OneQuant(i, ..) => {
                out.insert(*i);
            }
            _ => {}
        });
        out
    }

    /// Agents mentioned anywhere (coalitions, preference indices).
    pub fn agents(&self) -> BTreeSet<Agent> {
        let mut out = self.pref_agents();
        self.visit(&mut |g| match g.node() {
            Node::StratMod(c, _) | Node::StratBox(c, _) | Node::Relax(c, _) => {
                out.extend(c.iter().copied())
            }
            _ => {}
        });
        out
    }
}

fn free_vars(f: &Formula, bound: &mut Vec<Sym>, out: &mut BTreeSet<Sym>, path: bool) {
    use Node::*;
    match f.node() {
        Atom(p) if !path => {
            if !bound.contains(p) {
                out.insert(p.clone());
            }
        }
        PathAtom(p) if path => {
            if !bound.contains(p) {
                out.insert(p.clone());
            }
        }
        ExistsProp(p, a) | ForallProp(p, a) if !path => {
            bound.push(p.clone());
            free_vars(a, bound, out, path);
            bound.pop();
        }
        SimQuant(_, c, a) | SimForall(_, c, a) | OneQuant(_, c, a) if path => {
            bound.push(c.clone());
            free_vars(a, bound, out, path);
            bound.pop();
        }
        _ => {
            for c in f.children() {
                free_vars(c, bound, out, path);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Class {
    State,
    Path,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("body of `{0}` must be a state formula, found path formula `{1}`")]
    PathBody(&'static str, String),
}

/// Classify a formula as state- or path-level.
pub fn classify(f: &Formula) -> Result<Class, ClassifyError> {
    use Node::*;
    let state_body = |name: &'static str, a: &Formula| -> Result<Class, ClassifyError> {
        match classify(a)? {
            Class::State => Ok(Class::State),
            Class::Path => Err(ClassifyError::PathBody(name, print_formula(a))),
        }
    };
    match f.node() {
        Bot | Top | Atom(_) => Ok(Class::State),
        PathAtom(_) => Ok(Class::Path),
        Not(a) => classify(a),
        Implies(a, b) | And(a, b) | Or(a, b) | Iff(a, b) => {
            let (x, y) = (classify(a)?, classify(b)?);
            Ok(if x == Class::State && y == Class::State { Class::State } else { Class::Path })
        }
        ExistsPath(a) | ForallPath(a) | StratMod(_, a) | StratBox(_, a) => {
            classify(a)?;
            Ok(Class::State)
        }
        Pref(_, _, a, b) => {
            classify(a)?;
            classify(b)?;
            Ok(Class::State)
        }
        ExistsProp(..) | ForallProp(..) => state_body("exists", f.children()[0]),
        Relax(_, a) => state_body("relax", a),
        SimQuant(_, _, a) | SimForall(_, _, a) | OneQuant(_, _, a) => state_body("path quantifier", a),
        Next(a) | Eventually(a) | Always(a) => {
            classify(a)?;
            Ok(Class::Path)
        }
        Until(a, b) | WeakUntil(a, b) => {
            classify(a)?;
            classify(b)?;
            Ok(Class::Path)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&Formula::atom("p")), Ok(Class::State));
        let u = Formula::until(Formula::atom("p"), Formula::atom("q"));
        assert_eq!(classify(&u), Ok(Class::Path));
        let pr = Formula::pref(Variant::FF, 1, u.clone(), Formula::atom("q"));
        assert_eq!(classify(&pr), Ok(Class::State));
        let bad = Formula::relax([1], Formula::next(Formula::atom("p")));
        assert!(classify(&bad).is_err());
    }

    #[test]
    fn depths() {
        let f = parse("X (p U X q) & r").unwrap();
        assert_eq!(f.modal_depth(), 3);
        assert_eq!(f.depth(), 4);
    }

    #[test]
    fn free_variables_respect_binders() {
        let f = parse("exists p . (p & q) & Es[1] ~c . X ~c & ~d").unwrap_err();
        // the body of a path quantifier must be a state formula
        assert!(f.to_string().contains("state formula"));
        let g = parse("(exists p . p & q) & (Es[1] ~c . E X (~c & ~d))").unwrap();
        assert_eq!(g.free_props().into_iter().collect::<Vec<_>>(), vec![sym("q")]);
        assert_eq!(g.free_path_vars().into_iter().collect::<Vec<_>>(), vec![sym("d")]);
    }
}
