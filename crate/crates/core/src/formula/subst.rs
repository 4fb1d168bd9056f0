use std::collections::BTreeMap;

use thiserror::Error;

use super::{classify, print_formula, Class, ClassifyError, Formula, FreshVarSupply, Node, Sym};

/// Substitution target: a proposition or a path variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Prop(Sym),
    Path(Sym),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SubstError {
    #[error("proposition `{0}` can only be replaced by a state formula, got `{1}`")]
    PathForProp(String, String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

/// Simultaneous capture-avoiding substitution of free occurrences.
pub fn substitute(f: &Formula, map: &BTreeMap<Var, Formula>) -> Result<Formula, SubstError> {
    for (v, r) in map {
        if let Var::Prop(p) = v {
            if classify(r)? != Class::State {
                return Err(SubstError::PathForProp(p.to_string(), print_formula(r)));
            }
        }
    }
    if map.is_empty() {
        return Ok(f.clone());
    }
    let mut supply = FreshVarSupply::default();
    supply.reserve_formula(f);
    for r in map.values() {
        supply.reserve_formula(r);
    }
    let out = go(f, map, &mut supply);
    classify(&out)?;
    Ok(out)
}

/// Substitution on a formula known to be well-formed; panics never, skips checks.
pub(crate) fn substitute_unchecked(f: &Formula, map: &BTreeMap<Var, Formula>) -> Formula {
    if map.is_empty() {
        return f.clone();
    }
    let mut supply = FreshVarSupply::default();
    supply.reserve_formula(f);
    for r in map.values() {
        supply.reserve_formula(r);
    }
    go(f, map, &mut supply)
}

fn captures(map: &BTreeMap<Var, Formula>, body: &Formula, bound: &Var) -> bool {
    map.iter().any(|(v, r)| {
        let occurs = match v {
            Var::Prop(p) => body.free_props().contains(p),
            Var::Path(p) => body.free_path_vars().contains(p),
        };
        occurs
            && match bound {
                Var::Prop(b) => r.free_props().contains(b),
                Var::Path(b) => r.free_path_vars().contains(b),
            }
    })
}

fn binder(
    bound: Var,
    body: &Formula,
    map: &BTreeMap<Var, Formula>,
    supply: &mut FreshVarSupply,
) -> (Sym, Formula) {
    let mut inner = map.clone();
    inner.remove(&bound);
    let (name, mut body) = match &bound {
        Var::Prop(p) | Var::Path(p) => (p.clone(), body.clone()),
    };
    let mut name = name;
    if captures(&inner, &body, &bound) {
        let fresh = supply.fresh(&name);
        let (key, rep) = match &bound {
            Var::Prop(_) => (Var::Prop(name.clone()), Formula::from(Node::Atom(fresh.clone()))),
            Var::Path(_) => (Var::Path(name.clone()), Formula::from(Node::PathAtom(fresh.clone()))),
        };
        body = go(&body, &BTreeMap::from([(key, rep)]), supply);
        name = fresh;
    }
    (name, go(&body, &inner, supply))
}

fn go(f: &Formula, map: &BTreeMap<Var, Formula>, supply: &mut FreshVarSupply) -> Formula {
    use Node::*;
    if map.is_empty() {
        return f.clone();
    }
    match f.node() {
        Atom(p) => map.get(&Var::Prop(p.clone())).cloned().unwrap_or_else(|| f.clone()),
        PathAtom(p) => map.get(&Var::Path(p.clone())).cloned().unwrap_or_else(|| f.clone()),
        ExistsProp(p, a) => {
            let (n, b) = binder(Var::Prop(p.clone()), a, map, supply);
            ExistsProp(n, b).into()
        }
        ForallProp(p, a) => {
            let (n, b) = binder(Var::Prop(p.clone()), a, map, supply);
            ForallProp(n, b).into()
        }
        SimQuant(i, c, a) => {
            let (n, b) = binder(Var::Path(c.clone()), a, map, supply);
            SimQuant(*i, n, b).into()
        }
        SimForall(i, c, a) => {
            let (n, b) = binder(Var::Path(c.clone()), a, map, supply);
            SimForall(*i, n, b).into()
        }
        OneQuant(i, c, a) => {
            let (n, b) = binder(Var::Path(c.clone()), a, map, supply);
            OneQuant(*i, n, b).into()
        }
        _ => {
            let ch: Vec<Formula> = f.children().into_iter().map(|c| go(c, map, supply)).collect();
            if ch.is_empty() {
                f.clone()
            } else {
                f.with_children(ch)
            }
        }
    }
}

/// Convenience: replace one path variable.
pub fn subst_path(f: &Formula, v: &str, r: &Formula) -> Formula {
    substitute_unchecked(f, &BTreeMap::from([(Var::Path(super::sym(v)), r.clone())]))
}

/// Convenience: replace one proposition.
pub fn subst_prop(f: &Formula, p: &str, r: &Formula) -> Formula {
    substitute_unchecked(f, &BTreeMap::from([(Var::Prop(super::sym(p)), r.clone())]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse, sym};

    fn one(v: Var, r: &str) -> BTreeMap<Var, Formula> {
        BTreeMap::from([(v, parse(r).unwrap())])
    }

    #[test]
    fn bound_occurrences_untouched() {
        let f = parse("Es[1] ~p . E X ~p").unwrap();
        let g = substitute(&f, &one(Var::Path(sym("p")), "false")).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn free_occurrences_replaced() {
        let f = parse("X ~p").unwrap();
        let g = substitute(&f, &one(Var::Path(sym("p")), "false")).unwrap();
        assert_eq!(g, parse("X false").unwrap());
        let h = substitute(&parse("p & r").unwrap(), &one(Var::Prop(sym("p")), "q")).unwrap();
        assert_eq!(h, parse("q & r").unwrap());
    }

    #[test]
    fn capture_is_avoided() {
        let f = parse("exists q . (p & q)").unwrap();
        let g = substitute(&f, &one(Var::Prop(sym("p")), "q")).unwrap();
        assert_eq!(g, parse("exists q_1 . (q & q_1)").unwrap());
    }

    #[test]
    fn prop_needs_state_formula() {
        let r = substitute(&parse("p").unwrap(), &one(Var::Prop(sym("p")), "X q"));
        assert!(matches!(r, Err(SubstError::PathForProp(..))));
    }

    #[test]
    fn identity_map_is_identity() {
        let f = parse("exists q . E (p U q) & Es[1] ~c . E X ~c").unwrap();
        let id = BTreeMap::from([
            (Var::Prop(sym("p")), Formula::atom("p")),
            (Var::Prop(sym("q")), Formula::atom("q")),
        ]);
        assert_eq!(substitute(&f, &id).unwrap(), f);
    }
}
