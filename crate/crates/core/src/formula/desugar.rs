use super::{Formula, Node};

/// Rewrite surface sugar into the core variants.
///
/// `true = false -> false`, `!a = a -> false`, `a & b = !(a -> !b)`,
/// `a | b = !a -> b`, `F a = true U a`, `G a = !F !a`,
/// `a W b = (a U b) | G a`, `A = !E!`, `[[G]] = !<<G>>!`, `As = !Es!`.
pub fn desugar(f: &Formula) -> Formula {
    f.map_bottom_up(&mut |g| step(&g))
}

fn not(a: Formula) -> Formula {
    Formula::implies(a, Formula::bot())
}

fn top() -> Formula {
    Formula::implies(Formula::bot(), Formula::bot())
}

fn or(a: Formula, b: Formula) -> Formula {
    Formula::implies(not(a), b)
}

fn and(a: Formula, b: Formula) -> Formula {
    not(Formula::implies(a, not(b)))
}

fn eventually(a: Formula) -> Formula {
    Formula::until(top(), a)
}

fn always(a: Formula) -> Formula {
    not(eventually(not(a)))
}

// Children are already core when this runs.
fn step(g: &Formula) -> Formula {
    use Node::*;
    match g.node() {
        Top => top(),
        Not(a) => not(a.clone()),
        And(a, b) => and(a.clone(), b.clone()),
        Or(a, b) => or(a.clone(), b.clone()),
        Iff(a, b) => and(
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b.clone(), a.clone()),
        ),
        ForallPath(a) => not(Formula::exists(not(a.clone()))),
        ForallProp(p, a) => not(Node::ExistsProp(p.clone(), not(a.clone())).into()),
        Eventually(a) => eventually(a.clone()),
        Always(a) => always(a.clone()),
        WeakUntil(a, b) => or(Formula::until(a.clone(), b.clone()), always(a.clone())),
        StratBox(c, a) => not(Node::StratMod(c.clone(), not(a.clone())).into()),
        SimForall(i, c, a) => not(Node::SimQuant(*i, c.clone(), not(a.clone())).into()),
        _ => g.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    #[test]
    fn examples() {
        assert_eq!(desugar(&parse("!p").unwrap()), parse("p -> false").unwrap());
        assert_eq!(
            desugar(&parse("F b").unwrap()),
            parse("(false -> false) U b").unwrap()
        );
        let f = desugar(&parse("As[1] ~c . a").unwrap());
        assert_eq!(f, parse("(Es[1] ~c . (a -> false)) -> false").unwrap());
    }

    #[test]
    fn idempotent_and_core() {
        let f = parse("A G (p W q) & [[1]] X !p | (a <-> b) & forall r . r").unwrap();
        let d = desugar(&f);
        assert!(d.is_core());
        assert_eq!(desugar(&d), d);
    }
}
