//! Constant-folding constructors. Every rule here is an equivalence on
//! serial models, so rewriters may use them freely.

use crate::formula::{Formula, Node};

pub fn is_top(f: &Formula) -> bool {
    match f.node() {
        Node::Top => true,
        Node::Implies(a, b) => matches!(a.node(), Node::Bot) && matches!(b.node(), Node::Bot),
        _ => false,
    }
}

pub fn is_bot(f: &Formula) -> bool {
    matches!(f.node(), Node::Bot)
}

pub fn not(a: Formula) -> Formula {
    if is_top(&a) {
        return Formula::bot();
    }
    if is_bot(&a) {
        return Formula::top();
    }
    if let Node::Not(x) = a.node() {
        return x.clone();
    }
    Formula::not(a)
}

pub fn and(a: Formula, b: Formula) -> Formula {
    if is_bot(&a) || is_bot(&b) {
        return Formula::bot();
    }
    if is_top(&a) {
        return b;
    }
    if is_top(&b) || a == b {
        return a;
    }
    Formula::and(a, b)
}

pub fn or(a: Formula, b: Formula) -> Formula {
    if is_top(&a) || is_top(&b) {
        return Formula::top();
    }
    if is_bot(&a) {
        return b;
    }
    if is_bot(&b) || a == b {
        return a;
    }
    Formula::or(a, b)
}

pub fn implies(a: Formula, b: Formula) -> Formula {
    if is_bot(&a) || is_top(&b) {
        return Formula::top();
    }
    if is_top(&a) {
        return b;
    }
    if is_bot(&b) {
        return not(a);
    }
    Formula::implies(a, b)
}

pub fn iff(a: Formula, b: Formula) -> Formula {
    if is_top(&a) {
        return b;
    }
    if is_top(&b) {
        return a;
    }
    if is_bot(&a) {
        return not(b);
    }
    if is_bot(&b) {
        return not(a);
    }
    Formula::iff(a, b)
}

pub fn and_all(items: impl IntoIterator<Item = Formula>) -> Formula {
    let mut acc = Formula::top();
    for f in items {
        acc = and(acc, f);
        if is_bot(&acc) {
            break;
        }
    }
    acc
}

pub fn or_all(items: impl IntoIterator<Item = Formula>) -> Formula {
    let mut acc = Formula::bot();
    for f in items {
        acc = or(acc, f);
        if is_top(&acc) {
            break;
        }
    }
    acc
}

pub fn next(a: Formula) -> Formula {
    if is_bot(&a) || is_top(&a) {
        return a;
    }
    Formula::next(a)
}

pub fn until(a: Formula, b: Formula) -> Formula {
    if is_bot(&b) || is_top(&b) {
        return b;
    }
    if is_bot(&a) {
        return b;
    }
    Formula::until(a, b)
}

pub fn exists(a: Formula) -> Formula {
    if is_bot(&a) || is_top(&a) {
        return a;
    }
    Formula::exists(a)
}

pub fn forall(a: Formula) -> Formula {
    if is_bot(&a) || is_top(&a) {
        return a;
    }
    Formula::forall(a)
}

/// `E X a`.
pub fn ex(a: Formula) -> Formula {
    exists(next(a))
}

/// `A X a`.
pub fn ax(a: Formula) -> Formula {
    forall(next(a))
}

/// `A G a`.
pub fn ag(a: Formula) -> Formula {
    if is_top(&a) {
        return a;
    }
    Formula::forall(Formula::always(a))
}

/// Rebuild a formula bottom-up through the folding constructors.
pub fn simplify(f: &Formula) -> Formula {
    use Node::*;
    f.map_bottom_up(&mut |g| match g.node() {
        Not(a) => not(a.clone()),
        And(a, b) => and(a.clone(), b.clone()),
        Or(a, b) => or(a.clone(), b.clone()),
        Implies(a, b) => implies(a.clone(), b.clone()),
        Iff(a, b) => iff(a.clone(), b.clone()),
        Next(a) => next(a.clone()),
        Until(a, b) => until(a.clone(), b.clone()),
        ExistsPath(a) => exists(a.clone()),
        ForallPath(a) => forall(a.clone()),
        Eventually(a) if is_bot(a) || is_top(a) => a.clone(),
        Always(a) if is_bot(a) || is_top(a) => a.clone(),
        _ => g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    #[test]
    fn folds_constants() {
        let f = parse("q | false & X (~v U q)").unwrap();
        assert_eq!(simplify(&f), parse("q").unwrap());
        assert_eq!(simplify(&parse("!!p").unwrap()), parse("p").unwrap());
        assert_eq!(simplify(&parse("E X false -> r").unwrap()), Formula::top());
    }
}
