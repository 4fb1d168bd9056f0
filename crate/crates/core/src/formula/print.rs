use super::{Coalition, Formula, Node};

const UNARY: u8 = 7;
const ATOM: u8 = 8;

fn prec(f: &Formula) -> u8 {
    use Node::*;
    match f.node() {
        Bot | Top | Atom(_) | PathAtom(_) => ATOM,
        ExistsProp(..) | ForallProp(..) | SimQuant(..) | SimForall(..) | OneQuant(..) => 0,
        Iff(..) => 1,
        Implies(..) => 2,
        Or(..) => 3,
        And(..) => 4,
        Pref(..) => 5,
        Until(..) | WeakUntil(..) => 6,
        _ => UNARY,
    }
}

fn agents(g: &Coalition) -> String {
    g.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
}

fn wrap(out: &mut String, f: &Formula, min: u8) {
    if prec(f) < min {
        out.push('(');
        write(out, f);
        out.push(')');
    } else {
        write(out, f);
    }
}

fn binary(out: &mut String, a: &Formula, op: &str, b: &Formula, lmin: u8, rmin: u8) {
    wrap(out, a, lmin);
    out.push(' ');
    out.push_str(op);
    out.push(' ');
    wrap(out, b, rmin);
}

fn unary(out: &mut String, op: &str, a: &Formula) {
    out.push_str(op);
    out.push(' ');
    wrap(out, a, UNARY);
}

fn write(out: &mut String, f: &Formula) {
    use Node::*;
    match f.node() {
        Bot => out.push_str("false"),
        Top => out.push_str("true"),
        Atom(p) => out.push_str(p),
        PathAtom(p) => {
            out.push('~');
            out.push_str(p);
        }
        Iff(a, b) => binary(out, a, "<->", b, 2, 2),
        Implies(a, b) => binary(out, a, "->", b, 3, 2),
        Or(a, b) => binary(out, a, "|", b, 3, 4),
        And(a, b) => binary(out, a, "&", b, 4, 5),
        Pref(v, i, a, b) => {
            let op = format!("{}[{}]", v.token(), i);
            binary(out, a, &op, b, 6, 6)
        }
        Until(a, b) => binary(out, a, "U", b, 7, 6),
        WeakUntil(a, b) => binary(out, a, "W", b, 7, 6),
        Not(a) => {
            out.push('!');
            wrap(out, a, UNARY);
        }
        Next(a) => unary(out, "X", a),
        Eventually(a) => unary(out, "F", a),
        Always(a) => unary(out, "G", a),
        ExistsPath(a) => unary(out, "E", a),
        ForallPath(a) => unary(out, "A", a),
        StratMod(g, a) => unary(out, &format!("<<{}>>", agents(g)), a),
        StratBox(g, a) => unary(out, &format!("[[{}]]", agents(g)), a),
        Relax(g, a) => unary(out, &format!("]{}[", agents(g)), a),
        ExistsProp(p, a) => {
            out.push_str(&format!("exists {p} . "));
            write(out, a);
        }
        ForallProp(p, a) => {
            out.push_str(&format!("forall {p} . "));
            write(out, a);
        }
        SimQuant(i, c, a) => {
            out.push_str(&format!("Es[{i}] ~{c} . "));
            write(out, a);
        }
        SimForall(i, c, a) => {
            out.push_str(&format!("As[{i}] ~{c} . "));
            write(out, a);
        }
        OneQuant(i, c, a) => {
            out.push_str(&format!("E1[{i}] ~{c} . "));
            write(out, a);
        }
    }
}

/// Render a formula in the concrete ASCII syntax accepted by [`super::parse`].
pub fn print_formula(f: &Formula) -> String {
    let mut out = String::new();
    write(&mut out, f);
    out
}

#[cfg(test)]
mod tests {
    use crate::formula::parse;

    #[test]
    fn prints_minimal_parens() {
        for s in [
            "a & b | c",
            "(a | b) & c",
            "a -> b -> c",
            "(a -> b) -> c",
            "X (a U b)",
            "X a U b",
            "<<1,2>> X p",
            "(exists p . p) & q",
            "!(a & b)",
            "a <ff[1] b & c",
            "(a <ff[1] b) <ea[2] c",
        ] {
            let f = parse(s).unwrap();
            assert_eq!(f.to_string(), s);
        }
    }
}
