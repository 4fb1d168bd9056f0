use std::collections::BTreeSet;

use super::{sym, Formula, Node, Sym};

/// Supply of names that avoid a reserved vocabulary and every earlier result.
#[derive(Debug, Clone, Default)]
pub struct FreshVarSupply {
    counter: u64,
    reserved: BTreeSet<Sym>,
}

impl FreshVarSupply {
    pub fn new(reserved: impl IntoIterator<Item = Sym>) -> Self {
        FreshVarSupply { counter: 0, reserved: reserved.into_iter().collect() }
    }

    /// Reserve every proposition and path-variable name used in `f`.
    pub fn reserve_formula(&mut self, f: &Formula) {
        f.visit(&mut |g| match g.node() {
            Node::Atom(p) | Node::PathAtom(p) | Node::ExistsProp(p, _) | Node::ForallProp(p, _) => {
                self.reserved.insert(p.clone());
            }
            Node::SimQuant(_, c, _) | Node::SimForall(_, c, _) | Node::OneQuant(_, c, _) => {
                self.reserved.insert(c.clone());
            }
            _ => {}
        });
    }

    pub fn reserve(&mut self, name: &str) {
        self.reserved.insert(sym(name));
    }

    pub fn is_reserved(&self, name: &str) -> bool {
        self.reserved.contains(name)
    }

    /// A new name `base_N`, unique within this supply.
    pub fn fresh(&mut self, base: &str) -> Sym {
        loop {
            self.counter += 1;
            let cand = format!("{base}_{}", self.counter);
            if !self.reserved.contains(cand.as_str()) {
                let s = sym(&cand);
                self.reserved.insert(s.clone());
                return s;
            }
        }
    }

    /// Use `name` itself if still free, otherwise a suffixed variant.
    pub fn claim(&mut self, name: &str) -> Sym {
        if self.reserved.contains(name) {
            self.fresh(name)
        } else {
            let s = sym(name);
            self.reserved.insert(s.clone());
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn never_repeats_or_collides() {
        let mut s = FreshVarSupply::new([sym("q_1"), sym("q_3")]);
        let a = s.fresh("q");
        let b = s.fresh("q");
        let c = s.fresh("q");
        assert_eq!(&*a, "q_2");
        assert_eq!(&*b, "q_4");
        assert_eq!(&*c, "q_5");
        assert_eq!(&*s.claim("r"), "r");
        assert_ne!(&*s.claim("r"), "r");
    }
}
