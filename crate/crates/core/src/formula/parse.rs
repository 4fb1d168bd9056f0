use std::collections::BTreeSet;

use thiserror::Error;

use super::{classify, Agent, ClassifyError, Formula, Variant};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown agent {agent} at byte {pos}")]
    UnknownAgent { agent: Agent, pos: usize },
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    PathVar(String),
    Num(u32),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Bang,
    Amp,
    Bar,
    Arrow,
    Iff,
    LAngle2,
    RAngle2,
    Pref(Variant),
    SimQ,
    OneQ,
    SimAll,
    Upper(char),
    True,
    False,
    Exists,
    Forall,
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, pos: usize, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { pos, msg: msg.into() }
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s.as_bytes())
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            let start = self.pos;
            if self.pos >= self.src.len() {
                out.push((Tok::Eof, start));
                return Ok(out);
            }
            let c = self.src[self.pos] as char;
            let tok = match c {
                '(' => self.one(Tok::LParen),
                ')' => self.one(Tok::RParen),
                '[' => self.one(Tok::LBrack),
                ']' => self.one(Tok::RBrack),
                ',' => self.one(Tok::Comma),
                '.' => self.one(Tok::Dot),
                '!' => self.one(Tok::Bang),
                '&' => self.one(Tok::Amp),
                '|' => self.one(Tok::Bar),
                '-' if self.starts_with("->") => self.many(2, Tok::Arrow),
                '<' => {
                    if self.starts_with("<->") {
                        self.many(3, Tok::Iff)
                    } else if self.starts_with("<<") {
                        self.many(2, Tok::LAngle2)
                    } else if self.starts_with("<ff") {
                        self.many(3, Tok::Pref(Variant::FF))
                    } else if self.starts_with("<ea") {
                        self.many(3, Tok::Pref(Variant::EA))
                    } else if self.starts_with("<ae") {
                        self.many(3, Tok::Pref(Variant::AE))
                    } else if self.starts_with("<ee") {
                        self.many(3, Tok::Pref(Variant::EE))
                    } else {
                        return Err(self.err(start, "unexpected `<`"));
                    }
                }
                '>' => {
                    if self.starts_with(">>") {
                        self.many(2, Tok::RAngle2)
                    } else if self.starts_with(">ea") {
                        self.many(3, Tok::Pref(Variant::GEA))
                    } else if self.starts_with(">ae") {
                        self.many(3, Tok::Pref(Variant::GAE))
                    } else {
                        return Err(self.err(start, "unexpected `>`"));
                    }
                }
                '~' => {
                    self.pos += 1;
                    let id = self.ident();
                    if id.is_empty() {
                        return Err(self.err(start, "expected path variable name after `~`"));
                    }
                    Tok::PathVar(id)
                }
                '0'..='9' => {
                    let s = self.pos;
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                    let text = std::str::from_utf8(&self.src[s..self.pos]).unwrap();
                    Tok::Num(text.parse().map_err(|_| self.err(s, "number out of range"))?)
                }
                'a'..='z' => {
                    let id = self.ident();
                    match id.as_str() {
                        "true" => Tok::True,
                        "false" => Tok::False,
                        "exists" => Tok::Exists,
                        "forall" => Tok::Forall,
                        _ => Tok::Ident(id),
                    }
                }
                'E' if self.starts_with("Es[") => self.many(2, Tok::SimQ),
                'E' if self.starts_with("E1[") => self.many(2, Tok::OneQ),
                'A' if self.starts_with("As[") => self.many(2, Tok::SimAll),
                'X' | 'U' | 'F' | 'G' | 'W' | 'E' | 'A' => self.one(Tok::Upper(c)),
                _ => return Err(self.err(start, format!("unexpected character `{c}`"))),
            };
            out.push((tok, start));
        }
    }

    fn one(&mut self, t: Tok) -> Tok {
        self.pos += 1;
        t
    }

    fn many(&mut self, n: usize, t: Tok) -> Tok {
        self.pos += n;
        t
    }

    fn ident(&mut self) -> String {
        let s = self.pos;
        if self.pos < self.src.len() && self.src[self.pos].is_ascii_lowercase() {
            self.pos += 1;
            while self.pos < self.src.len() {
                let b = self.src[self.pos];
                if b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        String::from_utf8(self.src[s..self.pos].to_vec()).unwrap()
    }
}

struct Parser<'u> {
    toks: Vec<(Tok, usize)>,
    i: usize,
    universe: Option<&'u BTreeSet<Agent>>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> usize {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn agent(&mut self) -> Result<Agent, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(n) => {
                if let Some(u) = self.universe {
                    if !u.contains(&n) {
                        return Err(ParseError::UnknownAgent { agent: n, pos });
                    }
                }
                Ok(n)
            }
            _ => Err(ParseError::Syntax { pos, msg: "expected agent number".into() }),
        }
    }

    /// Comma-separated agent list terminated by `close` (possibly empty).
    fn agents_until(&mut self, close: &Tok) -> Result<Vec<Agent>, ParseError> {
        let mut out = Vec::new();
        if self.peek() == close {
            self.bump();
            return Ok(out);
        }
        loop {
            out.push(self.agent()?);
            match self.bump() {
                Tok::Comma => continue,
                t if &t == close => return Ok(out),
                _ => return self.err("expected `,` or end of agent list"),
            }
        }
    }

    fn indexed(&mut self) -> Result<Agent, ParseError> {
        self.expect(Tok::LBrack, "`[`")?;
        let a = self.agent()?;
        self.expect(Tok::RBrack, "`]`")?;
        Ok(a)
    }

    fn expr(&mut self, min: u8) -> Result<Formula, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let (prec, next_min) = match self.peek() {
                Tok::Iff => (1, 2),
                Tok::Arrow => (2, 2),
                Tok::Bar => (3, 4),
                Tok::Amp => (4, 5),
                Tok::Pref(_) => (5, 6),
                Tok::Upper('U') | Tok::Upper('W') => (6, 6),
                _ => break,
            };
            if prec < min {
                break;
            }
            let op = self.bump();
            let agent = if let Tok::Pref(_) = op { Some(self.indexed()?) } else { None };
            let rhs = self.expr(next_min)?;
            lhs = match op {
                Tok::Iff => Formula::iff(lhs, rhs),
                Tok::Arrow => Formula::implies(lhs, rhs),
                Tok::Bar => Formula::or(lhs, rhs),
                Tok::Amp => Formula::and(lhs, rhs),
                Tok::Pref(v) => Formula::pref(v, agent.unwrap(), lhs, rhs),
                Tok::Upper('U') => Formula::until(lhs, rhs),
                Tok::Upper('W') => Formula::weak_until(lhs, rhs),
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn path_binder(&mut self) -> Result<(Agent, String), ParseError> {
        let a = self.indexed()?;
        let v = match self.bump() {
            Tok::PathVar(v) => v,
            _ => return self.err("expected path variable `~name`"),
        };
        self.expect(Tok::Dot, "`.`")?;
        Ok((a, v))
    }

    fn prefix(&mut self) -> Result<Formula, ParseError> {
        let t = self.bump();
        Ok(match t {
            Tok::True => Formula::top(),
            Tok::False => Formula::bot(),
            Tok::Ident(p) => Formula::atom(&p),
            Tok::PathVar(p) => Formula::path_atom(&p),
            Tok::LParen => {
                let f = self.expr(0)?;
                self.expect(Tok::RParen, "`)`")?;
                f
            }
            Tok::Bang => Formula::not(self.prefix()?),
            Tok::Upper('X') => Formula::next(self.prefix()?),
            Tok::Upper('F') => Formula::eventually(self.prefix()?),
            Tok::Upper('G') => Formula::always(self.prefix()?),
            Tok::Upper('E') => Formula::exists(self.prefix()?),
            Tok::Upper('A') => Formula::forall(self.prefix()?),
            Tok::LAngle2 => {
                let g = self.agents_until(&Tok::RAngle2)?;
                Formula::strat(g, self.prefix()?)
            }
            Tok::RBrack => {
                let g = self.agents_until(&Tok::LBrack)?;
                Formula::relax(g, self.prefix()?)
            }
            Tok::LBrack => {
                self.expect(Tok::LBrack, "`[[`")?;
                let g = self.agents_until(&Tok::RBrack)?;
                self.expect(Tok::RBrack, "`]]`")?;
                Formula::strat_box(g, self.prefix()?)
            }
            Tok::Exists | Tok::Forall => {
                let p = match self.bump() {
                    Tok::Ident(p) => p,
                    _ => return self.err("expected proposition name after quantifier"),
                };
                self.expect(Tok::Dot, "`.`")?;
                let body = self.expr(0)?;
                if t == Tok::Exists {
                    Formula::exists_prop(&p, body)
                } else {
                    Formula::forall_prop(&p, body)
                }
            }
            Tok::SimQ | Tok::OneQ | Tok::SimAll => {
                let (a, v) = self.path_binder()?;
                let body = self.expr(0)?;
                match t {
                    Tok::SimQ => Formula::sim_quant(a, &v, body),
                    Tok::OneQ => Formula::one_quant(a, &v, body),
                    _ => Formula::sim_forall(a, &v, body),
                }
            }
            _ => {
                self.i = self.i.saturating_sub(1);
                return self.err("expected formula");
            }
        })
    }
}

fn parse_inner(text: &str, universe: Option<&BTreeSet<Agent>>) -> Result<Formula, ParseError> {
    let toks = Lexer { src: text.as_bytes(), pos: 0 }.tokens()?;
    let mut p = Parser { toks, i: 0, universe };
    let f = p.expr(0)?;
    if *p.peek() != Tok::Eof {
        return p.err("unexpected trailing input");
    }
    classify(&f)?;
    Ok(f)
}

/// Parse a formula, checking every coalition and preference index against `universe`.
pub fn parse_formula(text: &str, universe: &BTreeSet<Agent>) -> Result<Formula, ParseError> {
    parse_inner(text, Some(universe))
}

/// Parse without an agent universe.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    parse_inner(text, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Node;

    #[test]
    fn basic_shapes() {
        assert_eq!(parse("p -> false").unwrap(), Formula::implies(Formula::atom("p"), Formula::bot()));
        let f = parse("<<1,2>> X p").unwrap();
        assert_eq!(f, Formula::strat([1, 2], Formula::next(Formula::atom("p"))));
        let g = parse("(X X (!p & X p)) <ff[1] (X (!p & X p))").unwrap();
        assert!(matches!(g.node(), Node::Pref(Variant::FF, 1, _, _)));
    }

    #[test]
    fn precedence() {
        assert_eq!(parse("a & b | c").unwrap(), parse("(a & b) | c").unwrap());
        assert_eq!(parse("a -> b -> c").unwrap(), parse("a -> (b -> c)").unwrap());
        assert_eq!(parse("a & b <ff[1] c").unwrap(), parse("a & (b <ff[1] c)").unwrap());
        assert_eq!(parse("X a U b").unwrap(), parse("(X a) U b").unwrap());
        assert_eq!(parse("a U b U c").unwrap(), parse("a U (b U c)").unwrap());
        assert_eq!(parse("EX p").unwrap(), parse("E X p").unwrap());
    }

    #[test]
    fn agents_checked() {
        let u: BTreeSet<Agent> = [1, 2].into_iter().collect();
        assert!(parse_formula("<<1,2>> X p", &u).is_ok());
        assert!(matches!(
            parse_formula("<<3>> X p", &u),
            Err(ParseError::UnknownAgent { agent: 3, .. })
        ));
        assert!(matches!(parse_formula("]1,2[ <<>> F p", &u), Ok(_)));
        assert!(parse_formula("[[1]] X p", &u).is_ok());
    }

    #[test]
    fn errors_carry_position() {
        match parse("p & & q") {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        assert!(parse("exists p . X p").is_err());
        assert!(parse("p q").is_err());
    }

    #[test]
    fn path_quantifiers() {
        let f = parse("As[1] ~c . (g <ea[1] ~c -> [[1]] X !~c)").unwrap();
        assert!(matches!(f.node(), Node::SimForall(1, _, _)));
        let g = parse("E1[2] ~p . E X ~p").unwrap();
        assert!(matches!(g.node(), Node::OneQuant(2, _, _)));
    }
}
