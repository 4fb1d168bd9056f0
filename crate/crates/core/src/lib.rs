//! Formula AST, translations and model-checking oracles for alternating-time
//! temporal logic with strategy contexts, preference and path-set quantifiers.

pub mod atlsc;
pub mod check;
pub mod formula;
pub mod gen;
pub mod gnf;
pub mod models;
pub mod path_quant;
pub mod pref_elim;
pub mod simp;

pub use formula::{
    classify, desugar, parse, parse_formula, print_formula, substitute, sym, Agent, Class,
    Coalition, Formula, FreshVarSupply, Node, ParseError, Sym, Var, Variant,
};
