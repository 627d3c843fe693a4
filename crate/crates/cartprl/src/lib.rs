//! Concrete syntax, signature checking, an interactive loop and a session
//! server on top of `cartprl-core`.

pub mod check;
pub mod lexer;
pub mod parser;
pub mod repl;
pub mod server;

pub use check::{check_signature, CheckReport, Outcome};
pub use parser::{parse_signature, parse_tactic, parse_term, ParseError, Signature};
