//! Recursive-descent parser for terms, tactic scripts and signature files.
//!
//! Terms are parsed with names and closed at each binder, so the result is
//! locally nameless. References to earlier `def`s are replaced by their
//! bodies, and `tactic` aliases by their scripts, during parsing.

use std::collections::BTreeMap;

use cartprl_core::pretty::KEYWORDS;
use cartprl_core::refiner::{rule_info, ArgKind, RuleApplication, RuleArg};
use cartprl_core::syntax::{DimExpr, Name, Term};
use cartprl_core::tactics::{Tactic, DEFAULT_AUTO_DEPTH};
use thiserror::Error;

use crate::lexer::{lex, Pos, Tok};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: expected {expected}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub expected: String,
}

impl ParseError {
    pub fn new(pos: Pos, expected: impl Into<String>) -> ParseError {
        ParseError {
            line: pos.line,
            col: pos.col,
            expected: expected.into(),
        }
    }

    pub fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeclKind {
    Def { ty: Term, body: Term },
    Thm { statement: Term, script: Tactic },
    TacticDef(Tactic),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decl {
    pub name: String,
    pub pos: Pos,
    pub kind: DeclKind,
}

/// Declarations in file order, with references already expanded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub decls: Vec<Decl>,
}

impl Signature {
    pub fn get(&self, name: &str) -> Option<&Decl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn theorem(&self, name: &str) -> Option<(&Term, &Tactic)> {
        match &self.get(name)?.kind {
            DeclKind::Thm { statement, script } => Some((statement, script)),
            _ => None,
        }
    }

    pub fn theorem_names(&self) -> Vec<&str> {
        self.decls
            .iter()
            .filter(|d| matches!(d.kind, DeclKind::Thm { .. }))
            .map(|d| d.name.as_str())
            .collect()
    }

    fn scope(&self) -> Scope {
        let mut s = Scope::default();
        for d in &self.decls {
            match &d.kind {
                DeclKind::Def { body, .. } => {
                    s.defs.insert(d.name.clone(), body.clone());
                }
                DeclKind::TacticDef(t) => {
                    s.tactics.insert(d.name.clone(), t.clone());
                }
                DeclKind::Thm { .. } => {}
            }
        }
        s
    }
}

#[derive(Default)]
struct Scope {
    defs: BTreeMap<String, Term>,
    tactics: BTreeMap<String, Tactic>,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    k: usize,
    scope: Scope,
    vars: Vec<String>,
    dims: Vec<String>,
    /// Whether unbound names are accepted as free variables and dimensions.
    open: bool,
}

pub fn parse_signature(text: &str) -> Result<Signature, ParseError> {
    let mut p = Parser::new(text, Scope::default())?;
    let mut sig = Signature::default();
    while p.peek() != &Tok::Eof {
        let decl = p.decl(&sig)?;
        match &decl.kind {
            DeclKind::Def { body, .. } => {
                p.scope.defs.insert(decl.name.clone(), body.clone());
            }
            DeclKind::TacticDef(t) => {
                p.scope.tactics.insert(decl.name.clone(), t.clone());
            }
            DeclKind::Thm { .. } => {}
        }
        sig.decls.push(decl);
    }
    Ok(sig)
}

/// A term that may mention free variables and dimension names.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    parse_term_in(&Signature::default(), text)
}

/// Like [`parse_term`], expanding the definitions of `sig`.
pub fn parse_term_in(sig: &Signature, text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text, sig.scope())?;
    p.open = true;
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_tactic(text: &str) -> Result<Tactic, ParseError> {
    parse_tactic_in(&Signature::default(), text)
}

/// Like [`parse_tactic`], expanding the definitions and tactic aliases of `sig`.
pub fn parse_tactic_in(sig: &Signature, text: &str) -> Result<Tactic, ParseError> {
    let mut p = Parser::new(text, sig.scope())?;
    let t = p.tactic()?;
    p.expect_eof()?;
    Ok(t)
}

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s) || s == "S1-rec"
}

impl Parser {
    fn new(text: &str, scope: Scope) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            k: 0,
            scope,
            vars: Vec::new(),
            dims: Vec::new(),
            open: false,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.k].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.k + n).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.k].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.k].0.clone();
        if self.k + 1 < self.toks.len() {
            self.k += 1;
        }
        t
    }

    fn error<T>(&self, expected: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::new(self.pos(), format!("{}, found {}", expected.into(), self.peek())))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == w)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(format!("`{s}`"))
        }
    }

    fn word(&mut self, w: &str) -> Result<(), ParseError> {
        if self.is_word(w) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("`{w}`"))
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            self.error("end of input")
        }
    }

    /// A name that is not a keyword.
    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(x) if !is_keyword(x) => {
                let x = x.clone();
                self.bump();
                Ok(x)
            }
            _ => self.error(what),
        }
    }

    /// A binder name: an identifier or `_`.
    fn binder(&mut self, what: &str) -> Result<String, ParseError> {
        if self.is_word("_") {
            self.bump();
            return Ok("_".into());
        }
        self.ident(what)
    }

    // declarations

    fn decl(&mut self, sig: &Signature) -> Result<Decl, ParseError> {
        let pos = self.pos();
        let keyword = match self.peek() {
            Tok::Ident(w) if w == "def" || w == "thm" || w == "tactic" => w.clone(),
            _ => return self.error("`def`, `thm` or `tactic`"),
        };
        self.bump();
        let name_pos = self.pos();
        let name = self.ident("a declaration name")?;
        if sig.get(&name).is_some() {
            return Err(ParseError::new(name_pos, format!("a fresh name, `{name}` is already declared")));
        }
        let kind = match keyword.as_str() {
            "def" => {
                self.sym(":")?;
                let ty = self.term()?;
                self.sym("=")?;
                let body = self.term()?;
                DeclKind::Def { ty, body }
            }
            "thm" => {
                self.sym(":")?;
                let statement = self.term()?;
                self.word("by")?;
                self.sym("{")?;
                let script = if self.is_sym("}") { Tactic::Id } else { self.tactic()? };
                self.sym("}")?;
                DeclKind::Thm { statement, script }
            }
            _ => {
                self.sym("=")?;
                DeclKind::TacticDef(self.tactic()?)
            }
        };
        Ok(Decl { name, pos, kind })
    }

    // terms

    fn term(&mut self) -> Result<Term, ParseError> {
        if self.eat_sym("\\") {
            let mut names = Vec::new();
            while !self.is_sym(".") {
                names.push(self.binder("a variable name or `.`")?);
            }
            self.sym(".")?;
            if names.is_empty() {
                return self.error("at least one variable");
            }
            let body = self.under_vars(&names, Parser::term)?;
            return Ok(names.iter().rev().fold(body, |b, x| Term::lam(x, b)));
        }
        if self.is_word("if") {
            self.bump();
            let m = self.term()?;
            self.word("then")?;
            let n = self.term()?;
            self.word("else")?;
            let o = self.term()?;
            return Ok(Term::if_(m, n, o));
        }
        if self.eat_sym("<") {
            let i = self.binder("a dimension name")?;
            self.sym(">")?;
            let body = self.under_dim(&i, Parser::term)?;
            return Ok(Term::dim_abs(&i, body));
        }
        let lhs = self.prod()?;
        if self.eat_sym("->") {
            let rhs = self.term()?;
            return Ok(Term::arrow(lhs, rhs));
        }
        Ok(lhs)
    }

    fn binder_group_ahead(&self) -> bool {
        self.is_sym("(")
            && matches!(self.peek_at(1), Tok::Ident(x) if x == "_" || !is_keyword(x))
            && matches!(self.peek_at(2), Tok::Sym(":"))
    }

    fn prod(&mut self) -> Result<Term, ParseError> {
        if self.binder_group_ahead() {
            self.sym("(")?;
            let x = self.binder("a variable name")?;
            self.sym(":")?;
            let a = self.term()?;
            self.sym(")")?;
            if self.eat_sym("->") {
                let b = self.under_vars(std::slice::from_ref(&x), Parser::term)?;
                return Ok(Term::fun_type(&x, a, b));
            }
            self.sym("*").or_else(|_| self.error("`->` or `*` after a binder"))?;
            let b = self.under_vars(std::slice::from_ref(&x), Parser::prod)?;
            return Ok(Term::pair_type(&x, a, b));
        }
        let lhs = self.app()?;
        if self.eat_sym("*") {
            let rhs = self.prod()?;
            return Ok(Term::product(lhs, rhs));
        }
        Ok(lhs)
    }

    fn app(&mut self) -> Result<Term, ParseError> {
        let mut head = match self.peek() {
            Tok::Ident(w) if w == "fst" || w == "snd" => {
                let fst = w == "fst";
                self.bump();
                let m = self.atom()?;
                if fst {
                    Term::fst(m)
                } else {
                    Term::snd(m)
                }
            }
            Tok::Ident(w) if w == "loop" => {
                self.bump();
                Term::Loop(self.dim()?)
            }
            Tok::Ident(w) if w == "path" => {
                self.bump();
                self.sym("[")?;
                let i = self.binder("a dimension name")?;
                self.sym("]")?;
                let a = self.under_dim(&i, Parser::atom)?;
                let m = self.atom()?;
                let n = self.atom()?;
                Term::path_type(&i, a, m, n)
            }
            Tok::Ident(w) if w == "Eq" => {
                self.bump();
                let a = self.atom()?;
                let m = self.atom()?;
                let n = self.atom()?;
                Term::exact_eq(a, m, n)
            }
            _ => self.atom()?,
        };
        loop {
            if self.eat_sym("@") {
                head = Term::dim_app(head, self.dim()?);
            } else if self.atom_ahead() {
                head = Term::app(head, self.atom()?);
            } else {
                return Ok(head);
            }
        }
    }

    fn atom_ahead(&self) -> bool {
        match self.peek() {
            Tok::Sym("(") => true,
            Tok::Ident(w) => {
                matches!(w.as_str(), "bool" | "tt" | "ff" | "S1" | "base" | "ax" | "S1-rec") || (w != "_" && !is_keyword(w))
            }
            _ => false,
        }
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Sym("(") => {
                self.bump();
                let m = self.term()?;
                if self.eat_sym(",") {
                    let n = self.term()?;
                    self.sym(")")?;
                    return Ok(Term::pair(m, n));
                }
                self.sym(")").or_else(|_| self.error("`)` or `,`"))?;
                Ok(m)
            }
            Tok::Ident(w) => {
                let lit = match w.as_str() {
                    "bool" => Some(Term::Bool),
                    "tt" => Some(Term::True),
                    "ff" => Some(Term::False),
                    "S1" => Some(Term::Circle),
                    "base" => Some(Term::Base),
                    "ax" => Some(Term::Ax),
                    _ => None,
                };
                if let Some(t) = lit {
                    self.bump();
                    return Ok(t);
                }
                if w == "S1-rec" {
                    self.bump();
                    return self.circle_rec();
                }
                if w == "_" || is_keyword(&w) {
                    return self.error("a term");
                }
                self.bump();
                self.variable(&w, pos)
            }
            _ => self.error("a term"),
        }
    }

    fn circle_rec(&mut self) -> Result<Term, ParseError> {
        self.sym("(")?;
        let x = self.binder("a variable name")?;
        self.sym(".")?;
        let motive = self.under_vars(std::slice::from_ref(&x), Parser::term)?;
        self.sym(";")?;
        let target = self.term()?;
        self.sym(";")?;
        let base = self.term()?;
        self.sym(";")?;
        let i = self.binder("a dimension name")?;
        self.sym(".")?;
        let lp = self.under_dim(&i, Parser::term)?;
        self.sym(")")?;
        Ok(Term::circle_rec(&x, motive, target, base, &i, lp))
    }

    fn variable(&self, x: &str, pos: Pos) -> Result<Term, ParseError> {
        if self.vars.iter().any(|v| v == x) {
            return Ok(Term::var(x));
        }
        if let Some(body) = self.scope.defs.get(x) {
            return Ok(body.clone());
        }
        if self.open {
            return Ok(Term::var(x));
        }
        Err(ParseError::new(pos, format!("a bound variable or definition, `{x}` is unbound")))
    }

    fn dim(&mut self) -> Result<DimExpr, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(0) => {
                self.bump();
                Ok(DimExpr::Zero)
            }
            Tok::Num(1) => {
                self.bump();
                Ok(DimExpr::One)
            }
            Tok::Ident(i) if i != "_" && !is_keyword(&i) => {
                self.bump();
                if self.open || self.dims.contains(&i) {
                    Ok(DimExpr::free(&i))
                } else {
                    Err(ParseError::new(pos, format!("a bound dimension, `{i}` is unbound")))
                }
            }
            _ => self.error("a dimension (`0`, `1` or a name)"),
        }
    }

    fn under_vars<T>(&mut self, xs: &[String], f: impl FnOnce(&mut Parser) -> Result<T, ParseError>) -> Result<T, ParseError> {
        let n = self.vars.len();
        self.vars.extend(xs.iter().cloned());
        let out = f(self);
        self.vars.truncate(n);
        out
    }

    fn under_dim<T>(&mut self, i: &str, f: impl FnOnce(&mut Parser) -> Result<T, ParseError>) -> Result<T, ParseError> {
        self.dims.push(i.to_string());
        let out = f(self);
        self.dims.pop();
        out
    }

    // tactics

    fn tactic(&mut self) -> Result<Tactic, ParseError> {
        for w in ["with", "intro"] {
            if self.is_word(w) {
                self.bump();
                let x = Name::new(&self.ident("a variable name")?);
                self.sym("=>")?;
                let body = Box::new(self.tactic()?);
                return Ok(if w == "with" { Tactic::With(x, body) } else { Tactic::Intro(x, body) });
            }
        }
        if self.is_word("lam") {
            self.bump();
            let mut xs = Vec::new();
            while !self.is_sym("=>") {
                xs.push(Name::new(&self.ident("a variable name or `=>`")?));
            }
            self.sym("=>")?;
            return Ok(Tactic::SurfaceLam(xs, Box::new(self.tactic()?)));
        }
        let mut t = self.or_tactic()?;
        while self.eat_sym(";") {
            if self.eat_sym("[") {
                let ts = self.tactic_list("]")?;
                t = Tactic::SeqList(Box::new(t), ts);
            } else {
                t = Tactic::seq(t, self.or_tactic()?);
            }
        }
        Ok(t)
    }

    fn tactic_list(&mut self, close: &str) -> Result<Vec<Tactic>, ParseError> {
        let mut ts = Vec::new();
        if self.eat_sym(close) {
            return Ok(ts);
        }
        loop {
            ts.push(self.tactic()?);
            if self.eat_sym(close) {
                return Ok(ts);
            }
            self.sym(",").or_else(|_| self.error(format!("`,` or `{close}`")))?;
        }
    }

    fn or_tactic(&mut self) -> Result<Tactic, ParseError> {
        let a = self.atomic_tactic()?;
        if self.eat_sym("|") {
            return Ok(Tactic::or_else(a, self.or_tactic()?));
        }
        Ok(a)
    }

    fn atomic_tactic(&mut self) -> Result<Tactic, ParseError> {
        let pos = self.pos();
        if self.eat_sym("(") {
            let t = self.tactic()?;
            self.sym(")")?;
            return Ok(t);
        }
        if self.eat_sym("{") {
            return Ok(Tactic::SurfaceTuple(self.tactic_list("}")?));
        }
        let Tok::Ident(w) = self.peek().clone() else {
            return self.error("a tactic");
        };
        self.bump();
        match w.as_str() {
            "auto" => match self.peek() {
                Tok::Num(n) => {
                    let n = *n;
                    self.bump();
                    Ok(Tactic::Auto(n))
                }
                _ => Ok(Tactic::Auto(DEFAULT_AUTO_DEPTH)),
            },
            "id" => Ok(Tactic::Id),
            "fail" => match self.peek() {
                Tok::Str(s) => {
                    let s = s.clone();
                    self.bump();
                    Ok(Tactic::Fail(s))
                }
                _ => Ok(Tactic::Fail("fail".into())),
            },
            "use" => Ok(Tactic::SurfaceUse(Name::new(&self.ident("a hypothesis name")?))),
            _ => {
                if let Some(info) = rule_info(&w) {
                    return self.rule_args(info.name, info.args, info.optional);
                }
                if let Some(t) = self.scope.tactics.get(&w) {
                    return Ok(t.clone());
                }
                Err(ParseError::new(pos, format!("a rule or tactic, `{w}` is neither")))
            }
        }
    }

    fn rule_args(&mut self, rule: &str, kinds: &[ArgKind], optional: usize) -> Result<Tactic, ParseError> {
        let mut r = RuleApplication::new(rule);
        let required = kinds.len() - optional;
        if kinds.is_empty() || !self.is_sym("(") {
            if required > 0 {
                return self.error(format!("arguments for `{rule}`"));
            }
            return Ok(Tactic::Rule(r));
        }
        self.sym("(")?;
        let was_open = std::mem::replace(&mut self.open, true);
        let result = (|| {
            for (n, kind) in kinds.iter().enumerate() {
                if n > 0 {
                    if n >= required && self.is_sym(")") {
                        break;
                    }
                    self.sym(",")?;
                }
                let arg = match kind {
                    ArgKind::Hyp | ArgKind::Name => RuleArg::Name(Name::new(&self.ident("a variable name")?)),
                    ArgKind::Term => RuleArg::Term(self.term()?),
                    ArgKind::Dim => RuleArg::Dim(self.dim()?),
                };
                r = r.clone().arg(arg);
            }
            self.sym(")").or_else(|_| self.error(format!("`)` closing the arguments of `{rule}`")))
        })();
        self.open = was_open;
        result?;
        Ok(Tactic::Rule(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    #[test]
    fn loop_takes_a_dimension_not_an_argument() {
        assert_eq!(t("loop 0"), Term::Loop(DimExpr::Zero));
        assert_eq!(t("loop i"), Term::Loop(DimExpr::free("i")));
        assert_eq!(t("f (loop 1)"), Term::app(Term::var("f"), Term::Loop(DimExpr::One)));
    }

    #[test]
    fn binders_and_precedence() {
        let k = t("\\x y. (x, y)");
        assert_eq!(k, Term::lam("x", Term::lam("y", Term::pair(Term::var("x"), Term::var("y")))));
        assert_eq!(t("bool -> bool * bool -> bool"), Term::arrow(Term::Bool, Term::arrow(Term::product(Term::Bool, Term::Bool), Term::Bool)));
        let dep = t("(x : bool) -> (y : if x then bool else S1) * bool");
        let expected = Term::fun_type(
            "x",
            Term::Bool,
            Term::pair_type("y", Term::if_(Term::var("x"), Term::Bool, Term::Circle), Term::Bool),
        );
        assert_eq!(dep, expected);
        assert_eq!(t("f x @ i y"), Term::app(Term::dim_app(Term::app(Term::var("f"), Term::var("x")), DimExpr::free("i")), Term::var("y")));
    }

    #[test]
    fn cubical_forms() {
        assert_eq!(t("path [i] S1 base base"), Term::path_type("i", Term::Circle, Term::Base, Term::Base));
        assert_eq!(t("<i> loop i"), Term::dim_abs("i", Term::Loop(DimExpr::free("i"))));
        let r = t("S1-rec(_. bool; loop i; tt; _. ff)");
        assert_eq!(r, Term::circle_rec("_", Term::Bool, Term::Loop(DimExpr::free("i")), Term::True, "j", Term::False));
        assert_eq!(t("Eq bool tt (if tt then tt else ff)"), Term::exact_eq(Term::Bool, Term::True, Term::if_(Term::True, Term::True, Term::False)));
    }

    #[test]
    fn tactics() {
        let s = parse_tactic("lam x y => {use x, use y}").unwrap();
        assert_eq!(s, Tactic::lam(&["x", "y"], Tactic::SurfaceTuple(vec![Tactic::use_("x"), Tactic::use_("y")])));
        let s = parse_tactic("bool/elim(x); [auto, auto 2 | id, fail \"no\"]").unwrap();
        assert_eq!(s.to_string(), "bool/elim(x); [auto, auto 2 | id, fail \"no\"]");
        let s = parse_tactic("(with x => id); path/app(p, 0); cut(bool -> bool)").unwrap();
        assert_eq!(s.to_string(), "(with x => id); path/app(p, 0); cut(bool -> bool)");
        assert!(parse_tactic("pi/elim").is_err());
        assert_eq!(parse_tactic("pi/intro").unwrap(), Tactic::rule("pi/intro"));
    }

    #[test]
    fn signatures_expand_references() {
        let sig = parse_signature(
            "def not : bool -> bool = \\b. if b then ff else tt\n\
             tactic finish = auto 3\n\
             thm t : Eq bool (not tt) ff by { eq/eval; finish }",
        )
        .unwrap();
        assert_eq!(sig.decls.len(), 3);
        let (statement, script) = sig.theorem("t").unwrap();
        let not = Term::lam("b", Term::if_(Term::var("b"), Term::False, Term::True));
        assert_eq!(statement, &Term::exact_eq(Term::Bool, Term::app(not, Term::True), Term::False));
        assert_eq!(script, &Tactic::seq(Tactic::rule("eq/eval"), Tactic::Auto(3)));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_signature("def two : bool =\n  (if tt then tt else ff").unwrap_err();
        assert_eq!((e.line, e.col), (2, 25));
        let e = parse_signature("thm t : x by { id }").unwrap_err();
        assert_eq!((e.line, e.col), (1, 9));
        let e = parse_signature("def a : bool = tt\ndef a : bool = ff").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
