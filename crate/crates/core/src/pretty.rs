//! Concrete-syntax printing of terms.
//!
//! The output is accepted by the `cartprl` parser; binder names are taken from
//! hints and freshened so that printing never captures.

use std::collections::BTreeSet;
use std::fmt;

use crate::syntax::{fresh_name, Bind, Dim, DimBind, DimExpr, Name, Term, Var};

/// Words that cannot be used as variable names.
pub const KEYWORDS: &[&str] = &[
    "bool", "tt", "ff", "if", "then", "else", "S1", "base", "loop", "path", "Eq", "ax", "fst",
    "snd", "def", "thm", "tactic", "by", "_",
];

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Top,
    Prod,
    App,
    Atom,
}

struct Printer {
    taken_vars: BTreeSet<Name>,
    taken_dims: BTreeSet<Name>,
    vars: Vec<Name>,
    dims: Vec<Name>,
}

impl Printer {
    fn new(t: &Term) -> Printer {
        Printer {
            taken_vars: t.free_vars(),
            taken_dims: t.free_dims(),
            vars: Vec::new(),
            dims: Vec::new(),
        }
    }

    fn bind_var(&mut self, hint: &Name, used: bool) -> Name {
        if !used {
            self.vars.push(Name::new("_"));
            return Name::new("_");
        }
        let n = fresh_name(hint.as_str(), |s| {
            KEYWORDS.contains(&s)
                || self.taken_vars.iter().any(|t| t.as_str() == s)
                || self.vars.iter().any(|t| t.as_str() == s)
        });
        self.vars.push(n.clone());
        n
    }

    fn bind_dim(&mut self, hint: &Name, used: bool) -> Name {
        if !used {
            self.dims.push(Name::new("_"));
            return Name::new("_");
        }
        let n = fresh_name(hint.as_str(), |s| {
            KEYWORDS.contains(&s)
                || s == "0"
                || s == "1"
                || self.taken_dims.iter().any(|t| t.as_str() == s)
                || self.dims.iter().any(|t| t.as_str() == s)
        });
        self.dims.push(n.clone());
        n
    }

    fn with_var<R>(&mut self, b: &Bind, f: impl FnOnce(&mut Printer, Name) -> R) -> R {
        let n = self.bind_var(b.hint.name(), b.uses_var());
        let out = f(self, n);
        self.vars.pop();
        out
    }

    fn with_dim<R>(&mut self, b: &DimBind, f: impl FnOnce(&mut Printer, Name) -> R) -> R {
        let n = self.bind_dim(b.hint.name(), b.uses_dim());
        let out = f(self, n);
        self.dims.pop();
        out
    }

    fn dim(&self, r: &DimExpr) -> String {
        match r {
            DimExpr::Zero => "0".into(),
            DimExpr::One => "1".into(),
            DimExpr::Name(Dim::Free(n)) => n.to_string(),
            DimExpr::Name(Dim::Bound(k)) => self
                .dims
                .len()
                .checked_sub(1 + *k as usize)
                .map(|ix| self.dims[ix].to_string())
                .unwrap_or_else(|| format!("#d{k}")),
        }
    }

    fn term(&mut self, t: &Term, prec: Prec) -> String {
        let (s, own) = self.term_inner(t);
        if own < prec {
            format!("({s})")
        } else {
            s
        }
    }

    fn term_inner(&mut self, t: &Term) -> (String, Prec) {
        use Prec::*;
        match t {
            Term::Var(Var::Free(n)) => (n.to_string(), Atom),
            Term::Var(Var::Bound(k)) => {
                let s = self
                    .vars
                    .len()
                    .checked_sub(1 + *k as usize)
                    .map(|ix| self.vars[ix].to_string())
                    .unwrap_or_else(|| format!("#{k}"));
                (s, Atom)
            }
            Term::FunType(a, b) => {
                if b.uses_var() {
                    let a = self.term(a, Top);
                    self.with_var(b, |p, x| {
                        (format!("({x} : {a}) -> {}", p.term(&b.body, Top)), Top)
                    })
                } else {
                    let a = self.term(a, Prod);
                    (format!("{a} -> {}", self.term(&b.body, Top)), Top)
                }
            }
            Term::PairType(a, b) => {
                if b.uses_var() {
                    let a = self.term(a, Top);
                    self.with_var(b, |p, x| {
                        (format!("({x} : {a}) * {}", p.term(&b.body, Prod)), Prod)
                    })
                } else {
                    let a = self.term(a, App);
                    (format!("{a} * {}", self.term(&b.body, Prod)), Prod)
                }
            }
            Term::Lam(_) => {
                let mut names = Vec::new();
                let mut cur = t;
                while let Term::Lam(b) = cur {
                    names.push(self.bind_var(b.hint.name(), b.uses_var()).to_string());
                    cur = &b.body;
                }
                let body = self.term(cur, Top);
                for _ in 0..names.len() {
                    self.vars.pop();
                }
                (format!("\\{}. {body}", names.join(" ")), Top)
            }
            Term::App(m, n) => {
                let m = self.term(m, App);
                (format!("{m} {}", self.term(n, Atom)), App)
            }
            Term::Pair(m, n) => {
                let m = self.term(m, Top);
                (format!("({m}, {})", self.term(n, Top)), Atom)
            }
            Term::Fst(m) => (format!("fst {}", self.term(m, Atom)), App),
            Term::Snd(m) => (format!("snd {}", self.term(m, Atom)), App),
            Term::Bool => ("bool".into(), Atom),
            Term::True => ("tt".into(), Atom),
            Term::False => ("ff".into(), Atom),
            Term::If(m, n, o) => {
                let m = self.term(m, Top);
                let n = self.term(n, Top);
                (format!("if {m} then {n} else {}", self.term(o, Top)), Top)
            }
            Term::Circle => ("S1".into(), Atom),
            Term::Base => ("base".into(), Atom),
            Term::Loop(r) => (format!("loop {}", self.dim(r)), App),
            Term::CircleRec {
                motive,
                target,
                base,
                lp,
            } => {
                let motive = self.with_var(motive, |p, x| format!("{x}. {}", p.term(&motive.body, Top)));
                let target = self.term(target, Top);
                let base = self.term(base, Top);
                let lp = self.with_dim(lp, |p, i| format!("{i}. {}", p.term(&lp.body, Top)));
                (format!("S1-rec({motive}; {target}; {base}; {lp})"), Atom)
            }
            Term::PathType(a, m, n) => {
                let (i, a) = self.with_dim(a, |p, i| (i, p.term(&a.body, Atom)));
                let m = self.term(m, Atom);
                (format!("path [{i}] {a} {m} {}", self.term(n, Atom)), App)
            }
            Term::DimAbs(b) => self.with_dim(b, |p, i| (format!("<{i}> {}", p.term(&b.body, Top)), Top)),
            Term::DimApp(m, r) => {
                let m = self.term(m, App);
                (format!("{m} @ {}", self.dim(r)), App)
            }
            Term::ExactEq(a, m, n) => {
                let a = self.term(a, Atom);
                let m = self.term(m, Atom);
                (format!("Eq {a} {m} {}", self.term(n, Atom)), App)
            }
            Term::Ax => ("ax".into(), Atom),
            Term::Meta(m) => (format!("?{}", m.id), Atom),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&Printer::new(self).term(self, Prec::Top))
    }
}

impl fmt::Display for DimExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DimExpr::Zero => f.write_str("0"),
            DimExpr::One => f.write_str("1"),
            DimExpr::Name(Dim::Free(n)) => write!(f, "{n}"),
            DimExpr::Name(Dim::Bound(k)) => write!(f, "#d{k}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prints_binders_and_precedence() {
        let t = Term::fun_type("x", Term::Bool, Term::fun_type("y", Term::Bool, Term::pair_type("z", Term::Bool, Term::Bool)));
        assert_eq!(t.to_string(), "bool -> bool -> bool * bool");
        let k = Term::lam("x", Term::lam("y", Term::pair(Term::var("x"), Term::var("y"))));
        assert_eq!(k.to_string(), "\\x y. (x, y)");
        let arg = Term::app(Term::var("f"), Term::lam("x", Term::var("x")));
        assert_eq!(arg.to_string(), "f (\\x. x)");
        let dom = Term::arrow(Term::arrow(Term::Bool, Term::Bool), Term::Bool);
        assert_eq!(dom.to_string(), "(bool -> bool) -> bool");
    }

    #[test]
    fn prints_cubical_forms() {
        let p = Term::path_type("i", Term::Circle, Term::Base, Term::Base);
        assert_eq!(p.to_string(), "path [_] S1 base base");
        let l = Term::dim_abs("i", Term::Loop(DimExpr::free("i")));
        assert_eq!(l.to_string(), "<i> loop i");
        let r = Term::circle_rec("x", Term::Bool, Term::Loop(DimExpr::free("i")), Term::True, "j", Term::False);
        assert_eq!(r.to_string(), "S1-rec(_. bool; loop i; tt; _. ff)");
    }

    #[test]
    fn shadowed_names_are_freshened() {
        // \x. \x'. x  where the inner hint is also "x"
        let inner = Term::Lam(Bind::new("x", Term::Var(Var::Bound(1))));
        let t = Term::Lam(Bind::new("x", inner));
        assert_eq!(t.to_string(), "\\x _. x");
        let t2 = Term::Lam(Bind::new(
            "x",
            Term::Lam(Bind::new("x", Term::pair(Term::Var(Var::Bound(1)), Term::Var(Var::Bound(0))))),
        ));
        assert_eq!(t2.to_string(), "\\x x1. (x, x1)");
        // a free x forces the binder to be renamed
        let t3 = Term::Lam(Bind::new("x", Term::pair(Term::Var(Var::Bound(0)), Term::var("x"))));
        assert_eq!(t3.to_string(), "\\x1. (x1, x)");
    }
}
