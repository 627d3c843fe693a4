//! Evaluation-based oracle for the judgments of the theory.
//!
//! Closed judgments are decided by evaluating the type to a canonical type and
//! consulting its defining clause. Judgments with free dimension names are
//! checked under every substitution of those names into `0`, `1` and one
//! shared fresh name, together with the coherence condition that evaluating
//! before or after the substitution agrees. Open judgments quantify over
//! closing substitutions, which is only attempted for hypotheses whose types
//! have finitely many canonical members. Everything else is `Unknown`.

use std::collections::BTreeSet;
use std::fmt;

use crate::dynamics::{eval, normalize, step, EvalError, Reduction, StepResult};
use crate::syntax::{fresh_name, DimExpr, DimSubst, Name, Subst, Term};

/// Kinds of types, ordered by how much structure they promise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    /// No non-trivial paths.
    Discrete,
    Kan,
    /// Coercion only.
    Coe,
    /// Homogeneous composition only.
    HCom,
    /// Pretypes: no Kan structure at all.
    Pre,
}

impl Kind {
    pub const ALL: [Kind; 5] = [Kind::Discrete, Kind::Kan, Kind::Coe, Kind::HCom, Kind::Pre];

    /// `self ⊑ other`: every type of kind `self` also has kind `other`.
    pub fn leq(self, other: Kind) -> bool {
        use Kind::*;
        match (self, other) {
            _ if self == other => true,
            (Discrete, _) => true,
            (Kan, Coe | HCom | Pre) => true,
            (Coe | HCom, Pre) => true,
            _ => false,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Discrete => "discrete",
            Kind::Kan => "kan",
            Kind::Coe => "coe",
            Kind::HCom => "hcom",
            Kind::Pre => "pre",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClosedJudgment {
    Mem(Term, Term),
    EqMem(Term, Term, Term),
    Type(Term, Kind),
    EqType(Term, Term, Kind),
}

impl ClosedJudgment {
    fn terms(&self) -> Vec<&Term> {
        match self {
            ClosedJudgment::Mem(a, m) => vec![a, m],
            ClosedJudgment::EqMem(a, m, n) => vec![a, m, n],
            ClosedJudgment::Type(a, _) => vec![a],
            ClosedJudgment::EqType(a, b, _) => vec![a, b],
        }
    }

    pub fn free_dims(&self) -> BTreeSet<Name> {
        self.terms().into_iter().flat_map(Term::free_dims).collect()
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        self.terms().into_iter().flat_map(Term::free_vars).collect()
    }

    fn map(&self, f: impl Fn(&Term) -> Term) -> ClosedJudgment {
        match self {
            ClosedJudgment::Mem(a, m) => ClosedJudgment::Mem(f(a), f(m)),
            ClosedJudgment::EqMem(a, m, n) => ClosedJudgment::EqMem(f(a), f(m), f(n)),
            ClosedJudgment::Type(a, k) => ClosedJudgment::Type(f(a), *k),
            ClosedJudgment::EqType(a, b, k) => ClosedJudgment::EqType(f(a), f(b), *k),
        }
    }

    /// Instantiates the left-hand side with `left` and the right-hand side with
    /// `right`, as the functionality condition of open judgments requires.
    fn instantiate(&self, left: &Subst, right: &Subst) -> ClosedJudgment {
        match self {
            ClosedJudgment::Mem(a, m) => {
                ClosedJudgment::EqMem(a.subst(left), m.subst(left), m.subst(right))
            }
            ClosedJudgment::EqMem(a, m, n) => {
                ClosedJudgment::EqMem(a.subst(left), m.subst(left), n.subst(right))
            }
            ClosedJudgment::Type(a, k) => ClosedJudgment::EqType(a.subst(left), a.subst(right), *k),
            ClosedJudgment::EqType(a, b, k) => {
                ClosedJudgment::EqType(a.subst(left), b.subst(right), *k)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails(String),
    Unknown(String),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn fails(&self) -> bool {
        matches!(self, Verdict::Fails(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds => f.write_str("holds"),
            Verdict::Fails(r) => write!(f, "fails: {r}"),
            Verdict::Unknown(r) => write!(f, "unknown: {r}"),
        }
    }
}

/// Conjunction: the first failure wins, otherwise any unknown.
struct All {
    unknown: Option<String>,
}

impl All {
    fn new() -> All {
        All { unknown: None }
    }

    /// Returns the failure to propagate, if any.
    fn add(&mut self, v: Verdict) -> Option<Verdict> {
        match v {
            Verdict::Holds => None,
            Verdict::Unknown(r) => {
                self.unknown.get_or_insert(r);
                None
            }
            fails @ Verdict::Fails(_) => Some(fails),
        }
    }

    fn finish(self) -> Verdict {
        match self.unknown {
            Some(r) => Verdict::Unknown(r),
            None => Verdict::Holds,
        }
    }
}

macro_rules! conj {
    ($all:expr, $v:expr) => {
        if let Some(f) = $all.add($v) {
            return f;
        }
    };
}

const MAX_DEPTH: u32 = 48;
const MAX_DIMS: usize = 4;

/// Every substitution of `dims` into `{0, 1, fresh}` with a single shared
/// fresh name, preceded by the identity.
pub fn dim_substitutions(dims: &BTreeSet<Name>, fresh: &Name) -> Vec<DimSubst> {
    let mut out = vec![DimSubst::new()];
    let targets = [DimExpr::Zero, DimExpr::One, DimExpr::Name(crate::syntax::Dim::Free(fresh.clone()))];
    let dims: Vec<&Name> = dims.iter().collect();
    let mut choice = vec![0usize; dims.len()];
    if dims.is_empty() {
        return out;
    }
    loop {
        out.push(
            dims.iter()
                .zip(&choice)
                .map(|(n, &c)| ((*n).clone(), targets[c].clone()))
                .collect(),
        );
        let mut k = 0;
        loop {
            if k == choice.len() {
                return out;
            }
            choice[k] += 1;
            if choice[k] < targets.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

fn fresh_dim_for(taken: &BTreeSet<Name>) -> Name {
    fresh_name("%k", |s| taken.iter().any(|n| n.as_str() == s))
}

struct Oracle {
    fuel: u64,
    depth: u32,
}

impl Oracle {
    fn eval(&self, t: &Term) -> Result<Term, Verdict> {
        eval(t, self.fuel).map_err(|e| match e {
            EvalError::FuelExhausted(_) => Verdict::Unknown("fuel".into()),
            EvalError::StuckAt { term, reason } => {
                Verdict::Fails(format!("`{t}` does not evaluate: stuck at `{term}` ({reason})"))
            }
        })
    }

    fn closed(&mut self, j: &ClosedJudgment) -> Verdict {
        if self.depth >= MAX_DEPTH {
            return Verdict::Unknown("recursion limit".into());
        }
        if let Some(x) = j.free_vars().into_iter().next() {
            return Verdict::Fails(format!("free variable `{x}` in a closed judgment"));
        }
        let dims = j.free_dims();
        if dims.len() > MAX_DIMS {
            return Verdict::Unknown(format!("{} free dimensions", dims.len()));
        }
        self.depth += 1;
        let out = self.closed_at_all_faces(j, &dims);
        self.depth -= 1;
        out
    }

    fn closed_at_all_faces(&mut self, j: &ClosedJudgment, dims: &BTreeSet<Name>) -> Verdict {
        let mut all = All::new();
        // identity: the judgment itself, remembering the values for coherence
        let values: Vec<Term> = match j
            .terms()
            .into_iter()
            .map(|t| self.eval(t))
            .collect::<Result<Vec<_>, _>>()
        {
            Ok(v) => v,
            Err(v) => return v,
        };
        conj!(all, self.instance(j));
        if dims.is_empty() {
            return all.finish();
        }
        let fresh = fresh_dim_for(dims);
        for s in dim_substitutions(dims, &fresh).into_iter().skip(1) {
            let face = j.map(|t| t.dim_subst(&s));
            conj!(all, self.instance(&face));
            // coherence: evaluating first and substituting after must agree
            let face_terms = face.terms();
            let ty = face_terms[0].clone();
            let is_type_judgment = matches!(j, ClosedJudgment::Type(..) | ClosedJudgment::EqType(..));
            for (t, v) in face_terms.iter().zip(&values) {
                let later = v.dim_subst(&s);
                let coherent = if is_type_judgment {
                    self.instance(&ClosedJudgment::EqType((*t).clone(), later, Kind::Pre))
                } else if std::ptr::eq(*t, face_terms[0]) {
                    continue;
                } else {
                    self.instance(&ClosedJudgment::EqMem(ty.clone(), (*t).clone(), later))
                };
                conj!(all, coherent);
            }
        }
        all.finish()
    }

    /// One face, no further enumeration of the dimensions already present.
    fn instance(&mut self, j: &ClosedJudgment) -> Verdict {
        match j {
            ClosedJudgment::Mem(a, m) => self.instance(&ClosedJudgment::EqMem(a.clone(), m.clone(), m.clone())),
            ClosedJudgment::Type(a, k) => self.instance(&ClosedJudgment::EqType(a.clone(), a.clone(), *k)),
            ClosedJudgment::EqMem(a, m, n) => {
                let (a0, m0, n0) = match (self.eval(a), self.eval(m), self.eval(n)) {
                    (Ok(a0), Ok(m0), Ok(n0)) => (a0, m0, n0),
                    (Err(v), _, _) | (_, Err(v), _) | (_, _, Err(v)) => return v,
                };
                self.mem_values(&a0, &m0, &n0)
            }
            ClosedJudgment::EqType(a, b, k) => {
                let (a0, b0) = match (self.eval(a), self.eval(b)) {
                    (Ok(a0), Ok(b0)) => (a0, b0),
                    (Err(v), _) | (_, Err(v)) => return v,
                };
                self.type_values(&a0, &b0, *k)
            }
        }
    }

    fn type_values(&mut self, a: &Term, b: &Term, k: Kind) -> Verdict {
        let mut all = All::new();
        match (a, b) {
            (Term::Bool, Term::Bool) => Verdict::Holds,
            (Term::Circle, Term::Circle) => {
                if k == Kind::Discrete {
                    Verdict::Fails("S1 has non-trivial paths, so it is not discrete".into())
                } else {
                    Verdict::Holds
                }
            }
            (Term::FunType(a1, b1), Term::FunType(a2, b2))
            | (Term::PairType(a1, b1), Term::PairType(a2, b2)) => {
                conj!(all, self.closed(&ClosedJudgment::EqType((**a1).clone(), (**a2).clone(), k)));
                match self.equal_pairs(a1) {
                    Ok(pairs) => {
                        for (x, y) in pairs {
                            conj!(all, self.closed(&ClosedJudgment::EqType(b1.open(&x), b2.open(&y), k)));
                        }
                    }
                    Err(v) => conj!(all, v),
                }
                all.finish()
            }
            (Term::PathType(a1, m1, n1), Term::PathType(a2, m2, n2)) => {
                let taken: BTreeSet<Name> = a.free_dims().union(&b.free_dims()).cloned().collect();
                let i = fresh_dim_for(&taken);
                conj!(all, self.closed(&ClosedJudgment::EqType(a1.open_name(&i), a2.open_name(&i), k)));
                conj!(all, self.closed(&ClosedJudgment::EqMem(a1.open(&DimExpr::Zero), (**m1).clone(), (**m2).clone())));
                conj!(all, self.closed(&ClosedJudgment::EqMem(a1.open(&DimExpr::One), (**n1).clone(), (**n2).clone())));
                all.finish()
            }
            (Term::ExactEq(a1, m1, n1), Term::ExactEq(a2, m2, n2)) => {
                let base_kind = if k == Kind::Pre { Kind::Pre } else { Kind::Discrete };
                conj!(all, self.closed(&ClosedJudgment::EqType((**a1).clone(), (**a2).clone(), base_kind)));
                conj!(all, self.closed(&ClosedJudgment::EqMem((**a1).clone(), (**m1).clone(), (**m2).clone())));
                conj!(all, self.closed(&ClosedJudgment::EqMem((**a1).clone(), (**n1).clone(), (**n2).clone())));
                all.finish()
            }
            _ => Verdict::Fails(format!("`{a}` and `{b}` are not equal canonical types")),
        }
    }

    fn mem_values(&mut self, ty: &Term, m: &Term, n: &Term) -> Verdict {
        let mut all = All::new();
        match ty {
            Term::Bool => match (m, n) {
                (Term::True, Term::True) | (Term::False, Term::False) => Verdict::Holds,
                (Term::True | Term::False, Term::True | Term::False) => {
                    Verdict::Fails(format!("`{m}` and `{n}` are distinct booleans"))
                }
                _ => Verdict::Fails(format!("`{m}` or `{n}` is not a boolean")),
            },
            Term::Circle => match (m, n) {
                (Term::Base, Term::Base) => Verdict::Holds,
                (Term::Loop(r), Term::Loop(s)) if r == s => Verdict::Holds,
                (Term::Base | Term::Loop(_), Term::Base | Term::Loop(_)) => {
                    Verdict::Unknown(format!("path-level equality of `{m}` and `{n}` in S1"))
                }
                _ => Verdict::Fails(format!("`{m}` or `{n}` is not an element of S1")),
            },
            Term::FunType(dom, cod) => match (m, n) {
                (Term::Lam(f), Term::Lam(g)) => match self.equal_pairs(dom) {
                    Ok(pairs) => {
                        for (x, y) in pairs {
                            conj!(all, self.closed(&ClosedJudgment::EqMem(cod.open(&x), f.open(&x), g.open(&y))));
                        }
                        all.finish()
                    }
                    Err(v) => v,
                },
                _ => Verdict::Fails(format!("`{m}` or `{n}` is not a function")),
            },
            Term::PairType(a, b) => match (m, n) {
                (Term::Pair(m1, m2), Term::Pair(n1, n2)) => {
                    conj!(all, self.closed(&ClosedJudgment::EqMem((**a).clone(), (**m1).clone(), (**n1).clone())));
                    conj!(all, self.closed(&ClosedJudgment::EqMem(b.open(m1), (**m2).clone(), (**n2).clone())));
                    all.finish()
                }
                _ => Verdict::Fails(format!("`{m}` or `{n}` is not a pair")),
            },
            Term::PathType(a, p0, p1) => match (m, n) {
                (Term::DimAbs(p), Term::DimAbs(q)) => {
                    let taken: BTreeSet<Name> = [ty, m, n].iter().flat_map(|t| t.free_dims()).collect();
                    let i = fresh_dim_for(&taken);
                    conj!(all, self.closed(&ClosedJudgment::EqMem(a.open_name(&i), p.open_name(&i), q.open_name(&i))));
                    for (end, r) in [(p0, DimExpr::Zero), (p1, DimExpr::One)] {
                        conj!(all, self.closed(&ClosedJudgment::EqMem(a.open(&r), p.open(&r), (**end).clone())));
                        conj!(all, self.closed(&ClosedJudgment::EqMem(a.open(&r), q.open(&r), (**end).clone())));
                    }
                    all.finish()
                }
                _ => Verdict::Fails(format!("`{m}` or `{n}` is not a path abstraction")),
            },
            Term::ExactEq(a, p, q) => match (m, n) {
                (Term::Ax, Term::Ax) => self.closed(&ClosedJudgment::EqMem((**a).clone(), (**p).clone(), (**q).clone())),
                _ => Verdict::Fails(format!("`{m}` or `{n}` is not `ax`")),
            },
            _ => Verdict::Fails(format!("`{ty}` is not a type")),
        }
    }

    /// Canonical members of an enumerable closed type.
    fn members(&mut self, ty: &Term) -> Result<Vec<Term>, Verdict> {
        let v = self.eval(ty)?;
        match &v {
            Term::Bool => Ok(vec![Term::True, Term::False]),
            Term::ExactEq(a, m, n) => {
                match self.closed(&ClosedJudgment::EqMem((**a).clone(), (**m).clone(), (**n).clone())) {
                    Verdict::Holds => Ok(vec![Term::Ax]),
                    Verdict::Fails(_) => Ok(vec![]),
                    unknown @ Verdict::Unknown(_) => Err(unknown),
                }
            }
            Term::PairType(a, b) => {
                let mut out = Vec::new();
                for x in self.members(a)? {
                    for y in self.members(&b.open(&x))? {
                        out.push(Term::pair(x.clone(), y));
                    }
                }
                Ok(out)
            }
            _ => Err(Verdict::Unknown(format!("the type `{ty}` is not enumerable"))),
        }
    }

    /// Pairs of enumerated members that are equal in `ty`.
    fn equal_pairs(&mut self, ty: &Term) -> Result<Vec<(Term, Term)>, Verdict> {
        let members = self.members(ty)?;
        let mut out = Vec::new();
        for x in &members {
            for y in &members {
                match self.closed(&ClosedJudgment::EqMem(ty.clone(), x.clone(), y.clone())) {
                    Verdict::Holds => out.push((x.clone(), y.clone())),
                    Verdict::Fails(_) => {}
                    unknown @ Verdict::Unknown(_) => return Err(unknown),
                }
            }
        }
        Ok(out)
    }
}

/// Decides a judgment about term-closed programs.
pub fn check_closed(j: &ClosedJudgment, fuel: u64) -> Verdict {
    Oracle { fuel, depth: 0 }.closed(j)
}

/// Decides a judgment under hypotheses by enumerating every pair of equal
/// closing substitutions. `dims` declares the free dimension names.
pub fn check_open(hyps: &[(Name, Term)], dims: &[Name], j: &ClosedJudgment, fuel: u64) -> Verdict {
    let declared: BTreeSet<&Name> = hyps.iter().map(|(x, _)| x).collect();
    if let Some(x) = j.free_vars().iter().find(|x| !declared.contains(x)) {
        return Verdict::Fails(format!("variable `{x}` is not a hypothesis"));
    }
    if let Some(i) = j.free_dims().iter().find(|i| !dims.contains(i)) {
        return Verdict::Fails(format!("dimension `{i}` is not declared"));
    }
    let mut oracle = Oracle { fuel, depth: 0 };
    open_rec(&mut oracle, hyps, j, Subst::default(), Subst::default())
}

fn open_rec(oracle: &mut Oracle, hyps: &[(Name, Term)], j: &ClosedJudgment, left: Subst, right: Subst) -> Verdict {
    let Some(((x, ty), rest)) = hyps.split_first() else {
        return oracle.closed(&j.instantiate(&left, &right));
    };
    let ty = ty.subst(&left);
    let pairs = match oracle.equal_pairs(&ty) {
        Ok(p) => p,
        Err(Verdict::Unknown(_)) => {
            return Verdict::Unknown(format!("hypothesis `{x} : {ty}` is not enumerable"))
        }
        Err(v) => return v,
    };
    let mut all = All::new();
    for (a, b) in pairs {
        let mut l = left.clone();
        let mut r = right.clone();
        l.terms.insert(x.clone(), a);
        r.terms.insert(x.clone(), b);
        conj!(all, open_rec(oracle, rest, j, l, r));
    }
    all.finish()
}

fn deep_value(t: &Term, fuel: u64) -> Option<Term> {
    let v = eval(t, fuel).ok()?;
    let mut budget = fuel;
    normalize(&v, Reduction::Full, &mut budget)
}

/// Whether evaluation of `m` commutes with every substitution of its free
/// dimensions into `{0, 1, fresh}`: evaluating the substituted program agrees
/// with substituting into the value and evaluating again. Results are
/// compared after full normalization. Evaluation failures count as
/// disagreement.
pub fn commutes_with_subst(m: &Term, fuel: u64) -> bool {
    let Ok(v) = eval(m, fuel) else {
        return false;
    };
    let dims = m.free_dims();
    let fresh = fresh_dim_for(&dims);
    dim_substitutions(&dims, &fresh).iter().all(|s| {
        match (deep_value(&m.dim_subst(s), fuel), deep_value(&v.dim_subst(s), fuel)) {
            (Some(a), Some(b)) => a.alpha_eq(&b),
            _ => false,
        }
    })
}

/// Whether the single step `m ↦ next` commutes with every substitution of
/// `m`'s free dimensions: the substituted program steps to the substituted
/// successor, and both evaluate to the same normal form.
pub fn step_commutes(m: &Term, next: &Term, fuel: u64) -> bool {
    let dims = m.free_dims();
    let fresh = fresh_dim_for(&dims);
    dim_substitutions(&dims, &fresh).iter().all(|s| {
        let lhs = m.dim_subst(s);
        let rhs = next.dim_subst(s);
        let one_step = matches!(step(&lhs), StepResult::Stepped { next, .. } if next.alpha_eq(&rhs));
        one_step && deep_value(&lhs, fuel) == deep_value(&rhs, fuel)
    })
}
