//! Terms, dimension expressions and the substitution machinery shared by the
//! rest of the kernel.
//!
//! Terms are locally nameless: bound term variables and bound dimension names
//! are de Bruijn indices counted in two independent namespaces, free ones are
//! names. Binders keep the user's name as a [`Hint`] that takes no part in
//! equality, so alpha-equivalence is the derived `PartialEq`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// An identifier for a free term variable or a free dimension name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Name {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Name {
        Name::new(s)
    }
}

impl From<String> for Name {
    fn from(s: String) -> Name {
        Name(Arc::from(s))
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Returns `base`, or `base` followed by the smallest numeric suffix, such that
/// `taken` rejects it.
pub fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> Name {
    let base = if base.is_empty() || base == "_" { "x" } else { base };
    if !taken(base) {
        return Name::new(base);
    }
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "x" } else { stem };
    (1..)
        .map(|k| format!("{stem}{k}"))
        .find(|cand| !taken(cand))
        .map(Name::from)
        .expect("unbounded suffix supply")
}

/// The printing name of a binder. All hints compare equal.
#[derive(Clone)]
pub struct Hint(pub Name);

impl Hint {
    pub fn new(s: &str) -> Hint {
        Hint(Name::new(s))
    }

    pub fn anon() -> Hint {
        Hint::new("_")
    }

    pub fn name(&self) -> &Name {
        &self.0
    }
}

impl PartialEq for Hint {
    fn eq(&self, _: &Hint) -> bool {
        true
    }
}

impl Eq for Hint {}

impl fmt::Debug for Hint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Var {
    Bound(u32),
    Free(Name),
}

/// A dimension name: bound by an enclosing dimension binder, or free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Dim {
    Bound(u32),
    Free(Name),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DimExpr {
    Zero,
    One,
    Name(Dim),
}

impl DimExpr {
    pub fn free(name: &str) -> DimExpr {
        DimExpr::Name(Dim::Free(Name::new(name)))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, DimExpr::Zero | DimExpr::One)
    }

    pub fn free_name(&self) -> Option<&Name> {
        match self {
            DimExpr::Name(Dim::Free(n)) => Some(n),
            _ => None,
        }
    }
}

/// A term binder `x.M`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bind {
    pub hint: Hint,
    pub body: Box<Term>,
}

/// A dimension binder `i.M`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimBind {
    pub hint: Hint,
    pub body: Box<Term>,
}

/// Identifies a goal in a proof tree by its path from the root. Goal ids double
/// as metavariable names.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct GoalId(pub Vec<u32>);

impl GoalId {
    pub fn root() -> GoalId {
        GoalId(Vec::new())
    }

    pub fn child(&self, i: u32) -> GoalId {
        let mut path = self.0.clone();
        path.push(i);
        GoalId(path)
    }

    pub fn parent(&self) -> Option<GoalId> {
        let (_, init) = self.0.split_last()?;
        Some(GoalId(init.to_vec()))
    }

    pub fn is_within(&self, ancestor: &GoalId) -> bool {
        self.0.starts_with(&ancestor.0)
    }

    pub fn parse(s: &str) -> Option<GoalId> {
        if s == "root" {
            return Some(GoalId::root());
        }
        s.split('.')
            .map(|p| p.parse::<u32>().ok())
            .collect::<Option<Vec<_>>>()
            .map(GoalId)
    }
}

impl fmt::Display for GoalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("root");
        }
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        f.write_str(&parts.join("."))
    }
}

impl fmt::Debug for GoalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A metavariable occurrence together with the substitutions applied to it
/// since it was created, in order. They are replayed on the solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetaRef {
    pub id: GoalId,
    pub pending: Vec<Subst>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Var(Var),

    FunType(Box<Term>, Bind),
    Lam(Bind),
    App(Box<Term>, Box<Term>),

    PairType(Box<Term>, Bind),
    Pair(Box<Term>, Box<Term>),
    Fst(Box<Term>),
    Snd(Box<Term>),

    Bool,
    True,
    False,
    If(Box<Term>, Box<Term>, Box<Term>),

    Circle,
    Base,
    Loop(DimExpr),
    /// `S1-rec(x.C; M; B; i.L)`: motive, target, base method, loop method.
    CircleRec {
        motive: Bind,
        target: Box<Term>,
        base: Box<Term>,
        lp: DimBind,
    },

    PathType(DimBind, Box<Term>, Box<Term>),
    DimAbs(DimBind),
    DimApp(Box<Term>, DimExpr),

    ExactEq(Box<Term>, Box<Term>, Box<Term>),
    Ax,

    /// A proof-state hole. Never produced by the parser.
    Meta(MetaRef),
}

/// A finite map from dimension names to dimension expressions; names outside
/// the map are fixed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DimSubst(BTreeMap<Name, DimExpr>);

impl DimSubst {
    pub fn new() -> DimSubst {
        DimSubst::default()
    }

    pub fn single(name: impl Into<Name>, r: DimExpr) -> DimSubst {
        let mut s = DimSubst::new();
        s.insert(name.into(), r);
        s
    }

    /// Replacement expressions must not mention bound dimension indices.
    pub fn insert(&mut self, name: Name, r: DimExpr) {
        debug_assert!(!matches!(r, DimExpr::Name(Dim::Bound(_))));
        self.0.insert(name, r);
    }

    pub fn get(&self, name: &Name) -> Option<&DimExpr> {
        self.0.get(name)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &DimExpr)> {
        self.0.iter()
    }

    pub fn apply_expr(&self, r: &DimExpr) -> DimExpr {
        match r {
            DimExpr::Name(Dim::Free(n)) => self.0.get(n).cloned().unwrap_or_else(|| r.clone()),
            _ => r.clone(),
        }
    }

    /// `after ∘ self`: applying the result equals applying `self`, then `after`.
    pub fn then(&self, after: &DimSubst) -> DimSubst {
        let mut out: BTreeMap<Name, DimExpr> = self
            .0
            .iter()
            .map(|(n, r)| (n.clone(), after.apply_expr(r)))
            .collect();
        for (n, r) in &after.0 {
            out.entry(n.clone()).or_insert_with(|| r.clone());
        }
        DimSubst(out)
    }
}

impl FromIterator<(Name, DimExpr)> for DimSubst {
    fn from_iter<I: IntoIterator<Item = (Name, DimExpr)>>(iter: I) -> DimSubst {
        let mut s = DimSubst::new();
        for (n, r) in iter {
            s.insert(n, r);
        }
        s
    }
}

/// Simultaneous substitution of locally closed terms for free variables and of
/// dimension expressions for free dimension names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Subst {
    pub terms: BTreeMap<Name, Term>,
    pub dims: DimSubst,
}

impl Subst {
    pub fn term(x: impl Into<Name>, t: Term) -> Subst {
        let mut terms = BTreeMap::new();
        terms.insert(x.into(), t);
        Subst {
            terms,
            dims: DimSubst::new(),
        }
    }

    pub fn dims(dims: DimSubst) -> Subst {
        Subst {
            terms: BTreeMap::new(),
            dims,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty() && self.dims.is_empty()
    }
}

// Generic structural traversal. Callbacks return `None` to keep a leaf.
trait Visit {
    fn var(&mut self, _v: &Var, _depth: u32) -> Option<Term> {
        None
    }
    fn dim(&mut self, _d: &Dim, _depth: u32) -> Option<DimExpr> {
        None
    }
    fn meta(&mut self, _m: &MetaRef) -> Option<Term> {
        None
    }
}

fn walk(t: &Term, v: &mut impl Visit, td: u32, dd: u32) -> Term {
    let go = |t: &Term, v: &mut _| Box::new(walk(t, v, td, dd));
    match t {
        Term::Var(x) => v.var(x, td).unwrap_or_else(|| t.clone()),
        Term::FunType(a, b) => Term::FunType(go(a, v), walk_bind(b, v, td, dd)),
        Term::Lam(b) => Term::Lam(walk_bind(b, v, td, dd)),
        Term::App(m, n) => Term::App(go(m, v), go(n, v)),
        Term::PairType(a, b) => Term::PairType(go(a, v), walk_bind(b, v, td, dd)),
        Term::Pair(m, n) => Term::Pair(go(m, v), go(n, v)),
        Term::Fst(m) => Term::Fst(go(m, v)),
        Term::Snd(m) => Term::Snd(go(m, v)),
        Term::Bool | Term::True | Term::False | Term::Circle | Term::Base | Term::Ax => t.clone(),
        Term::If(m, n, o) => Term::If(go(m, v), go(n, v), go(o, v)),
        Term::Loop(r) => Term::Loop(walk_dim(r, v, dd)),
        Term::CircleRec {
            motive,
            target,
            base,
            lp,
        } => Term::CircleRec {
            motive: walk_bind(motive, v, td, dd),
            target: go(target, v),
            base: go(base, v),
            lp: walk_dim_bind(lp, v, td, dd),
        },
        Term::PathType(a, m, n) => Term::PathType(walk_dim_bind(a, v, td, dd), go(m, v), go(n, v)),
        Term::DimAbs(b) => Term::DimAbs(walk_dim_bind(b, v, td, dd)),
        Term::DimApp(m, r) => Term::DimApp(go(m, v), walk_dim(r, v, dd)),
        Term::ExactEq(a, m, n) => Term::ExactEq(go(a, v), go(m, v), go(n, v)),
        Term::Meta(m) => v.meta(m).unwrap_or_else(|| t.clone()),
    }
}

fn walk_bind(b: &Bind, v: &mut impl Visit, td: u32, dd: u32) -> Bind {
    Bind {
        hint: b.hint.clone(),
        body: Box::new(walk(&b.body, v, td + 1, dd)),
    }
}

fn walk_dim_bind(b: &DimBind, v: &mut impl Visit, td: u32, dd: u32) -> DimBind {
    DimBind {
        hint: b.hint.clone(),
        body: Box::new(walk(&b.body, v, td, dd + 1)),
    }
}

fn walk_dim(r: &DimExpr, v: &mut impl Visit, dd: u32) -> DimExpr {
    match r {
        DimExpr::Name(d) => v.dim(d, dd).unwrap_or_else(|| r.clone()),
        _ => r.clone(),
    }
}

struct OpenVar<'a>(&'a Term);
impl Visit for OpenVar<'_> {
    fn var(&mut self, v: &Var, depth: u32) -> Option<Term> {
        matches!(v, Var::Bound(k) if *k == depth).then(|| self.0.clone())
    }
}

struct CloseVar<'a>(&'a Name);
impl Visit for CloseVar<'_> {
    fn var(&mut self, v: &Var, depth: u32) -> Option<Term> {
        matches!(v, Var::Free(n) if n == self.0).then_some(Term::Var(Var::Bound(depth)))
    }
}

struct OpenDim<'a>(&'a DimExpr);
impl Visit for OpenDim<'_> {
    fn dim(&mut self, d: &Dim, depth: u32) -> Option<DimExpr> {
        matches!(d, Dim::Bound(k) if *k == depth).then(|| self.0.clone())
    }
}

struct CloseDim<'a>(&'a Name);
impl Visit for CloseDim<'_> {
    fn dim(&mut self, d: &Dim, depth: u32) -> Option<DimExpr> {
        matches!(d, Dim::Free(n) if n == self.0).then_some(DimExpr::Name(Dim::Bound(depth)))
    }
}

struct ApplySubst<'a>(&'a Subst);
impl Visit for ApplySubst<'_> {
    fn var(&mut self, v: &Var, _: u32) -> Option<Term> {
        match v {
            Var::Free(n) => self.0.terms.get(n).cloned(),
            Var::Bound(_) => None,
        }
    }
    fn dim(&mut self, d: &Dim, _: u32) -> Option<DimExpr> {
        match d {
            Dim::Free(n) => self.0.dims.get(n).cloned(),
            Dim::Bound(_) => None,
        }
    }
    fn meta(&mut self, m: &MetaRef) -> Option<Term> {
        let mut m = m.clone();
        m.pending.push(self.0.clone());
        Some(Term::Meta(m))
    }
}

struct FillMetas<'a, F>(&'a F);
impl<F: Fn(&GoalId) -> Option<Term>> Visit for FillMetas<'_, F> {
    fn meta(&mut self, m: &MetaRef) -> Option<Term> {
        let Some(solution) = (self.0)(&m.id) else {
            // still a hole, but its delayed substitutions may mention solved goals
            let pending = m
                .pending
                .iter()
                .map(|s| Subst {
                    terms: s.terms.iter().map(|(x, t)| (x.clone(), t.fill_metas(self.0))).collect(),
                    dims: s.dims.clone(),
                })
                .collect();
            return Some(Term::Meta(MetaRef { id: m.id.clone(), pending }));
        };
        let filled = m
            .pending
            .iter()
            .fold(solution, |t, s| t.subst(s));
        Some(filled.fill_metas(self.0))
    }
}

impl Bind {
    pub fn new(hint: &str, body: Term) -> Bind {
        Bind {
            hint: Hint::new(hint),
            body: Box::new(body),
        }
    }

    /// Abstracts the free variable `x` of `body`.
    pub fn close(x: &Name, body: &Term) -> Bind {
        Bind {
            hint: Hint(x.clone()),
            body: Box::new(walk(body, &mut CloseVar(x), 0, 0)),
        }
    }

    /// A binder whose body ignores its variable.
    pub fn constant(body: Term) -> Bind {
        Bind {
            hint: Hint::anon(),
            body: Box::new(body),
        }
    }

    /// Instantiates the bound variable with a locally closed term.
    pub fn open(&self, arg: &Term) -> Term {
        walk(&self.body, &mut OpenVar(arg), 0, 0)
    }

    pub fn open_var(&self, x: &Name) -> Term {
        self.open(&Term::Var(Var::Free(x.clone())))
    }

    pub fn uses_var(&self) -> bool {
        self.body.has_bound_var(0)
    }
}

impl DimBind {
    pub fn close(i: &Name, body: &Term) -> DimBind {
        DimBind {
            hint: Hint(i.clone()),
            body: Box::new(walk(body, &mut CloseDim(i), 0, 0)),
        }
    }

    pub fn constant(body: Term) -> DimBind {
        DimBind {
            hint: Hint::anon(),
            body: Box::new(body),
        }
    }

    pub fn open(&self, r: &DimExpr) -> Term {
        walk(&self.body, &mut OpenDim(r), 0, 0)
    }

    pub fn open_name(&self, i: &Name) -> Term {
        self.open(&DimExpr::Name(Dim::Free(i.clone())))
    }

    pub fn uses_dim(&self) -> bool {
        self.body.has_bound_dim(0)
    }
}

fn bx(t: Term) -> Box<Term> {
    Box::new(t)
}

impl Term {
    pub fn var(x: &str) -> Term {
        Term::Var(Var::Free(Name::new(x)))
    }

    pub fn free(x: &Name) -> Term {
        Term::Var(Var::Free(x.clone()))
    }

    pub fn lam(x: &str, body: Term) -> Term {
        Term::Lam(Bind::close(&Name::new(x), &body))
    }

    pub fn app(m: Term, n: Term) -> Term {
        Term::App(bx(m), bx(n))
    }

    pub fn fun_type(x: &str, a: Term, b: Term) -> Term {
        Term::FunType(bx(a), Bind::close(&Name::new(x), &b))
    }

    pub fn arrow(a: Term, b: Term) -> Term {
        Term::FunType(bx(a), Bind::constant(b))
    }

    pub fn pair_type(x: &str, a: Term, b: Term) -> Term {
        Term::PairType(bx(a), Bind::close(&Name::new(x), &b))
    }

    pub fn product(a: Term, b: Term) -> Term {
        Term::PairType(bx(a), Bind::constant(b))
    }

    pub fn pair(m: Term, n: Term) -> Term {
        Term::Pair(bx(m), bx(n))
    }

    pub fn fst(m: Term) -> Term {
        Term::Fst(bx(m))
    }

    pub fn snd(m: Term) -> Term {
        Term::Snd(bx(m))
    }

    pub fn if_(m: Term, n: Term, o: Term) -> Term {
        Term::If(bx(m), bx(n), bx(o))
    }

    pub fn loop_(r: DimExpr) -> Term {
        Term::Loop(r)
    }

    /// `S1-rec(x.C; M; B; i.L)` with `x` and `i` free in `motive` and `lp`.
    pub fn circle_rec(x: &str, motive: Term, target: Term, base: Term, i: &str, lp: Term) -> Term {
        Term::CircleRec {
            motive: Bind::close(&Name::new(x), &motive),
            target: bx(target),
            base: bx(base),
            lp: DimBind::close(&Name::new(i), &lp),
        }
    }

    pub fn path_type(i: &str, a: Term, m: Term, n: Term) -> Term {
        Term::PathType(DimBind::close(&Name::new(i), &a), bx(m), bx(n))
    }

    pub fn dim_abs(i: &str, body: Term) -> Term {
        Term::DimAbs(DimBind::close(&Name::new(i), &body))
    }

    pub fn dim_app(m: Term, r: DimExpr) -> Term {
        Term::DimApp(bx(m), r)
    }

    pub fn exact_eq(a: Term, m: Term, n: Term) -> Term {
        Term::ExactEq(bx(a), bx(m), bx(n))
    }

    pub fn meta(id: GoalId) -> Term {
        Term::Meta(MetaRef {
            id,
            pending: Vec::new(),
        })
    }

    /// Alpha-equivalence. With locally nameless binding this is structural.
    pub fn alpha_eq(&self, other: &Term) -> bool {
        self == other
    }

    /// Capture-avoiding `self[n/x]`. `n` must be locally closed.
    pub fn subst_var(&self, x: &Name, n: &Term) -> Term {
        self.subst(&Subst::term(x.clone(), n.clone()))
    }

    pub fn subst(&self, s: &Subst) -> Term {
        if s.is_empty() {
            return self.clone();
        }
        walk(self, &mut ApplySubst(s), 0, 0)
    }

    /// Applies a dimension substitution to the free dimension names.
    pub fn dim_subst(&self, s: &DimSubst) -> Term {
        self.subst(&Subst::dims(s.clone()))
    }

    /// Replaces solved metavariables, replaying their pending substitutions.
    pub fn fill_metas<F: Fn(&GoalId) -> Option<Term>>(&self, solved: &F) -> Term {
        walk(self, &mut FillMetas(solved), 0, 0)
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut acc = BTreeSet::new();
        self.fold(&mut |leaf| {
            if let Leaf::Var(Var::Free(n)) = leaf {
                acc.insert(n.clone());
            }
        });
        acc
    }

    /// Names with a free occurrence in dimension position.
    pub fn free_dims(&self) -> BTreeSet<Name> {
        let mut acc = BTreeSet::new();
        self.fold(&mut |leaf| {
            if let Leaf::Dim(Dim::Free(n)) = leaf {
                acc.insert(n.clone());
            }
        });
        acc
    }

    pub fn metas(&self) -> BTreeSet<GoalId> {
        let mut acc = BTreeSet::new();
        self.fold(&mut |leaf| {
            if let Leaf::Meta(m) = leaf {
                acc.insert(m.id.clone());
            }
        });
        acc
    }

    pub fn has_metas(&self) -> bool {
        !self.metas().is_empty()
    }

    fn has_bound_var(&self, idx: u32) -> bool {
        let mut found = false;
        self.fold_depth(0, 0, &mut |leaf, td, _| {
            if let Leaf::Var(Var::Bound(k)) = leaf {
                found |= *k == idx + td;
            }
        });
        found
    }

    fn has_bound_dim(&self, idx: u32) -> bool {
        let mut found = false;
        self.fold_depth(0, 0, &mut |leaf, _, dd| {
            if let Leaf::Dim(Dim::Bound(k)) = leaf {
                found |= *k == idx + dd;
            }
        });
        found
    }

    /// True when no bound index escapes its binder.
    pub fn is_locally_closed(&self) -> bool {
        let mut ok = true;
        self.fold_depth(0, 0, &mut |leaf, td, dd| match leaf {
            Leaf::Var(Var::Bound(k)) => ok &= *k < td,
            Leaf::Dim(Dim::Bound(k)) => ok &= *k < dd,
            _ => {}
        });
        ok
    }

    fn fold(&self, f: &mut impl FnMut(&Leaf<'_>)) {
        self.fold_depth(0, 0, &mut |leaf, _, _| f(&leaf));
    }

    fn fold_depth(&self, td: u32, dd: u32, f: &mut impl FnMut(Leaf<'_>, u32, u32)) {
        match self {
            Term::Var(v) => f(Leaf::Var(v), td, dd),
            Term::FunType(a, b) | Term::PairType(a, b) => {
                a.fold_depth(td, dd, f);
                b.body.fold_depth(td + 1, dd, f);
            }
            Term::Lam(b) => b.body.fold_depth(td + 1, dd, f),
            Term::App(m, n) | Term::Pair(m, n) => {
                m.fold_depth(td, dd, f);
                n.fold_depth(td, dd, f);
            }
            Term::Fst(m) | Term::Snd(m) => m.fold_depth(td, dd, f),
            Term::Bool | Term::True | Term::False | Term::Circle | Term::Base | Term::Ax => {}
            Term::If(m, n, o) | Term::ExactEq(m, n, o) => {
                m.fold_depth(td, dd, f);
                n.fold_depth(td, dd, f);
                o.fold_depth(td, dd, f);
            }
            Term::Loop(r) => {
                if let DimExpr::Name(d) = r {
                    f(Leaf::Dim(d), td, dd)
                }
            }
            Term::CircleRec {
                motive,
                target,
                base,
                lp,
            } => {
                motive.body.fold_depth(td + 1, dd, f);
                target.fold_depth(td, dd, f);
                base.fold_depth(td, dd, f);
                lp.body.fold_depth(td, dd + 1, f);
            }
            Term::PathType(a, m, n) => {
                a.body.fold_depth(td, dd + 1, f);
                m.fold_depth(td, dd, f);
                n.fold_depth(td, dd, f);
            }
            Term::DimAbs(b) => b.body.fold_depth(td, dd + 1, f),
            Term::DimApp(m, r) => {
                m.fold_depth(td, dd, f);
                if let DimExpr::Name(d) = r {
                    f(Leaf::Dim(d), td, dd)
                }
            }
            Term::Meta(m) => {
                f(Leaf::Meta(m), td, dd);
                for s in &m.pending {
                    for t in s.terms.values() {
                        t.fold_depth(td, dd, f);
                    }
                    for (_, r) in s.dims.iter() {
                        if let DimExpr::Name(d) = r {
                            f(Leaf::Dim(d), td, dd)
                        }
                    }
                }
            }
        }
    }

    /// Number of constructors, used to bound generated terms.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.for_each_subterm(&mut |_| n += 1);
        n
    }

    /// Whether some subterm, binder bodies included, satisfies `p`.
    pub fn any_subterm(&self, p: impl Fn(&Term) -> bool) -> bool {
        let mut found = false;
        self.for_each_subterm(&mut |t| found |= p(t));
        found
    }

    fn for_each_subterm(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        match self {
            Term::FunType(a, b) | Term::PairType(a, b) => {
                a.for_each_subterm(f);
                b.body.for_each_subterm(f);
            }
            Term::Lam(b) => b.body.for_each_subterm(f),
            Term::App(m, n) | Term::Pair(m, n) => {
                m.for_each_subterm(f);
                n.for_each_subterm(f);
            }
            Term::Fst(m) | Term::Snd(m) | Term::DimApp(m, _) => m.for_each_subterm(f),
            Term::If(m, n, o) | Term::ExactEq(m, n, o) => {
                m.for_each_subterm(f);
                n.for_each_subterm(f);
                o.for_each_subterm(f);
            }
            Term::CircleRec {
                motive,
                target,
                base,
                lp,
            } => {
                motive.body.for_each_subterm(f);
                target.for_each_subterm(f);
                base.for_each_subterm(f);
                lp.body.for_each_subterm(f);
            }
            Term::PathType(a, m, n) => {
                a.body.for_each_subterm(f);
                m.for_each_subterm(f);
                n.for_each_subterm(f);
            }
            Term::DimAbs(b) => b.body.for_each_subterm(f),
            _ => {}
        }
    }
}

enum Leaf<'a> {
    Var(&'a Var),
    Dim(&'a Dim),
    Meta(&'a MetaRef),
}

/// Capture-avoiding `m[n/x]`.
pub fn subst_term(m: &Term, n: &Term, x: &Name) -> Term {
    m.subst_var(x, n)
}

pub fn dim_subst(m: &Term, s: &DimSubst) -> Term {
    m.dim_subst(s)
}

pub fn alpha_eq(m: &Term, n: &Term) -> bool {
    m.alpha_eq(n)
}

pub fn free_dims(m: &Term) -> BTreeSet<Name> {
    m.free_dims()
}
