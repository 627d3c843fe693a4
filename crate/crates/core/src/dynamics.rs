//! Small-step operational semantics with per-step stability flags.
//!
//! A step is *stable* when it commutes with every substitution of the term's
//! free dimension names. All computation rules of the dimension-free fragment
//! are stable, as are `loop 0 ↦ base`, `loop 1 ↦ base` and the `base` case of
//! the circle eliminator. The `loop` case of the eliminator and path
//! application are stable only when their dimension argument cannot be
//! touched by a substitution.

use thiserror::Error;

use crate::syntax::{fresh_name, Bind, Dim, DimBind, DimExpr, Name, Term, Var};

pub const DEFAULT_FUEL: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepResult {
    Stepped { next: Term, stable: bool },
    IsValue,
    Stuck(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("evaluation did not reach a value within {0} steps")]
    FuelExhausted(u64),
    #[error("evaluation is stuck at `{term}`: {reason}")]
    StuckAt { term: Term, reason: String },
}

/// Terms visited by an evaluation, starting from the input. Every entry but
/// the first records whether the step that produced it was stable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub term: Term,
    pub stable: Option<bool>,
}

fn dim_is_rigid(r: &DimExpr) -> bool {
    // constants and names bound above the redex are out of reach of substitutions
    !matches!(r, DimExpr::Name(Dim::Free(_)))
}

fn stepped(next: Term, stable: bool) -> StepResult {
    StepResult::Stepped { next, stable }
}

/// Congruence: steps the principal argument and rebuilds around it.
fn congruence(inner: &Term, what: &str, rebuild: impl FnOnce(Term) -> Term) -> StepResult {
    match step(inner) {
        StepResult::Stepped { next, stable } => stepped(rebuild(next), stable),
        StepResult::IsValue => StepResult::Stuck(format!("{what} applied to the value `{inner}`")),
        stuck @ StepResult::Stuck(_) => stuck,
    }
}

pub fn is_value(m: &Term) -> bool {
    matches!(step(m), StepResult::IsValue)
}

/// One step of the deterministic small-step relation.
pub fn step(m: &Term) -> StepResult {
    match m {
        Term::FunType(..)
        | Term::Lam(_)
        | Term::PairType(..)
        | Term::Pair(..)
        | Term::Bool
        | Term::True
        | Term::False
        | Term::Circle
        | Term::Base
        | Term::PathType(..)
        | Term::DimAbs(_)
        | Term::ExactEq(..)
        | Term::Ax => StepResult::IsValue,
        Term::Loop(DimExpr::Zero | DimExpr::One) => stepped(Term::Base, true),
        Term::Loop(DimExpr::Name(_)) => StepResult::IsValue,
        Term::Var(Var::Free(x)) => StepResult::Stuck(format!("free variable `{x}`")),
        Term::Var(Var::Bound(_)) => StepResult::Stuck("bound variable in head position".into()),
        Term::Meta(meta) => StepResult::Stuck(format!("unsolved hole ?{}", meta.id)),
        Term::App(f, a) => match &**f {
            Term::Lam(b) => stepped(b.open(a), true),
            _ => congruence(f, "application", |f| Term::App(Box::new(f), a.clone())),
        },
        Term::Fst(p) => match &**p {
            Term::Pair(a, _) => stepped((**a).clone(), true),
            _ => congruence(p, "fst", Term::fst),
        },
        Term::Snd(p) => match &**p {
            Term::Pair(_, b) => stepped((**b).clone(), true),
            _ => congruence(p, "snd", Term::snd),
        },
        Term::If(c, t, e) => match &**c {
            Term::True => stepped((**t).clone(), true),
            Term::False => stepped((**e).clone(), true),
            _ => congruence(c, "if", |c| Term::If(Box::new(c), t.clone(), e.clone())),
        },
        Term::CircleRec {
            motive,
            target,
            base,
            lp,
        } => match &**target {
            Term::Base => stepped((**base).clone(), true),
            Term::Loop(r @ DimExpr::Name(_)) => stepped(lp.open(r), dim_is_rigid(r)),
            _ => congruence(target, "S1-rec", |target| Term::CircleRec {
                motive: motive.clone(),
                target: Box::new(target),
                base: base.clone(),
                lp: lp.clone(),
            }),
        },
        Term::DimApp(p, r) => match &**p {
            Term::DimAbs(b) => stepped(b.open(r), dim_is_rigid(r)),
            _ => congruence(p, "path application", |p| Term::DimApp(Box::new(p), r.clone())),
        },
    }
}

/// Stability of the next redex of `m`.
///
/// When `m` has no head redex the search descends into subterms, leftmost
/// first, without opening binders: a dimension name bound inside `m` cannot be
/// reached by a substitution of `m`'s free names. Returns `false` when `m`
/// has no redex at all.
pub fn classify_stability(m: &Term) -> bool {
    redex_stability(m).unwrap_or(false)
}

fn redex_stability(m: &Term) -> Option<bool> {
    match step(m) {
        StepResult::Stepped { stable, .. } => return Some(stable),
        StepResult::IsValue | StepResult::Stuck(_) => {}
    }
    let children: Vec<&Term> = match m {
        Term::FunType(a, b) | Term::PairType(a, b) => vec![a, &b.body],
        Term::Lam(b) => vec![&b.body],
        Term::App(x, y) | Term::Pair(x, y) => vec![x, y],
        Term::Fst(x) | Term::Snd(x) | Term::DimApp(x, _) => vec![x],
        Term::If(x, y, z) | Term::ExactEq(x, y, z) => vec![x, y, z],
        Term::CircleRec {
            motive,
            target,
            base,
            lp,
        } => vec![&motive.body, target, base, &lp.body],
        Term::PathType(a, x, y) => vec![&a.body, x, y],
        Term::DimAbs(b) => vec![&b.body],
        _ => vec![],
    };
    children.into_iter().find_map(redex_stability)
}

pub fn eval(m: &Term, fuel: u64) -> Result<Term, EvalError> {
    run(m, fuel, None)
}

/// Evaluation that also records every intermediate term.
pub fn eval_traced(m: &Term, fuel: u64) -> (Result<Term, EvalError>, Trace) {
    let mut trace = Trace {
        entries: vec![TraceEntry {
            term: m.clone(),
            stable: None,
        }],
    };
    let out = run(m, fuel, Some(&mut trace));
    (out, trace)
}

fn run(m: &Term, fuel: u64, mut trace: Option<&mut Trace>) -> Result<Term, EvalError> {
    let mut cur = m.clone();
    let mut used = 0;
    loop {
        match step(&cur) {
            StepResult::IsValue => return Ok(cur),
            StepResult::Stuck(reason) => return Err(EvalError::StuckAt { term: cur, reason }),
            StepResult::Stepped { next, stable } => {
                if used == fuel {
                    return Err(EvalError::FuelExhausted(fuel));
                }
                used += 1;
                if let Some(t) = trace.as_deref_mut() {
                    t.entries.push(TraceEntry {
                        term: next.clone(),
                        stable: Some(stable),
                    });
                }
                cur = next;
            }
        }
    }
}

/// Which steps normalization may take.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    /// Only stable steps: safe on terms not yet known to be well-typed.
    Stable,
    /// Every step.
    Full,
}

/// Reduces the head as far as the allowed steps go. `None` on fuel exhaustion.
pub fn whnf(m: &Term, mode: Reduction, fuel: &mut u64) -> Option<Term> {
    let mut cur = m.clone();
    loop {
        match step(&cur) {
            StepResult::Stepped { next, stable } if stable || mode == Reduction::Full => {
                if *fuel == 0 {
                    return None;
                }
                *fuel -= 1;
                cur = next;
            }
            _ => return Some(cur),
        }
    }
}

/// Weak-head normal form by stable steps with the default budget.
pub fn whnf_stable(m: &Term) -> Term {
    let mut fuel = DEFAULT_FUEL;
    whnf(m, Reduction::Stable, &mut fuel).unwrap_or_else(|| m.clone())
}

/// Full normalization, descending under binders by opening them with fresh
/// names. Stuck subterms are left in place.
pub fn normalize(m: &Term, mode: Reduction, fuel: &mut u64) -> Option<Term> {
    let head = whnf(m, mode, fuel)?;
    let go = |t: &Term, fuel: &mut u64| normalize(t, mode, fuel).map(Box::new);
    Some(match &head {
        Term::Var(_)
        | Term::Bool
        | Term::True
        | Term::False
        | Term::Circle
        | Term::Base
        | Term::Ax
        | Term::Loop(_)
        | Term::Meta(_) => head,
        Term::FunType(a, b) => Term::FunType(go(a, fuel)?, norm_bind(b, mode, fuel)?),
        Term::PairType(a, b) => Term::PairType(go(a, fuel)?, norm_bind(b, mode, fuel)?),
        Term::Lam(b) => Term::Lam(norm_bind(b, mode, fuel)?),
        Term::App(x, y) => Term::App(go(x, fuel)?, go(y, fuel)?),
        Term::Pair(x, y) => Term::Pair(go(x, fuel)?, go(y, fuel)?),
        Term::Fst(x) => Term::Fst(go(x, fuel)?),
        Term::Snd(x) => Term::Snd(go(x, fuel)?),
        Term::If(x, y, z) => Term::If(go(x, fuel)?, go(y, fuel)?, go(z, fuel)?),
        Term::ExactEq(x, y, z) => Term::ExactEq(go(x, fuel)?, go(y, fuel)?, go(z, fuel)?),
        Term::CircleRec {
            motive,
            target,
            base,
            lp,
        } => Term::CircleRec {
            motive: norm_bind(motive, mode, fuel)?,
            target: go(target, fuel)?,
            base: go(base, fuel)?,
            lp: norm_dim_bind(lp, mode, fuel)?,
        },
        Term::PathType(a, x, y) => {
            Term::PathType(norm_dim_bind(a, mode, fuel)?, go(x, fuel)?, go(y, fuel)?)
        }
        Term::DimAbs(b) => Term::DimAbs(norm_dim_bind(b, mode, fuel)?),
        Term::DimApp(x, r) => Term::DimApp(go(x, fuel)?, r.clone()),
    })
}

fn internal_name(hint: &Name, t: &Term, dims: bool) -> Name {
    let taken = if dims { t.free_dims() } else { t.free_vars() };
    fresh_name(&format!("%{hint}"), |s| taken.iter().any(|n| n.as_str() == s))
}

fn norm_bind(b: &Bind, mode: Reduction, fuel: &mut u64) -> Option<Bind> {
    let x = internal_name(b.hint.name(), &b.body, false);
    let body = normalize(&b.open_var(&x), mode, fuel)?;
    let mut out = Bind::close(&x, &body);
    out.hint = b.hint.clone();
    Some(out)
}

fn norm_dim_bind(b: &DimBind, mode: Reduction, fuel: &mut u64) -> Option<DimBind> {
    let i = internal_name(b.hint.name(), &b.body, true);
    let body = normalize(&b.open_name(&i), mode, fuel)?;
    let mut out = DimBind::close(&i, &body);
    out.hint = b.hint.clone();
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::DimSubst;

    fn s1_rec_bool(target: Term) -> Term {
        Term::circle_rec("_", Term::Bool, target, Term::True, "_", Term::False)
    }

    #[test]
    fn beta_is_stable() {
        let t = Term::app(Term::lam("x", Term::var("x")), Term::True);
        assert_eq!(
            step(&t),
            StepResult::Stepped {
                next: Term::True,
                stable: true
            }
        );
    }

    #[test]
    fn loop_endpoints_step_to_base() {
        for r in [DimExpr::Zero, DimExpr::One] {
            assert_eq!(
                step(&Term::Loop(r)),
                StepResult::Stepped {
                    next: Term::Base,
                    stable: true
                }
            );
        }
        assert_eq!(step(&Term::Loop(DimExpr::free("i"))), StepResult::IsValue);
    }

    #[test]
    fn loop_case_with_free_dimension_is_unstable() {
        let t = s1_rec_bool(Term::Loop(DimExpr::free("i")));
        assert_eq!(
            step(&t),
            StepResult::Stepped {
                next: Term::False,
                stable: false
            }
        );
        assert!(!classify_stability(&t));
        assert!(classify_stability(&Term::Loop(DimExpr::One)));
    }

    #[test]
    fn redex_under_binder_is_stable() {
        let t = Term::dim_abs("j", s1_rec_bool(Term::Loop(DimExpr::free("j"))));
        assert_eq!(step(&t), StepResult::IsValue);
        assert!(classify_stability(&t));
    }

    #[test]
    fn path_application() {
        let p = Term::dim_abs("i", Term::Loop(DimExpr::free("i")));
        let at0 = Term::dim_app(p.clone(), DimExpr::Zero);
        assert_eq!(
            step(&at0),
            StepResult::Stepped {
                next: Term::Loop(DimExpr::Zero),
                stable: true
            }
        );
        let atj = Term::dim_app(p, DimExpr::free("j"));
        assert_eq!(
            step(&atj),
            StepResult::Stepped {
                next: Term::Loop(DimExpr::free("j")),
                stable: false
            }
        );
    }

    #[test]
    fn evaluation() {
        let t = Term::if_(Term::True, Term::False, Term::True);
        assert_eq!(eval(&t, 10), Ok(Term::False));
        assert_eq!(eval(&Term::Base, 1), Ok(Term::Base));
        let c = s1_rec_bool(Term::Loop(DimExpr::free("i")));
        assert_eq!(eval(&c, 10), Ok(Term::False));
        let c0 = c.dim_subst(&DimSubst::single("i", DimExpr::Zero));
        assert_eq!(eval(&c0, 10), Ok(Term::True));
    }

    #[test]
    fn stuck_and_fuel_are_distinguished() {
        let bad = Term::fst(Term::True);
        assert!(matches!(eval(&bad, 10), Err(EvalError::StuckAt { .. })));
        let omega_ish = Term::if_(Term::if_(Term::True, Term::True, Term::False), Term::True, Term::False);
        assert_eq!(eval(&omega_ish, 1), Err(EvalError::FuelExhausted(1)));
        assert_eq!(eval(&omega_ish, 2), Ok(Term::True));
    }

    #[test]
    fn trace_records_each_step() {
        let t = Term::if_(Term::True, Term::False, Term::True);
        let (out, trace) = eval_traced(&t, 10);
        assert_eq!(out, Ok(Term::False));
        assert_eq!(trace.entries.len(), 2);
        assert_eq!(trace.entries[1].stable, Some(true));
    }

    #[test]
    fn stable_normalization_does_not_take_unstable_steps() {
        let mut fuel = 100;
        let c = s1_rec_bool(Term::Loop(DimExpr::free("i")));
        assert_eq!(normalize(&c, Reduction::Stable, &mut fuel), Some(c.clone()));
        let under = Term::lam("x", Term::app(Term::lam("y", Term::var("y")), Term::var("x")));
        assert_eq!(
            normalize(&under, Reduction::Stable, &mut fuel),
            Some(Term::lam("x", Term::var("x")))
        );
    }
}
