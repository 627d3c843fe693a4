//! Tactics: rule applications composed with LCF-style combinators, bounded
//! automation, and the surface notation `lam`, `use` and `{..}`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::dynamics::whnf_stable;
use crate::refiner::{Concl, ProofState, RuleApplication, RuleArg, Sequent};
use crate::syntax::{Dim, DimExpr, GoalId, Name, Term};

pub const DEFAULT_AUTO_DEPTH: u32 = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tactic {
    Rule(RuleApplication),
    /// `t1; t2`: `t2` on every goal produced by `t1`.
    Seq(Box<Tactic>, Box<Tactic>),
    /// `t; [t0, .., tn]`: `ti` on the i-th goal produced by `t`.
    SeqList(Box<Tactic>, Vec<Tactic>),
    /// `t1 | t2`.
    OrElse(Box<Tactic>, Box<Tactic>),
    Auto(u32),
    Id,
    Fail(String),
    /// `with x => t`: names the most recently introduced hypothesis `x`, then
    /// runs `t`.
    With(Name, Box<Tactic>),
    /// Introduces one binder named `x` with `pi/intro` or `path/intro`,
    /// whichever the goal calls for, runs the tactic on the main subgoal and
    /// `auto` on the others.
    Intro(Name, Box<Tactic>),
    /// `lam x y => t`.
    SurfaceLam(Vec<Name>, Box<Tactic>),
    /// `use x`.
    SurfaceUse(Name),
    /// `{t0, .., tn}`: builds a tuple componentwise.
    SurfaceTuple(Vec<Tactic>),
}

impl Tactic {
    pub fn rule(name: &str) -> Tactic {
        Tactic::Rule(RuleApplication::new(name))
    }

    pub fn seq(a: Tactic, b: Tactic) -> Tactic {
        Tactic::Seq(Box::new(a), Box::new(b))
    }

    pub fn seq_list(a: Tactic, ts: Vec<Tactic>) -> Tactic {
        Tactic::SeqList(Box::new(a), ts)
    }

    pub fn or_else(a: Tactic, b: Tactic) -> Tactic {
        Tactic::OrElse(Box::new(a), Box::new(b))
    }

    pub fn with(x: &str, t: Tactic) -> Tactic {
        Tactic::With(Name::new(x), Box::new(t))
    }

    pub fn lam(xs: &[&str], t: Tactic) -> Tactic {
        Tactic::SurfaceLam(xs.iter().map(|x| Name::new(x)).collect(), Box::new(t))
    }

    pub fn use_(x: &str) -> Tactic {
        Tactic::SurfaceUse(Name::new(x))
    }

    pub fn auto() -> Tactic {
        Tactic::Auto(DEFAULT_AUTO_DEPTH)
    }

    pub fn is_surface(&self) -> bool {
        match self {
            Tactic::SurfaceLam(..) | Tactic::SurfaceUse(_) | Tactic::SurfaceTuple(_) => true,
            Tactic::Rule(_) | Tactic::Auto(_) | Tactic::Id | Tactic::Fail(_) => false,
            Tactic::Seq(a, b) | Tactic::OrElse(a, b) => a.is_surface() || b.is_surface(),
            Tactic::SeqList(a, ts) => a.is_surface() || ts.iter().any(Tactic::is_surface),
            Tactic::With(_, t) | Tactic::Intro(_, t) => t.is_surface(),
        }
    }
}

/// Rewrites surface forms into rule-level tactics.
pub fn elaborate_surface(t: &Tactic) -> Tactic {
    let e = |t: &Tactic| Box::new(elaborate_surface(t));
    match t {
        Tactic::Rule(_) | Tactic::Auto(_) | Tactic::Id | Tactic::Fail(_) => t.clone(),
        Tactic::Seq(a, b) => Tactic::Seq(e(a), e(b)),
        Tactic::SeqList(a, ts) => Tactic::SeqList(e(a), ts.iter().map(elaborate_surface).collect()),
        Tactic::OrElse(a, b) => Tactic::OrElse(e(a), e(b)),
        Tactic::With(x, t) => Tactic::With(x.clone(), e(t)),
        Tactic::Intro(x, t) => Tactic::Intro(x.clone(), e(t)),
        Tactic::SurfaceLam(xs, body) => match xs.split_first() {
            None => elaborate_surface(body),
            Some((x, rest)) => Tactic::Intro(x.clone(), Box::new(elaborate_surface(&Tactic::SurfaceLam(rest.to_vec(), body.clone())))),
        },
        Tactic::SurfaceUse(x) => Tactic::Rule(RuleApplication::new("hypothesis").arg(RuleArg::Name(x.clone()))),
        Tactic::SurfaceTuple(ts) => match ts.as_slice() {
            [] => Tactic::Id,
            [t] => elaborate_surface(t),
            [t, rest @ ..] => Tactic::seq_list(
                Tactic::rule("sigma/intro"),
                vec![
                    elaborate_surface(t),
                    elaborate_surface(&Tactic::SurfaceTuple(rest.to_vec())),
                    Tactic::auto(),
                ],
            ),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TacticError {
    #[error("tactic failed at {}: {reason}", show_path(.path))]
    Failure { path: Vec<String>, reason: String },
    #[error("tactic failed at {}: expected {expected} subgoals for the branch list, got {got}", show_path(.path))]
    ArityMismatch { path: Vec<String>, expected: usize, got: usize },
}

fn show_path(path: &[String]) -> String {
    if path.is_empty() {
        "top".into()
    } else {
        path.join(" / ")
    }
}

impl TacticError {
    pub fn path(&self) -> &[String] {
        match self {
            TacticError::Failure { path, .. } | TacticError::ArityMismatch { path, .. } => path,
        }
    }

    fn under(mut self, step: impl Into<String>) -> TacticError {
        match &mut self {
            TacticError::Failure { path, .. } | TacticError::ArityMismatch { path, .. } => path.insert(0, step.into()),
        }
        self
    }
}

fn failure(step: impl Into<String>, reason: impl Into<String>) -> TacticError {
    TacticError::Failure {
        path: vec![step.into()],
        reason: reason.into(),
    }
}

/// Runs `t` on the open goal `goal`. On failure the input state is untouched,
/// since states are immutable values.
pub fn run_tactic(state: &ProofState, goal: &GoalId, t: &Tactic) -> Result<ProofState, TacticError> {
    if !state.is_open(goal) {
        return Err(failure("goal", format!("goal {goal} is not open")));
    }
    match t {
        Tactic::Id => Ok(state.clone()),
        Tactic::Fail(msg) => Err(failure("fail", msg.clone())),
        Tactic::Rule(r) => state.apply_rule(goal, r).map_err(|e| failure(format!("rule {r}"), e.to_string())),
        Tactic::Auto(depth) => Ok(auto(state, goal, *depth)),
        Tactic::Seq(a, b) => {
            let mut s = run_tactic(state, goal, a).map_err(|e| e.under("seq.1"))?;
            for g in s.open_goals_within(goal) {
                s = run_tactic(&s, &g, b).map_err(|e| e.under(format!("seq.2@{g}")))?;
            }
            Ok(s)
        }
        Tactic::SeqList(a, ts) => {
            let mut s = run_tactic(state, goal, a).map_err(|e| e.under("list.head"))?;
            let goals = s.open_goals_within(goal);
            if goals.len() != ts.len() {
                return Err(TacticError::ArityMismatch {
                    path: vec!["list".into()],
                    expected: ts.len(),
                    got: goals.len(),
                });
            }
            for (k, (g, t)) in goals.iter().zip(ts).enumerate() {
                s = run_tactic(&s, g, t).map_err(|e| e.under(format!("list.{k}")))?;
            }
            Ok(s)
        }
        Tactic::OrElse(a, b) => match run_tactic(state, goal, a) {
            Ok(s) => Ok(s),
            Err(_) => run_tactic(state, goal, b).map_err(|e| e.under("orelse.2")),
        },
        Tactic::With(x, t) => {
            let seq = state.goal(goal).expect("open goal");
            let Some(last) = seq.hyps.last() else {
                return Err(failure(format!("with {x}"), "there is no hypothesis to name"));
            };
            if &last.name == x {
                return run_tactic(state, goal, t).map_err(|e| e.under(format!("with {x}")));
            }
            let r = RuleApplication::new("rename")
                .arg(RuleArg::Name(last.name.clone()))
                .arg(RuleArg::Name(x.clone()));
            let s = state.apply_rule(goal, &r).map_err(|e| failure(format!("with {x}"), e.to_string()))?;
            run_tactic(&s, &goal.child(0), t).map_err(|e| e.under(format!("with {x}")))
        }
        Tactic::Intro(x, body) => {
            let seq = state.goal(goal).expect("open goal");
            let plan = intro_plan(&seq, x, body)
                .ok_or_else(|| failure(format!("intro {x}"), format!("no introduction rule for `{}`", seq.concl)))?;
            run_tactic(state, goal, &plan).map_err(|e| e.under(format!("intro {x}")))
        }
        Tactic::SurfaceLam(..) | Tactic::SurfaceUse(_) | Tactic::SurfaceTuple(_) => {
            run_tactic(state, goal, &elaborate_surface(t))
        }
    }
}

fn intro_plan(seq: &Sequent, x: &Name, body: &Tactic) -> Option<Tactic> {
    let head = match &seq.concl {
        Concl::True(a) => whnf_stable(a),
        Concl::Mem(a, _) | Concl::EqMem(a, _, _) => whnf_stable(a),
        _ => return None,
    };
    match head {
        Term::FunType(..) => Some(Tactic::seq_list(
            Tactic::Rule(RuleApplication::new("pi/intro").arg(RuleArg::Name(x.clone()))),
            vec![Tactic::With(x.clone(), Box::new(body.clone())), Tactic::auto()],
        )),
        Term::PathType(..) => Some(Tactic::seq_list(
            Tactic::Rule(RuleApplication::new("path/intro").arg(RuleArg::Name(x.clone()))),
            vec![body.clone(), Tactic::auto(), Tactic::auto()],
        )),
        _ => None,
    }
}

/// Bounded proof search. A goal is either closed completely within `depth`
/// rule applications along every branch, or left exactly as it was.
pub fn auto(state: &ProofState, goal: &GoalId, depth: u32) -> ProofState {
    close(state, goal, depth).unwrap_or_else(|| state.clone())
}

fn close(state: &ProofState, goal: &GoalId, depth: u32) -> Option<ProofState> {
    if depth == 0 {
        return None;
    }
    let seq = state.goal(goal)?;
    'candidates: for r in auto_candidates(&seq) {
        let Ok(mut s) = state.apply_rule(goal, &r) else {
            continue;
        };
        for g in s.open_goals_within(goal) {
            match close(&s, &g, depth - 1) {
                Some(next) => s = next,
                None => continue 'candidates,
            }
        }
        return Some(s);
    }
    None
}

/// Attempt order: reflexivity, stable evaluation, formation, hypotheses
/// (most recent first), introduction, case analysis on booleans the goal
/// mentions.
fn auto_candidates(seq: &Sequent) -> Vec<RuleApplication> {
    let mut out: Vec<RuleApplication> = ["eq/refl", "eq/eval"]
        .into_iter()
        .chain(["bool/form", "circle/form", "pi/form", "sigma/form", "path/form", "eq/form"])
        .map(RuleApplication::new)
        .collect();
    for h in seq.hyps.iter().rev() {
        out.push(RuleApplication::new("hypothesis").arg(RuleArg::Name(h.name.clone())));
    }
    out.extend(
        ["bool/intro/true", "bool/intro/false", "circle/intro/base", "pi/intro", "sigma/intro", "path/intro", "eq/intro"]
            .into_iter()
            .map(RuleApplication::new),
    );
    for i in seq.dims.iter().rev() {
        out.push(RuleApplication::new("circle/intro/loop").arg(RuleArg::Dim(DimExpr::Name(Dim::Free(i.clone())))));
    }
    let mentioned: BTreeSet<Name> = seq.concl.terms().into_iter().flat_map(Term::free_vars).collect();
    for h in seq.hyps.iter().rev() {
        if mentioned.contains(&h.name) && whnf_stable(&h.ty) == Term::Bool {
            out.push(RuleApplication::new("bool/elim").arg(RuleArg::Name(h.name.clone())));
        }
    }
    out
}

impl fmt::Display for Tactic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&show(self, Level::Prefix))
    }
}

/// Printing levels, loosest first. Binding forms like `with x => t` extend as
/// far right as possible, so they sit below sequencing.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Prefix,
    Seq,
    Or,
    Atom,
}

fn show(t: &Tactic, at: Level) -> String {
    let (s, own) = match t {
        Tactic::Rule(r) => (r.to_string(), Level::Atom),
        Tactic::Seq(a, b) => (format!("{}; {}", show(a, Level::Seq), show(b, Level::Or)), Level::Seq),
        Tactic::SeqList(a, ts) => {
            let ts: Vec<String> = ts.iter().map(|t| show(t, Level::Prefix)).collect();
            (format!("{}; [{}]", show(a, Level::Seq), ts.join(", ")), Level::Seq)
        }
        Tactic::OrElse(a, b) => (format!("{} | {}", show(a, Level::Atom), show(b, Level::Or)), Level::Or),
        Tactic::Auto(d) if *d == DEFAULT_AUTO_DEPTH => ("auto".into(), Level::Atom),
        Tactic::Auto(d) => (format!("auto {d}"), Level::Atom),
        Tactic::Id => ("id".into(), Level::Atom),
        Tactic::Fail(m) => (format!("fail {m:?}"), Level::Atom),
        Tactic::With(x, t) => (format!("with {x} => {}", show(t, Level::Prefix)), Level::Prefix),
        Tactic::Intro(x, t) => (format!("intro {x} => {}", show(t, Level::Prefix)), Level::Prefix),
        Tactic::SurfaceLam(xs, t) => {
            let xs: Vec<&str> = xs.iter().map(Name::as_str).collect();
            (format!("lam {} => {}", xs.join(" "), show(t, Level::Prefix)), Level::Prefix)
        }
        Tactic::SurfaceUse(x) => (format!("use {x}"), Level::Atom),
        Tactic::SurfaceTuple(ts) => {
            let ts: Vec<String> = ts.iter().map(|t| show(t, Level::Prefix)).collect();
            (format!("{{{}}}", ts.join(", ")), Level::Atom)
        }
    };
    if own < at {
        format!("({s})")
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refiner::RuleApplication;

    fn root() -> GoalId {
        GoalId::root()
    }

    fn pair_goal() -> Term {
        // (x : bool) -> (y : bool) -> (x : bool) * bool
        Term::fun_type("x", Term::Bool, Term::fun_type("y", Term::Bool, Term::pair_type("x", Term::Bool, Term::Bool)))
    }

    #[test]
    fn intro_then_auto_closes_identity_type() {
        let s = ProofState::for_statement(Term::arrow(Term::Bool, Term::Bool));
        let t = Tactic::seq(Tactic::rule("pi/intro"), Tactic::Auto(3));
        let s = run_tactic(&s, &root(), &t).unwrap();
        assert!(s.is_complete());
        assert_eq!(s.extract().unwrap(), Term::lam("x", Term::var("x")));
    }

    #[test]
    fn or_else_falls_back_transactionally() {
        let s = ProofState::for_statement(Term::arrow(Term::Bool, Term::Bool));
        let t = Tactic::or_else(Tactic::rule("sigma/intro"), Tactic::rule("pi/intro"));
        let direct = s.apply_rule(&root(), &RuleApplication::new("pi/intro")).unwrap();
        assert_eq!(run_tactic(&s, &root(), &t).unwrap(), direct);
    }

    #[test]
    fn seq_list_checks_arity_at_run_time() {
        let s = ProofState::for_statement(Term::product(Term::Bool, Term::Bool));
        let t = Tactic::seq_list(Tactic::rule("sigma/intro"), vec![Tactic::Id, Tactic::Id]);
        match run_tactic(&s, &root(), &t) {
            Err(TacticError::ArityMismatch { expected, got, .. }) => assert_eq!((expected, got), (2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn auto_behaviour() {
        let s = ProofState::for_statement(Term::Bool);
        let closed = auto(&s, &root(), 1);
        assert_eq!(closed.extract().unwrap(), Term::True);
        let bad = ProofState::for_statement(Term::exact_eq(Term::Bool, Term::True, Term::False));
        assert_eq!(auto(&bad, &root(), DEFAULT_AUTO_DEPTH), bad);
    }

    #[test]
    fn surface_script_for_pairing() {
        let script = Tactic::lam(&["x", "y"], Tactic::SurfaceTuple(vec![Tactic::use_("x"), Tactic::use_("y")]));
        let s = ProofState::for_statement(pair_goal());
        let s = run_tactic(&s, &root(), &script).unwrap();
        assert!(s.is_complete(), "open: {:?}", s.open_goals());
        let expected = Term::lam("x", Term::lam("y", Term::pair(Term::var("x"), Term::var("y"))));
        assert_eq!(s.extract().unwrap(), expected);
    }

    #[test]
    fn elaboration_of_trivial_forms() {
        assert_eq!(elaborate_surface(&Tactic::lam(&[], Tactic::Id)), Tactic::Id);
        let e = elaborate_surface(&Tactic::use_("z"));
        assert!(!e.is_surface());
        assert_eq!(elaborate_surface(&e), e);
        let s = ProofState::new(Sequent::new(Concl::True(Term::Bool)));
        let err = run_tactic(&s, &root(), &e).unwrap_err();
        assert!(err.to_string().contains("bad argument"), "{err}");
    }

    #[test]
    fn display_uses_concrete_syntax() {
        let t = Tactic::seq_list(Tactic::rule("sigma/intro"), vec![Tactic::use_("x"), Tactic::use_("y"), Tactic::auto()]);
        assert_eq!(t.to_string(), "sigma/intro; [use x, use y, auto]");
        let t = Tactic::seq(Tactic::or_else(Tactic::Id, Tactic::Fail("no".into())), Tactic::Auto(2));
        assert_eq!(t.to_string(), "id | fail \"no\"; auto 2");
    }
}
