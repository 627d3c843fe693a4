//! Random generators shared by the property tests: typed programs with free
//! dimension names, random refinement proofs, and random tactics.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::refiner::{ProofState, RuleApplication, RuleArg, Sequent};
use crate::syntax::{Dim, DimExpr, GoalId, Name, Term};
use crate::tactics::{auto, Tactic, DEFAULT_AUTO_DEPTH};

/// Generator of well-typed programs over a fixed set of free dimension names.
pub struct TermGen<'r, R: Rng> {
    rng: &'r mut R,
    dims: Vec<Name>,
    fresh: u32,
}

impl<'r, R: Rng> TermGen<'r, R> {
    pub fn new(rng: &'r mut R, dims: &[&str]) -> Self {
        TermGen {
            rng,
            dims: dims.iter().map(|d| Name::new(d)).collect(),
            fresh: 0,
        }
    }

    fn name(&mut self, base: &str) -> String {
        self.fresh += 1;
        format!("{base}{}", self.fresh)
    }

    /// A type built from bool, S1, functions, pairs and paths.
    pub fn ty(&mut self, depth: u32) -> Term {
        let choice = if depth == 0 { self.rng.gen_range(0..2) } else { self.rng.gen_range(0..6) };
        match choice {
            0 => Term::Bool,
            1 => Term::Circle,
            2 => Term::arrow(self.ty(depth - 1), self.ty(depth - 1)),
            3 => Term::product(self.ty(depth - 1), self.ty(depth - 1)),
            4 => Term::path_type("_", Term::Circle, Term::Base, Term::Base),
            _ => Term::path_type("_", Term::Bool, Term::True, Term::True),
        }
    }

    fn dim(&mut self, scope: &[Name]) -> DimExpr {
        let k = self.rng.gen_range(0..scope.len() + 2);
        match k {
            0 => DimExpr::Zero,
            1 => DimExpr::One,
            _ => DimExpr::Name(Dim::Free(scope[k - 2].clone())),
        }
    }

    /// A closed program of type `ty`, free dimensions aside.
    pub fn member(&mut self, ty: &Term, depth: u32) -> Term {
        let dims = self.dims.clone();
        self.member_in(ty, depth, &mut Vec::new(), &dims)
    }

    fn member_in(&mut self, ty: &Term, depth: u32, vars: &mut Vec<(String, Term)>, dims: &[Name]) -> Term {
        // variables of the right type
        let candidates: Vec<String> = vars.iter().filter(|(_, t)| t == ty).map(|(x, _)| x.clone()).collect();
        if !candidates.is_empty() && self.rng.gen_bool(0.3) {
            return Term::var(candidates.choose(self.rng).expect("non-empty"));
        }
        if depth > 0 {
            match self.rng.gen_range(0..6) {
                0 => {
                    let c = self.member_in(&Term::Bool, depth - 1, vars, dims);
                    let t = self.member_in(ty, depth - 1, vars, dims);
                    let e = self.member_in(ty, depth - 1, vars, dims);
                    return Term::if_(c, t, e);
                }
                1 => {
                    let a = self.ty(0);
                    let f = self.member_in(&Term::arrow(a.clone(), ty.clone()), depth - 1, vars, dims);
                    let x = self.member_in(&a, depth - 1, vars, dims);
                    return Term::app(f, x);
                }
                2 => {
                    let b = self.ty(0);
                    let p = self.member_in(&Term::product(ty.clone(), b), depth - 1, vars, dims);
                    return Term::fst(p);
                }
                3 => {
                    // S1-rec with a loop method that is constant in its dimension
                    let target = self.member_in(&Term::Circle, depth - 1, vars, dims);
                    let base = self.member_in(ty, depth - 1, vars, dims);
                    let i = self.name("k");
                    let lp = if *ty == Term::Circle && self.rng.gen_bool(0.5) {
                        Term::Loop(DimExpr::free(&i))
                    } else {
                        base.clone()
                    };
                    return Term::circle_rec("_", ty.clone(), target, base, &i, lp);
                }
                4 if *ty == Term::Circle => {
                    let i = self.name("k");
                    let mut inner = dims.to_vec();
                    inner.push(Name::new(&i));
                    let body = self.member_in(&Term::Circle, depth - 1, vars, &inner);
                    let r = self.dim(dims);
                    return Term::dim_app(Term::dim_abs(&i, body), r);
                }
                _ => {}
            }
        }
        self.intro(ty, depth, vars, dims)
    }

    fn intro(&mut self, ty: &Term, depth: u32, vars: &mut Vec<(String, Term)>, dims: &[Name]) -> Term {
        let d = depth.saturating_sub(1);
        match ty {
            Term::Bool => {
                if self.rng.gen_bool(0.5) {
                    Term::True
                } else {
                    Term::False
                }
            }
            Term::Circle => {
                if self.rng.gen_bool(0.4) {
                    Term::Base
                } else {
                    Term::Loop(self.dim(dims))
                }
            }
            Term::FunType(a, b) => {
                let x = self.name("v");
                vars.push((x.clone(), (**a).clone()));
                let body = self.member_in(&b.body, d, vars, dims);
                vars.pop();
                Term::lam(&x, body)
            }
            Term::PairType(a, b) => {
                let m = self.member_in(a, d, vars, dims);
                let n = self.member_in(&b.body, d, vars, dims);
                Term::pair(m, n)
            }
            Term::PathType(a, _, _) => {
                let i = self.name("k");
                let mut inner = dims.to_vec();
                inner.push(Name::new(&i));
                let body = match &*a.body {
                    Term::Circle if self.rng.gen_bool(0.6) => Term::Loop(DimExpr::free(&i)),
                    Term::Circle => Term::Base,
                    _ => Term::True,
                };
                let wrapped = if d > 0 && self.rng.gen_bool(0.3) {
                    let c = self.member_in(&Term::Bool, d, vars, &inner);
                    Term::if_(c, body.clone(), body)
                } else {
                    body
                };
                Term::dim_abs(&i, wrapped)
            }
            other => panic!("no generator for `{other}`"),
        }
    }
}

/// A random closed program, of a random type, mentioning the given free
/// dimension names.
pub fn random_program<R: Rng>(rng: &mut R, dims: &[&str], depth: u32) -> Term {
    let mut g = TermGen::new(rng, dims);
    let ty = g.ty(1);
    g.member(&ty, depth)
}

/// Builds a proof of `ty true` from no assumptions by applying random
/// applicable rules, finishing side conditions with `auto`. Returns `None`
/// when the attempt got stuck.
pub fn random_proof<R: Rng>(rng: &mut R, ty: &Term, budget: u32) -> Option<ProofState> {
    let mut state = ProofState::for_statement(ty.clone());
    let mut steps = 0;
    while let Some(goal) = state.open_goals().into_iter().next() {
        let seq = state.goal(&goal)?;
        if !seq.concl.is_true() || steps >= budget {
            let next = auto(&state, &goal, DEFAULT_AUTO_DEPTH);
            if next.is_open(&goal) {
                return None;
            }
            state = next;
            continue;
        }
        let mut options = random_rules(rng, &seq);
        options.shuffle(rng);
        let applied = options.iter().find_map(|r| state.apply_rule(&goal, r).ok());
        match applied {
            Some(next) => {
                state = next;
                steps += 1;
            }
            None => {
                let next = auto(&state, &goal, DEFAULT_AUTO_DEPTH);
                if next.is_open(&goal) {
                    return None;
                }
                state = next;
            }
        }
    }
    Some(state)
}

fn random_rules<R: Rng>(rng: &mut R, seq: &Sequent) -> Vec<RuleApplication> {
    let mut out: Vec<RuleApplication> = [
        "bool/intro/true",
        "bool/intro/false",
        "pi/intro",
        "sigma/intro",
        "path/intro",
        "circle/intro/base",
        "eq/intro",
    ]
    .into_iter()
    .map(RuleApplication::new)
    .collect();
    let mut dims: Vec<DimExpr> = vec![DimExpr::Zero, DimExpr::One];
    dims.extend(seq.dims.iter().map(|i| DimExpr::Name(Dim::Free(i.clone()))));
    out.push(RuleApplication::new("circle/intro/loop").arg(RuleArg::Dim(dims.choose(rng).expect("non-empty").clone())));
    for h in &seq.hyps {
        let x = RuleArg::Name(h.name.clone());
        out.push(RuleApplication::new("hypothesis").arg(x.clone()));
        for rule in ["bool/elim", "pi/elim", "sigma/elim", "circle/elim"] {
            out.push(RuleApplication::new(rule).arg(x.clone()));
        }
        out.push(RuleApplication::new("path/app").arg(x).arg(RuleArg::Dim(dims.choose(rng).expect("non-empty").clone())));
    }
    if seq.hyps.len() < 3 {
        let mut g = TermGen::new(rng, &[]);
        let a = g.ty(1);
        for _ in 0..2 {
            out.push(RuleApplication::new("cut").arg(RuleArg::Term(a.clone())));
        }
    }
    out
}

/// At least `count` extracts of complete random proofs of `bool true`.
pub fn random_bool_members<R: Rng>(rng: &mut R, count: usize) -> Vec<Term> {
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < count * 200 {
        attempts += 1;
        let budget = rng.gen_range(1..12);
        if let Some(s) = random_proof(rng, &Term::Bool, budget) {
            if let Ok(m) = s.extract() {
                out.push(m);
            }
        }
    }
    out
}

/// What a user can observe about a state: the open goals and the extract.
pub fn observe(s: &ProofState) -> (Vec<(GoalId, Sequent)>, Term) {
    let goals = s
        .open_goals()
        .into_iter()
        .map(|g| {
            let seq = s.goal(&g).expect("open goal");
            (g, seq)
        })
        .collect();
    (goals, s.partial_extract())
}

fn tactic_atom<R: Rng>(rng: &mut R) -> Tactic {
    let x = *["x", "y", "z"].choose(rng).expect("non-empty");
    match rng.gen_range(0..12) {
        0 => Tactic::rule("pi/intro"),
        1 => Tactic::rule("sigma/intro"),
        2 => Tactic::rule("path/intro"),
        3 => Tactic::rule("bool/intro/true"),
        4 => Tactic::rule("bool/intro/false"),
        5 => Tactic::rule("circle/intro/base"),
        6 => Tactic::Rule(RuleApplication::new("hypothesis").arg(RuleArg::Name(Name::new(x)))),
        7 => Tactic::Rule(RuleApplication::new("bool/elim").arg(RuleArg::Name(Name::new(x)))),
        8 => Tactic::Auto(rng.gen_range(0..3)),
        9 => Tactic::Id,
        10 => Tactic::Fail("no".into()),
        _ => Tactic::with(x, Tactic::Id),
    }
}

/// A random tactic over the combinators and a handful of rules.
pub fn random_tactic<R: Rng>(rng: &mut R, depth: u32) -> Tactic {
    if depth == 0 {
        // most leaves are wrapped in `| id` so that composites often succeed
        let a = tactic_atom(rng);
        return if rng.gen_bool(0.8) { Tactic::or_else(a, Tactic::Id) } else { a };
    }
    let d = depth - 1;
    match rng.gen_range(0..6) {
        0 => Tactic::seq(random_tactic(rng, d), random_tactic(rng, d)),
        1 => Tactic::or_else(random_tactic(rng, d), random_tactic(rng, d)),
        2 => {
            let n = rng.gen_range(0..4);
            Tactic::seq_list(random_tactic(rng, d), (0..n).map(|_| random_tactic(rng, d)).collect())
        }
        3 => Tactic::lam(&["x"], random_tactic(rng, d)),
        _ => random_tactic(rng, 0),
    }
}

/// A goal to run tactics on: a random statement, sometimes partly refined.
pub fn random_goal<R: Rng>(rng: &mut R) -> (ProofState, GoalId) {
    let ty = TermGen::new(rng, &[]).ty(2);
    let ty = if rng.gen_bool(0.5) { Term::fun_type("x", Term::Bool, ty) } else { ty };
    let s = ProofState::for_statement(ty);
    let root = GoalId::root();
    if rng.gen_bool(0.3) {
        if let Ok(next) = s.apply_rule(&root, &RuleApplication::new("pi/intro")) {
            return (next, root.child(0));
        }
    }
    (s, root)
}
