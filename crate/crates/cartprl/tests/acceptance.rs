//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::path::PathBuf;
use std::time::Instant;

use cartprl::check::{check_signature, Outcome};
use cartprl::parser::{parse_signature, parse_tactic, parse_term};
use cartprl_core::dynamics::{classify_stability, eval, eval_traced};
use cartprl_core::refiner::{ProofState, Role, RuleApplication, RuleArg};
use cartprl_core::semantics::{check_closed, check_open, commutes_with_subst, step_commutes, ClosedJudgment, Verdict};
use cartprl_core::syntax::{DimExpr, DimSubst, GoalId, Name, Term};
use cartprl_core::tactics::{auto, run_tactic, Tactic, TacticError, DEFAULT_AUTO_DEPTH};
use cartprl_core::testing::{observe, random_bool_members, random_goal, random_program, random_tactic};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FUEL: u64 = 10_000;

type Checked = Result<String, String>;
type Criterion = (&'static str, fn() -> Checked);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn bool_members() -> Vec<Term> {
    random_bool_members(&mut ChaCha8Rng::seed_from_u64(2024), 200)
}

fn canonicity() -> Checked {
    let members = bool_members();
    ensure!(members.len() >= 200, "only {} members generated", members.len());
    let mut tt = 0;
    for m in &members {
        match eval(m, FUEL) {
            Ok(Term::True) => tt += 1,
            Ok(Term::False) => {}
            Ok(v) => return Err(format!("{m} evaluated to {v}")),
            Err(e) => return Err(format!("{m}: {e}")),
        }
    }
    Ok(format!("{} extracts, {tt} tt / {} ff", members.len(), members.len() - tt))
}

fn p(s: &str) -> Term {
    parse_term(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn shannon() -> Checked {
    let x = Name::new("x");
    // (N, B) with N : B over x : bool
    let templates = [
        ("x", "bool"),
        ("if x then ff else tt", "bool"),
        ("(x, tt)", "bool * bool"),
        ("(x, if x then ff else tt)", "bool * bool"),
        ("\\y. if x then y else ff", "bool -> bool"),
        ("\\y. (y, x)", "bool -> bool * bool"),
        ("<i> if x then loop i else base", "path [_] S1 base base"),
        ("if x then tt else base", "if x then bool else S1"),
        ("S1-rec(_. bool; base; x; _. x)", "bool"),
        ("fst (x, ff)", "bool"),
    ]
    .map(|(n, b)| (p(n), p(b)));
    let members = bool_members();
    let mut checked = 0;
    for (n, b) in &templates {
        let generic = ClosedJudgment::EqMem(b.clone(), n.clone(), Term::if_(Term::var("x"), n.subst_var(&x, &Term::True), n.subst_var(&x, &Term::False)));
        let v = check_open(&[(x.clone(), Term::Bool)], &[], &generic, FUEL);
        ensure!(v == Verdict::Holds, "open equation for {n}: {v:?}");
        for m in &members {
            let lhs = n.subst_var(&x, m);
            let rhs = Term::if_(m.clone(), n.subst_var(&x, &Term::True), n.subst_var(&x, &Term::False));
            let j = ClosedJudgment::EqMem(b.subst_var(&x, m), lhs, rhs);
            let v = check_open(&[], &[], &j, FUEL);
            ensure!(v == Verdict::Holds, "N = {n}, M = {m}: {v:?}");
            checked += 1;
        }
    }
    let text = std::fs::read_to_string(corpus_dir().join("shannon.prl")).map_err(|e| e.to_string())?;
    let sig = parse_signature(&text).map_err(|e| e.to_string())?;
    let report = check_signature(&sig, FUEL);
    ensure!(matches!(report.get("shannon"), Some(Outcome::Ok(_))), "shannon.prl: {report}");
    Ok(format!("{checked} instances over {} templates; shannon.prl checks", templates.len()))
}

fn instability() -> Checked {
    let m = p("S1-rec(_. bool; loop i; tt; _. ff)");
    let v = eval(&m, FUEL).map_err(|e| e.to_string())?;
    ensure!(v == Term::False, "evaluates to {v}");
    let face = m.dim_subst(&DimSubst::single("i", DimExpr::Zero));
    let w = eval(&face, FUEL).map_err(|e| e.to_string())?;
    ensure!(w == Term::True, "{{i:=0}} face evaluates to {w}");
    ensure!(!commutes_with_subst(&m, FUEL), "commutes_with_subst holds");
    ensure!(!classify_stability(&m), "the loop step is classified stable");
    ensure!(classify_stability(&Term::Loop(DimExpr::Zero)), "loop 0 ~> base is classified unstable");
    Ok("ff vs tt at i=0; step unstable, loop 0 stable".into())
}

fn endpoints() -> Checked {
    for r in [DimExpr::Zero, DimExpr::One] {
        let m = Term::Loop(r);
        let (v, t) = eval_traced(&m, FUEL);
        ensure!(v == Ok(Term::Base), "{m} evaluates to {v:?}");
        ensure!(t.entries.len() == 2, "{m} took {} steps", t.entries.len() - 1);
    }
    Ok("loop 0, loop 1 ~> base in one step".into())
}

fn pairing() -> Checked {
    let stmt = p("(x : bool) -> (y : bool) -> (x : bool) * bool");
    let root = GoalId::root();
    let s = ProofState::for_statement(stmt.clone());
    let script = parse_tactic("lam x y => {use x, use y}").map_err(|e| e.to_string())?;
    let done = run_tactic(&s, &root, &script).map_err(|e| e.to_string())?;
    let m = done.extract().map_err(|e| e.to_string())?;
    let expected = Term::lam("x", Term::lam("y", Term::pair(Term::var("x"), Term::var("y"))));
    ensure!(m.alpha_eq(&expected), "extract is {m}");

    // the same proof rule by rule, watching sigma/intro
    let intro = |s: &ProofState, g: &GoalId, x: &str| {
        s.apply_rule(g, &RuleApplication::new("pi/intro").arg(RuleArg::Name(Name::new(x))))
    };
    let s = intro(&s, &root, "x").map_err(|e| e.to_string())?;
    let g = root.child(0);
    let s = intro(&s, &g, "y").map_err(|e| e.to_string())?;
    let g = g.child(0);
    let s = s.apply_rule(&g, &RuleApplication::new("sigma/intro")).map_err(|e| e.to_string())?;
    let subgoals = s.open_goals_within(&g);
    ensure!(subgoals.len() == 3, "sigma/intro left {} subgoals", subgoals.len());
    let aux: Vec<&GoalId> = subgoals.iter().filter(|g| s.node(g).is_some_and(|n| n.role == Role::Aux)).collect();
    ensure!(aux.len() == 1, "{} auxiliary subgoals", aux.len());
    let s = auto(&s, aux[0], DEFAULT_AUTO_DEPTH);
    ensure!(!s.is_open(aux[0]), "auto left the auxiliary goal {} open", aux[0]);
    let s = run_tactic(&s, &g.child(0), &Tactic::use_("x")).map_err(|e| e.to_string())?;
    let s = run_tactic(&s, &g.child(1), &Tactic::use_("y")).map_err(|e| e.to_string())?;
    let s = s.open_goals().iter().fold(s.clone(), |s, g| auto(&s, g, DEFAULT_AUTO_DEPTH));
    let m2 = s.extract().map_err(|e| e.to_string())?;
    ensure!(m2.alpha_eq(&expected), "rule-by-rule extract is {m2}");
    Ok(format!("extract {m}; sigma/intro gave 3 subgoals, auto closed the aux one"))
}

fn stability_soundness() -> Checked {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut stable, mut unstable, mut whole) = (0, 0, 0);
    for _ in 0..1000 {
        let m = random_program(&mut rng, &["i", "j"], 4);
        let (result, trace) = eval_traced(&m, FUEL);
        ensure!(result.is_ok(), "{m} did not evaluate: {result:?}");
        let mut all_stable = true;
        for pair in trace.entries.windows(2) {
            match pair[1].stable {
                Some(true) => {
                    stable += 1;
                    ensure!(step_commutes(&pair[0].term, &pair[1].term, FUEL), "stable step {} ~> {} does not commute", pair[0].term, pair[1].term);
                }
                _ => {
                    unstable += 1;
                    all_stable = false;
                }
            }
        }
        if all_stable {
            whole += 1;
            ensure!(commutes_with_subst(&m, FUEL), "{m} evaluates through stable steps only but does not commute");
        }
    }
    Ok(format!("1000 terms, {stable} stable steps commute ({unstable} unstable); {whole} fully stable evaluations commute"))
}

fn extraction_soundness() -> Checked {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "prl"))
        .collect();
    files.sort();
    let (mut theorems, mut holds, mut unknown) = (0, 0, Vec::new());
    for f in &files {
        let text = std::fs::read_to_string(f).map_err(|e| e.to_string())?;
        let sig = parse_signature(&text).map_err(|e| format!("{}:{e}", f.display()))?;
        let report = check_signature(&sig, FUEL);
        for name in sig.theorem_names() {
            theorems += 1;
            let Some(Outcome::Ok(m)) = report.get(name) else { continue };
            let (stmt, _) = sig.theorem(name).expect("listed theorem");
            match check_closed(&ClosedJudgment::Mem(stmt.clone(), m.clone()), FUEL) {
                Verdict::Holds => holds += 1,
                Verdict::Unknown(why) => unknown.push(format!("{name} ({why})")),
                Verdict::Fails(why) => return Err(format!("{name}: {m} is not a member of {stmt}: {why}")),
            }
        }
    }
    ensure!(holds >= 15, "only {holds} theorems were oracle-checkable; unknown: {unknown:?}");
    Ok(format!("{holds} of {theorems} theorems hold, {} not oracle-checkable {unknown:?}, {} not closed by their scripts", unknown.len(), theorems - holds - unknown.len()))
}

fn combinator_laws() -> Checked {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let same = |a: &Result<ProofState, TacticError>, b: &Result<ProofState, TacticError>| match (a, b) {
        (Ok(x), Ok(y)) => observe(x) == observe(y),
        (Err(_), Err(_)) => true,
        _ => false,
    };
    let cases = 500;
    let (mut assoc, mut arity) = (0, 0);
    for _ in 0..cases {
        let (s, g) = random_goal(&mut rng);
        let (a, b, c) = (random_tactic(&mut rng, 2), random_tactic(&mut rng, 2), random_tactic(&mut rng, 2));
        let left = run_tactic(&s, &g, &Tactic::seq(Tactic::seq(a.clone(), b.clone()), c.clone()));
        let right = run_tactic(&s, &g, &Tactic::seq(a.clone(), Tactic::seq(b.clone(), c.clone())));
        if let (Ok(l), Ok(r)) = (&left, &right) {
            assoc += 1;
            ensure!(observe(l) == observe(r), "seq associativity: ({a}; {b}); {c}");
        }

        let plain = run_tactic(&s, &g, &a);
        ensure!(same(&plain, &run_tactic(&s, &g, &Tactic::seq(Tactic::Id, a.clone()))), "left unit: {a}");
        ensure!(same(&plain, &run_tactic(&s, &g, &Tactic::seq(a.clone(), Tactic::Id))), "right unit: {a}");

        let before = (observe(&s), s.journal_len());
        let both = run_tactic(&s, &g, &Tactic::or_else(a.clone(), b.clone()));
        ensure!((observe(&s), s.journal_len()) == before, "running {a} | {b} changed its input");
        match &plain {
            Ok(x) => ensure!(both.as_ref() == Ok(x), "or-else did not commit to its first branch: {a} | {b}"),
            Err(_) => ensure!(same(&both, &run_tactic(&s, &g, &b)), "or-else fallback is not the second branch: {a} | {b}"),
        }

        if let Ok(after) = &plain {
            let produced = after.open_goals_within(&g).len();
            let wrong = produced + 1;
            let t = Tactic::seq_list(a.clone(), vec![Tactic::Id; wrong]);
            let expected = Err(TacticError::ArityMismatch { path: vec!["list".into()], expected: wrong, got: produced });
            ensure!(run_tactic(&s, &g, &t) == expected, "arity: {t}");
            let right = Tactic::seq_list(a.clone(), vec![Tactic::Id; produced]);
            ensure!(run_tactic(&s, &g, &right).map(|x| observe(&x)) == Ok(observe(after)), "matching arity: {right}");
            arity += 1;
        }
    }
    Ok(format!("{cases} cases; associativity exercised {assoc} times, arity {arity} times"))
}

fn main() {
    let criteria: &[Criterion] = &[
        ("canonicity", canonicity),
        ("shannon expansion", shannon),
        ("instability counterexample", instability),
        ("circle endpoints", endpoints),
        ("pairing golden test", pairing),
        ("stability soundness", stability_soundness),
        ("extraction soundness", extraction_soundness),
        ("combinator laws", combinator_laws),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {} {name} ({secs:.1}s): {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.1}s): {why}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
