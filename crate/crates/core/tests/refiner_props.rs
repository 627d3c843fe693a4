use std::collections::BTreeSet;

use cartprl_core::dynamics::eval;
use cartprl_core::refiner::{Concl, ProofState, RuleApplication};
use cartprl_core::semantics::{check_closed, check_open, ClosedJudgment, Verdict};
use cartprl_core::syntax::{GoalId, Name, Term};
use cartprl_core::testing::{random_bool_members, random_proof, TermGen};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FUEL: u64 = 10_000;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extracts_of_random_proofs_are_members(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ty = TermGen::new(&mut rng, &[]).ty(2);
        if let Some(state) = random_proof(&mut rng, &ty, 8) {
            let m = state.extract().expect("complete proof");
            let verdict = check_closed(&ClosedJudgment::Mem(ty.clone(), m.clone()), FUEL);
            prop_assert!(!verdict.fails(), "extract {} of {} rejected: {}", m, ty, verdict);
        }
    }

    #[test]
    fn undo_walks_back_to_the_start(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ty = TermGen::new(&mut rng, &[]).ty(2);
        if let Some(state) = random_proof(&mut rng, &ty, 6) {
            let mut s = state;
            while let Some(prev) = s.undo() {
                s = prev;
            }
            prop_assert_eq!(s, ProofState::for_statement(ty));
        }
    }

    #[test]
    fn rules_touch_only_the_refined_goal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ty = TermGen::new(&mut rng, &[]).ty(2);
        let Some(done) = random_proof(&mut rng, &ty, 6) else { return Ok(()) };
        // replay the journal forwards, checking each step
        let mut states = vec![done.clone()];
        while let Some(prev) = states.last().unwrap().undo() {
            states.push(prev);
        }
        states.reverse();
        for pair in states.windows(2) {
            let (before, after) = (&pair[0], &pair[1]);
            let closed: Vec<GoalId> = before.open_goals().into_iter().filter(|g| !after.is_open(g)).collect();
            prop_assert_eq!(closed.len(), 1);
            let refined = &closed[0];
            for g in after.open_goals() {
                prop_assert!(before.is_open(&g) || g.parent().as_ref() == Some(refined));
            }
            let holes: BTreeSet<GoalId> = after.partial_extract().metas();
            let open: BTreeSet<GoalId> = after.open_goals().into_iter().collect();
            prop_assert!(holes.is_subset(&open), "holes {:?} open {:?} in {}", holes, open, after.partial_extract());
        }
    }
}

#[test]
fn random_bool_proofs_are_canonical_and_satisfy_shannon() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let members = random_bool_members(&mut rng, 40);
    assert_eq!(members.len(), 40);
    let x = Name::new("x");
    let templates = [
        Term::var("x"),
        Term::if_(Term::var("x"), Term::False, Term::True),
        Term::pair(Term::var("x"), Term::True),
    ];
    let template_types = [Term::Bool, Term::Bool, Term::product(Term::Bool, Term::Bool)];
    for m in &members {
        let v = eval(m, FUEL).unwrap_or_else(|e| panic!("{m}: {e}"));
        assert!(v == Term::True || v == Term::False, "{m} evaluated to {v}");
        for (n, ty) in templates.iter().zip(&template_types) {
            // N[M/x] = if M then N[tt/x] else N[ff/x]
            let lhs = n.subst_var(&x, m);
            let rhs = Term::if_(m.clone(), n.subst_var(&x, &Term::True), n.subst_var(&x, &Term::False));
            assert_eq!(check_closed(&ClosedJudgment::EqMem(ty.clone(), lhs, rhs), FUEL), Verdict::Holds);
        }
    }
    let open = ClosedJudgment::EqMem(Term::Bool, Term::var("x"), Term::if_(Term::var("x"), Term::True, Term::False));
    assert_eq!(check_open(&[(x, Term::Bool)], &[], &open, FUEL), Verdict::Holds);
}

#[test]
fn sigma_intro_second_goal_mentions_the_first_realizer() {
    let ty = Term::pair_type("x", Term::Bool, Term::if_(Term::var("x"), Term::Bool, Term::Circle));
    let s = ProofState::for_statement(ty);
    let s = s.apply_rule(&GoalId::root(), &RuleApplication::new("sigma/intro")).unwrap();
    let first = GoalId::root().child(0);
    let second = s.goal(&GoalId::root().child(1)).unwrap();
    let Concl::True(b) = second.concl else { panic!() };
    assert!(b.metas().contains(&first));
    let s = s.apply_rule(&first, &RuleApplication::new("bool/intro/false")).unwrap();
    let Concl::True(b) = s.goal(&GoalId::root().child(1)).unwrap().concl else { panic!() };
    assert_eq!(b, Term::if_(Term::False, Term::Bool, Term::Circle));
}
