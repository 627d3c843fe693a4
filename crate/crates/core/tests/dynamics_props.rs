use cartprl_core::dynamics::{eval, eval_traced, step, StepResult};
use cartprl_core::semantics::{check_closed, step_commutes, ClosedJudgment, Verdict};
use cartprl_core::syntax::{DimExpr, DimSubst, Name, Term};
use cartprl_core::testing::{random_program, TermGen};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FUEL: u64 = 10_000;

fn dim(k: u8) -> DimExpr {
    match k % 4 {
        0 => DimExpr::Zero,
        1 => DimExpr::One,
        2 => DimExpr::free("i"),
        _ => DimExpr::free("j"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn stable_steps_commute_with_dimension_substitutions(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_program(&mut rng, &["i", "j"], 4);
        let (result, trace) = eval_traced(&m, FUEL);
        prop_assert!(result.is_ok(), "generated program {} failed: {:?}", m, result);
        for pair in trace.entries.windows(2) {
            if pair[1].stable == Some(true) {
                prop_assert!(step_commutes(&pair[0].term, &pair[1].term, FUEL),
                    "stable step {} ~> {} does not commute", pair[0].term, pair[1].term);
            }
        }
    }

    #[test]
    fn stepping_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_program(&mut rng, &["i"], 4);
        prop_assert_eq!(step(&m), step(&m));
        if let StepResult::IsValue = step(&m) {
            prop_assert_eq!(eval(&m, 1), Ok(m.clone()));
        }
    }

    #[test]
    fn dimension_substitutions_compose(seed in any::<u64>(), a in any::<u8>(), b in any::<u8>(), c in any::<u8>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_program(&mut rng, &["i", "j"], 4);
        let s1: DimSubst = [(Name::new("i"), dim(a))].into_iter().collect();
        let s2: DimSubst = [(Name::new("i"), dim(b)), (Name::new("j"), dim(c))].into_iter().collect();
        prop_assert_eq!(m.dim_subst(&s1).dim_subst(&s2), m.dim_subst(&s1.then(&s2)));
    }

    #[test]
    fn generated_booleans_are_canonical(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = TermGen::new(&mut rng, &[]).member(&Term::Bool, 5);
        let v = eval(&m, FUEL).expect("closed boolean evaluates");
        prop_assert!(v == Term::True || v == Term::False);
        prop_assert_eq!(check_closed(&ClosedJudgment::Mem(Term::Bool, m), FUEL), Verdict::Holds);
    }

    #[test]
    fn boolean_equality_is_symmetric_and_transitive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = TermGen::new(&mut rng, &[]);
        let ms: Vec<Term> = (0..3).map(|_| g.member(&Term::Bool, 3)).collect();
        let eq = |x: &Term, y: &Term| check_closed(&ClosedJudgment::EqMem(Term::Bool, x.clone(), y.clone()), FUEL).holds();
        prop_assert_eq!(eq(&ms[0], &ms[1]), eq(&ms[1], &ms[0]));
        if eq(&ms[0], &ms[1]) && eq(&ms[1], &ms[2]) {
            prop_assert!(eq(&ms[0], &ms[2]));
        }
    }

    #[test]
    fn function_equality_is_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ty = Term::arrow(Term::Bool, Term::Bool);
        let mut g = TermGen::new(&mut rng, &[]);
        let f = g.member(&ty, 3);
        let h = g.member(&ty, 3);
        let eq = |x: &Term, y: &Term| check_closed(&ClosedJudgment::EqMem(ty.clone(), x.clone(), y.clone()), FUEL);
        prop_assert_eq!(eq(&f, &h).holds(), eq(&h, &f).holds());
        prop_assert_eq!(eq(&f, &f), Verdict::Holds);
    }
}
