mod common;

use cfxplain_core::explain::states_consistent;
use cfxplain_core::{
    counterfactual_xplain, eval_constraint, maximal_relaxation, minimal_conflict, solve, validate_space, Assignment,
    Outcome,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cartesian(problem: &cfxplain_core::Problem) -> Vec<Assignment> {
    let mut out: Vec<Assignment> = vec![Assignment::new()];
    for v in problem.variables() {
        let mut next = Vec::with_capacity(out.len() * v.domain().len());
        for partial in &out {
            for value in v.domain() {
                let mut a = partial.clone();
                a.insert(v.name().to_string(), value.clone());
                next.push(a);
            }
        }
        out = next;
    }
    out
}

#[test]
fn solver_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..150 {
        let a = common::assemble(&common::random_spec(&mut rng));
        let all: Vec<_> = a
            .problem
            .background()
            .iter()
            .chain(a.problem.foreground())
            .cloned()
            .collect();
        let expected: Vec<Assignment> = cartesian(&a.problem)
            .into_iter()
            .filter(|s| all.iter().all(|c| eval_constraint(c, s).unwrap()))
            .collect();
        let got = solve(&a.problem, &all, usize::MAX).unwrap();
        assert_eq!(got, expected);
        if !expected.is_empty() {
            assert_eq!(solve(&a.problem, &all, 1).unwrap(), expected[..1].to_vec());
        }
    }
}

#[test]
fn minimal_conflicts_are_minimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for a in common::conflicting_cases(&mut rng, 120) {
        let conflict = minimal_conflict(&a.problem).unwrap();
        let indices: Vec<usize> = conflict
            .iter()
            .map(|c| a.problem.foreground().iter().position(|f| f.id == c.id).unwrap())
            .collect();
        assert!(common::all_minimal_conflicts(&a.problem).contains(&indices));
        assert_eq!(indices, common::preferred_conflict(&a.problem));
    }
}

#[test]
fn no_conflict_iff_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..150 {
        let a = common::assemble(&common::random_spec(&mut rng));
        if !common::consistent_with(&a.problem, []) {
            continue;
        }
        let feasible = common::consistent_with(&a.problem, a.problem.foreground());
        let outcome = counterfactual_xplain(&a.problem, &a.spaces).unwrap();
        assert_eq!(feasible, outcome == Outcome::NoConflict);
    }
}

#[test]
fn trace_replays() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for a in common::conflicting_cases(&mut rng, 100) {
        let Outcome::Explained(e) = counterfactual_xplain(&a.problem, &a.spaces).unwrap() else {
            continue;
        };
        let mut last_consistent = None;
        for r in e.trace.records() {
            assert_eq!(states_consistent(&a.problem, &r.states).unwrap(), r.consistent);
            if r.consistent {
                last_consistent = Some(r.states.clone());
            }
        }
        if let Some(states) = last_consistent {
            assert_eq!(states, e.states);
        }
        assert!(states_consistent(&a.problem, &e.states).unwrap());
        for s in e.explanation.substitutions() {
            let i = a
                .problem
                .foreground()
                .iter()
                .position(|c| c.id == s.original.id)
                .unwrap();
            assert_eq!(e.states[i], s.relaxed);
        }
    }
}

#[test]
fn grow_exclusions_cannot_be_added_back() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for a in common::conflicting_cases(&mut rng, 100) {
        let (kept, excluded) = maximal_relaxation(&a.problem).unwrap();
        assert!(common::consistent_with(&a.problem, &kept));
        assert!(!excluded.is_empty());
        for x in &excluded {
            assert!(!common::consistent_with(&a.problem, kept.iter().chain([x])));
        }
    }
}

#[test]
fn derived_spaces_are_sound() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..100 {
        let a = common::assemble(&common::random_spec(&mut rng));
        for space in a.spaces.values() {
            assert_eq!(validate_space(space, &a.problem), Vec::new());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dominance_is_a_partial_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::assemble(&common::random_spec(&mut rng));
        for space in a.spaces.values() {
            let n = space.states().len();
            for x in 0..n {
                prop_assert!(space.dominates_index(x, x));
                for y in 0..n {
                    if x != y && space.dominates_index(x, y) {
                        prop_assert!(!space.dominates_index(y, x));
                    }
                    for z in 0..n {
                        if space.dominates_index(x, y) && space.dominates_index(y, z) {
                            prop_assert!(space.dominates_index(x, z));
                        }
                    }
                }
            }
        }
    }
}
