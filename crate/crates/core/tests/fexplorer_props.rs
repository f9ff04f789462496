//! Properties of the subsystem search and the doubling lift.

use finfold::ensystem::{full_en, EnEquation, EnSystem};
use finfold::fexplorer::{double_by_idempotent, f_lower_bound, subsystems, ExploreOptions};
use finfold::solver::{DomainSpec, SolveStatus, Solver};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Solutions of `system` in `[-r, r]^2` by direct evaluation.
fn box_count(system: &EnSystem, r: i64) -> u64 {
    let eqs: Vec<EnEquation> = system.equations().copied().collect();
    let holds = |x: [i64; 3]| {
        eqs.iter().all(|e| match *e {
            EnEquation::Unit { i } => x[i] == 1,
            EnEquation::Add { i, j, o } => x[i] + x[j] == x[o],
            EnEquation::Mul { i, j, o } => x[i] * x[j] == x[o],
        })
    };
    let mut count = 0;
    for a in -r..=r {
        for b in -r..=r {
            if holds([0, a, b]) {
                count += 1;
            }
        }
    }
    count
}

#[test]
fn f_of_two_is_four() {
    for (use_symmetry, workers) in [(true, 1), (false, 1), (true, 4), (false, 8)] {
        let opts = ExploreOptions {
            use_symmetry,
            workers,
            ..ExploreOptions::default()
        };
        let r = f_lower_bound(2, &opts).unwrap();
        assert_eq!(r.best_count, 4);
        assert!(r.exhaustive);
        assert_eq!(
            r.witness,
            EnSystem::from_equations(2, [EnEquation::mul(1, 1, 1), EnEquation::mul(2, 2, 2)])
                .unwrap()
        );
    }
}

#[test]
fn box_oracle_agrees_on_f_of_two() {
    // largest count that does not change when the box doubles
    let mut best = 0;
    for s in subsystems(2, false, None).unwrap() {
        let small = box_count(&s, 12);
        if small > best && small == box_count(&s, 24) {
            best = small;
        }
    }
    assert_eq!(best, 4);
}

#[test]
fn symmetry_does_not_change_the_bound() {
    for n in 1..=2 {
        let sym = f_lower_bound(n, &ExploreOptions::default()).unwrap();
        let raw = f_lower_bound(
            n,
            &ExploreOptions {
                use_symmetry: false,
                ..ExploreOptions::default()
            },
        )
        .unwrap();
        assert_eq!(sym.best_count, raw.best_count);
        assert_eq!(sym.witness, raw.witness);
    }
}

#[test]
fn certified_bounds_at_least_double() {
    let one = f_lower_bound(1, &ExploreOptions::default()).unwrap();
    let two = f_lower_bound(2, &ExploreOptions::default()).unwrap();
    assert!(one.exhaustive && two.exhaustive);
    assert!(two.best_count >= 2 * one.best_count);
}

fn random_subsystem(rng: &mut ChaCha8Rng, n: usize) -> EnSystem {
    let all: Vec<EnEquation> = full_en(n).unwrap().equations().copied().collect();
    let k = rng.gen_range(0..=all.len());
    EnSystem::from_equations(n, all.choose_multiple(rng, k).copied()).unwrap()
}

#[test]
fn lift_doubles_exact_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut checked = 0;
    while checked < 50 {
        let s = random_subsystem(&mut rng, 2);
        let r = Solver::new(&s, DomainSpec::Integers)
            .radius(10)
            .run()
            .unwrap();
        if r.status != SolveStatus::ExactFinite {
            continue;
        }
        let lifted = Solver::new(&double_by_idempotent(&s), DomainSpec::Integers)
            .radius(10)
            .run()
            .unwrap();
        assert_eq!(lifted.status, SolveStatus::ExactFinite, "{s}");
        assert_eq!(lifted.count, 2 * r.count, "{s}");
        checked += 1;
    }
}

#[test]
fn adding_an_equation_never_adds_solutions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.gen_range(1..=3);
        let s = random_subsystem(&mut rng, n);
        let all: Vec<EnEquation> = full_en(n).unwrap().equations().copied().collect();
        let mut bigger = s.clone();
        bigger.insert(*all.choose(&mut rng).unwrap()).unwrap();
        let count = |sys: &EnSystem| {
            Solver::new(sys, DomainSpec::Integers)
                .radius(4)
                .extension_limit(0)
                .run()
                .unwrap()
                .count
        };
        assert!(count(&bigger) <= count(&s), "{s} vs {bigger}");
    }
}

#[test]
fn budgeted_three_variable_run() {
    let opts = ExploreOptions {
        budget: 3000,
        workers: 4,
        ..ExploreOptions::default()
    };
    let r = f_lower_bound(3, &opts).unwrap();
    assert!(!r.exhaustive);
    assert!(r.best_count >= 8, "{}", r.best_count);
    assert_eq!(r.coverage.examined, 3000);
}
