//! Seeded randomized invariants over the public API.

mod common;

use common::*;

fn check(c: Check, min_draws: usize) {
    match c {
        Ok(n) => assert!(n >= min_draws),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn curve_shape_over_random_specs() {
    check(curve_shape(1, SPEC_DRAWS), SPEC_DRAWS);
}

#[test]
fn stability_over_random_specs() {
    check(stability_consistency(2, SPEC_DRAWS), SPEC_DRAWS);
}

#[test]
fn distributions_are_normalized() {
    check(normalization(3, 200), 200);
}

#[test]
fn rotations_are_unitary() {
    check(unitarity(4, 40), 40);
}

#[test]
fn mixture_moments_are_consistent() {
    check(mixture_moments(5, 20), 20);
}

#[test]
fn constant_curve_integrates_exactly() {
    check(quadrature_constant(6, 300), 300);
}

#[test]
fn sweeps_do_not_depend_on_thread_count() {
    check(parallel_determinism(7, 5), 5);
}
