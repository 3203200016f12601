mod common;

use std::f64::consts::TAU;

use vstate::contour::FourierContour;
use vstate::dynamics::{
    convergence_ratio, evolve_rigid_check, evolve_rigid_check_with, normal_velocities, rigid_normal_velocities,
    EvolutionState, EvolveOptions,
};
use vstate::Error;

#[test]
fn steady_state_moves_like_a_rigid_rotation() {
    for name in ["sc_m4_b0.8", "dc_m4_0.8_0.53"] {
        let state = common::fixture(name);
        let s = EvolutionState::from_contours(&state.contours, state.nodes).unwrap();
        let got = normal_velocities(&s.curves);
        let want = rigid_normal_velocities(&s.curves, state.problem.omega);
        let err = got.iter().flatten().zip(want.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-8, "{name}: {err:e}");
    }
}

#[test]
fn circle_is_invariant() {
    let c = FourierContour::circle(0.6, 3, 4).unwrap();
    let opts = EvolveOptions { nodes: 96, sample_every: 10 };
    let r = evolve_rigid_check(std::slice::from_ref(&c), 0.0, 2.0, 100, &opts).unwrap();
    assert!(r.max_deviation <= 1e-10, "{:e}", r.max_deviation);
    assert!(r.area_drift <= 1e-10, "{:e}", r.area_drift);
}

#[test]
fn trivial_annulus_keeps_its_shape_while_nodes_slide() {
    let outer = FourierContour::circle(0.8, 2, 4).unwrap();
    let inner = FourierContour::circle(0.4, 2, 4).unwrap();
    let opts = EvolveOptions { nodes: 96, sample_every: 10 };
    let r = evolve_rigid_check(&[outer, inner], 0.0, 2.0, 100, &opts).unwrap();
    assert!(r.max_deviation <= 1e-10, "{:e}", r.max_deviation);
    assert!(r.node_drift > 1e-2, "{:e}", r.node_drift);
}

#[test]
fn fixture_rotates_rigidly_over_a_partial_period() {
    let state = common::fixture("sc_m4_b0.8");
    let omega = state.problem.omega;
    let period = TAU / (4.0 * omega);
    let opts = EvolveOptions { nodes: state.nodes, sample_every: 25 };
    let mut snapshots = 0;
    let r = evolve_rigid_check_with(&state.contours, omega, 0.25 * period, 500, &opts, |_| snapshots += 1).unwrap();
    assert_eq!(snapshots, 21);
    assert!(r.max_deviation <= 1e-6, "{:e}", r.max_deviation);
    assert!(r.area_drift <= 1e-8, "{:e}", r.area_drift);
}

#[test]
fn m3_state_tracks_its_rotation() {
    let state = common::fixture("sc_m3_b0.8_state1");
    let omega = state.problem.omega;
    let duration = 0.1 * TAU / (3.0 * omega);
    let opts = EvolveOptions { nodes: state.nodes, sample_every: 50 };
    let r = evolve_rigid_check(&state.contours, omega, duration, 200, &opts).unwrap();
    assert!(r.max_deviation <= 1e-5, "{:e}", r.max_deviation);
}

#[test]
fn time_stepping_is_fourth_order() {
    let state = common::fixture("sc_m4_b0.8");
    let duration = TAU / (4.0 * state.problem.omega);
    let ratio = convergence_ratio(&state.contours, duration, 25, state.nodes).unwrap();
    assert!((11.2..=20.8).contains(&ratio), "{ratio}");
}

#[test]
fn rejects_bad_options() {
    let c = FourierContour::circle(0.5, 2, 2).unwrap();
    let opts = EvolveOptions { nodes: 32, sample_every: 1 };
    let err = evolve_rigid_check(std::slice::from_ref(&c), 0.0, 1.0, 0, &opts).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
    let err = EvolutionState::from_contours(&[], 32).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}
