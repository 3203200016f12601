mod common;

use vstate::cli::StateFile;
use vstate::solver::{newton_solve, normalize_signs};
use vstate::{NewtonConfig, SpectralGrid};

fn coeffs(st: &StateFile) -> Vec<f64> {
    st.contours.iter().flat_map(|c| c.coeffs().to_vec()).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Fixture root with every coefficient nudged by a relative 1e-3.
fn nudged(x: &[f64]) -> Vec<f64> {
    x.iter().enumerate().map(|(k, a)| a * (1.0 + 1e-3 * if k % 2 == 0 { 1.0 } else { -1.0 })).collect()
}

/// Zero-pads each curve's coefficients from `per` to `per_new` modes.
fn pad(x: &[f64], curves: usize, per_new: usize) -> Vec<f64> {
    let per = x.len() / curves;
    x.chunks(per).flat_map(|c| c.iter().copied().chain(std::iter::repeat(0.0)).take(per_new)).collect()
}

#[test]
fn quadratic_convergence_on_fixtures() {
    for name in ["sc_m4_b0.8", "dc_m4_0.8_0.53", "sc_m3_b0.8_state1"] {
        let st = common::fixture(name);
        let grid = SpectralGrid::new(st.nodes).unwrap();
        let cfg = NewtonConfig::for_problem(&st.problem);
        let (x, r) = newton_solve(&st.problem, &nudged(&coeffs(&st)), &grid, &cfg).unwrap();
        assert!(r.converged && !r.trivial, "{name}: {r:?}");
        let first = r.history.iter().position(|&h| h < 1e-6).unwrap();
        assert!(r.history.len() - 1 - first <= 4, "{name}: {:?}", r.history);
        assert!(max_diff(&x, &coeffs(&st)) <= 1e-10, "{name}");
    }
}

#[test]
fn converged_roots_are_stable_under_refinement() {
    for (name, st) in common::fixtures() {
        let grid = SpectralGrid::new(st.nodes).unwrap();
        let cfg = NewtonConfig::for_problem(&st.problem);
        let (x, r) = newton_solve(&st.problem, &coeffs(&st), &grid, &cfg).unwrap();
        assert!(r.converged && r.iterations <= 1, "{name}");
        assert!(max_diff(&x, &coeffs(&st)) <= 1e-12, "{name}");
    }
}

#[test]
fn roots_agree_between_n_and_2n() {
    for name in ["sc_m4_b0.8", "dc_m4_0.8_0.53"] {
        let st = common::fixture(name);
        let curves = st.contours.len();
        let fine = SpectralGrid::new(2 * st.nodes).unwrap();
        let per = st.problem.modes(&fine).unwrap();
        let start = pad(&nudged(&coeffs(&st)), curves, per);
        let (y, r) = newton_solve(&st.problem, &start, &fine, &NewtonConfig::for_problem(&st.problem)).unwrap();
        assert!(r.converged && r.iterations >= 2, "{name}");
        let x = pad(&coeffs(&st), curves, per);
        assert!(max_diff(&x, &y) <= 1e-10, "{name}: {:e}", max_diff(&x, &y));
    }
}

#[test]
fn doubling_the_difference_step_keeps_the_root() {
    let st = common::fixture("sc_m4_b0.8");
    let grid = SpectralGrid::new(st.nodes).unwrap();
    let start = nudged(&coeffs(&st));
    let base = NewtonConfig::simply_connected();
    let (x1, _) = newton_solve(&st.problem, &start, &grid, &base).unwrap();
    let (x2, _) = newton_solve(&st.problem, &start, &grid, &NewtonConfig { fd_step: 2e-10, ..base }).unwrap();
    assert!(max_diff(&x1, &x2) <= 1e-10);
}

#[test]
fn sign_convention_holds_on_fixtures() {
    for (name, st) in common::fixtures() {
        assert!(st.contours[0].coeffs()[0] > 0.0, "{name}");
        if st.contours.len() == 2 {
            assert!(st.contours[1].coeffs()[0] < 0.0, "{name}");
            assert_eq!(st.report.opposite_first_modes, Some(true));
        }
    }
}

#[test]
fn rotated_start_returns_the_normalized_root() {
    let st = common::fixture("dc_m4_0.8_0.53");
    let grid = SpectralGrid::new(st.nodes).unwrap();
    let mut start = nudged(&coeffs(&st));
    let modes = start.len() / 2;
    // Rotation by π/m flips the odd modes of both curves.
    for k in (0..modes).step_by(2) {
        start[k] = -start[k];
        start[modes + k] = -start[modes + k];
    }
    let mut probe = start.clone();
    assert!(normalize_signs(&st.problem, &mut probe));
    let (x, r) = newton_solve(&st.problem, &start, &grid, &NewtonConfig::doubly_connected()).unwrap();
    assert!(r.converged);
    assert!(max_diff(&x, &coeffs(&st)) <= 1e-10);
}

#[test]
fn tiny_seed_falls_back_to_the_trivial_patch() {
    // A 1e-3 seed lies in the basin of the circle: the nontrivial roots at
    // these velocities have a_1 near 0.07 and are reached by continuation.
    let grid = SpectralGrid::new(96).unwrap();
    let p = vstate::Problem::simply_connected(0.8, 3, 0.37).unwrap();
    let mut x = vec![0.0; p.unknowns(&grid).unwrap()];
    x[0] = 1e-3;
    let (_, r) = newton_solve(&p, &x, &grid, &NewtonConfig::default()).unwrap();
    assert!(r.converged && r.trivial);
}
