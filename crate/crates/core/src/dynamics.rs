//! Lagrangian contour dynamics of a vortex patch in the unit disc.
//!
//! Boundary nodes move with the velocity
//!
//! ```text
//! v(z) = -(1/4π) ∮ log|z-ξ|² dξ + (1/4π) ∮ |ξ|²/(1 - z̄ξ) dξ,
//! ```
//!
//! summed over the boundaries with sign `+` for the outer curve and `-` for
//! the inner one. Integrating the logarithm by parts gives the bounded
//! kernel `(z-ξ)/(z̄-ξ̄) dξ̄`, whose diagonal limit is `z_θ`, so the
//! trapezoidal rule stays spectrally accurate on the curve itself.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::contour::{golden_min, polygon_area, FourierContour, SpectralGrid};
use crate::io::{fmt_real, CsvTable};
use crate::{Error, Result};

/// Node positions of every boundary at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionState {
    pub curves: Vec<Vec<Complex64>>,
    pub time: f64,
    pub initial: Vec<Vec<Complex64>>,
}

impl EvolutionState {
    /// Samples the boundaries (outer first) on `nodes` equispaced labels.
    pub fn from_contours(contours: &[FourierContour], nodes: usize) -> Result<Self> {
        if contours.is_empty() || contours.len() > 2 {
            return Err(Error::Config("one or two boundaries expected".into()));
        }
        let grid = SpectralGrid::new(nodes)?;
        let curves: Vec<Vec<Complex64>> = contours
            .iter()
            .map(|c| (0..nodes).map(|i| c.eval(grid.theta(i))).collect())
            .collect();
        check_inside(&curves, 0.0)?;
        Ok(Self { initial: curves.clone(), curves, time: 0.0 })
    }

    pub fn nodes(&self) -> usize {
        self.curves[0].len()
    }
}

fn check_inside(curves: &[Vec<Complex64>], time: f64) -> Result<()> {
    if curves.iter().flatten().any(|z| !(z.norm() < 1.0)) {
        return Err(Error::Instability { time });
    }
    Ok(())
}

/// Spectral differentiation of periodic node data with respect to the label.
struct Differentiator {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Differentiator {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    fn derivative(&self, z: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut buf = z.to_vec();
        self.forward.process(&mut buf);
        for (k, c) in buf.iter_mut().enumerate() {
            let wave = if k < n / 2 {
                k as f64
            } else if k > n / 2 {
                k as f64 - n as f64
            } else {
                0.0
            };
            *c *= Complex64::new(0.0, wave / n as f64);
        }
        self.inverse.process(&mut buf);
        buf
    }
}

/// Velocity at `target` induced by boundaries sampled at equispaced labels
/// with tangents `tangents`. `own` names the (curve, node) that `target`
/// sits on, if any.
fn velocity_at(
    curves: &[Vec<Complex64>],
    tangents: &[Vec<Complex64>],
    target: Complex64,
    own: Option<(usize, usize)>,
) -> Complex64 {
    let zc = target.conj();
    let mut total = Complex64::new(0.0, 0.0);
    for (c, (pts, tan)) in curves.iter().zip(tangents).enumerate() {
        let mut s = Complex64::new(0.0, 0.0);
        for (j, (xi, dxi)) in pts.iter().zip(tan).enumerate() {
            if own == Some((c, j)) {
                s += dxi;
            } else {
                let d = target - xi;
                s += d / d.conj() * dxi.conj();
            }
            s += xi.norm_sqr() / (1.0 - zc * xi) * dxi;
        }
        let sign = if c == 0 { 1.0 } else { -1.0 };
        total += sign * s * (2.0 * PI / pts.len() as f64);
    }
    total / (4.0 * PI)
}

fn tangents_of(curves: &[Vec<Complex64>], diff: &Differentiator) -> Vec<Vec<Complex64>> {
    curves.iter().map(|z| diff.derivative(z)).collect()
}

/// Velocity induced by the patch at `target`. Targets that coincide with a
/// node use the diagonal limit of the kernel.
pub fn boundary_velocity(state: &EvolutionState, target: Complex64) -> Result<Complex64> {
    if !(target.norm() < 1.0) {
        return Err(Error::Domain(format!("target {target} is not inside the unit disc")));
    }
    let diff = Differentiator::new(state.nodes());
    let tangents = tangents_of(&state.curves, &diff);
    let own = state.curves.iter().enumerate().find_map(|(c, pts)| {
        pts.iter().position(|z| (z - target).norm() <= 1e-14).map(|j| (c, j))
    });
    Ok(velocity_at(&state.curves, &tangents, target, own))
}

/// Velocities of every node, curve by curve.
pub fn node_velocities(curves: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let diff = Differentiator::new(curves[0].len());
    node_velocities_with(curves, &diff)
}

fn node_velocities_with(curves: &[Vec<Complex64>], diff: &Differentiator) -> Vec<Vec<Complex64>> {
    let tangents = tangents_of(curves, diff);
    curves
        .iter()
        .enumerate()
        .map(|(c, pts)| {
            pts.par_iter()
                .enumerate()
                .map(|(i, &z)| velocity_at(curves, &tangents, z, Some((c, i))))
                .collect()
        })
        .collect()
}

/// Normal velocities `Re(v · conj(i z_θ))/|z_θ|` with the outward normal
/// `-i z_θ/|z_θ|` of a counterclockwise curve.
pub fn normal_velocities(curves: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
    let diff = Differentiator::new(curves[0].len());
    let v = node_velocities_with(curves, &diff);
    let t = tangents_of(curves, &diff);
    v.iter()
        .zip(&t)
        .map(|(vs, ts)| vs.iter().zip(ts).map(|(v, t)| outward_component(*v, *t)).collect())
        .collect()
}

fn outward_component(v: Complex64, tangent: Complex64) -> f64 {
    let n = Complex64::new(0.0, -1.0) * tangent / tangent.norm();
    v.re * n.re + v.im * n.im
}

/// Normal velocity of rigid rotation at angular velocity `omega`.
pub fn rigid_normal_velocities(curves: &[Vec<Complex64>], omega: f64) -> Vec<Vec<f64>> {
    let diff = Differentiator::new(curves[0].len());
    let t = tangents_of(curves, &diff);
    curves
        .iter()
        .zip(&t)
        .map(|(zs, ts)| {
            zs.iter()
                .zip(ts)
                .map(|(z, t)| outward_component(Complex64::new(0.0, omega) * z, *t))
                .collect()
        })
        .collect()
}

/// One classical Runge–Kutta step of size `dt`.
fn rk4_step(curves: &[Vec<Complex64>], dt: f64, diff: &Differentiator) -> Vec<Vec<Complex64>> {
    let shift = |base: &[Vec<Complex64>], k: &[Vec<Complex64>], h: f64| -> Vec<Vec<Complex64>> {
        base.iter()
            .zip(k)
            .map(|(z, v)| z.iter().zip(v).map(|(a, b)| a + b * h).collect())
            .collect()
    };
    let k1 = node_velocities_with(curves, diff);
    let k2 = node_velocities_with(&shift(curves, &k1, 0.5 * dt), diff);
    let k3 = node_velocities_with(&shift(curves, &k2, 0.5 * dt), diff);
    let k4 = node_velocities_with(&shift(curves, &k3, dt), diff);
    curves
        .iter()
        .enumerate()
        .map(|(c, z)| {
            (0..z.len())
                .map(|i| z[i] + (k1[c][i] + 2.0 * k2[c][i] + 2.0 * k3[c][i] + k4[c][i]) * (dt / 6.0))
                .collect()
        })
        .collect()
}

/// Distance from `w` to a star-shaped contour, searched near `arg w`.
fn distance_to_contour(c: &FourierContour, w: Complex64, window: f64) -> f64 {
    let a = w.arg();
    let t = golden_min(|t| (c.eval(t) - w).norm(), a - window, a + window, 1e-13);
    (c.eval(t) - w).norm()
}

/// Result of [`evolve_rigid_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidCheck {
    /// Max over nodes and sampled times of the distance from the evolved
    /// node to the rigidly rotated initial boundary.
    pub max_deviation: f64,
    /// Max node-to-node distance `|γ(t) - e^{iΩt}γ(0)|`.
    pub node_drift: f64,
    /// Worst relative change of an enclosed area.
    pub area_drift: f64,
    pub time: f64,
    pub steps: usize,
    pub nodes: usize,
}

/// Options of [`evolve_rigid_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub nodes: usize,
    /// Deviation is sampled after every this many steps (and at the end).
    pub sample_every: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { nodes: 256, sample_every: 50 }
    }
}

fn areas(curves: &[Vec<Complex64>], diff: &Differentiator) -> Vec<f64> {
    curves.iter().map(|z| polygon_area(z, &diff.derivative(z))).collect()
}

/// Integrates the node ODE with RK4 over `[0, duration]` and measures how
/// far the evolved boundaries stray from the rigidly rotated initial ones.
///
/// `snapshot` receives the state after every sampled step.
pub fn evolve_rigid_check_with(
    contours: &[FourierContour],
    omega: f64,
    duration: f64,
    steps: usize,
    opts: &EvolveOptions,
    mut snapshot: impl FnMut(&EvolutionState),
) -> Result<RigidCheck> {
    if steps == 0 || !(duration.is_finite() && duration >= 0.0) || opts.sample_every == 0 {
        return Err(Error::Precondition("need steps >= 1 and a finite duration".into()));
    }
    let mut state = EvolutionState::from_contours(contours, opts.nodes)?;
    let diff = Differentiator::new(opts.nodes);
    let area0 = areas(&state.curves, &diff);
    let window = 8.0 * 2.0 * PI / opts.nodes as f64;
    let dt = duration / steps as f64;
    let mut max_dev = 0.0f64;
    let mut node_drift = 0.0f64;
    let mut area_drift = 0.0f64;
    snapshot(&state);
    for step in 1..=steps {
        state.curves = rk4_step(&state.curves, dt, &diff);
        state.time = step as f64 * dt;
        check_inside(&state.curves, state.time)?;
        if step % opts.sample_every == 0 || step == steps {
            let back = Complex64::from_polar(1.0, -omega * state.time);
            for (c, pts) in contours.iter().zip(&state.curves) {
                let d = pts
                    .par_iter()
                    .map(|&w| distance_to_contour(c, w * back, window))
                    .reduce(|| 0.0, f64::max);
                max_dev = max_dev.max(d);
            }
            for (pts, init) in state.curves.iter().zip(&state.initial) {
                for (w, z0) in pts.iter().zip(init) {
                    node_drift = node_drift.max((w * back - z0).norm());
                }
            }
            for (a, a0) in areas(&state.curves, &diff).iter().zip(&area0) {
                area_drift = area_drift.max(((a - a0) / a0).abs());
            }
            snapshot(&state);
        }
    }
    Ok(RigidCheck {
        max_deviation: max_dev,
        node_drift,
        area_drift,
        time: duration,
        steps,
        nodes: opts.nodes,
    })
}

pub fn evolve_rigid_check(
    contours: &[FourierContour],
    omega: f64,
    duration: f64,
    steps: usize,
    opts: &EvolveOptions,
) -> Result<RigidCheck> {
    evolve_rigid_check_with(contours, omega, duration, steps, opts, |_| {})
}

/// Final node positions after `steps` RK4 steps over `duration`.
pub fn evolve_nodes(contours: &[FourierContour], duration: f64, steps: usize, nodes: usize) -> Result<Vec<Vec<Complex64>>> {
    let mut state = EvolutionState::from_contours(contours, nodes)?;
    let diff = Differentiator::new(nodes);
    let dt = duration / steps as f64;
    for step in 1..=steps {
        state.curves = rk4_step(&state.curves, dt, &diff);
        check_inside(&state.curves, step as f64 * dt)?;
    }
    Ok(state.curves)
}

/// Observed order of the time stepping: the ratio of successive
/// differences `|X_s - X_2s| / |X_2s - X_4s|` of final node positions,
/// which tends to 16 for a fourth-order method.
pub fn convergence_ratio(contours: &[FourierContour], duration: f64, steps: usize, nodes: usize) -> Result<f64> {
    let runs: Vec<Vec<Vec<Complex64>>> = [steps, 2 * steps, 4 * steps]
        .iter()
        .map(|&s| evolve_nodes(contours, duration, s, nodes))
        .collect::<Result<_>>()?;
    let gap = |a: &Vec<Vec<Complex64>>, b: &Vec<Vec<Complex64>>| {
        a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    };
    Ok(gap(&runs[0], &runs[1]) / gap(&runs[1], &runs[2]))
}

/// Rows `theta_index,t,x,y` of one state.
pub fn append_snapshot(table: &mut CsvTable, state: &EvolutionState) {
    for pts in &state.curves {
        for (i, z) in pts.iter().enumerate() {
            table.push(vec![i.to_string(), fmt_real(state.time), fmt_real(z.re), fmt_real(z.im)]);
        }
    }
}

pub fn snapshot_table() -> CsvTable {
    CsvTable::new(["theta_index", "t", "x", "y"])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(b: f64) -> FourierContour {
        FourierContour::circle(b, 1, 1).unwrap()
    }

    #[test]
    fn rankine_profile_on_a_circle() {
        let s = EvolutionState::from_contours(&[circle(0.5)], 64).unwrap();
        let v = boundary_velocity(&s, s.curves[0][5]).unwrap();
        let expect = Complex64::new(0.0, 0.5) * s.curves[0][5];
        assert!((v - expect).norm() < 1e-12, "{v} vs {expect}");
        // Inside the patch the flow is solid rotation at rate 1/2.
        let z = Complex64::new(0.1, 0.2);
        let v = boundary_velocity(&s, z).unwrap();
        assert!((v - Complex64::new(0.0, 0.5) * z).norm() < 1e-12);
    }

    #[test]
    fn circle_and_annulus_are_stationary() {
        for curves in [vec![circle(0.7)], vec![circle(0.8), circle(0.4)]] {
            let s = EvolutionState::from_contours(&curves, 256).unwrap();
            let normal = normal_velocities(&s.curves);
            assert!(normal.iter().flatten().all(|u| u.abs() <= 1e-10));
        }
    }

    #[test]
    fn target_outside_disc_is_rejected() {
        let s = EvolutionState::from_contours(&[circle(0.5)], 32).unwrap();
        assert!(matches!(boundary_velocity(&s, Complex64::new(1.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn circle_stays_put_as_a_set() {
        let r = evolve_rigid_check(&[circle(0.6)], 0.37, 1.0, 40, &EvolveOptions { nodes: 64, sample_every: 10 }).unwrap();
        assert!(r.max_deviation <= 1e-10);
        assert!(r.area_drift <= 1e-10, "{:e}", r.area_drift);
    }

    #[test]
    fn annulus_set_is_fixed_but_nodes_drift() {
        let c = [circle(0.8), circle(0.4)];
        let r = evolve_rigid_check(&c, 0.1, 1.0, 40, &EvolveOptions { nodes: 64, sample_every: 10 }).unwrap();
        assert!(r.max_deviation <= 1e-10);
        assert!(r.node_drift > 1e-2);
    }

    #[test]
    fn spectral_derivative_of_a_circle() {
        let n = 32;
        let d = Differentiator::new(n);
        let z: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(0.5, 2.0 * PI * i as f64 / n as f64)).collect();
        let dz = d.derivative(&z);
        for (a, b) in z.iter().zip(&dz) {
            assert!((b - Complex64::new(0.0, 1.0) * a).norm() < 1e-14);
        }
    }
}
