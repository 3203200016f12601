//! Branch tracing from a bifurcation point of the trivial patch.
//!
//! The first two points fix the amplitude along the kernel direction and
//! solve for `(coefficients, Ω)`. From there a secant predictor and a
//! pseudo-arclength corrector follow the branch through saddle-node folds.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::contour::{min_separation, SpectralGrid};
use crate::io::{fmt_real, CsvTable};
use crate::residual::{project_reduced, reduced_omega_derivative, Problem, Shape};
use crate::solver::{evaluate, fd_jacobian_at, newton_solve, NewtonConfig, NewtonReport};
use crate::spectra::{self, EigenBranch};
use crate::{Error, Result};

/// Which bifurcation point of the trivial patch a branch starts from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSelector {
    /// The single point `Ω_m` of a disc.
    Sc,
    /// `Ω_m^+` of an annulus.
    Plus,
    /// `Ω_m^-` of an annulus.
    Minus,
}

/// Starting data for [`trace_branch`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    /// Problem with Ω set to the starting guess.
    pub problem: Problem,
    pub selector: BranchSelector,
    pub bifurcation_omega: f64,
    pub epsilon: f64,
    /// Unit vector along which the amplitude is imposed.
    pub direction: Vec<f64>,
    /// Initial coefficients, `ε · direction`.
    pub coeffs: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Builds the seed of an m-fold branch on `grid`.
///
/// Ω starts at the bifurcation value shifted by `delta_omega`; this only
/// serves as the initial guess, the first corrector solve determines Ω.
pub fn seed_from_bifurcation(
    shape: Shape,
    m: usize,
    selector: BranchSelector,
    epsilon: f64,
    delta_omega: f64,
    grid: &SpectralGrid,
) -> Result<Seed> {
    if !(epsilon.is_finite() && epsilon != 0.0 && delta_omega.is_finite()) {
        return Err(Error::Precondition("seed amplitude must be finite and nonzero".into()));
    }
    let mut warnings = Vec::new();
    let probe = Problem::new(shape, m, 0.0)?;
    let modes = probe.modes(grid)?;
    let mut direction = vec![0.0; probe.unknowns(grid)?];
    let omega_bif = match (shape, selector) {
        (Shape::SimplyConnected { b }, BranchSelector::Sc) => {
            direction[0] = 1.0;
            spectra::sc_eigen(m, b)?.1
        }
        (Shape::DoublyConnected { b1, b2 }, BranchSelector::Plus | BranchSelector::Minus) => {
            let spec = spectra::dc_spectrum(m, b1, b2)?;
            if !spec.has_real_eigenvalues() {
                return Err(Error::NoBifurcation(format!(
                    "mode {m} needs m >= g_m(b1, b2) = {:.6}; the discriminant is {:.3e} < 0",
                    spectra::mode_threshold(m, b1, b2),
                    spec.discriminant
                )));
            }
            // Ω^+ comes from λ^- and Ω^- from λ^+.
            let (eig, omega) = match selector {
                BranchSelector::Plus => (EigenBranch::Minus, spec.omega_plus),
                _ => (EigenBranch::Plus, spec.omega_minus),
            };
            let v = spectra::kernel_vector(m, eig, b1, b2)?;
            direction[0] = v.components[0];
            direction[modes] = v.components[1];
            if m == 1 && eig == EigenBranch::Minus {
                warnings.push(
                    "the 1-fold eigenvalue (b2/b1)^2 has a linearized range of infinite codimension; \
                     a branch may not exist"
                        .into(),
                );
            }
            if m == 1 {
                if let Some((n, x)) = spectra::near_exceptional(b1, b2, 64, 1e-6)? {
                    warnings.push(format!(
                        "b2 = {b2} is within 1e-6 of the exceptional radius x_{n} = {x}; the kernel may be two-dimensional"
                    ));
                }
            } else if m >= 2 && !spectra::transversality_ok(m, b1, b2)? {
                warnings.push(format!("mode {m} is at its fold radius; the eigenvalue is double"));
            }
            omega.unwrap_or(f64::NAN)
        }
        _ => {
            return Err(Error::Config(format!("branch selector {selector:?} does not match the patch type")));
        }
    };
    let coeffs = direction.iter().map(|d| epsilon * d).collect();
    Ok(Seed {
        problem: Problem::new(shape, m, omega_bif + delta_omega)?,
        selector,
        bifurcation_omega: omega_bif,
        epsilon,
        direction,
        coeffs,
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_points: usize,
    /// Stop when a boundary comes this close to the unit circle or to the
    /// other boundary.
    pub gap_floor: f64,
    /// Residual sup-norm required of every branch point.
    pub tol: f64,
    pub fd_step: f64,
    pub max_corrector_iter: usize,
    /// A corrector that needs at most this many iterations counts as fast;
    /// two fast ones in a row double the step.
    pub fast_iterations: usize,
    /// Relative energy in the top tenth of the modes that triggers a grid
    /// refinement.
    pub tail_energy: f64,
    pub max_nodes: usize,
    /// Stop when the branch falls back onto the trivial patch.
    pub stop_at_trivial: bool,
    /// Stop once Ω leaves this interval.
    pub omega_window: Option<(f64, f64)>,
    /// Locate every fold precisely with [`locate_fold`] after tracing.
    #[serde(default)]
    pub refine_folds: bool,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            initial_step: 1e-3,
            min_step: 1e-6,
            max_step: 5e-2,
            max_points: 2000,
            gap_floor: 5e-3,
            tol: 1e-12,
            fd_step: 1e-10,
            max_corrector_iter: 12,
            fast_iterations: 3,
            tail_energy: 1e-10,
            max_nodes: 2048,
            stop_at_trivial: true,
            omega_window: None,
            refine_folds: false,
        }
    }
}

impl ContinuationConfig {
    pub fn for_shape(shape: &Shape) -> Self {
        match shape {
            Shape::SimplyConnected { .. } => Self::default(),
            Shape::DoublyConnected { .. } => Self { fd_step: 1e-9, ..Self::default() },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.min_step > 0.0
            && self.min_step <= self.initial_step
            && self.initial_step <= self.max_step
            && self.max_points >= 2
            && self.gap_floor >= 0.0
            && self.tol > 0.0
            && self.fd_step > 0.0
            && self.max_corrector_iter >= 1
            && self.tail_energy > 0.0;
        if !ok {
            return Err(Error::Config(format!("invalid continuation settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub omega: f64,
    pub coeffs: Vec<f64>,
    /// Grid size the point was converged on.
    pub nodes: usize,
    pub sup_residual: f64,
    /// `a_1`, or `a_{1,1}` for annular patches.
    pub a_first: f64,
    /// `a_{2,1}` for annular patches.
    pub a_inner_first: Option<f64>,
    pub gap_unit_circle: f64,
    pub gap_boundaries: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    LimitingProximity,
    StepFloor,
    MaxPoints,
    SolverFailure,
    /// The branch reached the trivial patch again (annular branches joining
    /// `Ω_m^+` and `Ω_m^-`).
    ReturnedToTrivial,
    /// Ω left the configured window.
    OmegaWindow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    /// The patch and symmetry; Ω is the bifurcation value.
    pub problem: Problem,
    pub selector: BranchSelector,
    pub points: Vec<BranchPoint>,
    /// Indices of points where Ω changes direction.
    pub fold_indices: Vec<usize>,
    /// Refined fold points, one per entry of `fold_indices`, when requested.
    #[serde(default)]
    pub folds: Vec<BranchPoint>,
    pub termination: Termination,
    pub message: Option<String>,
}

impl Branch {
    pub fn omega_range(&self) -> (f64, f64) {
        self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.omega), hi.max(p.omega)))
    }

    /// Linear interpolants of the coefficients at every crossing of
    /// `omega`, each padded to the larger of the two grids.
    pub fn crossings(&self, omega: f64) -> Vec<(Vec<f64>, usize)> {
        let curves = self.problem.shape.curves();
        self.points
            .windows(2)
            .filter(|w| (w[0].omega - omega) * (w[1].omega - omega) <= 0.0 && w[0].omega != w[1].omega)
            .map(|w| {
                let t = (omega - w[0].omega) / (w[1].omega - w[0].omega);
                let nodes = w[0].nodes.max(w[1].nodes);
                let len = w[0].coeffs.len().max(w[1].coeffs.len());
                let a = pad(&w[0].coeffs, curves, len);
                let b = pad(&w[1].coeffs, curves, len);
                (a.iter().zip(&b).map(|(x, y)| x + t * (y - x)).collect(), nodes)
            })
            .collect()
    }

    pub fn csv(&self) -> CsvTable {
        let dc = self.problem.shape.curves() == 2;
        let mut header = vec!["omega", "a_first", "sup_residual", "gap_unit_circle"];
        if dc {
            header.extend(["gap_boundaries", "a_inner_first"]);
        }
        let mut t = CsvTable::new(header);
        for p in &self.points {
            let mut row = vec![fmt_real(p.omega), fmt_real(p.a_first), fmt_real(p.sup_residual), fmt_real(p.gap_unit_circle)];
            if dc {
                row.push(fmt_real(p.gap_boundaries.unwrap_or(f64::NAN)));
                row.push(fmt_real(p.a_inner_first.unwrap_or(f64::NAN)));
            }
            t.push(row);
        }
        t
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Pads each curve's coefficient block with zero modes to a total length.
pub(crate) fn pad(x: &[f64], curves: usize, len: usize) -> Vec<f64> {
    if x.len() == len {
        return x.to_vec();
    }
    let per = x.len() / curves;
    let per_new = len / curves;
    let mut out = vec![0.0; len];
    for c in 0..curves {
        out[c * per_new..c * per_new + per].copy_from_slice(&x[c * per..(c + 1) * per]);
    }
    out
}

/// A linear side condition `c · (x, Ω) = rhs`.
struct Constraint {
    c: Vec<f64>,
    rhs: f64,
}

struct Corrected {
    x: Vec<f64>,
    omega: f64,
    sup: f64,
    iterations: usize,
}

fn omega_column(p: &Problem, x: &[f64], grid: &SpectralGrid) -> Result<Vec<f64>> {
    let contours = p.contours(x)?;
    Ok(reduced_omega_derivative(&contours, grid)
        .iter()
        .flat_map(|v| project_reduced(v, p.fold, grid))
        .collect())
}

/// Newton on `[F(x, Ω); c·(x, Ω) - rhs] = 0`. The Jacobian is refreshed
/// whenever the residual fails to drop by a factor of four.
fn correct(
    base: &Problem,
    grid: &SpectralGrid,
    x0: Vec<f64>,
    omega0: f64,
    con: &Constraint,
    cfg: &ContinuationConfig,
) -> Result<Option<Corrected>> {
    let n = x0.len();
    let (mut x, mut omega) = (x0, omega0);
    let (mut f, mut sup) = evaluate(&base.with_omega(omega), &x, grid)?;
    let mut jac: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> = None;
    let mut iterations = 0;
    let mut last = f64::INFINITY;
    loop {
        let g = con.c[..n].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + con.c[n] * omega - con.rhs;
        if sup < cfg.tol && g.abs() <= cfg.tol {
            return Ok(Some(Corrected { x, omega, sup, iterations }));
        }
        if iterations >= cfg.max_corrector_iter || !sup.is_finite() || sup > 1e3 * last.min(1.0) {
            return Ok(None);
        }
        if jac.is_none() || sup > 0.25 * last {
            let p = base.with_omega(omega);
            let jx = fd_jacobian_at(&p, &x, &f, grid, cfg.fd_step)?;
            let fo = omega_column(&p, &x, grid)?;
            let a = DMatrix::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
                (true, true) => jx[(i, j)],
                (true, false) => fo[i],
                (false, _) => con.c[j],
            });
            jac = Some(a.lu());
        }
        let mut rhs = f.clone();
        rhs.push(g);
        let Some(d) = jac.as_ref().and_then(|lu| lu.solve(&nalgebra::DVector::from_vec(rhs))) else {
            return Ok(None);
        };
        if d.iter().any(|v| !v.is_finite()) {
            return Ok(None);
        }
        last = sup;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=20 {
            let trial: Vec<f64> = x.iter().zip(d.iter()).map(|(a, b)| a - t * b).collect();
            let trial_omega = omega - t * d[n];
            match evaluate(&base.with_omega(trial_omega), &trial, grid) {
                Ok((ft, st)) => {
                    x = trial;
                    omega = trial_omega;
                    f = ft;
                    sup = st;
                    accepted = true;
                    break;
                }
                Err(e) if e.is_geometric() => t *= 0.5,
                Err(e) => return Err(e),
            }
        }
        iterations += 1;
        if !accepted {
            return Ok(None);
        }
    }
}

/// `dΩ/ds` along the curve `d·x = s` through the solution `(x, Ω)`.
fn omega_slope(base: &Problem, grid: &SpectralGrid, x: &[f64], omega: f64, d: &[f64], h: f64) -> Result<f64> {
    let n = x.len();
    let p = base.with_omega(omega);
    let (f, _) = evaluate(&p, x, grid)?;
    let jx = fd_jacobian_at(&p, x, &f, grid, h)?;
    let fo = omega_column(&p, x, grid)?;
    let a = DMatrix::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
        (true, true) => jx[(i, j)],
        (true, false) => fo[i],
        (false, true) => d[j],
        (false, false) => 0.0,
    });
    let mut rhs = nalgebra::DVector::zeros(n + 1);
    rhs[n] = 1.0;
    a.lu()
        .solve(&rhs)
        .map(|t| t[n])
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Singular { condition: f64::INFINITY, hint: "bordered fold system".into() })
}

/// Refines the saddle-node fold recorded at `branch.points[index]`.
///
/// Along the chord through the neighbouring points, `s = d·x` is a regular
/// parameter across the fold while `Ω(s)` has an extremum; the fold is the
/// zero of `dΩ/ds`, located by Illinois false position. At the returned
/// point the fixed-Ω Jacobian is singular up to the root-finding tolerance.
pub fn locate_fold(branch: &Branch, index: usize, cfg: &ContinuationConfig) -> Result<BranchPoint> {
    let pts = &branch.points;
    if index == 0 || index + 1 >= pts.len() {
        return Err(Error::Precondition(format!("no neighbours around point {index}")));
    }
    let base = branch.problem;
    let curves = base.shape.curves();
    let nodes = pts[index - 1..=index + 1].iter().map(|p| p.nodes).max().unwrap_or(pts[index].nodes);
    let grid = SpectralGrid::new(nodes)?;
    let len = base.unknowns(&grid)?;
    let xa = pad(&pts[index - 1].coeffs, curves, len);
    let xb = pad(&pts[index + 1].coeffs, curves, len);
    let mut d: Vec<f64> = xb.iter().zip(&xa).map(|(b, a)| b - a).collect();
    let dn = dot(&d, &d).sqrt();
    if !(dn > 0.0) {
        return Err(Error::Precondition("fold neighbours coincide".into()));
    }
    d.iter_mut().for_each(|v| *v /= dn);
    let mut c = d.clone();
    c.push(0.0);

    let solve_at = |s: f64, x0: Vec<f64>, omega0: f64| -> Result<Corrected> {
        let con = Constraint { c: c.clone(), rhs: s };
        correct(&base, &grid, x0, omega0, &con, cfg)?
            .ok_or_else(|| Error::Seed(format!("fold refinement lost the branch at s = {s:e}")))
    };
    let mut lo = solve_at(dot(&d, &xa), xa, pts[index - 1].omega)?;
    let mut hi = solve_at(dot(&d, &xb), xb, pts[index + 1].omega)?;
    let slope = |r: &Corrected| omega_slope(&base, &grid, &r.x, r.omega, &d, cfg.fd_step);
    let (mut s_lo, mut s_hi) = (dot(&d, &lo.x), dot(&d, &hi.x));
    let (mut g_lo, mut g_hi) = (slope(&lo)?, slope(&hi)?);
    if g_lo * g_hi > 0.0 {
        return Err(Error::Precondition("dΩ/ds keeps its sign between the fold neighbours".into()));
    }
    let mut side = 0i8;
    let mut best = if g_lo.abs() < g_hi.abs() { (s_lo, g_lo) } else { (s_hi, g_hi) };
    let mut best_state = if best.0 == s_lo { (lo.x.clone(), lo.omega, lo.sup) } else { (hi.x.clone(), hi.omega, hi.sup) };
    for _ in 0..80 {
        if s_hi - s_lo <= 1e-14 * (1.0 + s_lo.abs()) {
            break;
        }
        let mut s = (s_lo * g_hi - s_hi * g_lo) / (g_hi - g_lo);
        if !(s > s_lo && s < s_hi) {
            s = 0.5 * (s_lo + s_hi);
        }
        let t = (s - s_lo) / (s_hi - s_lo);
        let x0: Vec<f64> = lo.x.iter().zip(&hi.x).map(|(a, b)| a + t * (b - a)).collect();
        let r = solve_at(s, x0, lo.omega + t * (hi.omega - lo.omega))?;
        let g = slope(&r)?;
        if g.abs() < best.1.abs() {
            best = (s, g);
            best_state = (r.x.clone(), r.omega, r.sup);
        }
        if g == 0.0 {
            break;
        }
        if g * g_lo > 0.0 {
            (s_lo, g_lo, lo) = (s, g, r);
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        } else {
            (s_hi, g_hi, hi) = (s, g, r);
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        }
    }
    let (x, omega, sup) = best_state;
    diagnostics(&base, &x, omega, &grid, sup)
}

fn diagnostics(p: &Problem, x: &[f64], omega: f64, grid: &SpectralGrid, sup: f64) -> Result<BranchPoint> {
    let contours = p.contours(x)?;
    let gap_unit_circle = contours[0].gap_to_unit_circle(grid)?;
    let (a_inner_first, gap_boundaries) = if contours.len() == 2 {
        (Some(contours[1].coeffs()[0]), Some(min_separation(&contours[0], &contours[1], grid)))
    } else {
        (None, None)
    };
    Ok(BranchPoint {
        omega,
        coeffs: x.to_vec(),
        nodes: grid.len(),
        sup_residual: sup,
        a_first: x[0],
        a_inner_first,
        gap_unit_circle,
        gap_boundaries,
    })
}

/// Relative energy in the top tenth of the modes, worst curve.
pub fn tail_energy(x: &[f64], curves: usize) -> f64 {
    x.chunks(x.len() / curves)
        .map(|a| {
            let total: f64 = a.iter().map(|v| v * v).sum();
            let start = a.len() - (a.len() / 10).max(1);
            let tail: f64 = a[start..].iter().map(|v| v * v).sum();
            if total > 0.0 {
                tail / total
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn state(p: &BranchPoint, curves: usize, len: usize) -> Vec<f64> {
    let mut y = pad(&p.coeffs, curves, len);
    y.push(p.omega);
    y
}

/// Follows a branch from its seed until one of the stopping rules fires.
///
/// Errors only when the first two amplitude-constrained solves fail.
pub fn trace_branch(seed: &Seed, grid: &SpectralGrid, cfg: &ContinuationConfig) -> Result<Branch> {
    cfg.validate()?;
    let base = seed.problem;
    let curves = base.shape.curves();
    let n0 = base.unknowns(grid)?;
    if seed.coeffs.len() != n0 || seed.direction.len() != n0 {
        return Err(Error::Config("seed was built on a different grid".into()));
    }
    let mut grid = grid.clone();
    let mut points: Vec<BranchPoint> = Vec::new();

    // Two amplitude-constrained points: a = ε and a = 2ε along the kernel.
    let mut omega_guess = base.omega;
    for scale in [1.0, 2.0] {
        let mut c = seed.direction.clone();
        c.push(0.0);
        let con = Constraint { c, rhs: scale * seed.epsilon };
        let x0: Vec<f64> = seed.coeffs.iter().map(|a| scale * a).collect();
        let res = correct(&base, &grid, x0, omega_guess, &con, cfg)?.ok_or_else(|| {
            Error::Seed(format!(
                "no convergence at amplitude {:e}; try a smaller ε or δΩ",
                scale * seed.epsilon
            ))
        })?;
        omega_guess = seed.bifurcation_omega + 4.0 * (res.omega - seed.bifurcation_omega);
        points.push(diagnostics(&base, &res.x, res.omega, &grid, res.sup)?);
    }

    let mut step = cfg.initial_step;
    let mut fast = 0;
    let mut fold_indices = Vec::new();
    let mut max_norm = points.iter().map(|p| dot(&p.coeffs, &p.coeffs).sqrt()).fold(0.0, f64::max);
    let mut message = None;
    let termination = loop {
        if points.len() >= cfg.max_points {
            break Termination::MaxPoints;
        }
        let len = base.unknowns(&grid)?;
        let k = points.len() - 1;
        let y1 = state(&points[k], curves, len);
        let y0 = state(&points[k - 1], curves, len);
        let mut tangent: Vec<f64> = y1.iter().zip(&y0).map(|(a, b)| a - b).collect();
        let tn = dot(&tangent, &tangent).sqrt();
        if !(tn > 0.0) {
            message = Some("two consecutive points coincide".into());
            break Termination::SolverFailure;
        }
        tangent.iter_mut().for_each(|t| *t /= tn);
        let pred: Vec<f64> = y1.iter().zip(&tangent).map(|(a, t)| a + step * t).collect();
        let con = Constraint { rhs: dot(&tangent, &pred), c: tangent };
        let outcome = match correct(&base, &grid, pred[..len].to_vec(), pred[len], &con, cfg) {
            Ok(r) => r,
            Err(e) if e.is_geometric() => None,
            Err(e) => {
                message = Some(e.to_string());
                break Termination::SolverFailure;
            }
        };
        let Some(mut res) = outcome else {
            step *= 0.5;
            fast = 0;
            if step < cfg.min_step {
                break Termination::StepFloor;
            }
            continue;
        };

        // Refine the grid while the spectrum is not resolved.
        while tail_energy(&res.x, curves) > cfg.tail_energy && grid.len() * 2 <= cfg.max_nodes {
            let fine = SpectralGrid::new(grid.len() * 2)?;
            let flen = base.unknowns(&fine)?;
            let mut c = pad(&con.c[..len], curves, flen);
            c.push(con.c[len]);
            let fine_con = Constraint { c, rhs: con.rhs };
            match correct(&base, &fine, pad(&res.x, curves, flen), res.omega, &fine_con, cfg) {
                Ok(Some(r)) => {
                    res = r;
                    grid = fine;
                }
                _ => break,
            }
        }

        if res.iterations <= cfg.fast_iterations {
            fast += 1;
            if fast >= 2 {
                step = (2.0 * step).min(cfg.max_step);
                fast = 0;
            }
        } else {
            fast = 0;
        }

        let point = diagnostics(&base, &res.x, res.omega, &grid, res.sup)?;
        let prev = &points[k];
        let d_prev = prev.omega - points[k - 1].omega;
        let d_new = point.omega - prev.omega;
        if d_prev * d_new < 0.0 {
            fold_indices.push(k);
        }
        let crossed = dot(&pad(&prev.coeffs, curves, len), &point.coeffs) < 0.0;
        let norm = dot(&point.coeffs, &point.coeffs).sqrt();
        max_norm = max_norm.max(norm);
        let gap_hit = point.gap_unit_circle < cfg.gap_floor || point.gap_boundaries.is_some_and(|g| g < cfg.gap_floor);
        let outside = cfg.omega_window.is_some_and(|(lo, hi)| point.omega < lo || point.omega > hi);
        points.push(point);
        if gap_hit {
            break Termination::LimitingProximity;
        }
        if cfg.stop_at_trivial && points.len() > 3 && max_norm > 10.0 * seed.epsilon.abs() && (crossed || norm < seed.epsilon.abs()) {
            break Termination::ReturnedToTrivial;
        }
        if outside {
            break Termination::OmegaWindow;
        }
    };

    let mut branch = Branch {
        problem: base.with_omega(seed.bifurcation_omega),
        selector: seed.selector,
        points,
        fold_indices,
        folds: Vec::new(),
        termination,
        message,
    };
    if cfg.refine_folds {
        branch.folds = branch.fold_indices.iter().map(|&k| locate_fold(&branch, k, cfg)).collect::<Result<_>>()?;
    }
    Ok(branch)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitingKind {
    BoundaryTouching,
    CornerForming,
    InnerOuterContact,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitingThresholds {
    /// Gaps below this count as contact.
    pub contact_gap: f64,
    /// Tail slopes of `log|a_k|` against `log k` above this flag a corner.
    pub corner_slope: f64,
}

impl Default for LimitingThresholds {
    fn default() -> Self {
        Self { contact_gap: 1e-2, corner_slope: -1.8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitingEstimate {
    pub point: BranchPoint,
    pub kind: LimitingKind,
    pub tail_slope: Option<f64>,
}

/// Least-squares slope of `log|a_k|` against `log k` over the upper half of
/// the modes that stand above the roundoff floor, worst curve.
pub fn tail_slope(x: &[f64], curves: usize) -> Option<f64> {
    x.chunks(x.len() / curves)
        .filter_map(|a| {
            let peak = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let last = a.iter().rposition(|v| v.abs() > 1e-13 * peak)?;
            let from = (last + 1) / 2;
            let pts: Vec<(f64, f64)> = (from..=last)
                .filter(|&k| a[k] != 0.0)
                .map(|k| (((k + 1) as f64).ln(), a[k].abs().ln()))
                .collect();
            if pts.len() < 4 {
                return None;
            }
            let n = pts.len() as f64;
            let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
            let (mx, my) = (sx / n, sy / n);
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            Some(sxy / sxx)
        })
        .reduce(f64::max)
}

/// Classifies how a branch ended, from its last converged point.
pub fn limiting_estimate(branch: &Branch, th: &LimitingThresholds) -> Result<LimitingEstimate> {
    let point = branch
        .points
        .last()
        .cloned()
        .ok_or_else(|| Error::Config("empty branch".into()))?;
    let slope = tail_slope(&point.coeffs, branch.problem.shape.curves());
    let kind = if matches!(branch.termination, Termination::MaxPoints | Termination::OmegaWindow) {
        LimitingKind::Inconclusive
    } else if point.gap_boundaries.is_some_and(|g| g < th.contact_gap) {
        LimitingKind::InnerOuterContact
    } else if point.gap_unit_circle < th.contact_gap {
        LimitingKind::BoundaryTouching
    } else if slope.is_some_and(|s| s > th.corner_slope) {
        LimitingKind::CornerForming
    } else {
        LimitingKind::Inconclusive
    };
    Ok(LimitingEstimate { point, kind, tail_slope: slope })
}

/// Converges every crossing of `omega` on `grid` with Newton at fixed Ω and
/// returns the distinct roots.
pub fn states_at_omega(
    branch: &Branch,
    omega: f64,
    grid: &SpectralGrid,
    cfg: &NewtonConfig,
    distinct: f64,
) -> Result<Vec<(Vec<f64>, NewtonReport)>> {
    let p = branch.problem.with_omega(omega);
    let curves = p.shape.curves();
    let len = p.unknowns(grid)?;
    let mut out: Vec<(Vec<f64>, NewtonReport)> = Vec::new();
    for (guess, _) in branch.crossings(omega) {
        let guess = if guess.len() <= len { pad(&guess, curves, len) } else { truncate(&guess, curves, len) };
        let Ok((x, r)) = newton_solve(&p, &guess, grid, cfg) else { continue };
        if !r.converged || r.trivial {
            continue;
        }
        let dist = |y: &[f64]| y.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if out.iter().all(|(y, _)| dist(y) > distinct) {
            out.push((x, r));
        }
    }
    Ok(out)
}

fn truncate(x: &[f64], curves: usize, len: usize) -> Vec<f64> {
    let per = x.len() / curves;
    let keep = len / curves;
    x.chunks(per).flat_map(|c| c[..keep].to_vec()).collect()
}
