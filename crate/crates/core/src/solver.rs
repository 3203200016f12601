//! Newton iteration on the sine coefficients of the residual, with a
//! forward-difference Jacobian.
//!
//! The unknowns are the cosine coefficients of the boundary (outer curve
//! first for annular patches); the map returns the matching sine
//! coefficients of the residual. The circle (or annulus) is always a root.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::SpectralGrid;
use crate::residual::{project_reduced, reduced_residuals, Problem, Shape};
use crate::{spectra, Error, Result};

/// Coefficient norms below this mark a root as the trivial patch.
pub const TRIVIAL_NORM: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub fd_step: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Step halvings allowed when an iterate leaves the admissible region.
    pub max_halvings: usize,
    /// Condition estimate above which the Jacobian counts as singular.
    pub singular_threshold: f64,
    /// Rotate converged roots into the canonical sign convention.
    pub normalize: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self::simply_connected()
    }
}

impl NewtonConfig {
    pub fn simply_connected() -> Self {
        Self {
            fd_step: 1e-10,
            tol: 1e-13,
            max_iter: 50,
            max_halvings: 20,
            singular_threshold: 1e14,
            normalize: true,
        }
    }

    pub fn doubly_connected() -> Self {
        Self { fd_step: 1e-9, ..Self::simply_connected() }
    }

    pub fn for_problem(p: &Problem) -> Self {
        match p.shape {
            Shape::SimplyConnected { .. } => Self::simply_connected(),
            Shape::DoublyConnected { .. } => Self::doubly_connected(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fd_step > 0.0 && self.tol > 0.0 && self.max_iter >= 1 && self.singular_threshold > 0.0) {
            return Err(Error::Config(format!("invalid Newton settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub converged: bool,
    pub iterations: usize,
    pub final_sup_norm: f64,
    pub final_coeff_norm: f64,
    /// The root is the circle or annulus.
    pub trivial: bool,
    /// Residual sup-norm before each iteration and at the end.
    pub history: Vec<f64>,
    /// Largest condition estimate met along the way.
    pub condition: f64,
    pub halvings: usize,
    /// For annular patches: whether `a_{1,1}` and `a_{2,1}` have opposite signs.
    pub opposite_first_modes: Option<bool>,
}

/// Sine coefficients of the residual together with its node sup-norm.
pub(crate) fn evaluate(p: &Problem, unknowns: &[f64], grid: &SpectralGrid) -> Result<(Vec<f64>, f64)> {
    let expected = p.unknowns(grid)?;
    if unknowns.len() != expected {
        return Err(Error::Config(format!(
            "expected {expected} unknowns on a {}-node grid, got {}",
            grid.len(),
            unknowns.len()
        )));
    }
    if unknowns.iter().any(|a| !a.is_finite()) {
        return Err(Error::Precondition("non-finite coefficient".into()));
    }
    let contours = p.contours(unknowns)?;
    let values = reduced_residuals(&contours, p.omega, grid)?;
    // The sine series with this many modes interpolates the node values, so
    // its sup over the grid is the sup of the node residuals.
    let sup = values.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let f = values.iter().flat_map(|v| project_reduced(v, p.fold, grid)).collect();
    Ok((f, sup))
}

/// The discretized V-state map: stacked sine coefficients of the residuals.
pub fn assemble_f(p: &Problem, unknowns: &[f64], grid: &SpectralGrid) -> Result<Vec<f64>> {
    Ok(evaluate(p, unknowns, grid)?.0)
}

/// Forward-difference Jacobian, column `j = (F(x + h e_j) - F(x)) / h`.
pub fn fd_jacobian(p: &Problem, unknowns: &[f64], grid: &SpectralGrid, h: f64) -> Result<DMatrix<f64>> {
    let f0 = assemble_f(p, unknowns, grid)?;
    fd_jacobian_at(p, unknowns, &f0, grid, h)
}

pub(crate) fn fd_jacobian_at(
    p: &Problem,
    unknowns: &[f64],
    f0: &[f64],
    grid: &SpectralGrid,
    h: f64,
) -> Result<DMatrix<f64>> {
    if !(h > 0.0) {
        return Err(Error::Precondition(format!("difference step {h} must be positive")));
    }
    let n = unknowns.len();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut x = unknowns.to_vec();
            x[j] += h;
            let f = assemble_f(p, &x, grid)?;
            Ok(f.iter().zip(f0).map(|(a, b)| (a - b) / h).collect())
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(f0.len(), n, |i, j| columns[j][i]))
}

/// Ratio of the largest to the smallest pivot of an LU factorization.
pub(crate) fn pivot_condition(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let u = lu.u();
    let d = u.diagonal();
    let max = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = d.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// 2-norm condition number from the singular values.
pub fn condition_number(j: &DMatrix<f64>) -> f64 {
    let s = j.clone().svd(false, false).singular_values;
    let max = s.max();
    let min = s.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `J d = rhs`, failing when the pivots signal a singular system.
pub(crate) fn solve_linear(j: DMatrix<f64>, rhs: &[f64], threshold: f64) -> std::result::Result<(Vec<f64>, f64), f64> {
    let lu = j.lu();
    let cond = pivot_condition(&lu);
    if !(cond <= threshold) {
        return Err(cond);
    }
    match lu.solve(&DVector::from_column_slice(rhs)) {
        Some(d) if d.iter().all(|v| v.is_finite()) => Ok((d.as_slice().to_vec(), cond)),
        _ => Err(f64::INFINITY),
    }
}

/// The bifurcation velocity closest to `p.omega` among the resolved modes.
pub fn nearest_bifurcation(p: &Problem, modes: usize) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for k in 1..=modes.max(1) {
        let n = p.fold * k;
        let candidates: Vec<f64> = match p.shape {
            Shape::SimplyConnected { b } => spectra::sc_eigen(n, b).map(|(_, o)| vec![o]).unwrap_or_default(),
            Shape::DoublyConnected { b1, b2 } => spectra::dc_spectrum(n, b1, b2)
                .map(|s| [s.omega_plus, s.omega_minus].into_iter().flatten().collect())
                .unwrap_or_default(),
        };
        for o in candidates {
            if best.map_or(true, |(_, bo)| (o - p.omega).abs() < (bo - p.omega).abs()) {
                best = Some((n, o));
            }
        }
    }
    best
}

fn singular_error(p: &Problem, grid: &SpectralGrid, condition: f64) -> Error {
    let modes = p.modes(grid).unwrap_or(1);
    let hint = match nearest_bifurcation(p, modes) {
        Some((n, o)) => format!(
            "Ω = {} lies {:.3e} from the mode-{n} bifurcation point Ω = {o}",
            p.omega,
            (p.omega - o).abs()
        ),
        None => format!("Ω = {} may be a bifurcation or fold point", p.omega),
    };
    Error::Singular { condition, hint }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Rotation by `π/m`, which maps the coefficients `a_k` to `(-1)^k a_k` on
/// every curve. It is a symmetry of the problem and fixes the sign of the
/// first mode.
pub fn rotate_half_period(x: &mut [f64], curves: usize) {
    let per = x.len() / curves.max(1);
    for chunk in x.chunks_mut(per.max(1)) {
        for (k, a) in chunk.iter_mut().enumerate() {
            if k % 2 == 0 {
                *a = -*a;
            }
        }
    }
}

/// Applies the sign convention `a_1 > 0` (outer first mode for annular
/// patches). Returns whether the vector was rotated.
pub fn normalize_signs(p: &Problem, x: &mut [f64]) -> bool {
    if x.first().is_some_and(|&a| a < 0.0) {
        rotate_half_period(x, p.shape.curves());
        true
    } else {
        false
    }
}

/// For annular patches, whether the first modes of both curves have
/// opposite signs.
pub fn opposite_first_modes(p: &Problem, x: &[f64]) -> Option<bool> {
    (p.shape.curves() == 2).then(|| {
        let m = x.len() / 2;
        x[0] * x[m] < 0.0
    })
}

/// Plain Newton iteration `x ← x - J(x)^{-1} F(x)` with a fresh
/// forward-difference Jacobian every step.
///
/// Iterates that leave the admissible region are pulled back by halving the
/// step. Running out of iterations is reported through
/// [`NewtonReport::converged`], not as an error.
pub fn newton_solve(
    p: &Problem,
    initial: &[f64],
    grid: &SpectralGrid,
    cfg: &NewtonConfig,
) -> Result<(Vec<f64>, NewtonReport)> {
    cfg.validate()?;
    let mut x = initial.to_vec();
    let (mut f, mut sup) = evaluate(p, &x, grid)?;
    let mut history = vec![sup];
    let mut condition = 0.0f64;
    let mut halvings = 0;
    let mut iterations = 0;
    while !(sup < cfg.tol) && iterations < cfg.max_iter {
        let j = fd_jacobian_at(p, &x, &f, grid, cfg.fd_step)?;
        let (d, cond) = solve_linear(j, &f, cfg.singular_threshold).map_err(|c| singular_error(p, grid, c))?;
        condition = condition.max(cond);
        let mut t = 1.0;
        let mut tries = 0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a - t * b).collect();
            match evaluate(p, &trial, grid) {
                Ok((ft, st)) => {
                    x = trial;
                    f = ft;
                    sup = st;
                    break;
                }
                Err(e) if e.is_geometric() && tries < cfg.max_halvings => {
                    t *= 0.5;
                    tries += 1;
                    halvings += 1;
                }
                Err(e) => return Err(e),
            }
        }
        iterations += 1;
        history.push(sup);
        if !sup.is_finite() {
            break;
        }
    }
    let converged = sup < cfg.tol;
    if converged && cfg.normalize {
        normalize_signs(p, &mut x);
    }
    let coeff_norm = norm(&x);
    let report = NewtonReport {
        converged,
        iterations,
        final_sup_norm: sup,
        final_coeff_norm: coeff_norm,
        trivial: converged && coeff_norm < TRIVIAL_NORM,
        history,
        condition,
        halvings,
        opposite_first_modes: opposite_first_modes(p, &x),
    };
    Ok((x, report))
}
