//! Closed-form bifurcation spectrum of the disc and of the annulus.
//!
//! All formulas are written in `λ = 1 - 2Ω`. For the annulus the mode-n
//! linearization is the 2×2 matrix `M_n(λ)`; its determinant is, up to the
//! factor `n² b1 b2`, the quadratic `P_n(λ)` whose roots are `λ_n^±`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Discriminants with `|Δ|` at or below this are treated as a double root.
pub const DISCRIMINANT_FLOOR: f64 = 1e-15;

/// Default bisection tolerance.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Which root of `P_m` a doubly-connected branch bifurcates from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenBranch {
    Plus,
    Minus,
}

pub fn lambda_from_omega(omega: f64) -> f64 {
    1.0 - 2.0 * omega
}

pub fn omega_from_lambda(lambda: f64) -> f64 {
    0.5 * (1.0 - lambda)
}

/// `Ω^± = (1 - λ^∓)/2`: the larger angular velocity comes from the smaller
/// eigenvalue. Every conversion of an eigenvalue pair goes through here.
pub fn omega_pair(lambda_plus: f64, lambda_minus: f64) -> (f64, f64) {
    (omega_from_lambda(lambda_minus), omega_from_lambda(lambda_plus))
}

/// The eigenvalue an `Ω^±` bifurcation point comes from.
pub fn lambda_for_omega_branch(spec: &DcSpectrum, branch: EigenBranch) -> Option<f64> {
    match branch {
        EigenBranch::Plus => spec.lambda_minus,
        EigenBranch::Minus => spec.lambda_plus,
    }
}

pub(crate) fn check_radii(b1: f64, b2: f64) -> Result<()> {
    if !(b2 > 0.0 && b2 < b1 && b1 < 1.0) {
        return Err(Error::Precondition(format!(
            "radii must satisfy 0 < b2 < b1 < 1 (got b1 = {b1}, b2 = {b2})"
        )));
    }
    Ok(())
}

fn check_mode(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Precondition("mode index must be at least 1".into()));
    }
    Ok(())
}

/// `(λ_m, Ω_m)` for the disc of radius `b`: `λ_m = (1 - b^{2m})/m`,
/// `Ω_m = (m - 1 + b^{2m})/(2m)`.
pub fn sc_eigen(m: usize, b: f64) -> Result<(f64, f64)> {
    check_mode(m)?;
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::Precondition(format!("radius b = {b} not in (0, 1)")));
    }
    let mf = m as f64;
    let b2m = b.powi(2 * m as i32);
    let lambda = (1.0 - b2m) / mf;
    Ok((lambda, omega_from_lambda(lambda)))
}

/// The mode-n linearization matrix around the annulus `b2 < |z| < b1`.
pub fn dc_matrix(n: usize, lambda: f64, b1: f64, b2: f64) -> Result<[[f64; 2]; 2]> {
    check_mode(n)?;
    check_radii(b1, b2)?;
    Ok(dc_matrix_unchecked(n, lambda, b1, b2))
}

fn dc_matrix_unchecked(n: usize, lambda: f64, b1: f64, b2: f64) -> [[f64; 2]; 2] {
    let nf = n as f64;
    let e = n as i32;
    let b = b2 / b1;
    let coupling = b.powi(e) - (b1 * b2).powi(e);
    [
        [b1 * (nf * lambda - 1.0 + b1.powi(2 * e) - nf * b * b), b2 * coupling],
        [-b1 * coupling, b2 * (nf * lambda - nf + 1.0 - b2.powi(2 * e))],
    ]
}

/// `P_n(λ)`, the monic quadratic with `det M_n(λ) = n² b1 b2 P_n(λ)`, in its
/// expanded form.
pub fn characteristic(n: usize, lambda: f64, b1: f64, b2: f64) -> f64 {
    let nf = n as f64;
    let e = n as i32;
    let b = b2 / b1;
    let b_sq = b * b;
    let b2n = b.powi(2 * e);
    let s1 = b1.powi(2 * e);
    let s2 = b2.powi(2 * e);
    lambda * lambda - (1.0 + b_sq - (s1 - s2) / nf) * lambda + b_sq - (1.0 - b2n) / (nf * nf)
        + (1.0 - b_sq) / nf
        - (s1 - s2 * b_sq) / nf
        + (s1 - s2) / (nf * nf)
}

/// Factors `(A, B)` of the reduced discriminant `Δ_n = A² - B²`.
fn discriminant_factors(n: usize, b1: f64, b2: f64) -> (f64, f64) {
    let nf = n as f64;
    let e = n as i32;
    let b = b2 / b1;
    let s1 = b1.powi(2 * e);
    let s2 = b2.powi(2 * e);
    let a = 0.5 * (1.0 - b * b) - (2.0 - s2 - s1) / (2.0 * nf);
    let bb = b.powi(e) * (1.0 - s1) / nf;
    (a, bb)
}

/// `Δ_n`, evaluated as `(A - B)(A + B)`.
pub fn discriminant(n: usize, b1: f64, b2: f64) -> f64 {
    let (a, b) = discriminant_factors(n, b1, b2);
    (a - b) * (a + b)
}

/// Mode condition `g_x(b1, b2) = (2 + 2b^x - (b1^x + b2^x)²)/(1 - b²)`;
/// for `m ≥ 2`, `Δ_m ≥ 0` iff `m ≥ g_m`.
pub fn mode_threshold(m: usize, b1: f64, b2: f64) -> f64 {
    let e = m as i32;
    let b = b2 / b1;
    (2.0 + 2.0 * b.powi(e) - (b1.powi(e) + b2.powi(e)).powi(2)) / (1.0 - b * b)
}

/// Eigenvalue data of mode `n` around the annulus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcSpectrum {
    pub n: usize,
    pub b1: f64,
    pub b2: f64,
    pub discriminant: f64,
    pub lambda_plus: Option<f64>,
    pub lambda_minus: Option<f64>,
    pub omega_plus: Option<f64>,
    pub omega_minus: Option<f64>,
}

impl DcSpectrum {
    pub fn has_real_eigenvalues(&self) -> bool {
        self.lambda_plus.is_some()
    }

    pub fn omega(&self, branch: EigenBranch) -> Option<f64> {
        match branch {
            EigenBranch::Plus => self.omega_plus,
            EigenBranch::Minus => self.omega_minus,
        }
    }
}

pub fn dc_spectrum(n: usize, b1: f64, b2: f64) -> Result<DcSpectrum> {
    check_mode(n)?;
    check_radii(b1, b2)?;
    Ok(dc_spectrum_unchecked(n, b1, b2))
}

fn dc_spectrum_unchecked(n: usize, b1: f64, b2: f64) -> DcSpectrum {
    let nf = n as f64;
    let e = n as i32;
    let b = b2 / b1;
    let mut delta = discriminant(n, b1, b2);
    if delta.abs() <= DISCRIMINANT_FLOOR {
        delta = 0.0;
    }
    let center = 0.5 * (1.0 + b * b) - (b1.powi(2 * e) - b2.powi(2 * e)) / (2.0 * nf);
    let (lambda_plus, lambda_minus, omega_plus, omega_minus) = if delta >= 0.0 {
        let root = delta.sqrt();
        let (lp, lm) = (center + root, center - root);
        let (op, om) = omega_pair(lp, lm);
        (Some(lp), Some(lm), Some(op), Some(om))
    } else {
        (None, None, None, None)
    };
    DcSpectrum { n, b1, b2, discriminant: delta, lambda_plus, lambda_minus, omega_plus, omega_minus }
}

/// The 1-fold eigenvalues `λ_1^- = (b2/b1)²`, `λ_1^+ = 1 + b2² - b1²` and
/// the bifurcation velocity `Ω_1 = (b1² - b2²)/2` of `λ_1^+`.
pub fn onefold_eigen(b1: f64, b2: f64) -> Result<(f64, f64, f64)> {
    check_radii(b1, b2)?;
    let minus = (b2 / b1).powi(2);
    let plus = 1.0 + b2 * b2 - b1 * b1;
    Ok((minus, plus, 0.5 * (b1 * b1 - b2 * b2)))
}

/// `h(x) = m(1 - (x/b1)²) - 2 - 2(x/b1)^m + (b1^m + x^m)²`, strictly
/// decreasing on `[0, b1]`; its zero is the fold radius `b_m^⋆`.
fn fold_function(m: usize, b1: f64, x: f64) -> f64 {
    let mf = m as f64;
    let e = m as i32;
    let t = x / b1;
    mf * (1.0 - t * t) - 2.0 - 2.0 * t.powi(e) + (b1.powi(e) + x.powi(e)).powi(2)
}

/// Bisection for a sign change of `f` on `[lo, hi]` with `f(lo) > 0 ≥ f(hi)`.
/// Returns the final bracket.
fn bisect_decreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Largest inner radius `b_m^⋆ < b1` at which mode `m ≥ 2` still bifurcates.
///
/// The returned value is the admissible end of the final bracket, so
/// `Δ_m(b1, b_m^⋆) ≥ 0` up to roundoff.
pub fn b_star(m: usize, b1: f64, tol: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::Precondition(format!("fold radius needs m >= 2, got {m}")));
    }
    if !(b1 > 0.0 && b1 < 1.0) {
        return Err(Error::Precondition(format!("outer radius {b1} not in (0, 1)")));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let (lo, _) = bisect_decreasing(|x| fold_function(m, b1, x), 0.0, b1, tol);
    Ok(lo)
}

/// `α` solving `e^{-α} + 1 = α`, the large-m rate `b_m^⋆ ≈ b1(1 - α/m)`.
pub fn fold_rate(tol: f64) -> f64 {
    let (lo, hi) = bisect_decreasing(|a| (-a).exp() + 1.0 - a, 1.0, 2.0, tol);
    0.5 * (lo + hi)
}

/// Inner radii `x_n` where the 1-fold curve `λ_1^+(b2)` meets the mode-n
/// curves, for `2 ≤ n ≤ n_max`. Modes with `n < b1^{-2}` never meet it and
/// are omitted.
pub fn onefold_intersections(b1: f64, n_max: usize) -> Result<Vec<(usize, f64)>> {
    if n_max < 2 {
        return Err(Error::Precondition(format!("n_max must be at least 2, got {n_max}")));
    }
    if !(b1 > 0.0 && b1 < 1.0) {
        return Err(Error::Precondition(format!("outer radius {b1} not in (0, 1)")));
    }
    let mut out = Vec::new();
    for n in 2..=n_max {
        if (n as f64) * b1 * b1 < 1.0 {
            continue;
        }
        let star = b_star(n, b1, 1e-15)?;
        // g(x) = P_n(λ_1^+(x)) is ≤ 0 at x = 0 and ≥ 0 at x = b_n^⋆.
        let g = |x: f64| characteristic(n, 1.0 + x * x - b1 * b1, b1, x);
        let (lo, hi) = (0.0, star);
        if g(lo) > 0.0 {
            continue;
        }
        if g(hi) < 0.0 {
            continue;
        }
        let (a, b) = bisect_decreasing(|x| -g(x), lo, hi, 1e-15);
        out.push((n, 0.5 * (a + b)));
    }
    Ok(out)
}

/// The nearest exceptional radius of the 1-fold bifurcation, when `b2` lies
/// within `tol` of it.
pub fn near_exceptional(b1: f64, b2: f64, n_max: usize, tol: f64) -> Result<Option<(usize, f64)>> {
    Ok(onefold_intersections(b1, n_max)?
        .into_iter()
        .filter(|(_, x)| (x - b2).abs() < tol)
        .min_by(|a, b| (a.1 - b2).abs().total_cmp(&(b.1 - b2).abs())))
}

/// Unit generator of `ker M_m(λ_m^±)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelVector {
    pub components: [f64; 2],
    pub mode: usize,
    pub lambda: f64,
}

/// Kernel vector at the eigenvalue `λ_m^±` (note: `Ω_m^+` corresponds to
/// `λ_m^-`; this function indexes by eigenvalue).
pub fn kernel_vector(m: usize, branch: EigenBranch, b1: f64, b2: f64) -> Result<KernelVector> {
    let spec = dc_spectrum(m, b1, b2)?;
    let lambda = match branch {
        EigenBranch::Plus => spec.lambda_plus,
        EigenBranch::Minus => spec.lambda_minus,
    }
    .ok_or_else(|| {
        Error::NoBifurcation(format!(
            "Δ_{m}({b1}, {b2}) = {:.3e} < 0: no real eigenvalue",
            spec.discriminant
        ))
    })?;
    Ok(kernel_at(m, lambda, b1, b2))
}

pub(crate) fn kernel_at(m: usize, lambda: f64, b1: f64, b2: f64) -> KernelVector {
    // Each diagonal entry nearly vanishes at one of the two eigenvalues, so
    // take the null vector of the row whose diagonal is the larger.
    let [[a11, a12], [a21, a22]] = dc_matrix_unchecked(m, lambda, b1, b2);
    let (v1, v2) = if a11.abs() >= a22.abs() { (a12, -a11) } else { (a22, -a21) };
    let norm = v1.hypot(v2);
    let (mut v1, mut v2) = (v1 / norm, v2 / norm);
    let first = if v1 != 0.0 { v1 } else { v2 };
    if first < 0.0 {
        v1 = -v1;
        v2 = -v2;
    }
    KernelVector { components: [v1, v2], mode: m, lambda }
}

/// Transversality of the mode-m bifurcation, `m > g_m(b1, b2)`, i.e. a
/// simple eigenvalue (`Δ_m > 0`).
pub fn transversality_ok(m: usize, b1: f64, b2: f64) -> Result<bool> {
    if m < 2 {
        return Err(Error::Precondition(format!("transversality test needs m >= 2, got {m}")));
    }
    check_radii(b1, b2)?;
    Ok(dc_spectrum_unchecked(m, b1, b2).discriminant > 0.0)
}

/// Samples `λ_m^±(b2)` on `[0, b_m^⋆]` for a fixed outer radius. Rows with
/// `b2 = 0` use the limiting spectrum of the disc of radius `b1` with an
/// infinitesimal hole.
pub fn eigen_curve(m: usize, b1: f64, samples: usize) -> Result<Vec<(f64, f64, f64)>> {
    let star = if m >= 2 { b_star(m, b1, 1e-15)? } else { b1 * (1.0 - 1e-9) };
    let samples = samples.max(2);
    Ok((0..samples)
        .filter_map(|i| {
            let b2 = star * i as f64 / (samples - 1) as f64;
            let s = dc_spectrum_unchecked(m, b1, b2);
            Some((b2, s.lambda_minus?, s.lambda_plus?))
        })
        .collect())
}
