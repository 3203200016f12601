//! Residual of the V-state boundary equation in the disc,
//!
//! ```text
//! Re{ (2Ω z̄ + (1/2πi)∮ (z̄-ζ̄)/(z-ζ) dζ - (1/2πi)∮ |ζ|²/(1-zζ) dζ) z_θ } = 0,
//! ```
//!
//! evaluated at grid nodes with the N-point trapezoidal rule, and its
//! projection onto `sin(m k θ)`. For doubly-connected patches the outer
//! boundary contributes with sign `+` and the inner one with sign `-`, both
//! parameterized counterclockwise.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{min_separation, FourierContour, SampledCurve, SpectralGrid};
use crate::{spectra, Error, Result};

/// Distance kept between every boundary node and the unit circle.
pub const DISC_MARGIN: f64 = 1e-12;

/// Sine coefficients of a residual plus its node sup-norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualSpectrum {
    pub fold: usize,
    pub coeffs: Vec<f64>,
    pub sup_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    SimplyConnected { b: f64 },
    DoublyConnected { b1: f64, b2: f64 },
}

impl Shape {
    pub fn simply(b: f64) -> Result<Self> {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::Precondition(format!("radius b = {b} not in (0, 1)")));
        }
        Ok(Shape::SimplyConnected { b })
    }

    pub fn doubly(b1: f64, b2: f64) -> Result<Self> {
        spectra::check_radii(b1, b2)?;
        Ok(Shape::DoublyConnected { b1, b2 })
    }

    /// Number of boundary curves.
    pub fn curves(&self) -> usize {
        match self {
            Shape::SimplyConnected { .. } => 1,
            Shape::DoublyConnected { .. } => 2,
        }
    }

    /// Mean radii, outer first.
    pub fn radii(&self) -> Vec<f64> {
        match *self {
            Shape::SimplyConnected { b } => vec![b],
            Shape::DoublyConnected { b1, b2 } => vec![b1, b2],
        }
    }
}

/// A V-state problem: the trivial patch, the symmetry and the angular velocity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub shape: Shape,
    pub fold: usize,
    pub omega: f64,
}

impl Problem {
    pub fn simply_connected(b: f64, fold: usize, omega: f64) -> Result<Self> {
        Self::new(Shape::simply(b)?, fold, omega)
    }

    pub fn doubly_connected(b1: f64, b2: f64, fold: usize, omega: f64) -> Result<Self> {
        Self::new(Shape::doubly(b1, b2)?, fold, omega)
    }

    pub fn new(shape: Shape, fold: usize, omega: f64) -> Result<Self> {
        if fold == 0 {
            return Err(Error::Precondition("fold must be at least 1".into()));
        }
        if !omega.is_finite() {
            return Err(Error::Precondition("angular velocity must be finite".into()));
        }
        Ok(Self { shape, fold, omega })
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        Self { omega, ..*self }
    }

    /// `λ = 1 - 2Ω`.
    pub fn lambda(&self) -> f64 {
        spectra::lambda_from_omega(self.omega)
    }

    /// Modes per curve resolved by `grid`.
    pub fn modes(&self, grid: &SpectralGrid) -> Result<usize> {
        reduced_len(grid, self.fold)
    }

    /// Length of the unknown vector on `grid`.
    pub fn unknowns(&self, grid: &SpectralGrid) -> Result<usize> {
        Ok(self.modes(grid)? * self.shape.curves())
    }

    /// Splits a stacked coefficient vector into contours, outer first.
    pub fn contours(&self, unknowns: &[f64]) -> Result<Vec<FourierContour>> {
        let radii = self.shape.radii();
        if unknowns.is_empty() || unknowns.len() % radii.len() != 0 {
            return Err(Error::Config(format!(
                "unknown vector of length {} does not split into {} curves",
                unknowns.len(),
                radii.len()
            )));
        }
        let m = unknowns.len() / radii.len();
        radii
            .iter()
            .zip(unknowns.chunks(m))
            .map(|(&b, a)| FourierContour::new(b, self.fold, a.to_vec()))
            .collect()
    }
}

/// `L - 1` with `L = N / (2m)`: the number of nodes strictly inside the
/// half period `(0, π/m)`, which equals the mode count `⌊(N-1)/(2m)⌋`.
pub(crate) fn reduced_len(grid: &SpectralGrid, m: usize) -> Result<usize> {
    let n = grid.len();
    if m == 0 || n % (2 * m) != 0 || n / (2 * m) < 2 {
        return Err(Error::Config(format!("grid size {n} must be a multiple of 2m = {} with N/(2m) >= 2", 2 * m)));
    }
    Ok(n / (2 * m) - 1)
}

/// Boundary samples in the layout used by the quadrature loops.
struct Sources {
    x: Vec<f64>,
    y: Vec<f64>,
    dx: Vec<f64>,
    dy: Vec<f64>,
    abs2: Vec<f64>,
}

impl Sources {
    fn new(s: &SampledCurve) -> Self {
        Self {
            x: s.z.iter().map(|z| z.re).collect(),
            y: s.z.iter().map(|z| z.im).collect(),
            dx: s.dz.iter().map(|z| z.re).collect(),
            dy: s.dz.iter().map(|z| z.im).collect(),
            abs2: s.z.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    fn len(&self) -> usize {
        self.x.len()
    }

    /// Trapezoidal sums `Σ_j conj(z-ζ_j)/(z-ζ_j) ζ'_j` and
    /// `Σ_j |ζ_j|²/(1-zζ_j) ζ'_j`. When `own` holds the index and tangent of
    /// a node of this same curve, that node's term of the first sum is
    /// replaced by its diagonal limit `conj(z_θ)`.
    fn sums(&self, z: Complex64, own: Option<(usize, Complex64)>) -> (Complex64, Complex64) {
        let (tx, ty) = (z.re, z.im);
        let mut s1 = (0.0, 0.0);
        let mut s2 = (0.0, 0.0);
        let skip = own.map(|(i, _)| i);
        let cauchy = |j: usize, s1: &mut (f64, f64)| {
            let ex = tx - self.x[j];
            let ey = ty - self.y[j];
            let inv = 1.0 / (ex * ex + ey * ey);
            let kr = (ex * ex - ey * ey) * inv;
            let ki = -2.0 * ex * ey * inv;
            s1.0 += kr * self.dx[j] - ki * self.dy[j];
            s1.1 += kr * self.dy[j] + ki * self.dx[j];
        };
        match skip {
            Some(i) => {
                for j in 0..i {
                    cauchy(j, &mut s1);
                }
                for j in i + 1..self.len() {
                    cauchy(j, &mut s1);
                }
            }
            None => {
                for j in 0..self.len() {
                    cauchy(j, &mut s1);
                }
            }
        }
        for j in 0..self.len() {
            let wr = 1.0 - (tx * self.x[j] - ty * self.y[j]);
            let wi = -(tx * self.y[j] + ty * self.x[j]);
            let f = self.abs2[j] / (wr * wr + wi * wi);
            let kr = wr * f;
            let ki = -wi * f;
            s2.0 += kr * self.dx[j] - ki * self.dy[j];
            s2.1 += kr * self.dy[j] + ki * self.dx[j];
        }
        let mut s1 = Complex64::new(s1.0, s1.1);
        if let Some((_, dz)) = own {
            s1 += dz.conj();
        }
        (s1, Complex64::new(s2.0, s2.1))
    }
}

/// Samples all boundaries and enforces the node-level geometry checks:
/// positive radius, strictly inside the disc, inner below outer.
fn sample_checked(contours: &[FourierContour], grid: &SpectralGrid) -> Result<Vec<SampledCurve>> {
    let mut radii = Vec::with_capacity(contours.len());
    for c in contours {
        let r = c.sampled_radii(grid)?;
        if let Some((i, &ri)) = r.iter().enumerate().find(|(_, &ri)| ri >= 1.0 - DISC_MARGIN) {
            return Err(Error::Domain(format!(
                "node {i} at radius {ri} is not strictly inside the unit disc"
            )));
        }
        radii.push(r);
    }
    if radii.len() == 2 {
        if let Some(i) = (0..grid.len()).find(|&i| radii[1][i] >= radii[0][i]) {
            return Err(Error::Geometry(format!(
                "inner boundary reaches the outer one at node {i} (r2 = {}, r1 = {})",
                radii[1][i], radii[0][i]
            )));
        }
    }
    contours.iter().map(|c| c.sample(grid)).collect()
}

/// Residual at one target node `i` of curve `t`.
fn node_residual(
    samples: &[SampledCurve],
    sources: &[Sources],
    t: usize,
    i: usize,
    omega: f64,
) -> f64 {
    let n = sources[0].len() as f64;
    let z = samples[t].z[i];
    let dz = samples[t].dz[i];
    let mut bracket = 2.0 * omega * z.conj();
    for (s, src) in sources.iter().enumerate() {
        let own = (s == t).then_some((i, dz));
        let (s1, s2) = src.sums(z, own);
        // (1/2πi) ∫ ... dφ ≈ (1/(iN)) Σ = -(i/N) Σ
        let sign = if s == 0 { 1.0 } else { -1.0 };
        bracket += Complex64::new(0.0, -sign / n) * (s1 - s2);
    }
    (bracket * dz).re
}

fn residual_all_nodes(contours: &[FourierContour], omega: f64, grid: &SpectralGrid) -> Result<Vec<Vec<f64>>> {
    let samples = sample_checked(contours, grid)?;
    let sources: Vec<Sources> = samples.iter().map(Sources::new).collect();
    Ok((0..samples.len())
        .map(|t| (0..grid.len()).map(|i| node_residual(&samples, &sources, t, i, omega)).collect())
        .collect())
}

/// Residual of a simply-connected patch at every node.
pub fn sc_residual_nodes(c: &FourierContour, omega: f64, grid: &SpectralGrid) -> Result<Vec<f64>> {
    Ok(residual_all_nodes(std::slice::from_ref(c), omega, grid)?.remove(0))
}

/// Residuals of the outer and inner boundaries of a doubly-connected patch.
pub fn dc_residual_nodes(
    outer: &FourierContour,
    inner: &FourierContour,
    omega: f64,
    grid: &SpectralGrid,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if outer.fold() != inner.fold() {
        return Err(Error::Config("both boundaries must share the fold".into()));
    }
    let contours = [outer.clone(), inner.clone()];
    // Node ordering is checked while sampling; between nodes use the true distance.
    sample_checked(&contours, grid)?;
    let gap = min_separation(outer, inner, grid);
    if gap <= 0.0 {
        return Err(Error::Geometry("boundaries touch".into()));
    }
    let mut r = residual_all_nodes(&contours, omega, grid)?;
    let inner_r = r.pop().unwrap_or_default();
    let outer_r = r.pop().unwrap_or_default();
    Ok((outer_r, inner_r))
}

/// Orthogonal projection onto `sin(m k θ)`, `k = 1..=modes`:
/// `b_k = (2/N) Σ_i v_i sin(m k θ_i)`.
pub fn sine_project(values: &[f64], m: usize, modes: usize) -> Result<ResidualSpectrum> {
    let grid = SpectralGrid::new(values.len())?;
    sine_project_on(values, m, modes, &grid)
}

pub fn sine_project_on(values: &[f64], m: usize, modes: usize, grid: &SpectralGrid) -> Result<ResidualSpectrum> {
    if values.len() != grid.len() {
        return Err(Error::Config(format!(
            "{} values for a grid of {} nodes",
            values.len(),
            grid.len()
        )));
    }
    grid.check_modes(m, modes)?;
    let n = grid.len();
    let coeffs = (1..=modes)
        .map(|k| {
            let step = (m * k) % n;
            2.0 / n as f64
                * values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * grid.sin_index(step * i % n))
                    .sum::<f64>()
        })
        .collect();
    let sup_norm = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    Ok(ResidualSpectrum { fold: m, coeffs, sup_norm })
}

/// Residual values at nodes `1..L` (`L = N/(2m)`), for each curve.
///
/// For x-axis symmetric m-fold contours the residual is odd and
/// `2π/m`-periodic, so these nodes determine it on the whole grid.
pub(crate) fn reduced_residuals(
    contours: &[FourierContour],
    omega: f64,
    grid: &SpectralGrid,
) -> Result<Vec<Vec<f64>>> {
    let m = contours[0].fold();
    let len = reduced_len(grid, m)?;
    let samples = sample_checked(contours, grid)?;
    let sources: Vec<Sources> = samples.iter().map(Sources::new).collect();
    Ok((0..samples.len())
        .map(|t| (1..=len).map(|i| node_residual(&samples, &sources, t, i, omega)).collect())
        .collect())
}

/// Residual derivative with respect to Ω at the reduced nodes:
/// `∂/∂Ω Re{2Ω z̄ z_θ} = 2 r r'`.
pub(crate) fn reduced_omega_derivative(contours: &[FourierContour], grid: &SpectralGrid) -> Vec<Vec<f64>> {
    contours
        .iter()
        .map(|c| {
            let len = grid.len() / (2 * c.fold()) - 1;
            (1..=len)
                .map(|i| {
                    let (r, dr) = grid.radius_at(c, i);
                    2.0 * r * dr
                })
                .collect()
        })
        .collect()
}

/// Sine coefficients from reduced node values; equal to
/// [`sine_project_on`] applied to the symmetric extension.
pub(crate) fn project_reduced(values: &[f64], m: usize, grid: &SpectralGrid) -> Vec<f64> {
    let n = grid.len();
    let scale = 4.0 * m as f64 / n as f64;
    (1..=values.len())
        .map(|k| {
            let step = (m * k) % n;
            scale
                * values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * grid.sin_index(step * (i + 1) % n))
                    .sum::<f64>()
        })
        .collect()
}

/// `max_i |Σ_k b_k sin(m k θ_i)|` over the grid nodes.
#[cfg(test)]
pub(crate) fn reconstructed_sup(coeffs: &[f64], m: usize, grid: &SpectralGrid) -> f64 {
    let n = grid.len();
    // By symmetry the nodes of one half period carry the maximum.
    (1..n / (2 * m))
        .map(|i| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, b)| b * grid.sin_index(m * (k + 1) * i % n))
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn sup(v: &[f64]) -> f64 {
        v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
    }

    #[test]
    fn circle_is_a_solution_for_any_omega() {
        let g = SpectralGrid::new(64).unwrap();
        for b in [0.1, 0.3, 0.5, 0.7, 0.9] {
            for omega in [-1.0, 0.0, 0.25, 1.0] {
                let c = FourierContour::circle(b, 1, 3).unwrap();
                let r = sc_residual_nodes(&c, omega, &g).unwrap();
                assert!(sup(&r) <= 1e-13, "b={b} Ω={omega}: {}", sup(&r));
            }
        }
    }

    #[test]
    fn annulus_is_a_solution() {
        let g = SpectralGrid::new(64).unwrap();
        let outer = FourierContour::circle(0.8, 2, 3).unwrap();
        let inner = FourierContour::circle(0.4, 2, 3).unwrap();
        let (r1, r2) = dc_residual_nodes(&outer, &inner, 0.3, &g).unwrap();
        assert!(sup(&r1) <= 1e-13 && sup(&r2) <= 1e-13);
    }

    #[test]
    fn node_outside_disc_is_rejected() {
        let g = SpectralGrid::new(32).unwrap();
        let c = FourierContour::new(0.95, 2, vec![0.06]).unwrap();
        assert!(matches!(sc_residual_nodes(&c, 0.3, &g), Err(Error::Domain(_))));
    }

    #[test]
    fn crossing_boundaries_are_rejected() {
        let g = SpectralGrid::new(32).unwrap();
        let outer = FourierContour::new(0.6, 2, vec![-0.15]).unwrap();
        let inner = FourierContour::new(0.5, 2, vec![0.1]).unwrap();
        assert!(matches!(dc_residual_nodes(&outer, &inner, 0.3, &g), Err(Error::Geometry(_))));
    }

    #[test]
    fn small_inner_boundary_recovers_simply_connected_residual() {
        // The inner curve's contributions scale like b2², so a vanishing
        // inner circle leaves the outer equation of the simply-connected patch.
        let g = SpectralGrid::new(96).unwrap();
        let outer = FourierContour::new(0.7, 3, vec![0.03, -0.004]).unwrap();
        let r0 = sc_residual_nodes(&outer, 0.31, &g).unwrap();
        let diff = |b2: f64| {
            let inner = FourierContour::circle(b2, 3, 2).unwrap();
            let (r1, _) = dc_residual_nodes(&outer, &inner, 0.31, &g).unwrap();
            r1.iter().zip(&r0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let (d4, d5) = (diff(1e-4), diff(1e-5));
        assert!(d4 <= 1e-8, "{d4}");
        assert!(d5 <= 1e-10, "{d5}");
        assert!((d4 / d5 - 100.0).abs() < 1.0, "{d4} {d5}");
    }

    #[test]
    fn sine_projection_examples() {
        let n = 48;
        let th = |i: usize| TAU * i as f64 / n as f64;
        let v: Vec<f64> = (0..n).map(|i| (3.0 * th(i)).sin()).collect();
        let s = sine_project(&v, 3, 7).unwrap();
        assert!((s.coeffs[0] - 1.0).abs() <= 1e-14);
        assert!(s.coeffs[1..].iter().all(|b| b.abs() <= 1e-14));

        let zero = sine_project(&vec![0.0; n], 3, 7).unwrap();
        assert!(zero.coeffs.iter().all(|&b| b == 0.0) && zero.sup_norm == 0.0);

        let v: Vec<f64> = (0..n).map(|i| 2.0 * (6.0 * th(i)).sin() - 0.5 * (12.0 * th(i)).sin()).collect();
        let s = sine_project(&v, 3, 7).unwrap();
        for (k, b) in s.coeffs.iter().enumerate() {
            let expect = match k {
                1 => 2.0,
                3 => -0.5,
                _ => 0.0,
            };
            assert!((b - expect).abs() <= 1e-14, "k={} {b}", k + 1);
        }
    }

    #[test]
    fn sine_projection_rejects_mismatch() {
        assert!(matches!(sine_project(&vec![0.0; 48], 3, 8), Err(Error::Config(_))));
        assert!(matches!(sine_project(&vec![0.0; 50], 3, 2), Err(Error::Config(_))));
    }

    fn wavy() -> FourierContour {
        FourierContour::new(0.6, 3, vec![0.04, -0.01, 0.003, 0.0005]).unwrap()
    }

    #[test]
    fn residual_is_odd_and_m_periodic() {
        let g = SpectralGrid::new(96).unwrap();
        let r = sc_residual_nodes(&wavy(), 0.33, &g).unwrap();
        let n = g.len();
        for i in 0..n {
            assert!((r[i] + r[(n - i) % n]).abs() <= 1e-13);
            assert!((r[(i + n / 3) % n] - r[i]).abs() <= 1e-13);
        }
    }

    #[test]
    fn spectral_convergence_in_n() {
        let g1 = SpectralGrid::new(96).unwrap();
        let g2 = SpectralGrid::new(192).unwrap();
        let r1 = sc_residual_nodes(&wavy(), 0.33, &g1).unwrap();
        let r2 = sc_residual_nodes(&wavy(), 0.33, &g2).unwrap();
        for i in 0..96 {
            assert!((r1[i] - r2[2 * i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn reduced_path_matches_full_projection() {
        let g = SpectralGrid::new(96).unwrap();
        let c = wavy();
        let full = sc_residual_nodes(&c, 0.33, &g).unwrap();
        let spec = sine_project_on(&full, 3, g.mode_count(3), &g).unwrap();
        let red = reduced_residuals(std::slice::from_ref(&c), 0.33, &g).unwrap();
        let b = project_reduced(&red[0], 3, &g);
        assert_eq!(b.len(), spec.coeffs.len());
        for (x, y) in b.iter().zip(&spec.coeffs) {
            assert!((x - y).abs() <= 1e-13);
        }
        let sup_nodes = sup(&full);
        assert!((reconstructed_sup(&b, 3, &g) - sup_nodes).abs() <= 1e-13);
    }

    #[test]
    fn omega_derivative_is_exact() {
        let g = SpectralGrid::new(96).unwrap();
        let c = wavy();
        let a = reduced_residuals(std::slice::from_ref(&c), 0.2, &g).unwrap();
        let b = reduced_residuals(std::slice::from_ref(&c), 0.7, &g).unwrap();
        let d = reduced_omega_derivative(std::slice::from_ref(&c), &g);
        for i in 0..a[0].len() {
            assert!(((b[0][i] - a[0][i]) / 0.5 - d[0][i]).abs() <= 1e-12);
        }
    }
}
