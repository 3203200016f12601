//! m-fold symmetric boundaries `z(θ) = e^{iθ}[b + Σ a_k cos(m k θ)]`.
//!
//! The Lagrangian angle θ doubles as the polar angle, so every admissible
//! contour is a polar graph `r(θ) = b + Σ a_k cos(m k θ)` with `r > 0`.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Boundary of an m-fold symmetric patch, reflection-symmetric about the
/// real axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawContour", into = "RawContour")]
pub struct FourierContour {
    b: f64,
    m: usize,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawContour {
    b: f64,
    m: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<RawContour> for FourierContour {
    type Error = Error;

    fn try_from(raw: RawContour) -> Result<Self> {
        FourierContour::new(raw.b, raw.m, raw.coeffs)
    }
}

impl From<FourierContour> for RawContour {
    fn from(c: FourierContour) -> Self {
        RawContour { b: c.b, m: c.m, coeffs: c.coeffs }
    }
}

impl FourierContour {
    pub fn new(b: f64, m: usize, coeffs: Vec<f64>) -> Result<Self> {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::Precondition(format!("mean radius {b} not in (0, 1)")));
        }
        if m == 0 {
            return Err(Error::Precondition("fold must be at least 1".into()));
        }
        if coeffs.is_empty() {
            return Err(Error::Precondition("at least one Fourier coefficient is required".into()));
        }
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::Precondition("non-finite Fourier coefficient".into()));
        }
        Ok(Self { b, m, coeffs })
    }

    /// The circle of radius `b`, carrying `len` zero coefficients.
    pub fn circle(b: f64, m: usize, len: usize) -> Result<Self> {
        Self::new(b, m, vec![0.0; len.max(1)])
    }

    pub fn mean_radius(&self) -> f64 {
        self.b
    }

    pub fn fold(&self) -> usize {
        self.m
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn mode_count(&self) -> usize {
        self.coeffs.len()
    }

    /// Same mean radius and fold, new coefficients.
    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(self.b, self.m, coeffs)
    }

    /// Polar radius `r(θ)`.
    pub fn radius(&self, theta: f64) -> f64 {
        let m = self.m as f64;
        self.b
            + self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a * (m * (k + 1) as f64 * theta).cos())
                .sum::<f64>()
    }

    /// `dr/dθ`.
    pub fn radius_derivative(&self, theta: f64) -> f64 {
        let m = self.m as f64;
        -self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let n = m * (k + 1) as f64;
                a * n * (n * theta).sin()
            })
            .sum::<f64>()
    }

    /// `z(θ)`.
    pub fn eval(&self, theta: f64) -> Complex64 {
        Complex64::from_polar(self.radius(theta), theta)
    }

    /// `z_θ(θ) = e^{iθ}(i r + r')`, the exact derivative.
    pub fn tangent(&self, theta: f64) -> Complex64 {
        let r = self.radius(theta);
        let dr = self.radius_derivative(theta);
        Complex64::from_polar(1.0, theta) * Complex64::new(dr, r)
    }

    /// Boundary and tangent at every grid node.
    pub fn sample(&self, grid: &SpectralGrid) -> Result<SampledCurve> {
        grid.check_fold(self.m)?;
        let n = grid.len();
        let mut z = Vec::with_capacity(n);
        let mut dz = Vec::with_capacity(n);
        for i in 0..n {
            let (r, dr) = grid.radius_at(self, i);
            let e = grid.unit(i);
            z.push(e * r);
            dz.push(e * Complex64::new(dr, r));
        }
        Ok(SampledCurve { z, dz })
    }

    /// Polar radii at the grid nodes; errors if any is non-positive.
    pub fn sampled_radii(&self, grid: &SpectralGrid) -> Result<Vec<f64>> {
        grid.check_fold(self.m)?;
        let radii: Vec<f64> = (0..grid.len()).map(|i| grid.radius_at(self, i).0).collect();
        if let Some(i) = radii.iter().position(|&r| r <= 0.0) {
            return Err(Error::Degenerate(format!(
                "radius {} <= 0 at node {i}; the curve passes through the origin",
                radii[i]
            )));
        }
        Ok(radii)
    }

    /// `1 - max r` over the grid nodes.
    pub fn gap_to_unit_circle(&self, grid: &SpectralGrid) -> Result<f64> {
        grid.check_fold(self.m)?;
        let max_r = (0..grid.len()).map(|i| grid.radius_at(self, i).0).fold(f64::MIN, f64::max);
        Ok(1.0 - max_r)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Boundary values and tangents on a grid.
#[derive(Clone, Debug)]
pub struct SampledCurve {
    pub z: Vec<Complex64>,
    pub dz: Vec<Complex64>,
}

/// Equispaced nodes `θ_i = 2πi/N` with precomputed trigonometric tables.
#[derive(Clone, Debug)]
pub struct SpectralGrid {
    n: usize,
    cos: Arc<[f64]>,
    sin: Arc<[f64]>,
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl SpectralGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::Config(format!("grid needs at least 4 nodes, got {n}")));
        }
        let (cos, sin): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|l| {
                let t = Self::angle(l, n);
                (t.cos(), t.sin())
            })
            .unzip();
        Ok(Self { n, cos: cos.into(), sin: sin.into() })
    }

    /// `N = m 2^r`, the sizing used throughout the numerics.
    pub fn for_fold(m: usize, r: u32) -> Result<Self> {
        if r < 2 {
            return Err(Error::Config(format!("N = m 2^r needs r >= 2, got r = {r}")));
        }
        Self::new(m * (1usize << r))
    }

    fn angle(l: usize, n: usize) -> f64 {
        TAU * l as f64 / n as f64
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn theta(&self, i: usize) -> f64 {
        Self::angle(i, self.n)
    }

    /// `cos(2π l / N)` for any integer `l`.
    #[inline]
    pub fn cos_index(&self, l: usize) -> f64 {
        self.cos[l % self.n]
    }

    /// `sin(2π l / N)` for any integer `l`.
    #[inline]
    pub fn sin_index(&self, l: usize) -> f64 {
        self.sin[l % self.n]
    }

    #[inline]
    pub fn unit(&self, i: usize) -> Complex64 {
        Complex64::new(self.cos_index(i), self.sin_index(i))
    }

    /// Number of sine/cosine modes the grid resolves for fold `m`:
    /// `⌊(N - 1) / (2m)⌋`.
    pub fn mode_count(&self, m: usize) -> usize {
        (self.n - 1) / (2 * m)
    }

    pub fn check_fold(&self, m: usize) -> Result<()> {
        if m == 0 || self.n % m != 0 {
            return Err(Error::Config(format!("grid size {} is not a multiple of m = {m}", self.n)));
        }
        Ok(())
    }

    /// Checks `N ≥ 2mM + 1` and `N` a multiple of `m`.
    pub fn check_modes(&self, m: usize, modes: usize) -> Result<()> {
        self.check_fold(m)?;
        if self.n < 2 * m * modes + 1 {
            return Err(Error::Config(format!(
                "grid size {} below the sampling bound 2mM+1 = {}",
                self.n,
                2 * m * modes + 1
            )));
        }
        Ok(())
    }

    /// `(r, dr/dθ)` at node `i`, using exact index arithmetic on the tables.
    pub(crate) fn radius_at(&self, c: &FourierContour, i: usize) -> (f64, f64) {
        let step = (c.m * i) % self.n;
        let mut r = c.b;
        let mut dr = 0.0;
        let mut l = 0usize;
        for (k, a) in c.coeffs.iter().enumerate() {
            l = (l + step) % self.n;
            r += a * self.cos[l];
            dr -= a * (c.m * (k + 1)) as f64 * self.sin[l];
        }
        (r, dr)
    }
}

/// Minimum distance between two boundaries: a node-pair search followed by
/// alternating golden-section refinement over θ on each curve.
pub fn min_separation(c1: &FourierContour, c2: &FourierContour, grid: &SpectralGrid) -> f64 {
    let n = grid.len();
    let p1: Vec<Complex64> = (0..n).map(|i| c1.eval(grid.theta(i))).collect();
    let p2: Vec<Complex64> = (0..n).map(|i| c2.eval(grid.theta(i))).collect();
    let mut best = (f64::INFINITY, 0, 0);
    for (i, a) in p1.iter().enumerate() {
        for (j, b) in p2.iter().enumerate() {
            let d = (a - b).norm_sqr();
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    let h = TAU / n as f64;
    let mut t1 = grid.theta(best.1);
    let mut t2 = grid.theta(best.2);
    let mut dist = best.0.sqrt();
    for _ in 0..50 {
        let p = c2.eval(t2);
        t1 = golden_min(|t| (c1.eval(t) - p).norm(), t1 - h, t1 + h, 1e-12);
        let q = c1.eval(t1);
        t2 = golden_min(|t| (c2.eval(t) - q).norm(), t2 - h, t2 + h, 1e-12);
        let next = (c1.eval(t1) - c2.eval(t2)).norm();
        let done = (dist - next).abs() <= 1e-14;
        dist = dist.min(next);
        if done {
            break;
        }
    }
    dist
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Enclosed area `½ ∮ (x dy − y dx) = ½ ∫ r² dθ`, by the trapezoidal rule.
pub fn enclosed_area(c: &FourierContour, grid: &SpectralGrid) -> f64 {
    let n = grid.len();
    let sum: f64 = (0..n)
        .map(|i| {
            let z = c.eval(grid.theta(i));
            let dz = c.tangent(grid.theta(i));
            (z.conj() * dz).im
        })
        .sum();
    0.5 * sum * TAU / n as f64
}

/// Area of a closed polygon of Lagrangian nodes, spectrally accurate for
/// smooth periodic node sets.
pub fn polygon_area(z: &[Complex64], dz: &[Complex64]) -> f64 {
    let n = z.len() as f64;
    0.5 * z.iter().zip(dz).map(|(z, dz)| (z.conj() * dz).im).sum::<f64>() * TAU / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(b: f64, m: usize, a: &[f64]) -> FourierContour {
        FourierContour::new(b, m, a.to_vec()).unwrap()
    }

    #[test]
    fn eval_examples() {
        let z = c(0.5, 1, &[0.0]).eval(PI / 2.0);
        assert_abs_diff_eq!(z.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z.im, 0.5, epsilon = 1e-15);

        let z = c(0.5, 3, &[0.1]).eval(0.0);
        assert_abs_diff_eq!(z.re, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-15);

        let z = c(0.8, 4, &[0.05]).eval(PI / 8.0);
        let expect = Complex64::from_polar(0.8, PI / 8.0);
        assert_abs_diff_eq!((z - expect).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn tangent_examples() {
        let circle = c(0.7, 2, &[0.0, 0.0]);
        for t in [0.0, 0.3, 2.0, 5.5] {
            let expect = Complex64::i() * 0.7 * Complex64::from_polar(1.0, t);
            assert_abs_diff_eq!((circle.tangent(t) - expect).norm(), 0.0, epsilon = 1e-15);
        }
        let dz = c(0.5, 3, &[0.1]).tangent(0.0);
        assert_abs_diff_eq!(dz.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dz.im, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(FourierContour::new(1.0, 2, vec![0.0]).is_err());
        assert!(FourierContour::new(0.0, 2, vec![0.0]).is_err());
        assert!(FourierContour::new(0.5, 0, vec![0.0]).is_err());
        assert!(FourierContour::new(0.5, 2, vec![]).is_err());
    }

    #[test]
    fn sample_circle_and_nesting() {
        let g = SpectralGrid::new(8).unwrap();
        let s = c(0.5, 1, &[0.0]).sample(&g).unwrap();
        for (i, z) in s.z.iter().enumerate() {
            let expect = Complex64::from_polar(0.5, TAU * i as f64 / 8.0);
            assert_abs_diff_eq!((z - expect).norm(), 0.0, epsilon = 1e-15);
        }

        let curve = c(0.6, 3, &[0.05, -0.02, 0.01]);
        let g1 = SpectralGrid::new(48).unwrap();
        let g2 = SpectralGrid::new(96).unwrap();
        let s1 = curve.sample(&g1).unwrap();
        let s2 = curve.sample(&g2).unwrap();
        for i in 0..48 {
            assert_eq!(s1.z[i], s2.z[2 * i]);
            assert_eq!(s1.dz[i], s2.dz[2 * i]);
        }
    }

    #[test]
    fn sample_matches_pointwise_eval() {
        let curve = c(0.6, 3, &[0.05, -0.02, 0.01]);
        let g = SpectralGrid::new(48).unwrap();
        let s = curve.sample(&g).unwrap();
        for i in 0..48 {
            assert_abs_diff_eq!((s.z[i] - curve.eval(g.theta(i))).norm(), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!((s.dz[i] - curve.tangent(g.theta(i))).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn sample_m_fold_rotation() {
        let curve = c(0.6, 3, &[0.05, -0.02, 0.01]);
        let g = SpectralGrid::new(24).unwrap();
        let s = curve.sample(&g).unwrap();
        let rot = Complex64::from_polar(1.0, TAU / 3.0);
        for i in 0..16 {
            assert_abs_diff_eq!((s.z[i + 8] - rot * s.z[i]).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn sample_rejects_grid_mismatch() {
        let g = SpectralGrid::new(10).unwrap();
        assert!(matches!(c(0.5, 3, &[0.0]).sample(&g), Err(Error::Config(_))));
    }

    #[test]
    fn degenerate_radius_detected() {
        let g = SpectralGrid::new(16).unwrap();
        let curve = c(0.2, 2, &[0.3]);
        assert!(matches!(curve.sampled_radii(&g), Err(Error::Degenerate(_))));
    }

    #[test]
    fn separation_examples() {
        let g = SpectralGrid::new(64).unwrap();
        let outer = c(0.8, 1, &[0.0]);
        let inner = c(0.3, 1, &[0.0]);
        assert_abs_diff_eq!(min_separation(&outer, &inner, &g), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c(0.35, 2, &[0.0]).gap_to_unit_circle(&g).unwrap(), 0.65, epsilon = 1e-15);
    }

    #[test]
    fn separation_against_dense_sampling() {
        // Two non-concentric curves: m = 1 coefficients translate the boundary.
        let g = SpectralGrid::new(64).unwrap();
        let a = c(0.7, 1, &[0.08, 0.01]);
        let b = c(0.4, 1, &[-0.09, 0.02]);
        let got = min_separation(&a, &b, &g);
        // Dense oracle: 1000 x 1000 pairs, then a finer local pass.
        let n = 1000;
        let pa: Vec<_> = (0..n).map(|i| a.eval(TAU * i as f64 / n as f64)).collect();
        let pb: Vec<_> = (0..n).map(|i| b.eval(TAU * i as f64 / n as f64)).collect();
        let mut best = (f64::INFINITY, 0, 0);
        for (i, x) in pa.iter().enumerate() {
            for (j, y) in pb.iter().enumerate() {
                let d = (x - y).norm();
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        let (t1, t2) = (TAU * best.1 as f64 / n as f64, TAU * best.2 as f64 / n as f64);
        let h = TAU / n as f64;
        let mut fine = f64::INFINITY;
        let k = 400;
        for i in 0..=k {
            let s1 = t1 - h + 2.0 * h * i as f64 / k as f64;
            for j in 0..=k {
                let s2 = t2 - h + 2.0 * h * j as f64 / k as f64;
                fine = fine.min((a.eval(s1) - b.eval(s2)).norm());
            }
        }
        assert!(got <= fine + 1e-12, "{got} vs {fine}");
        assert!((got - fine).abs() <= 1e-8, "{got} vs {fine}");
    }

    #[test]
    fn area_of_circles() {
        let g = SpectralGrid::new(64).unwrap();
        assert_abs_diff_eq!(enclosed_area(&c(0.5, 1, &[0.0]), &g), PI / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(enclosed_area(&c(0.9, 1, &[0.0]), &g), 0.81 * PI, epsilon = 1e-12);
    }

    #[test]
    fn area_against_polar_quadrature() {
        // Independent oracle: ½∫r(θ)² dθ by composite Simpson on 20001 points,
        // which equals the 2D quadrature of the indicator for a polar graph.
        let curve = c(0.6, 3, &[0.05, -0.02, 0.01]);
        let g = SpectralGrid::new(96).unwrap();
        let n = 20000;
        let h = TAU / n as f64;
        let f = |t: f64| 0.5 * curve.radius(t).powi(2);
        let mut s = f(0.0) + f(TAU);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        let oracle = s * h / 3.0;
        assert_abs_diff_eq!(enclosed_area(&curve, &g), oracle, epsilon = 1e-8);
    }

    #[test]
    fn json_roundtrip_and_schema() {
        let curve = c(0.8, 4, &[0.01, -0.002]);
        let s = curve.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["m"], 4);
        assert_eq!(FourierContour::from_json(&s).unwrap(), curve);
        assert!(FourierContour::from_json(r#"{"b": 1.5, "m": 2, "coeffs": [0.0]}"#).is_err());
    }

    fn coeffs_strategy() -> impl Strategy<Value = (f64, usize, Vec<f64>)> {
        (0.3f64..0.8, 1usize..6, proptest::collection::vec(-0.1f64..0.1, 1..6))
            .prop_map(|(b, m, a)| {
                let scale = 0.25 * b / a.len() as f64;
                (b, m, a.into_iter().map(|x| x * scale / 0.1).collect())
            })
    }

    proptest! {
        #[test]
        fn reflection_symmetry((b, m, a) in coeffs_strategy(), t in 0.0f64..TAU) {
            let curve = FourierContour::new(b, m, a).unwrap();
            let d = curve.eval(-t).conj() - curve.eval(t);
            prop_assert!(d.norm() <= 1e-14);
        }

        #[test]
        fn m_fold_symmetry_on_grid((b, m, a) in coeffs_strategy()) {
            let curve = FourierContour::new(b, m, a).unwrap();
            let g = SpectralGrid::new(m * 32).unwrap();
            let rot = Complex64::from_polar(1.0, TAU / m as f64);
            for i in 0..g.len() {
                let t = g.theta(i);
                prop_assert!((curve.eval(t + TAU / m as f64) - rot * curve.eval(t)).norm() <= 1e-13);
            }
        }

        #[test]
        fn tangent_matches_central_differences((b, m, a) in coeffs_strategy(), t in 0.0f64..TAU) {
            let curve = FourierContour::new(b, m, a).unwrap();
            let h = 1e-6;
            let fd = (curve.eval(t + h) - curve.eval(t - h)) / (2.0 * h);
            let exact = curve.tangent(t);
            prop_assert!((fd - exact).norm() <= 1e-7 * exact.norm());
        }
    }
}
