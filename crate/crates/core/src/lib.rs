//! Rotating vortex patches (V-states) of the 2D incompressible Euler
//! equations inside the unit disc.
//!
//! The crate computes simply- and doubly-connected m-fold V-states with a
//! pseudo-spectral Newton method, traces their bifurcation branches by
//! pseudo-arclength continuation, evaluates the closed-form bifurcation
//! spectrum of the disc and annulus, and checks computed states against the
//! Lagrangian contour dynamics.
//!
//! Module map:
//!
//! - [`contour`]: Fourier-parameterized boundaries and geometric diagnostics.
//! - [`residual`]: V-state boundary-equation residuals and sine projection.
//! - [`solver`]: finite-difference Jacobian Newton iteration.
//! - [`spectra`]: closed-form eigenvalues, discriminants, fold radii.
//! - [`continuation`]: branch tracing through saddle-node folds.
//! - [`dynamics`]: contour-dynamics time stepping for rigid-rotation checks.
//! - [`cli`]: command-line front end and file formats.

pub mod cli;
pub mod continuation;
pub mod contour;
pub mod dynamics;
mod error;
pub mod io;
pub mod residual;
pub mod solver;
pub mod spectra;

pub use continuation::{Branch, BranchPoint, BranchSelector, ContinuationConfig, Seed};
pub use contour::{FourierContour, SpectralGrid};
pub use error::{Error, Result};
pub use residual::{Problem, ResidualSpectrum, Shape};
pub use solver::{NewtonConfig, NewtonReport};
pub use spectra::{DcSpectrum, KernelVector};
