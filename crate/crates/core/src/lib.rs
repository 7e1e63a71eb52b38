//! Reconstruction of the position-space density matrix of a one-dimensional
//! particle from its probability density observed at a handful of discrete
//! times.
//!
//! The density matrix in rotated coordinates, `ρ(x+y, x−y)`, has a Taylor
//! expansion in the off-diagonal variable `y` whose coefficients are the
//! momentum moments `f_n(x) = ∫ pⁿ W(x, p) dp` of the Wigner function. Each
//! moment can be obtained from the lower ones by a time derivative, a
//! cumulative spatial integral and potential force terms, so `f_0` sampled at
//! `m + 1` times yields every `f_n` with `n ≤ m`.
//!
//! Modules:
//!
//! * [`numerics`] grids, cumulative integration, Lagrange time differentiation
//!   and local polynomial smoothing.
//! * [`potentials`] polynomial potentials with exact spatial derivatives.
//! * [`simulator`] split-operator propagation and independent oracles (exact
//!   density matrix, Wigner transform, analytic cat-state moments).
//! * [`reconstruction`] the moment recursion and the moment pyramid.
//! * [`assembly`] Taylor polynomial assembly and comparison metrics.

pub mod assembly;
mod error;
pub mod numerics;
pub mod potentials;
pub mod reconstruction;
pub mod simulator;

pub use error::{Error, Result, Warning};

pub use num_complex::Complex64;
