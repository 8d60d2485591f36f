//! Dense simulator for engineered open-system dynamics on a handful of
//! qubits: stabilizer pumping channels, trapped-ion gate sequences, the
//! Lindblad limit of repeated pumping, and QND stabilizer readout.
//!
//! Qubit 0 is always the ancilla ("environment") and is the most
//! significant tensor factor; system qubits follow in order.

pub mod channels;
pub mod error;
pub mod experiments;
pub mod gates;
pub mod qcore;
pub mod sequences;

pub use error::SimError;

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Complex scalar used throughout.
pub type C64 = Complex64;
/// Dense complex matrix used throughout.
pub type Mat = DMatrix<C64>;
/// Dense complex vector.
pub type Vec64 = nalgebra::DVector<C64>;

/// Tolerance for invariant checks (trace, Hermiticity, PSD floor).
pub const TOL_INVARIANT: f64 = 1e-9;
/// Tolerance for algebraic identities (unitarity, exact cancellations).
pub const TOL_ALGEBRA: f64 = 1e-12;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry magnitude of `a - b`.
pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
