//! Self-calibrating quantum state tomography for one and two qubits.
//!
//! The measurement basis is changed by rotations about equatorial axes of the
//! Bloch sphere whose rotation angle (the retardance `α` of a wave plate) is
//! not known. Counts from a fixed projector behind these rotations are fitted
//! jointly over the density matrix and `|α|`, which recovers the state up to
//! local `σz` rotations together with the retardance.
//!
//! The crate is `no_std` and only needs an allocator. Module map:
//!
//! - [`operator`], [`linalg`]: dense 2×2 / 4×4 complex operators and the small
//!   real/Hermitian eigen and least-squares kernels built on them.
//! - [`pauli`], [`state`], [`metrics`]: Pauli algebra, density matrices and the
//!   `T†T/Tr` parameterization, fidelity and concurrence.
//! - [`measurement`]: rotation unitaries, measurement settings, protocol sets,
//!   design matrices and the pulse-to-rotation mapping.
//! - [`simulator`], [`sampling`]: the counting forward model and reproducible
//!   Poisson noise.
//! - [`optimize`], [`estimator`]: Nelder-Mead and maximum-likelihood
//!   reconstruction (standard and self-calibrating).
//! - [`analysis`]: retardance and noise sweeps, histograms, protocol
//!   comparison and Monte Carlo error bars.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod measurement;
pub mod metrics;
pub mod operator;
pub mod optimize;
pub mod pauli;
pub mod sampling;
pub mod simulator;
pub mod state;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use operator::Operator;
