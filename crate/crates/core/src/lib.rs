//! Random-Hamiltonian walks of quantum states.
//!
//! The crate evolves finite-dimensional states under independent Gaussian
//! unitary ensemble Hamiltonians, reduces the walk to Brownian motion of
//! Gaussian states in classical space, and checks the resulting distance,
//! isotropy, homogeneity and transition-probability relations statistically.
//!
//! Modules, bottom up:
//!
//! * [`hilbert`]: states, Fubini–Study distance, horizontal projections.
//! * [`rmt`]: GUE/GOE samplers and spectral diagnostics.
//! * [`grid`], [`gaussian`]: Gaussian states on grids and in closed form.
//! * [`walk`]: time-ordered random evolution and the constrained walk.
//! * [`classical`]: split-step propagation and action functionals.
//! * [`stats`]: hypothesis tests and [`stats::TestReport`].
//! * [`rng`]: counter-based stream derivation.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod error;
pub mod gaussian;
pub mod grid;
pub mod hilbert;
pub mod rmt;
pub mod rng;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
