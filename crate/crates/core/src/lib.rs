//! Sparsity-promoting H2 state feedback for wide-area control of power
//! networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: spectra, Lyapunov and Riccati solvers on dense matrices.
//! * [`grid`]: swing-equation plants, coherency costs, PSS blocks and the
//!   model file format.
//! * [`h2`]: H2 cost and gradient, ADMM with soft thresholding,
//!   reweighting, the gamma homotopy and pattern-constrained polishing.
//! * [`analysis`]: modal damping, disk margins, delay margins, Padé
//!   absorption and time-domain simulation.
//! * [`cli`]: the `sparsewac` command-line front end.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod grid;
pub mod h2;
pub mod linalg;

pub use error::{Error, Result};
