//! Dense kernels: spectra, Lyapunov and Riccati equations.

mod care;
mod lyapunov;
pub mod schur;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use care::{riccati_residual, solve_care, CareSolution};
pub use lyapunov::{solve_lyapunov, LyapunovSolver, LYAPUNOV_TOL};
pub use schur::RealSchur;

/// Eigenvalues of a square matrix together with its Hurwitz verdict.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex64>,
    pub max_real_part: f64,
    pub is_hurwitz: bool,
}

/// Spectrum with the default Hurwitz tolerance of zero.
pub fn spectrum(m: &DMatrix<f64>) -> Result<SpectrumReport> {
    spectrum_with_tol(m, 0.0)
}

/// Spectrum where `is_hurwitz` requires every real part below `-hurwitz_tol`.
pub fn spectrum_with_tol(m: &DMatrix<f64>, hurwitz_tol: f64) -> Result<SpectrumReport> {
    let schur = RealSchur::new(m)?;
    Ok(report_from_eigenvalues(schur.eigenvalues(), hurwitz_tol))
}

pub(crate) fn report_from_eigenvalues(eigenvalues: Vec<Complex64>, hurwitz_tol: f64) -> SpectrumReport {
    let max_real_part = eigenvalues
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    SpectrumReport {
        is_hurwitz: max_real_part < -hurwitz_tol,
        eigenvalues,
        max_real_part,
    }
}

pub(crate) fn ensure_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub(crate) fn ensure_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what: what.into() })
    }
}

pub(crate) fn ensure_shape(
    m: &DMatrix<f64>,
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<()> {
    if m.nrows() != rows {
        return Err(Error::DimensionMismatch {
            what: format!("{what} rows"),
            expected: rows,
            found: m.nrows(),
        });
    }
    if m.ncols() != cols {
        return Err(Error::DimensionMismatch {
            what: format!("{what} columns"),
            expected: cols,
            found: m.ncols(),
        });
    }
    Ok(())
}

/// `(m + m^T) / 2`
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    let scale = m.norm().max(1.0);
    (m - m.transpose()).norm() <= rel_tol * scale
}
