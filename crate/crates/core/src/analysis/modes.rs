//! Modal damping, frequencies and participation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, ensure_square, RealSchur};

#[derive(Debug, Clone)]
pub struct Mode {
    /// Representative eigenvalue; for complex pairs the one with `Im > 0`.
    pub eigenvalue: Complex64,
    /// `−Re λ / |λ|` (0 for λ = 0).
    pub damping: f64,
    /// `|Im λ| / 2π` in Hz.
    pub frequency: f64,
    /// Normalized `|v_i w_i|`, summing to one.
    pub participation: Vec<f64>,
}

impl Mode {
    pub fn is_oscillatory(&self) -> bool {
        self.eigenvalue.im != 0.0
    }

    /// State with the largest participation.
    pub fn dominant_state(&self) -> usize {
        self.participation
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i)
    }
}

#[derive(Debug, Clone)]
pub struct ModeReport {
    /// Sorted by damping ratio, least damped first.
    pub modes: Vec<Mode>,
}

pub fn damping_ratio(l: Complex64) -> f64 {
    let mag = l.norm();
    if mag == 0.0 {
        0.0
    } else {
        -l.re / mag
    }
}

pub fn frequency_hz(l: Complex64) -> f64 {
    l.im.abs() / (2.0 * std::f64::consts::PI)
}

/// Unit-norm null vector of `m − λ I` from the smallest singular value.
fn null_vector(m: &DMatrix<Complex64>, l: Complex64) -> DVector<Complex64> {
    let n = m.nrows();
    let shifted = m - DMatrix::<Complex64>::identity(n, n) * l;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty matrix");
    v_t.row(idx).transpose().map(|z| z.conj())
}

/// Unit-norm right eigenvector of `a` for eigenvalue `l`.
pub fn eigenvector(a: &DMatrix<f64>, l: Complex64) -> DVector<Complex64> {
    null_vector(&a.map(|v| Complex64::new(v, 0.0)), l)
}

/// Unit-norm left eigenvector `w` with `wᴴ a = λ wᴴ`.
pub fn left_eigenvector(a: &DMatrix<f64>, l: Complex64) -> DVector<Complex64> {
    null_vector(&a.transpose().map(|v| Complex64::new(v, 0.0)), l.conj())
}

fn participation(a: &DMatrix<f64>, l: Complex64) -> Vec<f64> {
    let v = eigenvector(a, l);
    let w = left_eigenvector(a, l);
    let raw: Vec<f64> = v.iter().zip(w.iter()).map(|(x, y)| (x * y).norm()).collect();
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        raw.iter().map(|r| r / total).collect()
    } else {
        raw
    }
}

/// Eigenvalues of `a_cl` with damping ratio, frequency and participation,
/// least damped first. Complex pairs are reported once.
pub fn mode_report(a_cl: &DMatrix<f64>) -> Result<ModeReport> {
    ensure_square(a_cl)?;
    ensure_finite(a_cl, "closed-loop matrix")?;
    let eigs = RealSchur::new(a_cl)?.eigenvalues();
    let mut modes: Vec<Mode> = eigs
        .into_iter()
        .filter(|l| l.im >= 0.0)
        .map(|l| Mode {
            eigenvalue: l,
            damping: damping_ratio(l),
            frequency: frequency_hz(l),
            participation: participation(a_cl, l),
        })
        .collect();
    modes.sort_by(|a, b| {
        a.damping
            .total_cmp(&b.damping)
            .then(a.frequency.total_cmp(&b.frequency))
    });
    Ok(ModeReport { modes })
}

/// Selects a mode for [`eigvec_initial_state`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeSelector {
    /// Position in the damping-sorted [`ModeReport`].
    Index(usize),
    /// Eigenvalue closest to the given point.
    Nearest(Complex64),
    /// Least damped oscillatory mode, or least damped mode if none oscillates.
    LeastDampedOscillatory,
}

/// Real part of the selected mode's eigenvector, after rotating its largest
/// component onto the positive real axis, scaled to unit 2-norm.
pub fn eigvec_initial_state(a_cl: &DMatrix<f64>, selector: ModeSelector) -> Result<DVector<f64>> {
    let report = mode_report(a_cl)?;
    let available = report.modes.len();
    let l = match selector {
        ModeSelector::Index(index) => {
            report
                .modes
                .get(index)
                .ok_or(Error::ModeSelector { index, available })?
                .eigenvalue
        }
        ModeSelector::Nearest(target) => {
            report
                .modes
                .iter()
                .map(|m| m.eigenvalue)
                .flat_map(|l| [l, l.conj()])
                .min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()))
                .ok_or(Error::ModeSelector { index: 0, available })?
        }
        ModeSelector::LeastDampedOscillatory => report
            .modes
            .iter()
            .find(|m| m.is_oscillatory())
            .or(report.modes.first())
            .ok_or(Error::ModeSelector { index: 0, available })?
            .eigenvalue,
    };
    let v = eigenvector(a_cl, l);
    let pivot = v
        .iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .copied()
        .unwrap_or(Complex64::new(1.0, 0.0));
    let rotation = if pivot.norm() > 0.0 {
        pivot.conj() / pivot.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let real = v.map(|z| (z * rotation).re);
    let norm = real.norm();
    Ok(if norm > 0.0 { real / norm } else { real })
}

/// Block-diagonal matrix whose 2×2 blocks `[[σ, ω], [−ω, σ]]` have
/// eigenvalues `σ ± iω`; real eigenvalues become 1×1 blocks.
pub fn block_diagonal_from_eigenvalues(eigs: &[Complex64]) -> DMatrix<f64> {
    let n: usize = eigs.iter().map(|l| if l.im != 0.0 { 2 } else { 1 }).sum();
    let mut a = DMatrix::zeros(n, n);
    let mut k = 0;
    for l in eigs {
        if l.im != 0.0 {
            let w = l.im.abs();
            a[(k, k)] = l.re;
            a[(k + 1, k + 1)] = l.re;
            a[(k, k + 1)] = w;
            a[(k + 1, k)] = -w;
            k += 2;
        } else {
            a[(k, k)] = l.re;
            k += 1;
        }
    }
    a
}
