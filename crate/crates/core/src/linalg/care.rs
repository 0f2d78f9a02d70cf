//! Continuous algebraic Riccati equation via the ordered real Schur form of
//! the Hamiltonian matrix.

use nalgebra::DMatrix;

use super::lyapunov::LyapunovSolver;
use super::schur::RealSchur;
use super::{ensure_finite, ensure_shape, ensure_square, is_symmetric, symmetrize};
use crate::error::{Error, Result};

/// Relative residual accepted for Riccati solutions.
pub const CARE_TOL: f64 = 1e-8;

/// Largest accepted condition number of the stable invariant-subspace basis.
const MAX_BASIS_CONDITION: f64 = 1e10;

const NEWTON_STEPS: usize = 4;

#[derive(Debug, Clone)]
pub struct CareSolution {
    /// Stabilizing solution of `a^T p + p a - p b r^-1 b^T p + q = 0`.
    pub p: DMatrix<f64>,
    /// Optimal gain `r^-1 b^T p`, used as `u = -k x`.
    pub k: DMatrix<f64>,
    /// Relative residual of the Riccati equation, see [`riccati_residual`].
    pub residual: f64,
}

pub fn solve_care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<CareSolution> {
    let n = ensure_square(a)?;
    let m = b.ncols();
    ensure_shape(b, n, m, "B")?;
    ensure_shape(q, n, n, "Q")?;
    ensure_shape(r, m, m, "R")?;
    for (mat, what) in [(a, "A"), (b, "B"), (q, "Q"), (r, "R")] {
        ensure_finite(mat, what)?;
    }
    if !is_symmetric(q, 1e-12) || !is_symmetric(r, 1e-12) {
        return Err(Error::InvalidParameter("Q and R must be symmetric".into()));
    }
    let r_chol = symmetrize(r)
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("R must be positive definite".into()))?;
    let q = symmetrize(q);
    let r_inv_bt = r_chol.solve(&b.transpose());
    let g = b * &r_inv_bt;

    let mut ham = DMatrix::<f64>::zeros(2 * n, 2 * n);
    ham.view_mut((0, 0), (n, n)).copy_from(a);
    ham.view_mut((0, n), (n, n)).copy_from(&(-&g));
    ham.view_mut((n, 0), (n, n)).copy_from(&(-&q));
    ham.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let mut schur = RealSchur::new(&ham)?;
    let stable = schur.reorder(|s, blk| s.block_real_part(blk) < 0.0)?;
    if stable != n {
        return Err(Error::RiccatiSplitting {
            stable,
            expected: n,
        });
    }
    let u1 = schur.z.view((0, 0), (n, n)).into_owned();
    let u2 = schur.z.view((n, 0), (n, n)).into_owned();
    let sv = u1.clone().svd(false, false).singular_values;
    let smin = sv.min();
    let condition = if smin > 0.0 { sv.max() / smin } else { f64::INFINITY };
    if !(condition < MAX_BASIS_CONDITION) {
        return Err(Error::IllConditioned {
            what: "stable invariant-subspace basis",
            condition,
        });
    }
    // p u1 = u2  <=>  u1^T p^T = u2^T
    let pt = u1
        .transpose()
        .lu()
        .solve(&u2.transpose())
        .ok_or_else(|| Error::Singular {
            what: "stable invariant-subspace basis".into(),
        })?;
    let mut p = symmetrize(&pt.transpose());

    let residual_of = |p: &DMatrix<f64>| -> f64 { riccati_residual(a, &g, &q, p) };
    let mut residual = residual_of(&p);

    // Newton-Kleinman refinement from the Schur estimate.
    for _ in 0..NEWTON_STEPS {
        if residual <= 1e-3 * CARE_TOL {
            break;
        }
        let k = &r_inv_bt * &p;
        let acl = a - b * &k;
        let solver = match LyapunovSolver::new(&acl) {
            Ok(s) => s,
            Err(_) => break,
        };
        let w = &q + k.transpose() * r * &k;
        let candidate = match solver.observability(&symmetrize(&w)) {
            Ok(c) => c,
            Err(_) => break,
        };
        let next = residual_of(&candidate);
        if next >= residual {
            break;
        }
        p = candidate;
        residual = next;
    }

    if !(residual <= CARE_TOL) {
        return Err(Error::ResidualTooLarge {
            what: "Riccati equation",
            residual,
            tolerance: CARE_TOL,
        });
    }
    let k = &r_inv_bt * &p;
    let closed = super::spectrum(&(a - b * &k))?;
    if !closed.is_hurwitz {
        return Err(Error::RiccatiSplitting {
            stable: closed
                .eigenvalues
                .iter()
                .filter(|l| l.re < 0.0)
                .count(),
            expected: n,
        });
    }
    Ok(CareSolution { p, k, residual })
}

/// Frobenius norm of `AᵀP + PA − PGP + Q` relative to the size of its
/// terms, `max(1, ‖Q‖ + 2‖AᵀP‖ + ‖PGP‖)`.
pub fn riccati_residual(a: &DMatrix<f64>, g: &DMatrix<f64>, q: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let ap = a.transpose() * p;
    let pgp = p * g * p;
    let scale = (q.norm() + 2.0 * ap.norm() + pgp.norm()).max(1.0);
    (&ap + ap.transpose() - pgp + q).norm() / scale
}
