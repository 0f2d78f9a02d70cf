//! Bartels-Stewart solver for continuous Lyapunov equations.

use nalgebra::{DMatrix, DVector};

use super::schur::{Block, RealSchur};
use super::{ensure_finite, ensure_shape, ensure_square, is_symmetric, symmetrize};
use crate::error::{Error, Result};

/// Relative residual accepted for Lyapunov solutions.
pub const LYAPUNOV_TOL: f64 = 1e-8;

const REFINEMENT_STEPS: usize = 2;

/// Solves `a^T p + p a = -w` for a Hurwitz `a` and symmetric `w`.
pub fn solve_lyapunov(a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    LyapunovSolver::new(a)?.observability(w)
}

/// A Schur factorization of a Hurwitz matrix reused for both Gramian forms.
#[derive(Debug, Clone)]
pub struct LyapunovSolver {
    a: DMatrix<f64>,
    schur: RealSchur,
    max_real_part: f64,
}

impl LyapunovSolver {
    /// Factors `a`; fails with [`Error::Unstable`] unless `a` is Hurwitz.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        ensure_square(a)?;
        ensure_finite(a, "Lyapunov coefficient")?;
        let schur = RealSchur::new(a)?;
        let max_real_part = schur
            .blocks()
            .iter()
            .map(|&b| schur.block_real_part(b))
            .fold(f64::NEG_INFINITY, f64::max);
        if max_real_part >= 0.0 {
            return Err(Error::Unstable { max_real_part });
        }
        Ok(Self {
            a: a.clone(),
            schur,
            max_real_part,
        })
    }

    pub fn max_real_part(&self) -> f64 {
        self.max_real_part
    }

    pub fn schur(&self) -> &RealSchur {
        &self.schur
    }

    /// Solves `a^T p + p a = -w`.
    pub fn observability(&self, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.solve(w, Form::Observability)
    }

    /// Solves `a x + x a^T = -w`.
    pub fn controllability(&self, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.solve(w, Form::Controllability)
    }

    fn solve(&self, w: &DMatrix<f64>, form: Form) -> Result<DMatrix<f64>> {
        let n = self.a.nrows();
        ensure_shape(w, n, n, "Lyapunov right-hand side")?;
        ensure_finite(w, "Lyapunov right-hand side")?;
        if !is_symmetric(w, 1e-10) {
            return Err(Error::InvalidParameter(
                "Lyapunov right-hand side must be symmetric".into(),
            ));
        }
        let w = symmetrize(w);
        let scale = w.norm().max(1.0);

        let mut p = symmetrize(&self.solve_raw(&w, form)?);
        let mut residual = self.residual(&p, &w, form);
        for _ in 0..REFINEMENT_STEPS {
            if residual.norm() <= 1e-3 * LYAPUNOV_TOL * scale {
                break;
            }
            let correction = symmetrize(&self.solve_raw(&residual, form)?);
            let candidate = &p + correction;
            let next = self.residual(&candidate, &w, form);
            if next.norm() >= residual.norm() {
                break;
            }
            p = candidate;
            residual = next;
        }
        let rel = residual.norm() / scale;
        if !(rel <= LYAPUNOV_TOL) {
            return Err(Error::ResidualTooLarge {
                what: "Lyapunov equation",
                residual: rel,
                tolerance: LYAPUNOV_TOL,
            });
        }
        Ok(p)
    }

    fn residual(&self, p: &DMatrix<f64>, w: &DMatrix<f64>, form: Form) -> DMatrix<f64> {
        let ap = match form {
            Form::Observability => self.a.transpose() * p,
            Form::Controllability => &self.a * p,
        };
        &ap + ap.transpose() + w
    }

    /// One Bartels-Stewart pass without refinement.
    fn solve_raw(&self, w: &DMatrix<f64>, form: Form) -> Result<DMatrix<f64>> {
        let z = &self.schur.z;
        let c = -(z.transpose() * w * z);
        let y = match form {
            Form::Observability => solve_upper_transposed(&self.schur.t, self.schur.blocks(), &c)?,
            Form::Controllability => solve_upper(&self.schur.t, self.schur.blocks(), &c)?,
        };
        Ok(z * y * z.transpose())
    }
}

#[derive(Debug, Clone, Copy)]
enum Form {
    Observability,
    Controllability,
}

/// Solves `t^T x + x t = c` for quasi-upper-triangular `t`.
fn solve_upper_transposed(t: &DMatrix<f64>, blocks: &[Block], c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = t.nrows();
    let mut x = DMatrix::<f64>::zeros(n, n);
    for bi in blocks {
        for bj in blocks {
            let (si, ni) = (bi.start, bi.size);
            let (sj, nj) = (bj.start, bj.size);
            let mut rhs = c.view((si, sj), (ni, nj)).into_owned();
            if si > 0 {
                rhs -= t.view((0, si), (si, ni)).transpose() * x.view((0, sj), (si, nj));
            }
            if sj > 0 {
                rhs -= x.view((si, 0), (ni, sj)) * t.view((0, sj), (sj, nj));
            }
            let tii_t = t.view((si, si), (ni, ni)).transpose();
            let tjj = t.view((sj, sj), (nj, nj)).into_owned();
            let blk = small_sylvester(&tii_t, &tjj, &rhs)?;
            x.view_mut((si, sj), (ni, nj)).copy_from(&blk);
        }
    }
    Ok(x)
}

/// Solves `t x + x t^T = c` for quasi-upper-triangular `t`.
fn solve_upper(t: &DMatrix<f64>, blocks: &[Block], c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = t.nrows();
    let mut x = DMatrix::<f64>::zeros(n, n);
    for bi in blocks.iter().rev() {
        for bj in blocks.iter().rev() {
            let (si, ni) = (bi.start, bi.size);
            let (sj, nj) = (bj.start, bj.size);
            let ei = si + ni;
            let ej = sj + nj;
            let mut rhs = c.view((si, sj), (ni, nj)).into_owned();
            if ei < n {
                rhs -= t.view((si, ei), (ni, n - ei)) * x.view((ei, sj), (n - ei, nj));
            }
            if ej < n {
                rhs -= x.view((si, ej), (ni, n - ej)) * t.view((sj, ej), (nj, n - ej)).transpose();
            }
            let tii = t.view((si, si), (ni, ni)).into_owned();
            let tjj_t = t.view((sj, sj), (nj, nj)).transpose();
            let blk = small_sylvester(&tii, &tjj_t, &rhs)?;
            x.view_mut((si, sj), (ni, nj)).copy_from(&blk);
        }
    }
    Ok(x)
}

/// Solves `l y + y r = c` for blocks of order at most two.
fn small_sylvester(l: &DMatrix<f64>, r: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (ni, nj) = (l.nrows(), r.nrows());
    if ni == 1 && nj == 1 {
        let d = l[(0, 0)] + r[(0, 0)];
        if d == 0.0 {
            return Err(Error::Singular {
                what: "Lyapunov block (eigenvalues sum to zero)".into(),
            });
        }
        return Ok(DMatrix::from_element(1, 1, c[(0, 0)] / d));
    }
    let sys = DMatrix::<f64>::identity(nj, nj).kronecker(l)
        + r.transpose().kronecker(&DMatrix::<f64>::identity(ni, ni));
    let rhs = DVector::from_column_slice(c.as_slice());
    let sol = sys.lu().solve(&rhs).ok_or_else(|| Error::Singular {
        what: "Lyapunov block (eigenvalues sum to zero)".into(),
    })?;
    Ok(DMatrix::from_column_slice(ni, nj, sol.as_slice()))
}
