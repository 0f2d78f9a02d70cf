//! Real Schur decomposition with block reordering.
//!
//! The QR sweep follows the EISPACK `hqr2` procedure (Martin and Wilkinson),
//! including its exceptional shifts, and keeps the full quasi-triangular
//! factor so that the Schur vectors can be reordered afterwards.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Iteration budget per deflated eigenvalue before giving up.
const MAX_ITER_PER_EIGENVALUE: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub start: usize,
    pub size: usize,
}

/// `a = z * t * z^T` with `z` orthogonal and `t` upper quasi-triangular.
#[derive(Debug, Clone)]
pub struct RealSchur {
    pub t: DMatrix<f64>,
    pub z: DMatrix<f64>,
    blocks: Vec<Block>,
    iterations: usize,
}

impl RealSchur {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "matrix passed to Schur decomposition".into(),
            });
        }
        if n == 1 {
            return Ok(Self {
                t: a.clone(),
                z: DMatrix::identity(1, 1),
                blocks: vec![Block { start: 0, size: 1 }],
                iterations: 0,
            });
        }

        let (z, h) = a.clone().hessenberg().unpack();
        let mut t = h;
        let mut z = z;
        let mut complex = vec![false; n];
        let iterations = hqr(&mut t, &mut z, &mut complex)?;

        // Clean the strictly lower part, keeping only 2x2 complex blocks.
        let mut blocks = Vec::with_capacity(n);
        let mut i = 0;
        while i < n {
            if complex[i] && i + 1 < n {
                blocks.push(Block { start: i, size: 2 });
                i += 2;
            } else {
                blocks.push(Block { start: i, size: 1 });
                i += 1;
            }
        }
        for j in 0..n {
            let keep_subdiag = blocks.iter().any(|b| b.size == 2 && b.start == j);
            for r in (j + 1)..n {
                if !(keep_subdiag && r == j + 1) {
                    t[(r, j)] = 0.0;
                }
            }
        }

        Ok(Self {
            t,
            z,
            blocks,
            iterations,
        })
    }

    pub fn order(&self) -> usize {
        self.t.nrows()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Eigenvalues in block order. Complex pairs appear with the positive
    /// imaginary part first.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.order());
        for b in &self.blocks {
            if b.size == 1 {
                out.push(Complex64::new(self.t[(b.start, b.start)], 0.0));
            } else {
                let (l1, l2) = block_eigenvalues(&self.t, b.start);
                out.push(l1);
                out.push(l2);
            }
        }
        out
    }

    /// Real part shared by the eigenvalues of a block.
    pub fn block_real_part(&self, block: Block) -> f64 {
        let s = block.start;
        if block.size == 1 {
            self.t[(s, s)]
        } else {
            0.5 * (self.t[(s, s)] + self.t[(s + 1, s + 1)])
        }
    }

    /// Reorders the decomposition so that every block selected by `select`
    /// precedes every unselected block. Returns the dimension of the leading
    /// invariant subspace.
    pub fn reorder<F>(&mut self, mut select: F) -> Result<usize>
    where
        F: FnMut(&RealSchur, Block) -> bool,
    {
        let mut flags: Vec<bool> = self.blocks.iter().map(|&b| select(self, b)).collect();
        let mut sizes: Vec<usize> = self.blocks.iter().map(|b| b.size).collect();

        // Insertion sort by adjacent swaps: selected blocks bubble to the front.
        let mut placed = 0;
        for idx in 0..sizes.len() {
            if !flags[idx] {
                continue;
            }
            let mut pos = idx;
            while pos > placed {
                let start: usize = sizes[..pos - 1].iter().sum();
                self.swap_adjacent(start, sizes[pos - 1], sizes[pos])?;
                sizes.swap(pos - 1, pos);
                flags.swap(pos - 1, pos);
                pos -= 1;
            }
            placed += 1;
        }

        let mut start = 0;
        self.blocks = sizes
            .iter()
            .map(|&size| {
                let b = Block { start, size };
                start += size;
                b
            })
            .collect();
        Ok(sizes
            .iter()
            .zip(&flags)
            .filter(|(_, &f)| f)
            .map(|(s, _)| *s)
            .sum())
    }

    /// Swaps the adjacent diagonal blocks starting at `k` with sizes `p`
    /// and `q` by direct swapping (Bai and Demmel).
    fn swap_adjacent(&mut self, k: usize, p: usize, q: usize) -> Result<()> {
        let m = p + q;
        let a11 = self.t.view((k, k), (p, p)).into_owned();
        let a22 = self.t.view((k + p, k + p), (q, q)).into_owned();
        let a12 = self.t.view((k, k + p), (p, q)).into_owned();

        // a11 x - x a22 = -a12, so that [x; I] spans the a22 subspace.
        let ip = DMatrix::<f64>::identity(p, p);
        let iq = DMatrix::<f64>::identity(q, q);
        let sys = iq.kronecker(&a11) - a22.transpose().kronecker(&ip);
        let rhs = -nalgebra::DVector::from_column_slice(a12.as_slice());
        let sol = sys.lu().solve(&rhs).ok_or_else(|| Error::Singular {
            what: "Schur block swap (coincident eigenvalues)".into(),
        })?;
        let x = DMatrix::from_column_slice(p, q, sol.as_slice());

        // The first q columns of [[x, I_p], [I_q, 0]] span the invariant
        // subspace belonging to a22.
        let mut basis = DMatrix::<f64>::zeros(m, m);
        basis.view_mut((0, 0), (p, q)).copy_from(&x);
        basis.view_mut((p, 0), (q, q)).copy_from(&iq);
        basis.view_mut((0, q), (p, p)).copy_from(&ip);
        let qmat = basis.qr().q();

        let rows = self.t.rows(k, m).into_owned();
        let new_rows = qmat.transpose() * rows;
        self.t.rows_mut(k, m).copy_from(&new_rows);
        let cols = self.t.view((0, k), (k + m, m)).into_owned();
        let new_cols = cols * &qmat;
        self.t.view_mut((0, k), (k + m, m)).copy_from(&new_cols);
        let zc = self.z.columns(k, m).into_owned();
        self.z.columns_mut(k, m).copy_from(&(zc * &qmat));

        for j in k..k + q {
            for i in (k + q)..(k + m) {
                self.t[(i, j)] = 0.0;
            }
        }
        Ok(())
    }
}

fn block_eigenvalues(t: &DMatrix<f64>, s: usize) -> (Complex64, Complex64) {
    let a = t[(s, s)];
    let b = t[(s, s + 1)];
    let c = t[(s + 1, s)];
    let d = t[(s + 1, s + 1)];
    let half_tr = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let disc = half_diff * half_diff + b * c;
    if disc >= 0.0 {
        let r = disc.sqrt();
        (
            Complex64::new(half_tr + r, 0.0),
            Complex64::new(half_tr - r, 0.0),
        )
    } else {
        let im = (-disc).sqrt();
        (Complex64::new(half_tr, im), Complex64::new(half_tr, -im))
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix, accumulating the
/// orthogonal transformations into `v`. On return `h` is quasi-triangular
/// (up to negligible subdiagonal entries) and `complex[i]` marks rows
/// belonging to a 2x2 block with complex eigenvalues.
fn hqr(h: &mut DMatrix<f64>, v: &mut DMatrix<f64>, complex: &mut [bool]) -> Result<usize> {
    let nn = h.nrows();
    let eps = f64::EPSILON;
    let low: isize = 0;
    let high = nn - 1;
    let mut n: isize = nn as isize - 1;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r, mut s, mut z): (f64, f64, f64, f64, f64);
    let (mut w, mut x, mut y): (f64, f64, f64);

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }

    let mut iter = 0usize;
    let mut total_iter = 0usize;
    while n >= low {
        let nu = n as usize;
        // Look for a single small subdiagonal element.
        let mut l = n;
        while l > low {
            let lu = l as usize;
            s = h[(lu - 1, lu - 1)].abs() + h[(lu, lu)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(lu, lu - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root found.
            h[(nu, nu)] += exshift;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // Two roots found.
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(nu - 1, nu - 1)] += exshift;

            if q >= 0.0 {
                // Real pair: rotate to upper triangular form.
                z = if p >= 0.0 { p + z } else { p - z };
                x = h[(nu, nu - 1)];
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;
                for j in (nu - 1)..nn {
                    z = h[(nu - 1, j)];
                    h[(nu - 1, j)] = q * z + p * h[(nu, j)];
                    h[(nu, j)] = q * h[(nu, j)] - p * z;
                }
                for i in 0..=nu {
                    z = h[(i, nu - 1)];
                    h[(i, nu - 1)] = q * z + p * h[(i, nu)];
                    h[(i, nu)] = q * h[(i, nu)] - p * z;
                }
                for i in 0..=high {
                    z = v[(i, nu - 1)];
                    v[(i, nu - 1)] = q * z + p * v[(i, nu)];
                    v[(i, nu)] = q * v[(i, nu)] - p * z;
                }
                h[(nu, nu - 1)] = 0.0;
            } else {
                complex[nu - 1] = true;
                complex[nu] = true;
            }
            n -= 2;
            iter = 0;
        } else {
            // No convergence yet: form the shift.
            x = h[(nu, nu)];
            y = h[(nu - 1, nu - 1)];
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];

            if iter == 10 {
                // Wilkinson's ad hoc shift.
                exshift += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }

            iter += 1;
            total_iter += 1;
            if iter > MAX_ITER_PER_EIGENVALUE {
                return Err(Error::EigenNoConvergence {
                    iterations: total_iter,
                });
            }

            // Look for two consecutive small subdiagonal elements.
            let lu = l as usize;
            let mut m = nu - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == lu {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=nu {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            // Double QR step on rows l..=n and columns m..=n.
            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[(k, k - 1)] = -s * x;
                    } else if lu != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..nn {
                        p = h[(k, j)] + q * h[(k + 1, j)];
                        if notlast {
                            p += r * h[(k + 2, j)];
                            h[(k + 2, j)] -= p * z;
                        }
                        h[(k, j)] -= p * x;
                        h[(k + 1, j)] -= p * y;
                    }
                    for i in 0..=nu.min(k + 3) {
                        p = x * h[(i, k)] + y * h[(i, k + 1)];
                        if notlast {
                            p += z * h[(i, k + 2)];
                            h[(i, k + 2)] -= p * r;
                        }
                        h[(i, k)] -= p;
                        h[(i, k + 1)] -= p * q;
                    }
                    for i in 0..=high {
                        p = x * v[(i, k)] + y * v[(i, k + 1)];
                        if notlast {
                            p += z * v[(i, k + 2)];
                            v[(i, k + 2)] -= p * r;
                        }
                        v[(i, k)] -= p;
                        v[(i, k + 1)] -= p * q;
                    }
                }
            }
        }
    }
    Ok(total_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
    }

    fn check_factorization(a: &DMatrix<f64>, s: &RealSchur) {
        let n = a.nrows();
        let recon = &s.z * &s.t * s.z.transpose();
        assert!((recon - a).norm() <= 1e-12 * a.norm().max(1.0) * n as f64);
        let orth = s.z.transpose() * &s.z - DMatrix::<f64>::identity(n, n);
        assert!(orth.norm() < 1e-12 * n as f64);
        for j in 0..n {
            for i in (j + 1)..n {
                let in_block = i == j + 1 && s.blocks().iter().any(|b| b.size == 2 && b.start == j);
                if !in_block {
                    assert_eq!(s.t[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn random_matrices_factor() {
        for seed in 0..40 {
            let n = 1 + (seed as usize % 12);
            let a = random(n, seed);
            let s = RealSchur::new(&a).unwrap();
            check_factorization(&a, &s);
            let trace: f64 = s.eigenvalues().iter().map(|l| l.re).sum();
            assert!((trace - a.trace()).abs() < 1e-10 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn rotation_has_imaginary_pair() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let s = RealSchur::new(&a).unwrap();
        let mut ev = s.eigenvalues();
        ev.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
        assert!((ev[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn permutation_matrix_converges() {
        // Cyclic permutations defeat unshifted QR.
        let n = 6;
        let a = DMatrix::from_fn(n, n, |i, j| if (i + 1) % n == j { 1.0 } else { 0.0 });
        let s = RealSchur::new(&a).unwrap();
        check_factorization(&a, &s);
        for l in s.eigenvalues() {
            assert!((l.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn reorder_moves_selected_blocks_first() {
        for seed in 100..130 {
            let n = 2 + (seed as usize % 9);
            let a = random(n, seed);
            let mut s = RealSchur::new(&a).unwrap();
            let before = s.eigenvalues();
            let stable_count = before.iter().filter(|l| l.re < 0.0).count();
            let dim = s.reorder(|s, b| s.block_real_part(b) < 0.0).unwrap();
            assert_eq!(dim, stable_count);
            check_factorization(&a, &s);
            let after = s.eigenvalues();
            for (i, l) in after.iter().enumerate() {
                assert_eq!(l.re < 0.0, i < dim, "seed {seed}: {after:?}");
            }
            let mut sb: Vec<f64> = before.iter().map(|l| l.re).collect();
            let mut sa: Vec<f64> = after.iter().map(|l| l.re).collect();
            sb.sort_by(|a, b| a.partial_cmp(b).unwrap());
            sa.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (x, y) in sb.iter().zip(&sa) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
