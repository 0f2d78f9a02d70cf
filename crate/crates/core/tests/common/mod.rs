//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the solvers under test: the Lyapunov oracle solves the
//! vectorized Kronecker system, the simulator oracle uses the matrix
//! exponential, gradients come from central differences and the proximal
//! oracle scans a 1-D grid.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sparsewac::grid::{CostProvenance, CostSpec, LinearPlant};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random Hurwitz matrix: a Gaussian matrix shifted left of its spectral
/// abscissa bound.
pub fn random_hurwitz(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = randn(rng, n, n);
    let shift = a.norm() + 0.5;
    a - DMatrix::identity(n, n) * shift
}

/// `AᵀP + PA = −W` by solving `(I⊗Aᵀ + Aᵀ⊗I) vec(P) = −vec(W)` densely.
pub fn kron_lyapunov(a: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    let big = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -DVector::from_column_slice(w.as_slice());
    let x = big.lu().solve(&rhs).expect("Kronecker system nonsingular");
    DMatrix::from_column_slice(n, n, x.as_slice())
}

/// Stabilizable random plant with `B1 = I`: Gaussian `A/√n`, Gaussian `B2`.
pub fn random_plant(rng: &mut ChaCha8Rng, n: usize, p: usize) -> LinearPlant {
    let a = randn(rng, n, n) / (n as f64).sqrt();
    let b2 = randn(rng, n, p);
    LinearPlant::unlabeled(a, DMatrix::identity(n, n), b2).expect("valid plant")
}

pub fn identity_cost(n: usize, p: usize) -> CostSpec {
    CostSpec::new(DMatrix::identity(n, n), DMatrix::identity(p, p), CostProvenance::External)
        .expect("valid cost")
}

/// `trace(B1ᵀ P B1)` with `P` from the Kronecker oracle.
pub fn oracle_h2(plant: &LinearPlant, cost: &CostSpec, k: &DMatrix<f64>) -> f64 {
    let acl = &plant.a - &plant.b2 * k;
    let w = &cost.q + k.transpose() * &cost.r * k;
    let p = kron_lyapunov(&acl, &w);
    (plant.b1.transpose() * p * &plant.b1).trace()
}

/// Central finite differences of `f` at `k` with step `h`.
pub fn fd_gradient<F: Fn(&DMatrix<f64>) -> f64>(f: F, k: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| {
        let mut plus = k.clone();
        let mut minus = k.clone();
        plus[(i, j)] += h;
        minus[(i, j)] -= h;
        (f(&plus) - f(&minus)) / (2.0 * h)
    })
}

/// `x(t) = e^{At} x0`.
pub fn expm_response(a: &DMatrix<f64>, x0: &DVector<f64>, t: f64) -> DVector<f64> {
    (a * t).exp() * x0
}

/// Minimizer of `τ|g| + ½(g − v)²` by scanning a grid of spacing `step`
/// around `v`, then rescanning finer around the best point.
pub fn prox_grid(v: f64, tau: f64, step: f64) -> f64 {
    let objective = |g: f64| tau * g.abs() + 0.5 * (g - v) * (g - v);
    let scan = |lo: f64, hi: f64, h: f64| {
        let count = ((hi - lo) / h).ceil() as usize;
        (0..=count)
            .map(|i| lo + i as f64 * h)
            .chain(std::iter::once(0.0))
            .min_by(|a, b| objective(*a).total_cmp(&objective(*b)))
            .expect("nonempty grid")
    };
    let radius = v.abs() + tau + 1.0;
    let coarse = scan(-radius, radius, step);
    scan(coarse - step, coarse + step, step / 1000.0)
}

/// Rounds to `digits` significant digits.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

/// The five inter-area mode eigenvalue pairs (re, im) with their damping
/// ratios and frequencies (Hz) as tabulated for the 10-machine system.
pub const INTER_AREA_MODES: [(f64, f64, f64, f64); 5] = [
    (-0.6347, 3.7672, 0.16614, 0.59956),
    (-0.7738, 6.7684, 0.11358, 1.0772),
    (-1.1310, 5.7304, 0.19364, 0.91202),
    (-1.1467, 5.9095, 0.19049, 0.94052),
    (-1.5219, 5.8923, 0.25009, 0.93778),
];

/// Path of the built `sparsewac` binary.
pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sparsewac")
}

pub fn data_file(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}
