//! ADMM for `min J(K) + γ Σ w_ij |K_ij|` and its reweighted variant.

use nalgebra::DMatrix;

use super::descent::{Descent, Norm};
use super::gain::FeedbackGain;
use super::objective::H2Problem;
use crate::error::{Error, Result};
use crate::grid::{CostSpec, LinearPlant};
use crate::linalg::{ensure_shape, spectrum};

/// F-step line-search window. A nonmonotone test lets the Barzilai–Borwein
/// steps through on badly conditioned plants.
const NONMONOTONE_MEMORY: usize = 10;

/// Entrywise soft threshold `sign(v)·max(|v| − τ, 0)`.
///
/// Panics if the shapes differ.
pub fn shrink(v: &DMatrix<f64>, tau: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(v.shape(), tau.shape(), "shrink: shape mismatch");
    v.zip_map(tau, |x, t| x.signum() * (x.abs() - t).max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmOptions {
    /// Augmented-Lagrangian penalty ρ.
    pub rho: f64,
    /// Stop once `‖F − G‖_F ≤ primal_tol` ...
    pub primal_tol: f64,
    /// ... and `ρ ‖G − G_prev‖_F ≤ dual_tol`.
    pub dual_tol: f64,
    pub max_iters: usize,
    /// Weight updates `w = 1/(|K| + ε)` after the first solve.
    pub reweight_steps: usize,
    pub reweight_eps: f64,
    /// F-step stops when the Frobenius norm of its gradient falls below
    /// `inner_tol · max(1, objective)`.
    pub inner_tol: f64,
    pub inner_max_iters: usize,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        Self {
            rho: 100.0,
            primal_tol: 1e-4,
            dual_tol: 1e-4,
            max_iters: 10_000,
            reweight_steps: 5,
            reweight_eps: 1e-3,
            inner_tol: 1e-8,
            inner_max_iters: 500,
        }
    }
}

impl AdmmOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("primal_tol", self.primal_tol),
            ("dual_tol", self.dual_tol),
            ("reweight_eps", self.reweight_eps),
            ("inner_tol", self.inner_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iters == 0 || self.inner_max_iters == 0 {
            return Err(Error::InvalidParameter("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of [`admm_solve`] or [`reweighted_solve`].
#[derive(Debug, Clone)]
pub struct AdmmResult {
    /// The sparse iterate `G`, carrying the weights of the last solve.
    pub gain: FeedbackGain,
    /// The last F-step iterate; always stabilizing.
    pub f: DMatrix<f64>,
    /// `J(G)` if `G` is stabilizing.
    pub j: Option<f64>,
    pub stabilizing: bool,
    /// Both stopping tests met and `G` stabilizing.
    pub converged: bool,
    /// ADMM iterations, summed over reweighting rounds.
    pub iterations: usize,
    pub inner_iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Weighted solves performed (1 + reweight steps).
    pub solves: usize,
}

/// One ADMM run from the stabilizing `k_init`.
pub fn admm_solve(
    plant: &LinearPlant,
    cost: &CostSpec,
    gamma: f64,
    weights: &DMatrix<f64>,
    k_init: &DMatrix<f64>,
    opts: &AdmmOptions,
) -> Result<AdmmResult> {
    opts.validate()?;
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma must be nonnegative, got {gamma}")));
    }
    let problem = H2Problem::new(plant, cost)?;
    ensure_shape(k_init, plant.p(), plant.n(), "K_init")?;
    ensure_shape(weights, plant.p(), plant.n(), "weights")?;
    if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter("weights must be positive and finite".into()));
    }
    let open = spectrum(&plant.closed_loop(k_init))?;
    if !open.is_hurwitz {
        return Err(Error::NotStabilizing {
            max_real_part: open.max_real_part,
        });
    }

    let rho = opts.rho;
    let tau = weights * (gamma / rho);
    let mut f = k_init.clone();
    let mut g = k_init.clone();
    let mut u = DMatrix::<f64>::zeros(plant.p(), plant.n());
    let mut iterations = 0;
    let mut inner_iterations = 0;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut met = false;
    let mut step = 1.0 / rho;

    while iterations < opts.max_iters {
        iterations += 1;
        let v = &g - &u;
        let descent = Descent {
            problem: &problem,
            mask: None,
            prox: Some((rho, &v)),
            tol: opts.inner_tol,
            relative_tol: true,
            norm: Norm::Frobenius,
            max_iters: opts.inner_max_iters,
            memory: NONMONOTONE_MEMORY,
        };
        let out = descent.run(f.clone(), step)?;
        step = out.step;
        inner_iterations += out.iterations;
        f = out.k;

        let g_prev = g;
        g = shrink(&(&f + &u), &tau);
        u += &f - &g;
        primal = (&f - &g).norm();
        dual = rho * (&g - &g_prev).norm();
        if primal <= opts.primal_tol && dual <= opts.dual_tol {
            met = true;
            break;
        }
    }

    let j = problem.cost(&g).ok();
    let stabilizing = j.is_some();
    let gain = FeedbackGain::new(g).with_weights(weights.clone())?;
    log::debug!(
        "admm gamma={gamma:e}: {iterations} iterations, primal {primal:.3e}, dual {dual:.3e}, stabilizing {stabilizing}"
    );
    Ok(AdmmResult {
        gain,
        f,
        j,
        stabilizing,
        converged: met && stabilizing,
        iterations,
        inner_iterations,
        primal_residual: primal,
        dual_residual: dual,
        solves: 1,
    })
}

/// `1/(|K_ij| + ε)`.
pub fn reweight(k: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    k.map(|v| 1.0 / (v.abs() + eps))
}

/// ADMM with all-ones weights, followed by `opts.reweight_steps` rounds that
/// recompute the weights from the current gain and solve again, warm-started
/// from the previous F iterate.
pub fn reweighted_solve(
    plant: &LinearPlant,
    cost: &CostSpec,
    gamma: f64,
    k_init: &DMatrix<f64>,
    opts: &AdmmOptions,
) -> Result<AdmmResult> {
    let mut weights = DMatrix::from_element(plant.p(), plant.n(), 1.0);
    let mut result = admm_solve(plant, cost, gamma, &weights, k_init, opts)?;
    for _ in 0..opts.reweight_steps {
        weights = reweight(result.gain.matrix(), opts.reweight_eps);
        let next = admm_solve(plant, cost, gamma, &weights, &result.f, opts)?;
        result = AdmmResult {
            iterations: result.iterations + next.iterations,
            inner_iterations: result.inner_iterations + next.inner_iterations,
            solves: result.solves + 1,
            ..next
        };
    }
    Ok(result)
}
