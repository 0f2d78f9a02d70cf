//! H2 optimization over a fixed sparsity pattern.

use nalgebra::DMatrix;

use super::descent::{Descent, Norm};
use super::gain::FeedbackGain;
use super::objective::H2Problem;
use crate::error::{Error, Result};
use crate::grid::{CostSpec, LinearPlant};
use crate::linalg::ensure_shape;

#[derive(Debug, Clone, PartialEq)]
pub struct PolishOptions {
    /// Stop once the masked gradient has max-norm at most this.
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl Default for PolishOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            max_iters: 20_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolishResult {
    pub gain: FeedbackGain,
    pub j: f64,
    pub j_init: f64,
    pub iterations: usize,
    /// Max-norm of the masked gradient at the returned gain.
    pub grad_norm: f64,
    pub converged: bool,
}

/// [`polish_with`] using default options.
pub fn polish(
    plant: &LinearPlant,
    cost: &CostSpec,
    pattern: &DMatrix<bool>,
    k_init: &DMatrix<f64>,
) -> Result<PolishResult> {
    polish_with(plant, cost, pattern, k_init, &PolishOptions::default())
}

/// Minimizes `J` over gains supported on `pattern` by masked gradient descent
/// from `k_init`, which must be stabilizing and supported on `pattern`.
pub fn polish_with(
    plant: &LinearPlant,
    cost: &CostSpec,
    pattern: &DMatrix<bool>,
    k_init: &DMatrix<f64>,
    opts: &PolishOptions,
) -> Result<PolishResult> {
    let problem = H2Problem::new(plant, cost)?;
    ensure_shape(k_init, plant.p(), plant.n(), "K_init")?;
    if pattern.shape() != k_init.shape() {
        return Err(Error::DimensionMismatch {
            what: "pattern columns".into(),
            expected: k_init.ncols(),
            found: pattern.ncols(),
        });
    }
    if k_init.zip_map(pattern, |v, keep| v != 0.0 && !keep).iter().any(|&b| b) {
        return Err(Error::InvalidParameter(
            "initial gain has entries outside the pattern".into(),
        ));
    }
    let j_init = match problem.cost(k_init) {
        Ok(j) => j,
        Err(Error::Unstable { .. }) => return Err(Error::PolishStalledUnstable),
        Err(e) => return Err(e),
    };
    let descent = Descent {
        problem: &problem,
        mask: Some(pattern),
        prox: None,
        tol: opts.grad_tol,
        relative_tol: false,
        norm: Norm::Max,
        max_iters: opts.max_iters,
        memory: 1,
    };
    let g0 = problem.cost_and_gradient(k_init)?.1;
    let initial_step = 1.0 / g0.norm().max(1.0);
    let out = descent.run(k_init.clone(), initial_step)?;
    let gain = FeedbackGain::with_pattern(out.k, pattern.clone())?;
    Ok(PolishResult {
        gain,
        j: out.j,
        j_init,
        iterations: out.iterations,
        grad_norm: out.grad_norm,
        converged: out.converged,
    })
}
