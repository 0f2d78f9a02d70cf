//! H2 cost `J(K) = trace(B1ᵀ P B1)` and its gradient.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::grid::{CostSpec, LinearPlant};
use crate::linalg::{ensure_shape, symmetrize, LyapunovSolver};

/// Precomputed data for repeated evaluations on one plant/cost pair.
#[derive(Debug, Clone)]
pub struct H2Problem<'a> {
    pub plant: &'a LinearPlant,
    pub cost: &'a CostSpec,
    b1b1t: DMatrix<f64>,
}

/// Cost together with the Gramians that produced it.
#[derive(Debug, Clone)]
pub struct H2Eval {
    pub j: f64,
    /// Closed-loop observability Gramian.
    pub p: DMatrix<f64>,
    solver: LyapunovSolver,
}

impl<'a> H2Problem<'a> {
    pub fn new(plant: &'a LinearPlant, cost: &'a CostSpec) -> Result<Self> {
        ensure_shape(&cost.q, plant.n(), plant.n(), "Q")?;
        ensure_shape(&cost.r, plant.p(), plant.p(), "R")?;
        let b1b1t = symmetrize(&(&plant.b1 * plant.b1.transpose()));
        Ok(Self { plant, cost, b1b1t })
    }

    pub fn n(&self) -> usize {
        self.plant.n()
    }

    pub fn p(&self) -> usize {
        self.plant.p()
    }

    /// Solves the closed-loop observability equation; fails with
    /// `Error::Unstable` if `A − B2K` is not Hurwitz.
    pub fn evaluate(&self, k: &DMatrix<f64>) -> Result<H2Eval> {
        ensure_shape(k, self.p(), self.n(), "K")?;
        let acl = self.plant.closed_loop(k);
        let solver = LyapunovSolver::new(&acl)?;
        let w = symmetrize(&(&self.cost.q + k.transpose() * &self.cost.r * k));
        let p = solver.observability(&w)?;
        let j = (self.plant.b1.transpose() * &p * &self.plant.b1).trace();
        Ok(H2Eval { j, p, solver })
    }

    pub fn cost(&self, k: &DMatrix<f64>) -> Result<f64> {
        Ok(self.evaluate(k)?.j)
    }

    /// `∇J = 2 (R K − B2ᵀ P) X` with `X` the controllability Gramian of
    /// the closed loop driven by `B1 B1ᵀ`.
    pub fn gradient_at(&self, k: &DMatrix<f64>, eval: &H2Eval) -> Result<DMatrix<f64>> {
        let x = eval.solver.controllability(&self.b1b1t)?;
        Ok((&self.cost.r * k - self.plant.b2.transpose() * &eval.p) * x * 2.0)
    }

    pub fn cost_and_gradient(&self, k: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
        let eval = self.evaluate(k)?;
        let g = self.gradient_at(k, &eval)?;
        Ok((eval.j, g))
    }
}

/// `trace(B1ᵀ P B1)` where `P` solves the closed-loop observability equation.
pub fn h2_cost(plant: &LinearPlant, cost: &CostSpec, k: &DMatrix<f64>) -> Result<f64> {
    H2Problem::new(plant, cost)?.cost(k)
}

/// Gradient of [`h2_cost`] with respect to `K`.
pub fn h2_gradient(plant: &LinearPlant, cost: &CostSpec, k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(H2Problem::new(plant, cost)?.cost_and_gradient(k)?.1)
}
