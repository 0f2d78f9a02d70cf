//! Gradient descent with Barzilai–Borwein steps, Armijo backtracking and a
//! stability guard, shared by the ADMM F-step and polishing.

use nalgebra::DMatrix;

use super::objective::H2Problem;
use crate::error::Result;

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
/// Relative size of objective changes treated as round-off. Costs come from
/// Lyapunov solves whose error grows with the closed-loop conditioning.
const FLAT_RTOL: f64 = 1e3 * f64::EPSILON;

#[derive(Debug, Clone, Copy)]
pub(crate) enum Norm {
    Frobenius,
    Max,
}

/// Smooth objective `J(K) + ρ/2 ‖K − V‖²` restricted to an optional mask.
pub(crate) struct Descent<'p, 'a> {
    pub problem: &'p H2Problem<'a>,
    pub mask: Option<&'p DMatrix<bool>>,
    pub prox: Option<(f64, &'p DMatrix<f64>)>,
    pub tol: f64,
    /// Scale `tol` by `max(1, |objective at the start|)`.
    pub relative_tol: bool,
    pub norm: Norm,
    pub max_iters: usize,
    /// Armijo compares against the largest objective of the last `memory`
    /// iterates; 1 gives a monotone search.
    pub memory: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct DescentOutcome {
    pub k: DMatrix<f64>,
    pub j: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// Step proposed for the next iteration.
    pub step: f64,
}

struct Point {
    k: DMatrix<f64>,
    j: f64,
    phi: f64,
    g: DMatrix<f64>,
}

impl Descent<'_, '_> {
    fn point(&self, k: DMatrix<f64>) -> Result<Point> {
        let eval = self.problem.evaluate(&k)?;
        let mut g = self.problem.gradient_at(&k, &eval)?;
        let mut phi = eval.j;
        if let Some((rho, v)) = self.prox {
            let d = &k - v;
            phi += 0.5 * rho * d.norm_squared();
            g += d * rho;
        }
        if let Some(mask) = self.mask {
            g.zip_apply(mask, |x, keep| {
                if !keep {
                    *x = 0.0
                }
            });
        }
        Ok(Point { k, j: eval.j, phi, g })
    }

    fn measure(&self, g: &DMatrix<f64>) -> f64 {
        match self.norm {
            Norm::Frobenius => g.norm(),
            Norm::Max => g.amax(),
        }
    }

    /// Runs from the stabilizing `k0`; the first evaluation's error is
    /// returned unchanged if `k0` is not stabilizing.
    pub fn run(&self, k0: DMatrix<f64>, initial_step: f64) -> Result<DescentOutcome> {
        let mut cur = self.point(k0)?;
        let tol = if self.relative_tol {
            self.tol * cur.phi.abs().max(1.0)
        } else {
            self.tol
        };
        let mut step = initial_step;
        let mut history = std::collections::VecDeque::with_capacity(self.memory.max(1));
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iters {
            let gn = self.measure(&cur.g);
            if gn <= tol {
                converged = true;
                break;
            }
            let g2 = cur.g.norm_squared();
            if history.len() == self.memory.max(1) {
                history.pop_front();
            }
            history.push_back(cur.phi);
            let reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut t = step;
            let mut next = None;
            for _ in 0..MAX_BACKTRACKS {
                let trial = &cur.k - &cur.g * t;
                if let Ok(p) = self.point(trial) {
                    let armijo = p.phi <= reference - ARMIJO_C * t * g2;
                    // Below the evaluation noise the decrease test is
                    // meaningless; accept steps that shrink the gradient.
                    // A monotone search additionally forbids any increase.
                    let noise = FLAT_RTOL * cur.phi.abs();
                    let flat = (p.phi - cur.phi).abs() <= noise
                        && (self.memory > 1 || p.phi <= cur.phi)
                        && p.g.norm_squared() < g2;
                    if armijo || flat {
                        next = Some(p);
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some(next) = next else {
                break;
            };
            iterations += 1;
            let s = &next.k - &cur.k;
            let y = &next.g - &cur.g;
            let sy = s.dot(&y);
            step = if sy > 0.0 {
                (s.norm_squared() / sy).clamp(1e-14, 1e8)
            } else {
                (2.0 * t).min(1e8)
            };
            cur = next;
        }
        let grad_norm = self.measure(&cur.g);
        if grad_norm <= tol {
            converged = true;
        }
        Ok(DescentOutcome {
            k: cur.k,
            j: cur.j,
            iterations,
            grad_norm,
            converged,
            step,
        })
    }
}
