//! Fixed-step RK4 simulation of the closed loop with input noise and
//! Padé-modeled measurement delays.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::delay::pade_block;
use super::modes::{eigvec_initial_state, ModeSelector};
use crate::error::{Error, Result};
use crate::grid::LinearPlant;
use crate::linalg::{ensure_shape, spectrum};

/// Default RNG seed; fixed so that runs are reproducible.
pub const DEFAULT_SEED: u64 = 20_160_101;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Zero,
    Vector(DVector<f64>),
    /// Eigenvector direction of an open-loop mode of `A`.
    OpenLoopMode(ModeSelector),
}

/// The term `K[input, state]·x_state` of the feedback arrives `delay` seconds
/// late.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayedChannel {
    pub input: usize,
    pub state: usize,
    pub delay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayModel {
    /// Delays are ignored.
    None,
    Pade(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub initial: InitialState,
    pub horizon: f64,
    pub step: f64,
    /// Standard deviation per disturbance input (column of `B1`); a single
    /// value applies to all of them.
    pub noise_std: Vec<f64>,
    pub delayed: Vec<DelayedChannel>,
    pub delay_model: DelayModel,
    pub seed: u64,
}

impl Default for SimScenario {
    fn default() -> Self {
        Self {
            initial: InitialState::Zero,
            horizon: 10.0,
            step: 0.01,
            noise_std: vec![0.0],
            delayed: Vec::new(),
            delay_model: DelayModel::Pade(super::delay::DEFAULT_PADE_ORDER),
            seed: DEFAULT_SEED,
        }
    }
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidParameter(format!("step must be positive, got {}", self.step)));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon must be nonnegative, got {}",
                self.horizon
            )));
        }
        if let Some(s) = self.noise_std.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise std must be nonnegative, got {s}")));
        }
        if let Some(c) = self.delayed.iter().find(|c| !(c.delay >= 0.0) || !c.delay.is_finite()) {
            return Err(Error::InvalidParameter(format!("delay must be nonnegative, got {}", c.delay)));
        }
        Ok(())
    }
}

/// Sampled closed-loop response; row `k` of every matrix is time `t[k]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    /// Plant states followed by any Padé states.
    pub states: DMatrix<f64>,
    /// Applied inputs `u`.
    pub inputs: DMatrix<f64>,
    /// `θ_g − θ_0` for generators `g = 1..`.
    pub angle_differences: DMatrix<f64>,
    /// Number of plant states (the rest are delay states).
    pub plant_states: usize,
}

/// Closed-loop matrices including delay states: `ẋ = A_cl x + B1 η`,
/// `u = −K_u x`.
struct Augmented {
    a_cl: DMatrix<f64>,
    b1: DMatrix<f64>,
    k_u: DMatrix<f64>,
}

fn augment(plant: &LinearPlant, k: &DMatrix<f64>, sc: &SimScenario) -> Result<Augmented> {
    let (n, p) = (plant.n(), plant.p());
    let mut seen = Vec::new();
    for c in &sc.delayed {
        if c.input >= p || c.state >= n {
            return Err(Error::Channel(format!(
                "delayed channel ({}, {}) out of range for {p} inputs and {n} states",
                c.input, c.state
            )));
        }
        if seen.contains(&(c.input, c.state)) {
            return Err(Error::Channel(format!("channel ({}, {}) delayed twice", c.input, c.state)));
        }
        seen.push((c.input, c.state));
    }
    let active: Vec<&DelayedChannel> = match sc.delay_model {
        DelayModel::None => Vec::new(),
        DelayModel::Pade(_) => sc.delayed.iter().filter(|c| c.delay > 0.0).collect(),
    };
    let order = match sc.delay_model {
        DelayModel::Pade(o) => o,
        DelayModel::None => 0,
    };
    let total = n + order * active.len();

    let mut a = DMatrix::zeros(total, total);
    a.view_mut((0, 0), (n, n)).copy_from(&plant.a);
    let mut k_u = DMatrix::zeros(p, total);
    k_u.view_mut((0, 0), (p, n)).copy_from(k);
    for (idx, c) in active.iter().enumerate() {
        let blk = pade_block(c.delay, order)?;
        let off = n + idx * order;
        let gain = k[(c.input, c.state)];
        a.view_mut((off, off), (order, order)).copy_from(&blk.a);
        a.view_mut((off, c.state), (order, 1)).copy_from(&blk.b);
        // The delayed measurement y = C z + D x_s replaces x_s in this entry.
        k_u[(c.input, c.state)] += gain * (blk.d[(0, 0)] - 1.0);
        for j in 0..order {
            k_u[(c.input, off + j)] += gain * blk.c[(0, j)];
        }
    }
    let mut b2 = DMatrix::zeros(total, p);
    b2.view_mut((0, 0), (n, p)).copy_from(&plant.b2);
    let mut b1 = DMatrix::zeros(total, plant.q());
    b1.view_mut((0, 0), (n, plant.q())).copy_from(&plant.b1);
    Ok(Augmented {
        a_cl: a - b2 * &k_u,
        b1,
        k_u,
    })
}

/// Integrates `ẋ = (A − B2K)x + B1η` with RK4, holding the noise sample
/// `η ~ N(0, σ²/h)` constant over each step of length `h`.
pub fn simulate(plant: &LinearPlant, k: &DMatrix<f64>, scenario: &SimScenario) -> Result<Trajectory> {
    scenario.validate()?;
    ensure_shape(k, plant.p(), plant.n(), "K")?;
    let n = plant.n();
    let q = plant.q();
    let noise: Vec<f64> = match scenario.noise_std.len() {
        0 => vec![0.0; q],
        1 => vec![scenario.noise_std[0]; q],
        len if len == q => scenario.noise_std.clone(),
        len => {
            return Err(Error::DimensionMismatch {
                what: "noise standard deviations".into(),
                expected: q,
                found: len,
            })
        }
    };
    let aug = augment(plant, k, scenario)?;
    let total = aug.a_cl.nrows();

    let h = scenario.step;
    let max_abs = spectrum(&aug.a_cl)?
        .eigenvalues
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max);
    if max_abs * h > 2.0 {
        return Err(Error::StepTooLarge {
            step: h,
            product: max_abs * h,
            bound: 2.0 / max_abs,
        });
    }

    let x0 = match &scenario.initial {
        InitialState::Zero => DVector::zeros(n),
        InitialState::Vector(v) => {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "initial state".into(),
                    expected: n,
                    found: v.len(),
                });
            }
            v.clone()
        }
        InitialState::OpenLoopMode(sel) => eigvec_initial_state(&plant.a, *sel)?,
    };
    let mut x = DVector::zeros(total);
    x.rows_mut(0, n).copy_from(&x0);

    let steps = (scenario.horizon / h).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let noisy = noise.iter().any(|&s| s > 0.0);
    let scale = 1.0 / h.sqrt();

    let mut states = DMatrix::zeros(steps + 1, total);
    let mut t = Vec::with_capacity(steps + 1);
    states.row_mut(0).copy_from(&x.transpose());
    t.push(0.0);
    let f = |x: &DVector<f64>, w: &DVector<f64>| &aug.a_cl * x + w;
    for step in 1..=steps {
        let w = if noisy {
            let eta = DVector::from_iterator(
                q,
                noise.iter().map(|&s| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    s * scale * z
                }),
            );
            &aug.b1 * eta
        } else {
            DVector::zeros(total)
        };
        let k1 = f(&x, &w);
        let k2 = f(&(&x + &k1 * (h / 2.0)), &w);
        let k3 = f(&(&x + &k2 * (h / 2.0)), &w);
        let k4 = f(&(&x + &k3 * h), &w);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        states.row_mut(step).copy_from(&x.transpose());
        t.push(step as f64 * h);
    }

    let inputs = -(&states * aug.k_u.transpose());
    let angles = &plant.labels.angles;
    let mut angle_differences = DMatrix::zeros(steps + 1, angles.len().saturating_sub(1));
    for (g, &a) in angles.iter().enumerate().skip(1) {
        let diff = states.column(a) - states.column(angles[0]);
        angle_differences.set_column(g - 1, &diff);
    }
    Ok(Trajectory {
        t,
        states,
        inputs,
        angle_differences,
        plant_states: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar() -> LinearPlant {
        LinearPlant::unlabeled(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn exponential_decay() {
        let sc = SimScenario {
            initial: InitialState::Vector(DVector::from_element(1, 1.0)),
            horizon: 1.0,
            step: 0.01,
            ..Default::default()
        };
        let tr = simulate(&scalar(), &DMatrix::zeros(1, 1), &sc).unwrap();
        let last = tr.states[(tr.t.len() - 1, 0)];
        assert!((last - (-1f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn step_too_large() {
        let sc = SimScenario {
            step: 3.0,
            ..Default::default()
        };
        assert!(matches!(
            simulate(&scalar(), &DMatrix::zeros(1, 1), &sc),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn delay_adds_states() {
        let sc = SimScenario {
            delayed: vec![DelayedChannel {
                input: 0,
                state: 0,
                delay: 0.75,
            }],
            horizon: 0.1,
            ..Default::default()
        };
        let tr = simulate(&scalar(), &DMatrix::from_element(1, 1, 0.5), &sc).unwrap();
        assert_eq!(tr.states.ncols(), 3);
    }
}
