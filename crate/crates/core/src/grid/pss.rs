//! Local power system stabilizers: washout plus two lead/lag stages.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::plant::LinearPlant;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PssParams {
    pub gain: f64,
    pub washout: f64,
    /// `(T_n, T_d)` for each lead/lag stage.
    pub lead_lag: [(f64, f64); 2],
}

impl PssParams {
    pub fn validate(&self) -> Result<()> {
        let times = [
            self.washout,
            self.lead_lag[0].0,
            self.lead_lag[0].1,
            self.lead_lag[1].0,
            self.lead_lag[1].1,
        ];
        if times.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter("PSS time constants must be positive".into()));
        }
        if !(self.gain >= 0.0) || !self.gain.is_finite() {
            return Err(Error::InvalidParameter("PSS gain must be nonnegative".into()));
        }
        Ok(())
    }

    /// Direct evaluation of `k·T_w s/(1+T_w s)·Π(1+T_n s)/(1+T_d s)`.
    pub fn transfer(&self, s: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let mut h = self.gain * self.washout * s / (one + self.washout * s);
        for &(tn, td) in &self.lead_lag {
            h *= (one + tn * s) / (one + td * s);
        }
        h
    }
}

/// Continuous-time state-space block `(A, B, C, D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateSpace {
    /// `C (sI − A)⁻¹ B + D`; `None` if `sI − A` is singular.
    pub fn frequency_response(&self, s: Complex64) -> Option<DMatrix<Complex64>> {
        let n = self.a.nrows();
        let d = self.d.map(|v| Complex64::new(v, 0.0));
        if n == 0 {
            return Some(d);
        }
        let si_a = DMatrix::<Complex64>::identity(n, n) * s - self.a.map(|v| Complex64::new(v, 0.0));
        let x = si_a.lu().solve(&self.b.map(|v| Complex64::new(v, 0.0)))?;
        Some(self.c.map(|v| Complex64::new(v, 0.0)) * x + d)
    }
}

/// Three-state series realization of the stabilizer.
///
/// Washout: `ẋ₁ = (u − x₁)/T_w`, `y₁ = u − x₁`. Each lead/lag:
/// `ẋ = (u − x)/T_d`, `y = (T_n/T_d) u + (1 − T_n/T_d) x`.
pub fn realize_pss(p: &PssParams) -> Result<StateSpace> {
    p.validate()?;
    let mut a = DMatrix::<f64>::zeros(3, 3);
    let mut b = DMatrix::<f64>::zeros(3, 1);
    // Running output map of the cascade so far: y = c x + d u.
    let mut c = DMatrix::<f64>::zeros(1, 3);
    let mut d = 1.0;

    let tw = p.washout;
    a[(0, 0)] = -1.0 / tw;
    b[(0, 0)] = 1.0 / tw;
    c[(0, 0)] = -1.0;

    for (stage, &(tn, td)) in p.lead_lag.iter().enumerate() {
        let idx = stage + 1;
        // State driven by the previous output: ẋ = (c x + d u − x_idx)/T_d.
        for j in 0..3 {
            a[(idx, j)] += c[(0, j)] / td;
        }
        a[(idx, idx)] -= 1.0 / td;
        b[(idx, 0)] = d / td;
        let ratio = tn / td;
        c *= ratio;
        c[(0, idx)] += 1.0 - ratio;
        d *= ratio;
    }
    Ok(StateSpace {
        a,
        b,
        c: c * p.gain,
        d: DMatrix::from_element(1, 1, d * p.gain),
    })
}

/// Closes local stabilizer loops `u_g = −H_g(s) ω_g` around a plant.
///
/// Each stabilizer measures the frequency of its generator and acts through
/// the input channel labeled with the same generator. Stabilizer states are
/// appended after the existing states and labeled as remaining states of
/// that generator. `B1` and `B2` gain zero rows.
pub fn compose_pss(plant: &LinearPlant, loops: &[(usize, PssParams)]) -> Result<LinearPlant> {
    let labels = &plant.labels;
    let mut a = plant.a.clone();
    let mut b1 = plant.b1.clone();
    let mut b2 = plant.b2.clone();
    let mut new_labels = labels.clone();
    for &(g, params) in loops {
        if g >= labels.n_generators() {
            return Err(Error::InvalidParameter(format!("no generator {g} for PSS")));
        }
        let input = labels
            .input_generator
            .iter()
            .position(|&ig| ig == Some(g))
            .ok_or_else(|| Error::InvalidParameter(format!("generator {g} has no input channel")))?;
        let omega = labels.frequencies[g];
        let blk = realize_pss(&params)?;
        let n = a.nrows();
        let k = blk.a.nrows();
        let bg = b2.column(input).into_owned();
        let mut next = DMatrix::<f64>::zeros(n + k, n + k);
        next.view_mut((0, 0), (n, n)).copy_from(&a);
        // u = −(C ξ + D ω)
        for i in 0..n {
            next[(i, omega)] -= bg[i] * blk.d[(0, 0)];
            for j in 0..k {
                next[(i, n + j)] -= bg[i] * blk.c[(0, j)];
            }
        }
        // ξ̇ = A_pss ξ + B_pss ω
        next.view_mut((n, n), (k, k)).copy_from(&blk.a);
        for j in 0..k {
            next[(n + j, omega)] += blk.b[(j, 0)];
        }
        a = next;
        b1 = b1.insert_rows(n, k, 0.0);
        b2 = b2.insert_rows(n, k, 0.0);
        for j in 0..k {
            new_labels.remaining.push(n + j);
            new_labels.state_generator.push(Some(g));
        }
    }
    LinearPlant::new(a, b1, b2, new_labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PssParams {
        PssParams {
            gain: 12.0,
            washout: 3.0,
            lead_lag: [(0.1, 0.01), (0.1, 0.01)],
        }
    }

    #[test]
    fn dc_gain_is_zero() {
        let ss = realize_pss(&params()).unwrap();
        let h = ss.frequency_response(Complex64::new(0.0, 0.0)).unwrap();
        assert!(h[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn high_frequency_gain() {
        let ss = realize_pss(&params()).unwrap();
        assert!((ss.d[(0, 0)] - 1200.0).abs() < 1e-9);
    }

    #[test]
    fn matches_rational_evaluation() {
        let p = PssParams {
            gain: 2.5,
            washout: 1.7,
            lead_lag: [(0.3, 0.05), (0.2, 0.7)],
        };
        let ss = realize_pss(&p).unwrap();
        for w in [0.01, 0.3, 1.0, 7.0, 120.0] {
            let s = Complex64::new(0.0, w);
            let h = ss.frequency_response(s).unwrap()[(0, 0)];
            assert!((h - p.transfer(s)).norm() <= 1e-10 * p.transfer(s).norm().max(1.0));
        }
    }

    #[test]
    fn nonpositive_time_constant_is_rejected() {
        let mut p = params();
        p.lead_lag[1].1 = 0.0;
        assert!(realize_pss(&p).is_err());
    }
}
