use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{LinearPlant, StateLabels};

/// Entries with magnitude at or below this count as structural zeros.
pub const CARD_TOL: f64 = 1e-8;

/// A `p × n` state-feedback gain (`u = −K x`) with its sparsity pattern and
/// ℓ1 weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackGain {
    k: DMatrix<f64>,
    pattern: DMatrix<bool>,
    weights: DMatrix<f64>,
}

impl FeedbackGain {
    /// Wraps `k`, treating entries with `|k_ij| ≤ CARD_TOL` as zeros.
    /// Weights start at one.
    pub fn new(k: DMatrix<f64>) -> Self {
        let pattern = k.map(|v| v.abs() > CARD_TOL);
        let weights = DMatrix::from_element(k.nrows(), k.ncols(), 1.0);
        Self::assemble(k, pattern, weights)
    }

    /// Restricts `k` to `pattern`; entries outside it are set to zero.
    pub fn with_pattern(k: DMatrix<f64>, pattern: DMatrix<bool>) -> Result<Self> {
        if k.shape() != pattern.shape() {
            return Err(Error::DimensionMismatch {
                what: "pattern columns".into(),
                expected: k.ncols(),
                found: pattern.ncols(),
            });
        }
        let weights = DMatrix::from_element(k.nrows(), k.ncols(), 1.0);
        Ok(Self::assemble(k, pattern, weights))
    }

    fn assemble(mut k: DMatrix<f64>, pattern: DMatrix<bool>, weights: DMatrix<f64>) -> Self {
        k.zip_apply(&pattern, |v, keep| {
            if !keep {
                *v = 0.0
            }
        });
        Self { k, pattern, weights }
    }

    /// Replaces the weights; all must be strictly positive and finite.
    pub fn with_weights(mut self, weights: DMatrix<f64>) -> Result<Self> {
        if weights.shape() != self.k.shape() {
            return Err(Error::DimensionMismatch {
                what: "weight columns".into(),
                expected: self.k.ncols(),
                found: weights.ncols(),
            });
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("weights must be positive and finite".into()));
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.k
    }

    pub fn pattern(&self) -> &DMatrix<bool> {
        &self.pattern
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Number of entries with `|K_ij| > CARD_TOL`.
    pub fn card(&self) -> usize {
        card(&self.k)
    }
}

/// Number of entries with `|K_ij| > CARD_TOL`.
pub fn card(k: &DMatrix<f64>) -> usize {
    k.iter().filter(|v| v.abs() > CARD_TOL).count()
}

/// Whether entry `(input, state)` couples a generator to itself.
pub fn is_local(labels: &StateLabels, input: usize, state: usize) -> bool {
    matches!(
        (labels.input_generator[input], labels.state_generator[state]),
        (Some(a), Some(b)) if a == b
    )
}

/// Nonzeros that are not local (unlabeled entries count as remote).
pub fn card_remote(k: &DMatrix<f64>, labels: &StateLabels) -> usize {
    let mut count = 0;
    for i in 0..k.nrows() {
        for j in 0..k.ncols() {
            if k[(i, j)].abs() > CARD_TOL && !is_local(labels, i, j) {
                count += 1;
            }
        }
    }
    count
}

/// Interpretation of the noise entering through `B1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Noise added to the control channels (`B1 = B2`).
    InputChannel,
    /// Exogenous disturbance with its own input matrix.
    Disturbance,
}

/// The white-noise input `η` of the plant.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub b1: DMatrix<f64>,
    pub kind: NoiseKind,
}

impl NoiseModel {
    pub fn from_plant(plant: &LinearPlant) -> Self {
        let kind = if plant.b1 == plant.b2 {
            NoiseKind::InputChannel
        } else {
            NoiseKind::Disturbance
        };
        Self {
            b1: plant.b1.clone(),
            kind,
        }
    }

    pub fn q(&self) -> usize {
        self.b1.ncols()
    }
}
