use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, ensure_shape, ensure_square};

/// State and input bookkeeping for a [`LinearPlant`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StateLabels {
    /// Angle state indices, one per generator, in generator order.
    pub angles: Vec<usize>,
    /// Frequency state indices, one per generator, in generator order.
    pub frequencies: Vec<usize>,
    /// All other states (exciters, PSS states, Padé states, ...).
    pub remaining: Vec<usize>,
    /// Generator owning each state, if any.
    pub state_generator: Vec<Option<usize>>,
    /// Generator actuated by each input, if any.
    pub input_generator: Vec<Option<usize>>,
}

impl StateLabels {
    pub fn n_generators(&self) -> usize {
        self.angles.len()
    }

    fn validate(&self, n: usize, p: usize) -> Result<()> {
        if self.angles.len() != self.frequencies.len() {
            return Err(Error::InvalidParameter(format!(
                "{} angle states but {} frequency states",
                self.angles.len(),
                self.frequencies.len()
            )));
        }
        let mut seen = vec![false; n];
        for &s in self.angles.iter().chain(&self.frequencies).chain(&self.remaining) {
            if s >= n {
                return Err(Error::InvalidParameter(format!(
                    "state label {s} out of range for {n} states"
                )));
            }
            if seen[s] {
                return Err(Error::InvalidParameter(format!("state {s} labeled twice")));
            }
            seen[s] = true;
        }
        if let Some(s) = seen.iter().position(|&v| !v) {
            return Err(Error::InvalidParameter(format!("state {s} has no label")));
        }
        if self.state_generator.len() != n {
            return Err(Error::DimensionMismatch {
                what: "state generator labels".into(),
                expected: n,
                found: self.state_generator.len(),
            });
        }
        if self.input_generator.len() != p {
            return Err(Error::DimensionMismatch {
                what: "input generator labels".into(),
                expected: p,
                found: self.input_generator.len(),
            });
        }
        let ng = self.n_generators();
        for (g, (&a, &f)) in self.angles.iter().zip(&self.frequencies).enumerate() {
            if self.state_generator[a] != Some(g) || self.state_generator[f] != Some(g) {
                return Err(Error::InvalidParameter(format!(
                    "angle/frequency states of generator {g} are labeled with another generator"
                )));
            }
        }
        let bad = self
            .state_generator
            .iter()
            .chain(&self.input_generator)
            .flatten()
            .find(|&&g| g >= ng);
        if let Some(g) = bad {
            return Err(Error::InvalidParameter(format!(
                "generator label {g} out of range for {ng} generators"
            )));
        }
        Ok(())
    }
}

/// `ẋ = A x + B1 η + B2 u` with labeled states.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPlant {
    pub a: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub labels: StateLabels,
}

impl LinearPlant {
    pub fn new(
        a: DMatrix<f64>,
        b1: DMatrix<f64>,
        b2: DMatrix<f64>,
        labels: StateLabels,
    ) -> Result<Self> {
        let plant = Self { a, b1, b2, labels };
        plant.validate()?;
        Ok(plant)
    }

    /// Plant with one generator-free label per state and input; useful for
    /// generic systems that are not swing models.
    pub fn unlabeled(a: DMatrix<f64>, b1: DMatrix<f64>, b2: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let p = b2.ncols();
        let labels = StateLabels {
            angles: Vec::new(),
            frequencies: Vec::new(),
            remaining: (0..n).collect(),
            state_generator: vec![None; n],
            input_generator: vec![None; p],
        };
        Self::new(a, b1, b2, labels)
    }

    pub fn validate(&self) -> Result<()> {
        let n = ensure_square(&self.a)?;
        ensure_shape(&self.b1, n, self.b1.ncols(), "B1")?;
        ensure_shape(&self.b2, n, self.b2.ncols(), "B2")?;
        if self.b2.ncols() == 0 {
            return Err(Error::InvalidParameter("plant has no control inputs".into()));
        }
        ensure_finite(&self.a, "A")?;
        ensure_finite(&self.b1, "B1")?;
        ensure_finite(&self.b2, "B2")?;
        self.labels.validate(n, self.b2.ncols())
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn q(&self) -> usize {
        self.b1.ncols()
    }

    pub fn p(&self) -> usize {
        self.b2.ncols()
    }

    /// `A − B2 K`.
    pub fn closed_loop(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a - &self.b2 * k
    }
}
