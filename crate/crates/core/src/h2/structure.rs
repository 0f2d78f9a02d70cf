//! Splitting a gain into local and remote parts.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::StateLabels;

/// `(K_loc, K_rem)` with `K_loc` keeping the entries whose input and state
/// belong to the same generator, and `K_rem = K − K_loc`.
pub fn decompose_gain(k: &DMatrix<f64>, labels: &StateLabels) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if k.nrows() != labels.input_generator.len() || k.ncols() != labels.state_generator.len() {
        return Err(Error::DimensionMismatch {
            what: "gain columns vs. state labels".into(),
            expected: labels.state_generator.len(),
            found: k.ncols(),
        });
    }
    if let Some(index) = labels.state_generator.iter().position(Option::is_none) {
        return Err(Error::UnlabeledState { index });
    }
    if let Some(index) = labels.input_generator.iter().position(Option::is_none) {
        return Err(Error::UnlabeledInput { index });
    }
    let mut local = DMatrix::zeros(k.nrows(), k.ncols());
    let mut remote = DMatrix::zeros(k.nrows(), k.ncols());
    for i in 0..k.nrows() {
        for j in 0..k.ncols() {
            if labels.input_generator[i] == labels.state_generator[j] {
                local[(i, j)] = k[(i, j)];
            } else {
                remote[(i, j)] = k[(i, j)];
            }
        }
    }
    Ok((local, remote))
}

/// Input channel that actuates generator `g`.
pub fn input_of_generator(labels: &StateLabels, g: usize) -> Result<usize> {
    labels
        .input_generator
        .iter()
        .position(|&ig| ig == Some(g))
        .ok_or_else(|| Error::Channel(format!("generator {g} has no input channel")))
}

/// Relative-angle law between the angle of generator `measured` and the
/// input at generator `actuated`.
///
/// With `k = K[i, θ_j]` the returned gain has `+k` at `θ_j` and `−k` at
/// `θ_i` in row `i` and zeros elsewhere, so `−K x = −k (θ_j − θ_i)`.
pub fn proportional_wac(
    k: &DMatrix<f64>,
    labels: &StateLabels,
    measured: usize,
    actuated: usize,
) -> Result<DMatrix<f64>> {
    let ng = labels.n_generators();
    if measured >= ng || actuated >= ng {
        return Err(Error::Channel(format!(
            "generator index out of range ({measured} -> {actuated}, {ng} generators)"
        )));
    }
    if measured == actuated {
        return Err(Error::Channel(format!(
            "measured and actuated generator coincide ({measured}): relative law is zero"
        )));
    }
    if k.nrows() != labels.input_generator.len() || k.ncols() != labels.state_generator.len() {
        return Err(Error::DimensionMismatch {
            what: "gain columns vs. state labels".into(),
            expected: labels.state_generator.len(),
            found: k.ncols(),
        });
    }
    let row = input_of_generator(labels, actuated)?;
    let theta_j = labels.angles[measured];
    let theta_i = labels.angles[actuated];
    let gain = k[(row, theta_j)];
    if gain == 0.0 {
        return Err(Error::Channel(format!(
            "gain has no entry from the angle of generator {measured} to generator {actuated}"
        )));
    }
    let mut out = DMatrix::zeros(k.nrows(), k.ncols());
    out[(row, theta_j)] = gain;
    out[(row, theta_i)] = -gain;
    Ok(out)
}
