//! Padé approximation of pure time delays and their absorption into a plant.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{LinearPlant, StateSpace};

/// Default Padé order.
pub const DEFAULT_PADE_ORDER: usize = 2;

fn check(delay: f64, order: usize) -> Result<()> {
    if !(delay > 0.0) || !delay.is_finite() {
        return Err(Error::InvalidParameter(format!("delay must be positive, got {delay}")));
    }
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidParameter(format!("Padé order must be 1, 2 or 3, got {order}")));
    }
    Ok(())
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Coefficients `c_k = (2N−k)! N! / ((2N)! k! (N−k)!)`, `k = 0..=N`, so that
/// `e^{−sT} ≈ Σ c_k (−sT)^k / Σ c_k (sT)^k`.
pub fn pade_coefficients(order: usize) -> Vec<f64> {
    let n = order;
    (0..=n)
        .map(|k| factorial(2 * n - k) * factorial(n) / (factorial(2 * n) * factorial(k) * factorial(n - k)))
        .collect()
}

/// Controllable-canonical realization of the `(order, order)` Padé
/// approximant of `e^{−s·delay}`.
pub fn pade_block(delay: f64, order: usize) -> Result<StateSpace> {
    check(delay, order)?;
    let c = pade_coefficients(order);
    let n = order;
    // Denominator d(s) = Σ c_k T^k s^k, made monic.
    let den: Vec<f64> = (0..=n).map(|k| c[k] * delay.powi(k as i32)).collect();
    let lead = den[n];
    let sign_n = if n % 2 == 0 { 1.0 } else { -1.0 };

    let mut a = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = 1.0;
    }
    for k in 0..n {
        a[(n - 1, k)] = -den[k] / lead;
    }
    let mut b = DMatrix::zeros(n, 1);
    b[(n - 1, 0)] = 1.0;
    // Numerator minus feedthrough times denominator.
    let mut cm = DMatrix::zeros(1, n);
    for k in 0..n {
        let sign_k = if k % 2 == 0 { 1.0 } else { -1.0 };
        cm[(0, k)] = den[k] * (sign_k - sign_n) / lead;
    }
    Ok(StateSpace {
        a,
        b,
        c: cm,
        d: DMatrix::from_element(1, 1, sign_n),
    })
}

/// Plant whose input `channel` passes through a Padé delay block before
/// reaching the original dynamics. The `order` new states are appended,
/// labeled with the generator of that input.
pub fn pade_absorb(plant: &LinearPlant, channel: usize, delay: f64, order: usize) -> Result<LinearPlant> {
    if channel >= plant.p() {
        return Err(Error::Channel(format!("input {channel} out of range ({} inputs)", plant.p())));
    }
    let blk = pade_block(delay, order)?;
    let (n, m) = (plant.n(), order);
    let bi = plant.b2.column(channel).into_owned();

    let mut a = DMatrix::zeros(n + m, n + m);
    a.view_mut((0, 0), (n, n)).copy_from(&plant.a);
    a.view_mut((0, n), (n, m)).copy_from(&(&bi * &blk.c));
    a.view_mut((n, n), (m, m)).copy_from(&blk.a);

    let mut b1 = DMatrix::zeros(n + m, plant.q());
    b1.view_mut((0, 0), (n, plant.q())).copy_from(&plant.b1);

    let mut b2 = DMatrix::zeros(n + m, plant.p());
    b2.view_mut((0, 0), (n, plant.p())).copy_from(&plant.b2);
    b2.view_mut((0, channel), (n, 1)).copy_from(&(&bi * blk.d[(0, 0)]));
    b2.view_mut((n, channel), (m, 1)).copy_from(&blk.b);

    let mut labels = plant.labels.clone();
    labels.remaining.extend(n..n + m);
    let owner = labels.input_generator[channel];
    labels.state_generator.extend(std::iter::repeat_n(owner, m));
    LinearPlant::new(a, b1, b2, labels)
}

/// `[K 0]`: a gain for the original states, padded for `extra` appended ones.
pub fn pad_gain(k: &DMatrix<f64>, extra: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(k.nrows(), k.ncols() + extra);
    out.view_mut((0, 0), k.shape()).copy_from(k);
    out
}
