//! Disk margins of the broken loop at the plant input and classical margins
//! of single channels.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{LinearPlant, StateSpace};
use crate::linalg::{ensure_shape, spectrum};

/// Default disk-margin grid: 400 log-spaced points on `[1e-3, 1e3]` rad/s.
pub fn default_margin_grid() -> Vec<f64> {
    log_grid(1e-3, 1e3, 400)
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count.max(2) - 1) as f64))
        .collect()
}

#[derive(Debug, Clone)]
pub struct MarginReport {
    /// `min_ω σ_min(I + L(iω))`.
    pub alpha: f64,
    /// Frequency of the minimizer (rad/s).
    pub omega_min: f64,
    /// `2 asin(α/2)` in degrees (capped at 180 for α ≥ 2).
    pub phase_margin_deg: f64,
    /// `1/(1 + α)`.
    pub gain_reduction: f64,
    /// `1/(1 − α)`, or ∞ for α ≥ 1.
    pub gain_amplification: f64,
    /// Grid actually evaluated (refinement points excluded).
    pub grid: Vec<f64>,
    /// Grid points skipped because `iωI − A` was singular.
    pub skipped: usize,
}

impl MarginReport {
    fn from_alpha(alpha: f64, omega_min: f64, grid: Vec<f64>, skipped: usize) -> Self {
        let phase_margin_deg = if alpha >= 2.0 {
            180.0
        } else {
            (2.0 * (alpha / 2.0).asin()).to_degrees()
        };
        let gain_amplification = if alpha >= 1.0 {
            f64::INFINITY
        } else {
            1.0 / (1.0 - alpha)
        };
        Self {
            alpha,
            omega_min,
            phase_margin_deg,
            gain_reduction: 1.0 / (1.0 + alpha),
            gain_amplification,
            grid,
            skipped,
        }
    }
}

/// `σ_min(I + K (iωI − A)⁻¹ B2)`, or `None` if `iωI − A` is singular.
fn return_difference_smin(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    k: &DMatrix<Complex64>,
    w: f64,
) -> Option<f64> {
    let n = a.nrows();
    let p = b.ncols();
    let m = DMatrix::<Complex64>::identity(n, n) * Complex64::new(0.0, w) - a;
    let sv = m.clone().svd(false, false).singular_values;
    if !(sv.min() > 1e-13 * sv.max().max(1.0)) {
        return None;
    }
    let x = m.lu().solve(b)?;
    let rd = DMatrix::<Complex64>::identity(p, p) + k * x;
    Some(rd.svd(false, false).singular_values.min())
}

/// Disk margins of `L(s) = K (sI − A)⁻¹ B2` on `grid` (default
/// [`default_margin_grid`]), refined by golden-section search around the
/// smallest grid value.
pub fn disk_margins(plant: &LinearPlant, k: &DMatrix<f64>, grid: Option<&[f64]>) -> Result<MarginReport> {
    ensure_shape(k, plant.p(), plant.n(), "K")?;
    let closed = spectrum(&plant.closed_loop(k))?;
    if !closed.is_hurwitz {
        return Err(Error::Unstable {
            max_real_part: closed.max_real_part,
        });
    }
    let grid: Vec<f64> = match grid {
        Some(g) => g.to_vec(),
        None => default_margin_grid(),
    };
    if grid.is_empty() || grid.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter("frequency grid must be nonnegative and nonempty".into()));
    }
    let to_c = |m: &DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
    let (ac, bc, kc) = (to_c(&plant.a), to_c(&plant.b2), to_c(k));
    let eval = |w: f64| return_difference_smin(&ac, &bc, &kc, w);

    let mut skipped = 0;
    let mut values = Vec::with_capacity(grid.len());
    for &w in &grid {
        match eval(w) {
            Some(s) => values.push((w, s)),
            None => {
                skipped += 1;
                log::warn!("disk margins: skipping singular frequency {w} rad/s");
            }
        }
    }
    if values.is_empty() {
        return Err(Error::Singular {
            what: "every frequency-grid point of iωI − A".into(),
        });
    }
    let (imin, &(mut w_best, mut alpha)) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("nonempty");

    // Golden-section refinement in log frequency between the neighbors.
    let lo = values[imin.saturating_sub(1)].0;
    let hi = values[(imin + 1).min(values.len() - 1)].0;
    if hi > lo && lo > 0.0 {
        let (mut a, mut b) = (lo.ln(), hi.ln());
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let f = |x: f64| eval(x.exp()).unwrap_or(f64::INFINITY);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..60 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = f(d);
            }
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v < alpha {
                alpha = v;
                w_best = x.exp();
            }
        }
    }
    Ok(MarginReport::from_alpha(alpha, w_best, grid, skipped))
}

/// Classical margins of a scalar loop `L(s)` under negative feedback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMargins {
    /// `180° + ∠L(iω_c)` at the gain crossover with the smallest delay
    /// margin; ∞ without a crossover.
    pub phase_margin_deg: f64,
    /// Gain crossover frequency (rad/s), if any.
    pub crossover: Option<f64>,
    /// `PM (rad) / ω_c`, minimized over crossovers; ∞ without a crossover.
    pub delay_margin: f64,
    /// `1/|L|` at the first phase crossover (∠L = −180°); ∞ if none.
    pub gain_margin: f64,
}

const CHANNEL_GRID: (f64, f64, usize) = (1e-4, 1e4, 2000);

fn scalar_response(l: &StateSpace, w: f64) -> Option<Complex64> {
    l.frequency_response(Complex64::new(0.0, w)).map(|m| m[(0, 0)])
}

/// Phase in `(−360°, 0°]`, in radians.
fn lagging_phase(z: Complex64) -> f64 {
    let a = z.arg();
    if a > 0.0 {
        a - 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

/// Margins of the SISO loop `l` from a log grid on `[1e-4, 1e4]` rad/s with
/// bisection on every sign change.
pub fn loop_margins(l: &StateSpace) -> Result<ScalarMargins> {
    if l.b.ncols() != 1 || l.c.nrows() != 1 {
        return Err(Error::InvalidParameter("loop transfer must be single-input single-output".into()));
    }
    let (lo, hi, count) = CHANNEL_GRID;
    let grid = log_grid(lo, hi, count);
    let mag = |w: f64| scalar_response(l, w).map_or(f64::NAN, |z| z.norm().ln());
    let phase = |w: f64| {
        scalar_response(l, w).map_or(f64::NAN, |z| lagging_phase(z) + std::f64::consts::PI)
    };

    let mut best: Option<(f64, f64, f64)> = None; // (delay, pm_deg, wc)
    let mut gain_margin = f64::INFINITY;
    for pair in grid.windows(2) {
        let (w0, w1) = (pair[0], pair[1]);
        let (m0, m1) = (mag(w0), mag(w1));
        if m0.is_finite() && m1.is_finite() && (m0 > 0.0) != (m1 > 0.0) {
            let wc = bisect(mag, w0, w1);
            let pm = phase(wc);
            let delay = pm.max(0.0) / wc;
            if best.is_none_or(|b| delay < b.0) {
                best = Some((delay, pm.to_degrees(), wc));
            }
        }
        if gain_margin.is_infinite() {
            let (p0, p1) = (phase(w0), phase(w1));
            // Phase crossings of −180°, ignoring wrap-around jumps.
            if p0.is_finite() && p1.is_finite() && (p0 > 0.0) != (p1 > 0.0) && (p0 - p1).abs() < std::f64::consts::PI {
                let wp = bisect(phase, w0, w1);
                if let Some(z) = scalar_response(l, wp) {
                    gain_margin = 1.0 / z.norm();
                }
            }
        }
    }
    Ok(match best {
        Some((delay, pm, wc)) => ScalarMargins {
            phase_margin_deg: pm,
            crossover: Some(wc),
            delay_margin: delay,
            gain_margin,
        },
        None => ScalarMargins {
            phase_margin_deg: f64::INFINITY,
            crossover: None,
            delay_margin: f64::INFINITY,
            gain_margin,
        },
    })
}

/// A single feedback channel: gain entry `K[input, state]`, i.e. the
/// measurement of `state` fed to `input`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedbackChannel {
    pub input: usize,
    pub state: usize,
}

/// Scalar loop of one channel with every other gain entry absorbed into the
/// plant: `L(s) = k (sI − Ã)⁻¹ b_input` with `k = K[input, state] e_stateᵀ`
/// and `Ã = A − B2 (K − k)`.
///
/// On labeled plants the channel must be remote (input and measured state
/// belong to different generators).
pub fn channel_loop(plant: &LinearPlant, k: &DMatrix<f64>, channel: FeedbackChannel) -> Result<StateSpace> {
    ensure_shape(k, plant.p(), plant.n(), "K")?;
    let FeedbackChannel { input, state } = channel;
    if input >= plant.p() || state >= plant.n() {
        return Err(Error::Channel(format!(
            "channel ({input}, {state}) out of range for {} inputs and {} states",
            plant.p(),
            plant.n()
        )));
    }
    let labels = &plant.labels;
    if let (Some(gi), Some(gs)) = (labels.input_generator[input], labels.state_generator[state]) {
        if gi == gs {
            return Err(Error::Channel(format!(
                "channel ({input}, {state}) is local to generator {gi}"
            )));
        }
    }
    let gain = k[(input, state)];
    if gain == 0.0 {
        return Err(Error::Channel(format!("channel ({input}, {state}) has zero gain")));
    }
    let mut absorbed = k.clone();
    absorbed[(input, state)] = 0.0;
    let mut c = DMatrix::zeros(1, plant.n());
    c[(0, state)] = gain;
    Ok(StateSpace {
        a: plant.closed_loop(&absorbed),
        b: plant.b2.columns(input, 1).into_owned(),
        c,
        d: DMatrix::zeros(1, 1),
    })
}

/// Phase margin (degrees) and delay margin (seconds) of one channel.
pub fn delay_margin_single_channel(
    plant: &LinearPlant,
    k: &DMatrix<f64>,
    channel: FeedbackChannel,
) -> Result<ScalarMargins> {
    loop_margins(&channel_loop(plant, k, channel)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_order(k: f64) -> StateSpace {
        StateSpace {
            a: DMatrix::from_element(1, 1, -1.0),
            b: DMatrix::from_element(1, 1, 1.0),
            c: DMatrix::from_element(1, 1, k),
            d: DMatrix::zeros(1, 1),
        }
    }

    #[test]
    fn integrator_loop() {
        let l = StateSpace {
            a: DMatrix::zeros(1, 1),
            b: DMatrix::from_element(1, 1, 1.0),
            c: DMatrix::from_element(1, 1, 1.0),
            d: DMatrix::zeros(1, 1),
        };
        let m = loop_margins(&l).unwrap();
        assert!((m.phase_margin_deg - 90.0).abs() < 1e-6);
        assert!((m.delay_margin - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
    }

    #[test]
    fn first_order_crossover() {
        let m = loop_margins(&first_order(2.0)).unwrap();
        assert!((m.crossover.unwrap() - 3f64.sqrt()).abs() < 1e-9);
        assert!((m.phase_margin_deg - 120.0).abs() < 1e-6);
    }

    #[test]
    fn no_crossover_gives_infinite_delay_margin() {
        let m = loop_margins(&first_order(0.5)).unwrap();
        assert!(m.delay_margin.is_infinite());
    }
}
