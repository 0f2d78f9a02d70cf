//! Warm-started homotopy in γ with reweighting and polishing.

use nalgebra::DMatrix;

use super::admm::{reweighted_solve, AdmmOptions};
use super::gain::{card, card_remote};
use super::objective::H2Problem;
use super::polish::{polish_with, PolishOptions};
use crate::error::{Error, Result};
use crate::grid::{CostSpec, LinearPlant};
use crate::linalg::{solve_care, spectrum_with_tol};

/// Relative decrease of the polished cost that counts as a violation of
/// monotonicity in γ.
pub const MONOTONE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOptions {
    pub admm: AdmmOptions,
    pub polish: PolishOptions,
    /// Closed loops count as stable when every real part is below `−hurwitz_tol`.
    pub hurwitz_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecordStatus {
    Solved,
    /// The centralized (γ = 0) gain from the Riccati equation.
    Centralized,
    /// This γ failed; the record repeats the last successful gain.
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub gamma: f64,
    /// Polished gain.
    pub k: DMatrix<f64>,
    /// Polished H2 cost.
    pub j: f64,
    pub card: usize,
    pub card_remote: usize,
    /// `(J − J*_0) / J*_0`.
    pub degradation: f64,
    /// ADMM iterations summed over reweighting rounds.
    pub iterations: usize,
    pub polish_iterations: usize,
    pub converged: bool,
    pub hurwitz: bool,
    /// Polished cost fell below the previous record's.
    pub monotone_violation: bool,
    pub status: RecordStatus,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Centralized optimum from the Riccati equation.
    pub j0: f64,
    pub k0: DMatrix<f64>,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn succeeded(&self) -> usize {
        self.records
            .iter()
            .filter(|r| !matches!(r.status, RecordStatus::Failed(_)))
            .count()
    }
}

/// `count` log-spaced values from `min` to `max` inclusive.
pub fn log_schedule(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0) || !(max >= min) || count == 0 {
        return Err(Error::InvalidParameter(format!(
            "log schedule needs 0 < min <= max and count >= 1 (got {min}, {max}, {count})"
        )));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let (a, b) = (min.log10(), max.log10());
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                max
            } else {
                10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)
            }
        })
        .collect())
}

/// `count` evenly spaced values from `min` to `max` inclusive.
pub fn linear_schedule(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min >= 0.0) || !(max >= min) || count == 0 {
        return Err(Error::InvalidParameter(format!(
            "linear schedule needs 0 <= min <= max and count >= 1 (got {min}, {max}, {count})"
        )));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    Ok((0..count)
        .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
        .collect())
}

/// 40 log-spaced values in `[1e-4, 1]`.
pub fn default_gamma_schedule() -> Vec<f64> {
    log_schedule(1e-4, 1.0, 40).expect("valid default schedule")
}

fn mask(k: &DMatrix<f64>, pattern: &DMatrix<bool>) -> DMatrix<f64> {
    k.zip_map(pattern, |v, keep| if keep { v } else { 0.0 })
}

struct Solved {
    k: DMatrix<f64>,
    j: f64,
    pattern: DMatrix<bool>,
    iterations: usize,
    polish_iterations: usize,
    converged: bool,
}

/// Solves the centralized problem, then for each γ runs the reweighted ADMM
/// from the previous polished gain and polishes the resulting pattern.
///
/// A γ whose pattern admits no stabilizing gain is recorded as failed and the
/// sweep continues from the last successful gain and pattern.
pub fn gamma_sweep(
    plant: &LinearPlant,
    cost: &CostSpec,
    schedule: &[f64],
    opts: &SweepOptions,
) -> Result<SweepResult> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("empty gamma schedule".into()));
    }
    if schedule.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
        return Err(Error::InvalidParameter("gamma values must be nonnegative".into()));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("gamma schedule must be strictly increasing".into()));
    }
    opts.admm.validate()?;
    let problem = H2Problem::new(plant, cost)?;
    let care = solve_care(&plant.a, &plant.b2, &cost.q, &cost.r)?;
    let j0 = problem.cost(&care.k)?;

    let mut last = Solved {
        k: care.k.clone(),
        j: j0,
        pattern: care.k.map(|_| true),
        iterations: 0,
        polish_iterations: 0,
        converged: true,
    };
    let mut prev_j: Option<f64> = None;
    let mut records = Vec::with_capacity(schedule.len());
    for &gamma in schedule {
        let (solved, status) = if gamma == 0.0 {
            (
                Solved {
                    iterations: 0,
                    polish_iterations: 0,
                    converged: true,
                    ..clone_solved(&last)
                },
                RecordStatus::Centralized,
            )
        } else {
            match solve_one(plant, cost, &problem, gamma, &last, opts) {
                Ok(s) => (s, RecordStatus::Solved),
                Err(e) => {
                    log::warn!("gamma {gamma:e} failed: {e}; reusing the last successful pattern");
                    (
                        Solved {
                            iterations: 0,
                            polish_iterations: 0,
                            converged: false,
                            ..clone_solved(&last)
                        },
                        RecordStatus::Failed(e.to_string()),
                    )
                }
            }
        };
        let hurwitz = spectrum_with_tol(&plant.closed_loop(&solved.k), opts.hurwitz_tol)?.is_hurwitz;
        let monotone_violation = prev_j.is_some_and(|p| solved.j < p - MONOTONE_TOL * p.abs());
        if monotone_violation {
            log::warn!("polished cost decreased at gamma {gamma:e}");
        }
        prev_j = Some(solved.j);
        records.push(SweepRecord {
            gamma,
            card: card(&solved.k),
            card_remote: card_remote(&solved.k, &plant.labels),
            degradation: (solved.j - j0) / j0,
            j: solved.j,
            iterations: solved.iterations,
            polish_iterations: solved.polish_iterations,
            converged: solved.converged && hurwitz,
            hurwitz,
            monotone_violation,
            status: status.clone(),
            k: solved.k.clone(),
        });
        if !matches!(status, RecordStatus::Failed(_)) {
            last = solved;
        }
    }
    Ok(SweepResult {
        j0,
        k0: care.k,
        records,
    })
}

fn clone_solved(s: &Solved) -> Solved {
    Solved {
        k: s.k.clone(),
        j: s.j,
        pattern: s.pattern.clone(),
        iterations: s.iterations,
        polish_iterations: s.polish_iterations,
        converged: s.converged,
    }
}

fn solve_one(
    plant: &LinearPlant,
    cost: &CostSpec,
    problem: &H2Problem<'_>,
    gamma: f64,
    last: &Solved,
    opts: &SweepOptions,
) -> Result<Solved> {
    let admm = reweighted_solve(plant, cost, gamma, &last.k, &opts.admm)?;
    let pattern = admm.gain.pattern().clone();

    // Polishing starts from the first stabilizing candidate on the pattern.
    let candidates = if pattern == last.pattern {
        vec![last.k.clone()]
    } else {
        vec![
            admm.gain.matrix().clone(),
            mask(&admm.f, &pattern),
            mask(&last.k, &pattern),
        ]
    };
    let start = candidates
        .into_iter()
        .find(|k| problem.cost(k).is_ok())
        .ok_or(Error::PolishStalledUnstable)?;
    let pol = polish_with(plant, cost, &pattern, &start, &opts.polish)?;
    Ok(Solved {
        k: pol.gain.into_matrix(),
        j: pol.j,
        pattern,
        iterations: admm.iterations,
        polish_iterations: pol.iterations,
        converged: admm.converged && pol.converged,
    })
}
