//! Sparsity-promoting H2 state feedback: cost and gradient, ADMM with soft
//! thresholding, reweighting, γ homotopy and polishing.

mod admm;
mod descent;
mod gain;
mod objective;
mod polish;
mod structure;
mod sweep;

pub use admm::{admm_solve, reweight, reweighted_solve, shrink, AdmmOptions, AdmmResult};
pub use gain::{card, card_remote, is_local, FeedbackGain, NoiseKind, NoiseModel, CARD_TOL};
pub use objective::{h2_cost, h2_gradient, H2Eval, H2Problem};
pub use polish::{polish, polish_with, PolishOptions, PolishResult};
pub use structure::{decompose_gain, input_of_generator, proportional_wac};
pub use sweep::{
    default_gamma_schedule, gamma_sweep, linear_schedule, log_schedule, RecordStatus,
    SweepOptions, SweepRecord, SweepResult, MONOTONE_TOL,
};
