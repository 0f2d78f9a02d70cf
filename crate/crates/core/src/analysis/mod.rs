//! Closed-loop assessment: modes, margins, delays and simulation.

pub mod delay;
pub mod margins;
pub mod modes;
pub mod sim;

pub use delay::{pad_gain, pade_absorb, pade_block, pade_coefficients, DEFAULT_PADE_ORDER};
pub use margins::{
    channel_loop, default_margin_grid, delay_margin_single_channel, disk_margins, log_grid, loop_margins,
    FeedbackChannel, MarginReport, ScalarMargins,
};
pub use modes::{
    block_diagonal_from_eigenvalues, damping_ratio, eigenvector, eigvec_initial_state, frequency_hz,
    left_eigenvector, mode_report, Mode, ModeReport, ModeSelector,
};
pub use sim::{simulate, DelayModel, DelayedChannel, InitialState, SimScenario, Trajectory, DEFAULT_SEED};
