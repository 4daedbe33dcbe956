//! Semi-blind receivers.
//!
//! [`tals`] alternates least-squares updates of `H`, `G` and `X` over the
//! three unfoldings of the PARATUCK tensor. [`etals`] first recovers the
//! symbols and direct channel in closed form from a direct-link window
//! ([`krf`]), then runs the same alternation on the IRS window after
//! subtracting the estimated direct contribution.

mod ambiguity;
mod demod;
mod etals;
mod identifiability;
mod krf;
mod steps;
mod tals;

use std::time::Duration;

use crate::tensor::CMatrix;

pub use ambiguity::{align_to_truth, normalize_pilots, remove_ambiguity};
pub use demod::{demodulate, Demodulated};
pub use etals::{etals, refine_direct_channel, subtract_direct};
pub use identifiability::{identifiability_check, IdentifiabilityReport};
pub use krf::{krf, KrfResult};
pub use steps::{
    build_e, build_f, reconstruct, reconstruction_cost, reconstruction_error, step_g,
    step_g_explicit, step_h, step_x,
};
pub use tals::{tals, tals_traced, StepCosts};

#[derive(Debug, Clone, PartialEq)]
pub struct TalsOptions {
    /// Stop once successive reconstruction errors differ by at most this.
    pub delta: f64,
    pub max_iters: usize,
    /// Warm-start symbols. When `None`, `X̂_0` is drawn `CN(0, 1)`.
    pub init_symbols: Option<CMatrix>,
    /// Seed for the random parts of the initialization.
    pub init_seed: u64,
    /// Use the diagonal `G` update when `Ψ` is semi-unitary.
    pub fast_g_step: bool,
    /// Update `X` each iteration. When off, `X` stays at its initial value.
    pub refine_symbols: bool,
    /// Extra random restarts; the run with the lowest final error is kept.
    pub restarts: usize,
}

impl Default for TalsOptions {
    fn default() -> Self {
        Self {
            delta: 1e-5,
            max_iters: 1000,
            init_symbols: None,
            init_seed: 0,
            fast_g_step: true,
            refine_symbols: true,
            restarts: 0,
        }
    }
}

/// Stage-I outputs kept alongside the final E-TALS estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOne {
    pub x_hat: CMatrix,
    pub h_direct_hat: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverResult {
    pub h_hat: CMatrix,
    pub g_hat: CMatrix,
    pub x_hat: CMatrix,
    pub h_direct_hat: Option<CMatrix>,
    /// Reconstruction error `ε_(i)` after each iteration.
    pub error_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: Duration,
    pub stage_one: Option<StageOne>,
    /// Rank deficiencies observed in the final LS problems.
    pub warnings: Vec<String>,
}
