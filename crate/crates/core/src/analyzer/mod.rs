//! Gain estimation, best responses, threshold searches and the exact
//! oracles that anchor them.
//!
//! Two exact games back the Monte Carlo estimates. [`fork_game`] mirrors the
//! engine (a width-two fork against `RegFrontier`) and yields exact
//! family values and exact thresholds. [`depth_game`] pays the block that
//! reaches depth `E` in a tree and reproduces the depth-3 closed form.

pub mod depth_game;
pub mod estimate;
pub mod family;
pub mod fork_game;
pub mod mdp;
pub mod oracles;
pub mod search;
pub mod sweep;
pub mod threshold;

use thiserror::Error;

use crate::game::GameError;

pub use estimate::{estimate, paired_gap, ratio_estimate, run_trials, Estimate, GainEstimate, PairedGap};
pub use family::{best_response, BestResponse, DeviationFamily, SIGNIFICANCE};
pub use oracles::{closed_form_gain_e3, dp_optimal_gain, dp_optimal_gain_e3, sm_markov_gain};
pub use search::{
    h_ir_exact, h_ir_mc, h_ocf_exact, h_sr_closed_form, h_sr_mc, min_sufficient_ocf, min_sufficient_ocf_exact,
    sweep_hir_vs_e, OcfSearch, SweepMethod,
};
pub use sweep::{alpha_grid, estimate_gains, read_csv, sweep_alpha, write_csv, SweepRow, SWEEP_HEADER};
pub use threshold::{
    bisect, find_threshold, poly_root, Bracket, Polynomial, ThresholdMethod, ThresholdName, ThresholdResult, Verdict,
};

#[derive(Debug, Error)]
pub enum AnalyzerError {
    #[error("predicate is not monotone: holds at {at} but fails at {against}")]
    NonMonotoneDetected { at: f64, against: f64 },
    #[error("no sign change over [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("predicate does not flip from false to true over [{lo}, {hi}]")]
    NoFlip { lo: f64, hi: f64 },
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("no fee up to {cap} stops every deviation")]
    NotAchievable { cap: f64 },
    #[error("invalid deviation family: {0}")]
    BadFamily(String),
    #[error("at least one trial is required")]
    NoTrials,
    #[error("game depth {0} is below 2")]
    BadDepth(usize),
    #[error("invalid alpha grid {start}:{stop}:{step}")]
    InvalidGrid { start: f64, stop: f64, step: f64 },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

impl From<csv::Error> for AnalyzerError {
    fn from(e: csv::Error) -> Self {
        AnalyzerError::Csv(e.to_string())
    }
}
