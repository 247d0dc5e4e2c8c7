//! Regulated blockchain consensus: licensing and notarization primitives,
//! the two-executor block-proposal game, and the equilibrium analyzer that
//! locates the consensus-resource thresholds.
//!
//! The crate is organised bottom-up:
//!
//! * [`chain`] holds the width-two block tree rooted at the fork point.
//! * [`licensing`] issues and checks regulator-signed licenses.
//! * [`notarization`] mines toy-difficulty puzzles and runs the
//!   indistinguishability harness.
//! * [`game`] is the epoch-synchronous stochastic game engine.
//! * [`analyzer`] estimates gains, searches best responses and thresholds.

pub mod analyzer;
pub mod chain;
pub mod game;
pub mod licensing;
pub mod notarization;
pub mod stats;

pub use analyzer::{
    best_response, closed_form_gain_e3, dp_optimal_gain_e3, estimate_gains, find_threshold, min_sufficient_ocf,
    poly_root, sm_markov_gain, sweep_hir_vs_e, AnalyzerError, BestResponse, DeviationFamily, Polynomial, SweepRow,
    ThresholdMethod, ThresholdName, ThresholdResult,
};
pub use chain::{Block, BlockId, BlockKind, BlockTree, ChainError, Executor, Side};
pub use game::{EpisodeStats, GameConfig, GameError, GameState, Horizon, Model, RewardLedger, Strategy};
pub use licensing::{
    Announcement, BlockContent, ExecutorLicense, LicenseError, LicenseStatus, Regulator, RootRef, RulesMatrix,
    TransactorLicense,
};
pub use notarization::{MiningAttemptRecord, NonceStream, NotarizationError, PuzzleTarget};

/// Version of the core library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
