//! Threshold searches: where deviations start to pay, and how large a
//! pay-forward fee must be to stop them.

use serde::{Deserialize, Serialize};

use super::family::{best_response, BestResponse, DeviationFamily, SIGNIFICANCE};
use super::fork_game::ForkGame;
use super::mdp::SolveOptions;
use super::oracles::sm_markov_gain;
use super::threshold::{bisect, find_threshold, ThresholdMethod, ThresholdName, ThresholdResult, Verdict};
use super::AnalyzerError;
use crate::game::{GameConfig, Horizon, Model, Strategy};

/// Advantages below this are treated as solver noise.
pub const EXACT_SLACK: f64 = 1e-9;

/// Capitulation targets kept in exact fork games deeper than this.
pub const EXACT_FORK_DEPTH: usize = 8;

/// Search interval for the unregulated share at which deviations start to pay.
pub const HIR_INTERVAL: (f64, f64) = (0.30, 0.50);
/// Search interval for the regulated share at which withholding starts to pay.
pub const HSR_INTERVAL: (f64, f64) = (0.25, 0.45);
/// Search interval for the regulated share above which a capped fee suffices.
pub const HOCF_INTERVAL: (f64, f64) = (0.40, 0.60);

/// Exact fork game used for depth `e`.
pub fn fork_game(e: usize, rho: f64) -> ForkGame {
    let g = ForkGame::new(e, rho);
    if e > EXACT_FORK_DEPTH {
        g.with_max_fork_depth(EXACT_FORK_DEPTH)
    } else {
        g
    }
}

/// Margin of the strongest deviation, scaled so that "surely" means
/// beyond [`SIGNIFICANCE`] half-widths.
fn family_verdict(br: &BestResponse) -> Verdict {
    match br.strongest() {
        Some((_, g)) => Verdict { margin: g.gap, half_width: SIGNIFICANCE * g.half_width },
        None => Verdict::exact(-1.0),
    }
}

/// Monte Carlo threshold of the unregulated share above which some member of
/// `family` beats `LegFrontier` against `RegFrontier`.
///
/// `base` supplies depth, episode length and seed; its shares are overridden.
pub fn h_ir_mc(base: &GameConfig, family: &DeviationFamily, trials: u64, tol: f64) -> Result<ThresholdResult, AnalyzerError> {
    let pred = |a_ur: f64| -> Result<Verdict, AnalyzerError> {
        let cfg = GameConfig { alpha_r: 1.0 - a_ur, model: Model::Ir, rho: 0.0, ..base.clone() };
        Ok(family_verdict(&best_response(Strategy::RegFrontier, family, &cfg, trials)?))
    };
    let b = find_threshold(pred, HIR_INTERVAL.0, HIR_INTERVAL.1, tol)?;
    Ok(b.into_result(ThresholdName::HIr, ThresholdMethod::BisectionMc))
}

/// Exact threshold of the unregulated share in the depth-`e` fork game,
/// optimizing over every capitulation policy rather than a family.
pub fn h_ir_exact(e: usize, tol: f64) -> Result<ThresholdResult, AnalyzerError> {
    let game = fork_game(e, 0.0);
    let opts = SolveOptions::default();
    let pred = |a: f64| Ok::<_, AnalyzerError>(Verdict::exact(game.deviation_advantage(a, &opts) - EXACT_SLACK));
    let b = find_threshold(pred, HIR_INTERVAL.0, HIR_INTERVAL.1, tol)?;
    Ok(b.into_result(ThresholdName::HIr, ThresholdMethod::BisectionDp))
}

/// Monte Carlo threshold of the regulated share above which withholding
/// beats `RDubFrontier` under strategic release.
pub fn h_sr_mc(base: &GameConfig, family: &DeviationFamily, trials: u64, tol: f64) -> Result<ThresholdResult, AnalyzerError> {
    let pred = |a_r: f64| -> Result<Verdict, AnalyzerError> {
        let cfg = GameConfig { alpha_r: a_r, model: Model::Sr, rho: 0.0, ..base.clone() };
        Ok(family_verdict(&best_response(Strategy::DubFrontier, family, &cfg, trials)?))
    };
    let b = find_threshold(pred, HSR_INTERVAL.0, HSR_INTERVAL.1, tol)?;
    Ok(b.into_result(ThresholdName::HSr, ThresholdMethod::BisectionMc))
}

/// Break-even share of lead-2 withholding from the stationary lead chain.
pub fn h_sr_closed_form(tol: f64) -> Result<ThresholdResult, AnalyzerError> {
    let (lo, hi) = HSR_INTERVAL;
    let root = bisect(|a| sm_markov_gain(a) - a, lo, hi, tol)?;
    Ok(ThresholdResult {
        name: ThresholdName::HSr,
        estimate: root,
        bracket: (root - tol / 2.0, root + tol / 2.0),
        method: ThresholdMethod::ClosedForm,
    })
}

/// Exact regulated-share threshold above which a fee of at most `rho_cap`
/// makes `LegFrontier` a best response in the depth-`e` fork game.
///
/// The deviation advantage falls as the fee grows, so checking the cap
/// alone decides whether some admissible fee suffices.
pub fn h_ocf_exact(e: usize, rho_cap: f64, tol: f64) -> Result<ThresholdResult, AnalyzerError> {
    let game = fork_game(e, rho_cap);
    let opts = SolveOptions::default();
    let pred = |a_r: f64| Ok::<_, AnalyzerError>(Verdict::exact(EXACT_SLACK - game.deviation_advantage(1.0 - a_r, &opts)));
    let b = find_threshold(pred, HOCF_INTERVAL.0, HOCF_INTERVAL.1, tol)?;
    Ok(b.into_result(ThresholdName::HOcfIr, ThresholdMethod::BisectionDp))
}

/// Result of a fee search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OcfSearch {
    pub alpha_r: f64,
    /// Smallest fee found sufficient.
    pub rho: f64,
    /// Largest fee found insufficient, or 0 when no fee is needed.
    pub rho_insufficient: f64,
    /// Best response re-evaluated at `rho`.
    pub verification: BestResponse,
}

/// Smallest pay-forward fee, to granularity `tol` and at most `rho_cap`,
/// at which no member of `family` beats `LegFrontier` beyond
/// [`SIGNIFICANCE`] half-widths.
pub fn min_sufficient_ocf(
    base: &GameConfig,
    family: &DeviationFamily,
    trials: u64,
    tol: f64,
    rho_cap: f64,
) -> Result<OcfSearch, AnalyzerError> {
    if !(tol > 0.0 && rho_cap > 0.0) {
        return Err(AnalyzerError::InvalidInterval { lo: 0.0, hi: rho_cap });
    }
    let at = |rho: f64| -> Result<BestResponse, AnalyzerError> {
        let cfg = GameConfig { model: Model::IrOcf, rho, ..base.clone() };
        best_response(Strategy::RegFrontier, family, &cfg, trials)
    };
    let zero = at(0.0)?;
    if !zero.deviation_wins(SIGNIFICANCE) {
        return Ok(OcfSearch { alpha_r: base.alpha_r, rho: 0.0, rho_insufficient: 0.0, verification: zero });
    }
    let mut top = at(rho_cap)?;
    if top.deviation_wins(SIGNIFICANCE) {
        return Err(AnalyzerError::NotAchievable { cap: rho_cap });
    }
    let (mut lo, mut hi) = (0.0, rho_cap);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let br = at(mid)?;
        if br.deviation_wins(SIGNIFICANCE) {
            lo = mid;
        } else {
            hi = mid;
            top = br;
        }
    }
    Ok(OcfSearch { alpha_r: base.alpha_r, rho: hi, rho_insufficient: lo, verification: top })
}

/// Exact smallest fee, to granularity `tol`, at which no capitulation policy
/// beats `LegFrontier` in the depth-`e` fork game.
pub fn min_sufficient_ocf_exact(alpha_r: f64, e: usize, tol: f64, rho_cap: f64) -> Result<f64, AnalyzerError> {
    let opts = SolveOptions::default();
    let pays = |rho: f64| fork_game(e, rho).deviation_advantage(1.0 - alpha_r, &opts) > EXACT_SLACK;
    if !pays(0.0) {
        return Ok(0.0);
    }
    if pays(rho_cap) {
        return Err(AnalyzerError::NotAchievable { cap: rho_cap });
    }
    let (mut lo, mut hi) = (0.0, rho_cap);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pays(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// How `sweep_hir_vs_e` evaluates each depth.
#[derive(Clone, Debug, PartialEq)]
pub enum SweepMethod {
    /// Exact fork-game optimization.
    Exact,
    /// Family bisection with Monte Carlo predicates.
    MonteCarlo { base: GameConfig, family: DeviationFamily, trials: u64 },
}

/// The `h_IR` threshold for each game depth.
pub fn sweep_hir_vs_e(e_values: &[usize], method: &SweepMethod, tol: f64) -> Result<Vec<(usize, ThresholdResult)>, AnalyzerError> {
    e_values
        .iter()
        .map(|&e| {
            if e < 2 {
                return Err(AnalyzerError::BadDepth(e));
            }
            let r = match method {
                SweepMethod::Exact => h_ir_exact(e, tol)?,
                SweepMethod::MonteCarlo { base, family, trials } => {
                    let cfg = GameConfig {
                        depth: Horizon::Finite(e),
                        max_epochs: base.max_epochs.max(e as u64),
                        ..base.clone()
                    };
                    h_ir_mc(&cfg, family, *trials, tol)?
                }
            };
            Ok((e, r))
        })
        .collect()
}
