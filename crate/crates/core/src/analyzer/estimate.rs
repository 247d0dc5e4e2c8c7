//! Trial-parallel Monte Carlo estimation of gains.
//!
//! Every trial gets its own pair of ChaCha streams derived from the run seed
//! and the trial index, and trials are collected in index order, so results
//! do not depend on the thread count. Gains are pooled ratio estimators
//! (total reward over total confirmed blocks) with delta-method intervals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::Executor;
use crate::game::{run_episode, EpisodeStats, GameConfig, GameError, GameRng, RewardLedger};

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959963984540054;

/// A ratio estimate with its 95% half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
}

impl Estimate {
    /// `|x - mean|` measured in half-widths.
    pub fn distance_in_ci(&self, x: f64) -> f64 {
        (x - self.mean).abs() / self.half_width.max(f64::MIN_POSITIVE)
    }
}

/// Pooled ratio `sum(num) / sum(den)` with the delta-method interval.
pub fn ratio_estimate(num: &[f64], den: &[f64]) -> Estimate {
    let n = num.len();
    let sn: f64 = num.iter().sum();
    let sd: f64 = den.iter().sum();
    if sd == 0.0 {
        return Estimate { mean: 0.0, half_width: 0.0 };
    }
    let r = sn / sd;
    if n < 2 {
        return Estimate { mean: r, half_width: 0.0 };
    }
    let dbar = sd / n as f64;
    let ss: f64 = num.iter().zip(den).map(|(x, y)| (x - r * y).powi(2)).sum();
    let var = ss / ((n - 1) as f64 * n as f64 * dbar * dbar);
    Estimate { mean: r, half_width: Z95 * var.sqrt() }
}

/// Run `trials` independent episodes, in trial order.
pub fn run_trials(cfg: &GameConfig, trials: u64) -> Result<Vec<RewardLedger>, GameError> {
    cfg.validate()?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = GameRng::for_trial(cfg.seed, t);
            run_episode(cfg, &mut rng).map(|s| s.ledger)
        })
        .collect()
}

/// Per-trial numerators and denominators of one executor's gain.
fn gain_parts(ledgers: &[RewardLedger], who: Executor) -> (Vec<f64>, Vec<f64>) {
    ledgers.iter().map(|l| (l.reward(who), l.total_confirmed() as f64)).unzip()
}

/// Gains of all trials pooled, each with its interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GainEstimate {
    pub g_r: Estimate,
    pub g_ur: Estimate,
    pub t_f: Estimate,
    pub pooled: EpisodeStats,
    pub trials: u64,
}

impl GainEstimate {
    pub fn from_ledgers(ledgers: &[RewardLedger]) -> Self {
        let (nr, d) = gain_parts(ledgers, Executor::R);
        let (nu, _) = gain_parts(ledgers, Executor::UR);
        let legal: Vec<f64> = ledgers.iter().map(|l| l.legal_confirmed as f64).collect();
        let mut pooled = RewardLedger::default();
        for l in ledgers {
            pooled.merge(l);
        }
        GainEstimate {
            g_r: ratio_estimate(&nr, &d),
            g_ur: ratio_estimate(&nu, &d),
            t_f: ratio_estimate(&legal, &d),
            pooled: EpisodeStats::from_ledger(pooled),
            trials: ledgers.len() as u64,
        }
    }

    pub fn gain(&self, who: Executor) -> Estimate {
        match who {
            Executor::R => self.g_r,
            Executor::UR => self.g_ur,
        }
    }

    /// The widest of the three half-widths.
    pub fn max_half_width(&self) -> f64 {
        self.g_r.half_width.max(self.g_ur.half_width).max(self.t_f.half_width)
    }
}

pub fn estimate(cfg: &GameConfig, trials: u64) -> Result<GainEstimate, GameError> {
    Ok(GainEstimate::from_ledgers(&run_trials(cfg, trials)?))
}

/// Difference of two strategies' gains under common random numbers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PairedGap {
    pub gain_a: f64,
    pub gain_b: f64,
    /// `gain_a - gain_b`.
    pub gap: f64,
    pub half_width: f64,
}

impl PairedGap {
    /// The gap exceeds `k` half-widths.
    pub fn significant(&self, k: f64) -> bool {
        self.gap > k * self.half_width
    }
}

/// Paired gap of `who`'s gain between two sets of ledgers from the same trials.
pub fn paired_gap(a: &[RewardLedger], b: &[RewardLedger], who: Executor) -> PairedGap {
    assert_eq!(a.len(), b.len(), "paired comparison needs matching trials");
    let (na, da) = gain_parts(a, who);
    let (nb, db) = gain_parts(b, who);
    let ra = ratio_estimate(&na, &da).mean;
    let rb = ratio_estimate(&nb, &db).mean;
    let n = a.len() as f64;
    let dabar = da.iter().sum::<f64>() / n;
    let dbbar = db.iter().sum::<f64>() / n;
    // linearized per-trial contributions of the two ratio estimators
    let z: Vec<f64> = (0..a.len())
        .map(|i| (na[i] - ra * da[i]) / dabar - (nb[i] - rb * db[i]) / dbbar)
        .collect();
    let zbar = z.iter().sum::<f64>() / n;
    let var = if a.len() > 1 {
        z.iter().map(|x| (x - zbar).powi(2)).sum::<f64>() / ((n - 1.0) * n)
    } else {
        0.0
    };
    PairedGap { gain_a: ra, gain_b: rb, gap: ra - rb, half_width: Z95 * var.sqrt() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_of_constant_pairs_is_exact() {
        let e = ratio_estimate(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]);
        assert_eq!(e.mean, 0.5);
        assert_eq!(e.half_width, 0.0);
    }

    #[test]
    fn identical_runs_have_zero_gap() {
        let cfg = GameConfig { max_epochs: 200, ..Default::default() };
        let a = run_trials(&cfg, 8).unwrap();
        let g = paired_gap(&a, &a, Executor::UR);
        assert_eq!(g.gap, 0.0);
        assert_eq!(g.half_width, 0.0);
    }
}
