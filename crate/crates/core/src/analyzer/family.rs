//! Deviation families and best-response search under common random numbers.

use serde::{Deserialize, Serialize};

use super::estimate::{paired_gap, run_trials, GainEstimate, PairedGap};
use super::AnalyzerError;
use crate::chain::Executor;
use crate::game::{GameConfig, Strategy};

/// Half-widths a deviation must clear before it counts as a win.
pub const SIGNIFICANCE: f64 = 3.0;

/// The strategies one executor is allowed to consider, anchored at its
/// frontier strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationFamily {
    pub player: Executor,
    pub frontier: Strategy,
    pub deviations: Vec<Strategy>,
}

impl DeviationFamily {
    /// Unregulated deviations in the immediate-release models:
    /// `CapitulateWhenBehind(2..=5)` and `AttackInterior(1..=5)`.
    pub fn unregulated() -> Self {
        let mut deviations: Vec<Strategy> = (2..=5).map(Strategy::CapitulateWhenBehind).collect();
        deviations.extend((1..=5).map(Strategy::AttackInterior));
        DeviationFamily { player: Executor::UR, frontier: Strategy::LegFrontier, deviations }
    }

    /// Regulated withholding in the strategic-release model: `Withhold(2..=5)`.
    pub fn regulated_withholding() -> Self {
        DeviationFamily {
            player: Executor::R,
            frontier: Strategy::RDubFrontier,
            deviations: (2..=5).map(Strategy::Withhold).collect(),
        }
    }

    /// Frontier first, then the deviations.
    pub fn members(&self) -> Vec<Strategy> {
        std::iter::once(self.frontier).chain(self.deviations.iter().copied()).collect()
    }

    pub fn validate(&self) -> Result<(), AnalyzerError> {
        for s in self.members() {
            if !s.playable_by(self.player) {
                return Err(AnalyzerError::BadFamily(format!("{s} is not playable by {:?}", self.player)));
            }
        }
        Ok(())
    }

    fn assign(&self, cfg: &GameConfig, s: Strategy) -> GameConfig {
        let mut c = cfg.clone();
        match self.player {
            Executor::R => c.strategy_r = s,
            Executor::UR => c.strategy_ur = s,
        }
        c
    }
}

/// Outcome of a best-response search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BestResponse {
    pub strategy: Strategy,
    pub gain: f64,
    pub frontier_gain: f64,
    /// Paired gap of every deviation against the frontier strategy.
    pub gaps: Vec<(Strategy, PairedGap)>,
}

impl BestResponse {
    /// The deviation with the largest point gap, significant or not.
    pub fn strongest(&self) -> Option<(Strategy, PairedGap)> {
        self.gaps.iter().copied().max_by(|a, b| a.1.gap.total_cmp(&b.1.gap))
    }

    /// Whether some deviation beats the frontier strategy by more than `k` half-widths.
    pub fn deviation_wins(&self, k: f64) -> bool {
        self.gaps.iter().any(|(_, g)| g.significant(k))
    }
}

/// Best response of `family.player` to `opponent` within the family.
///
/// All members are run on the same trial seeds. The winner is the member
/// with the highest estimated gain among those that beat the frontier
/// strategy by more than [`SIGNIFICANCE`] half-widths; without such a
/// member the frontier strategy is returned.
pub fn best_response(
    opponent: Strategy,
    family: &DeviationFamily,
    cfg: &GameConfig,
    trials: u64,
) -> Result<BestResponse, AnalyzerError> {
    family.validate()?;
    if trials == 0 {
        return Err(AnalyzerError::NoTrials);
    }
    let mut base = cfg.clone();
    match family.player {
        Executor::R => base.strategy_ur = opponent,
        Executor::UR => base.strategy_r = opponent,
    }
    let front = run_trials(&family.assign(&base, family.frontier), trials)?;
    let mut gaps = Vec::with_capacity(family.deviations.len());
    for &s in &family.deviations {
        let dev = run_trials(&family.assign(&base, s), trials)?;
        gaps.push((s, paired_gap(&dev, &front, family.player)));
    }
    let frontier_gain = GainEstimate::from_ledgers(&front).gain(family.player).mean;
    let winner = gaps
        .iter()
        .filter(|(_, g)| g.significant(SIGNIFICANCE))
        .max_by(|a, b| a.1.gain_a.total_cmp(&b.1.gain_a));
    let (strategy, gain) = match winner {
        Some((s, g)) => (*s, g.gain_a),
        None => (family.frontier, frontier_gain),
    };
    Ok(BestResponse { strategy, gain, frontier_gain, gaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Horizon;

    #[test]
    fn families_contain_their_frontier() {
        for f in [DeviationFamily::unregulated(), DeviationFamily::regulated_withholding()] {
            assert_eq!(f.members()[0], f.frontier);
            f.validate().unwrap();
        }
    }

    #[test]
    fn mixed_family_rejected() {
        let mut f = DeviationFamily::unregulated();
        f.deviations.push(Strategy::Withhold(2));
        assert!(f.validate().is_err());
    }

    #[test]
    fn frontier_kept_when_nothing_pays() {
        let cfg = GameConfig { alpha_r: 0.8, depth: Horizon::Finite(10), max_epochs: 300, ..Default::default() };
        let br = best_response(Strategy::RegFrontier, &DeviationFamily::unregulated(), &cfg, 200).unwrap();
        assert_eq!(br.strategy, Strategy::LegFrontier);
        assert!(!br.deviation_wins(SIGNIFICANCE));
    }
}
