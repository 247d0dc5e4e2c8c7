use serde::{Deserialize, Serialize};

use crate::chain::{Block, BlockKind, Executor};

/// Reward accounting over final blocks. Merging ledgers is associative, so
/// per-trial ledgers can be combined in any grouping.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RewardLedger {
    pub confirmed_r: u64,
    pub confirmed_ur: u64,
    pub ocf_claims_r: u64,
    pub ocf_claims_ur: u64,
    pub ocf_r: f64,
    pub ocf_ur: f64,
    pub epochs: u64,
    pub legal_confirmed: u64,
    pub orphaned_r: u64,
    pub orphaned_ur: u64,
    pub orphaned_dubious: u64,
    /// Fee on the latest final block, claimable by the next one.
    #[serde(skip)]
    pub pending_ocf: f64,
}

impl RewardLedger {
    pub fn total_confirmed(&self) -> u64 {
        self.confirmed_r + self.confirmed_ur
    }

    pub fn reward(&self, who: Executor) -> f64 {
        match who {
            Executor::R => self.confirmed_r as f64 + self.ocf_r,
            Executor::UR => self.confirmed_ur as f64 + self.ocf_ur,
        }
    }

    pub fn record_orphans(&mut self, blocks: &[Block]) {
        for b in blocks {
            match b.notarizer {
                Executor::R => self.orphaned_r += 1,
                Executor::UR => self.orphaned_ur += 1,
            }
            if b.kind == BlockKind::Dubious {
                self.orphaned_dubious += 1;
            }
        }
    }

    pub fn merge(&mut self, o: &RewardLedger) {
        self.confirmed_r += o.confirmed_r;
        self.confirmed_ur += o.confirmed_ur;
        self.ocf_claims_r += o.ocf_claims_r;
        self.ocf_claims_ur += o.ocf_claims_ur;
        self.ocf_r += o.ocf_r;
        self.ocf_ur += o.ocf_ur;
        self.epochs += o.epochs;
        self.legal_confirmed += o.legal_confirmed;
        self.orphaned_r += o.orphaned_r;
        self.orphaned_ur += o.orphaned_ur;
        self.orphaned_dubious += o.orphaned_dubious;
    }
}

/// Credit final blocks in height order: one unit to each notarizer, plus the
/// fee of the preceding regulated block.
pub fn settle_rewards(confirmed: &[Block], ledger: &mut RewardLedger) {
    for b in confirmed {
        let fee = std::mem::take(&mut ledger.pending_ocf);
        match b.notarizer {
            Executor::R => {
                ledger.confirmed_r += 1;
                if fee > 0.0 {
                    ledger.ocf_claims_r += 1;
                    ledger.ocf_r += fee;
                }
            }
            Executor::UR => {
                ledger.confirmed_ur += 1;
                if fee > 0.0 {
                    ledger.ocf_claims_ur += 1;
                    ledger.ocf_ur += fee;
                }
            }
        }
        if b.kind.is_legal() {
            ledger.legal_confirmed += 1;
        }
        if b.kind == BlockKind::Regulated {
            ledger.pending_ocf = b.ocf;
        }
    }
}

/// Gains of one episode, or of a pooled set of episodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EpisodeStats {
    pub g_r: f64,
    pub g_ur: f64,
    pub t_f: f64,
    /// Fees paid per confirmed block, so that `gR + gUR - ocfPaid = 1`.
    pub ocf_paid: f64,
    pub epochs: u64,
    pub ledger: RewardLedger,
}

impl EpisodeStats {
    pub fn from_ledger(ledger: RewardLedger) -> Self {
        let total = ledger.total_confirmed() as f64;
        let frac = |x: f64| if total > 0.0 { x / total } else { 0.0 };
        EpisodeStats {
            g_r: frac(ledger.reward(Executor::R)),
            g_ur: frac(ledger.reward(Executor::UR)),
            t_f: frac(ledger.legal_confirmed as f64),
            ocf_paid: frac(ledger.ocf_r + ledger.ocf_ur),
            epochs: ledger.epochs,
            ledger,
        }
    }

    /// Confirmed-block share of the regulated executors, fees excluded.
    pub fn block_share_r(&self) -> f64 {
        let t = self.ledger.total_confirmed();
        if t == 0 {
            0.0
        } else {
            self.ledger.confirmed_r as f64 / t as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(id: u64, who: Executor, kind: BlockKind, ocf: f64) -> Block {
        Block { id, parent: id.saturating_sub(1), epoch: id, kind, notarizer: who, ocf, released: true }
    }

    #[test]
    fn three_regulated_blocks_with_fee() {
        let rho = 0.25;
        let chain: Vec<_> = (1..=3).map(|i| block(i, Executor::R, BlockKind::Regulated, rho)).collect();
        let mut l = RewardLedger::default();
        settle_rewards(&chain, &mut l);
        assert_eq!(l.reward(Executor::R), 3.0 + 2.0 * rho);
        assert_eq!(l.pending_ocf, rho);
    }

    #[test]
    fn alternating_chain_pays_one_fee_to_ur() {
        let rho = 0.5;
        let chain = vec![
            block(1, Executor::R, BlockKind::Regulated, rho),
            block(2, Executor::UR, BlockKind::Legal, 0.0),
            block(3, Executor::R, BlockKind::Regulated, rho),
        ];
        let mut l = RewardLedger::default();
        settle_rewards(&chain, &mut l);
        assert_eq!(l.ocf_claims_ur, 1);
        assert_eq!(l.ocf_claims_r, 0);
        assert_eq!(l.reward(Executor::UR), 1.5);
        let s = EpisodeStats::from_ledger(l);
        assert!((s.g_r + s.g_ur - s.ocf_paid - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_fee_means_block_counts() {
        let chain = vec![
            block(1, Executor::R, BlockKind::Regulated, 0.0),
            block(2, Executor::UR, BlockKind::Dubious, 0.0),
        ];
        let mut l = RewardLedger::default();
        settle_rewards(&chain, &mut l);
        let s = EpisodeStats::from_ledger(l);
        assert_eq!((s.g_r, s.g_ur, s.t_f), (0.5, 0.5, 0.5));
    }
}
