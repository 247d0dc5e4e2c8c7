//! Exact width-two fork game between a rule-following majority and a
//! strategic minority, optionally with a pay-forward fee on majority blocks.
//!
//! State `(a, h, root)`: the strategic branch has `a` blocks, the majority
//! branch `h` blocks (`a <= h`, the strategic side wins the moment it
//! overtakes), and `root` records whether the root block carries a fee.
//! The majority branch is confirmed when it reaches `E` blocks.
//!
//! The strategic miner acts only when it finds a block: extend its own
//! branch, or abandon it and mine on the majority block at offset `t`
//! (`t = 0` is the root, `t = h` the frontier). Capitulating finalizes the
//! `t` majority blocks below the target. The pay-forward fee of a fee-bearing
//! block goes to whoever owns the next final block.
//!
//! This mirrors the simulation engine with `RegFrontier` against a strategic
//! unregulated executor, so fixed-policy values here are exact oracles for
//! the Monte Carlo estimates.

use super::mdp::{Choice, Policy, RatioMdp, SolveOptions};

/// A strategic decision in the fork game.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForkMove {
    Extend,
    /// Mine on the majority block at this offset above the root.
    Capitulate(usize),
}

#[derive(Clone, Debug)]
pub struct ForkGame {
    pub depth: usize,
    pub rho: f64,
    /// Deepest capitulation target considered, counted down from the frontier.
    pub max_fork_depth: usize,
}

impl ForkGame {
    pub fn new(depth: usize, rho: f64) -> Self {
        assert!(depth >= 2, "game depth must be at least 2");
        ForkGame { depth, rho, max_fork_depth: depth }
    }

    pub fn with_max_fork_depth(mut self, d: usize) -> Self {
        self.max_fork_depth = d;
        self
    }

    fn fee_states(&self) -> usize {
        if self.rho > 0.0 {
            2
        } else {
            1
        }
    }

    pub fn num_states(&self) -> usize {
        self.depth * (self.depth + 1) / 2 * self.fee_states()
    }

    pub fn index(&self, a: usize, h: usize, fee_root: bool) -> u32 {
        let base = h * (h + 1) / 2 + a;
        let fee = (fee_root && self.rho > 0.0) as usize;
        (base * self.fee_states() + fee) as u32
    }

    /// All states as `(a, h, fee_root)` in index order.
    pub fn states(&self) -> Vec<(usize, usize, bool)> {
        let mut v = Vec::with_capacity(self.num_states());
        for h in 0..self.depth {
            for a in 0..=h {
                for fee in 0..self.fee_states() {
                    v.push((a, h, fee == 1));
                }
            }
        }
        v
    }

    /// Legal strategic moves at a state; the first is the frontier move.
    pub fn moves(&self, a: usize, h: usize) -> Vec<ForkMove> {
        let mut v = Vec::new();
        if a == h {
            v.push(ForkMove::Extend);
        } else {
            v.push(ForkMove::Capitulate(h));
            v.push(ForkMove::Extend);
        }
        let lo = h.saturating_sub(self.max_fork_depth);
        for t in (lo..h).rev() {
            v.push(ForkMove::Capitulate(t));
        }
        if a == h && h > 0 {
            v.push(ForkMove::Capitulate(h));
        }
        v
    }

    fn outcome(&self, a: usize, h: usize, fee: bool, m: ForkMove) -> Choice {
        let rho = self.rho;
        match m {
            ForkMove::Extend if a == h => Choice {
                next: self.index(0, 0, false),
                num: (a + 1) as f64 + if fee { rho } else { 0.0 },
                den: (a + 1) as f64,
            },
            ForkMove::Extend => Choice { next: self.index(a + 1, h, fee), num: 0.0, den: 0.0 },
            ForkMove::Capitulate(t) => {
                // the block mined on top of offset t claims its fee, if any
                let target_fee = if t == 0 { fee } else { rho > 0.0 };
                if t == h {
                    Choice {
                        next: self.index(0, 0, false),
                        num: 1.0 + if target_fee { rho } else { 0.0 },
                        den: (t + 1) as f64,
                    }
                } else {
                    Choice { next: self.index(1, h - t, target_fee), num: 0.0, den: t as f64 }
                }
            }
        }
    }

    fn majority_outcome(&self, a: usize, h: usize, fee: bool) -> Choice {
        if h + 1 >= self.depth {
            Choice { next: self.index(0, 0, self.rho > 0.0), num: 0.0, den: (h + 1) as f64 }
        } else {
            Choice { next: self.index(a, h + 1, fee), num: 0.0, den: 0.0 }
        }
    }

    /// Ratio MDP for strategic share `alpha`, with the move lists of [`ForkGame::moves`].
    pub fn build(&self, alpha: f64) -> RatioMdp {
        let mut mdp = RatioMdp::new();
        for (a, h, fee) in self.states() {
            let att = self.moves(a, h).into_iter().map(|m| self.outcome(a, h, fee, m)).collect();
            mdp.push_state(vec![(alpha, att), (1.0 - alpha, vec![self.majority_outcome(a, h, fee)])]);
        }
        mdp
    }

    /// Translate a per-state decision rule into an MDP policy.
    pub fn policy<F>(&self, rule: F) -> Policy
    where
        F: Fn(usize, usize) -> ForkMove,
    {
        let mut p = Vec::new();
        for (a, h, _) in self.states() {
            let want = rule(a, h);
            let i = self.moves(a, h).iter().position(|&m| m == want).unwrap_or(0);
            p.push(i as u32);
            p.push(0);
        }
        p
    }

    /// Relative revenue (fees included in the numerator) of a fixed rule.
    pub fn rule_gain<F>(&self, alpha: f64, rule: F) -> f64
    where
        F: Fn(usize, usize) -> ForkMove,
    {
        let mdp = self.build(alpha);
        mdp.policy_ratio(&self.policy(rule), &SolveOptions::default())
    }

    /// Optimal relative revenue of the strategic miner.
    pub fn optimal_gain(&self, alpha: f64) -> f64 {
        if alpha <= 0.0 {
            return 0.0;
        }
        if alpha >= 1.0 {
            return 1.0;
        }
        self.build(alpha).solve(&SolveOptions::default()).ratio
    }

    /// Frontier value: fair share plus fees collected on majority blocks.
    pub fn frontier_gain(&self, alpha: f64) -> f64 {
        alpha + self.rho * alpha * (1.0 - alpha)
    }

    /// Best achievable average of `gain - frontier_gain` per confirmed block,
    /// positive exactly when some deviation is profitable.
    pub fn deviation_advantage(&self, alpha: f64, opts: &SolveOptions) -> f64 {
        let lambda = self.frontier_gain(alpha);
        self.build(alpha).average_gain(lambda, opts).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frontier_rule_gets_fair_share() {
        for &rho in &[0.0, 0.7] {
            let g = ForkGame::new(5, rho);
            for &al in &[0.2, 0.45] {
                let v = g.rule_gain(al, |a, h| {
                    if a == h {
                        ForkMove::Extend
                    } else {
                        ForkMove::Capitulate(h)
                    }
                });
                assert!((v - g.frontier_gain(al)).abs() < 1e-10, "rho {rho} alpha {al}: {v}");
            }
        }
    }
}
