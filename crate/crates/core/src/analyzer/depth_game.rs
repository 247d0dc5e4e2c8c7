//! Exact two-miner tree game with reward maturity at depth `E`.
//!
//! The honest miner (share `1 - alpha`) always extends the deepest block.
//! The strategic miner may extend the tip, extend a private-in-spirit fork
//! hanging off any of the last `E` main-chain blocks, or start a new fork.
//! Every time the main chain grows, the block that reaches depth `E` counting
//! from the tip is paid. A fork rooted at depth `k` needs `k` blocks to
//! overtake the `k - 1` main-chain blocks above its root, and dies once its
//! root sinks below depth `E`.
//!
//! State: the owners of main-chain depths `1..E-1` plus the optional fork
//! `(k, f)` with root depth `k` in `2..=E` and length `f` in `1..k`.

use super::mdp::{Choice, RatioMdp};

type Fork = Option<(usize, usize)>;

pub struct DepthGame {
    depth: usize,
    forks: Vec<Fork>,
}

impl DepthGame {
    pub fn new(depth: usize) -> Self {
        assert!((2..=16).contains(&depth), "depth game supports 2 <= E <= 16");
        let mut forks = vec![None];
        for k in 2..=depth {
            for f in 1..k {
                forks.push(Some((k, f)));
            }
        }
        DepthGame { depth, forks }
    }

    fn owner_bits(&self) -> usize {
        self.depth - 1
    }

    pub fn num_states(&self) -> usize {
        (1 << self.owner_bits()) * self.forks.len()
    }

    fn index(&self, owners: u32, fork: Fork) -> u32 {
        let fi = self.forks.iter().position(|&x| x == fork).expect("valid fork");
        (owners as usize * self.forks.len() + fi) as u32
    }

    /// Owner bit of depth `d` (1-based); bit set means the strategic miner.
    fn owner(owners: u32, d: usize) -> bool {
        owners >> (d - 1) & 1 == 1
    }

    /// Main chain grows by one block owned by `attacker`.
    fn extend_main(&self, owners: u32, fork: Fork, attacker: bool) -> (bool, u32, Fork) {
        let e = self.depth;
        let paid = Self::owner(owners, e - 1);
        let mask = (1u32 << (e - 1)) - 1;
        let shifted = ((owners << 1) | attacker as u32) & mask;
        let fork = fork.and_then(|(k, f)| (k < e).then_some((k + 1, f)));
        (paid, shifted, fork)
    }

    /// The fork rooted at depth `k` reached `k` blocks and becomes the main chain.
    fn fork_win(&self, owners: u32, k: usize) -> (bool, u32) {
        let e = self.depth;
        let paid = if k == e { true } else { Self::owner(owners, e - 1) };
        let mut next = 0u32;
        for d in 1..e {
            let bit = if d <= k { true } else { Self::owner(owners, d - 1) };
            next |= (bit as u32) << (d - 1);
        }
        (paid, next)
    }

    /// Build the ratio MDP for strategic share `alpha`. Choice 0 is the tip.
    pub fn build(&self, alpha: f64) -> RatioMdp {
        let mut mdp = RatioMdp::new();
        let pay = |paid: bool| if paid { 1.0 } else { 0.0 };
        for owners in 0..(1u32 << self.owner_bits()) {
            for &fork in &self.forks {
                let mut att = Vec::new();
                let (p, o, f) = self.extend_main(owners, fork, true);
                att.push(Choice { next: self.index(o, f), num: pay(p), den: 1.0 });
                if let Some((k, f)) = fork {
                    if f + 1 == k {
                        let (p, o) = self.fork_win(owners, k);
                        att.push(Choice { next: self.index(o, None), num: pay(p), den: 1.0 });
                    } else {
                        att.push(Choice { next: self.index(owners, Some((k, f + 1))), num: 0.0, den: 0.0 });
                    }
                }
                for k in 2..=self.depth {
                    att.push(Choice { next: self.index(owners, Some((k, 1))), num: 0.0, den: 0.0 });
                }
                let (p, o, f) = self.extend_main(owners, fork, false);
                let hon = vec![Choice { next: self.index(o, f), num: pay(p), den: 1.0 }];
                mdp.push_state(vec![(alpha, att), (1.0 - alpha, hon)]);
            }
        }
        mdp
    }
}
