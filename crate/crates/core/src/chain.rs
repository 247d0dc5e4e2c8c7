//! Blocks and the width-two block tree that the proposal game evolves on.
//!
//! The tree hangs off a single root block. Regulated executors build the
//! legal branch, unregulated executors build the other branch. Blocks at or
//! below the root are final: nobody can fork below the root in a width-two
//! game, so capitulating onto a block finalizes the path leading to it.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type BlockId = u64;

/// Id of the genesis root every fresh tree starts from.
pub const GENESIS: BlockId = 0;

/// Legality class of a block. Ordered so that `Dubious < Legal < Regulated`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BlockKind {
    Dubious,
    Legal,
    Regulated,
}

impl BlockKind {
    pub fn is_legal(self) -> bool {
        self != BlockKind::Dubious
    }
}

/// Executor category.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Executor {
    R,
    UR,
}

impl Executor {
    pub fn opponent(self) -> Executor {
        match self {
            Executor::R => Executor::UR,
            Executor::UR => Executor::R,
        }
    }

    /// The branch this executor builds on.
    pub fn side(self) -> Side {
        match self {
            Executor::R => Side::Legal,
            Executor::UR => Side::Other,
        }
    }
}

impl fmt::Display for Executor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Executor::R => "R",
            Executor::UR => "UR",
        })
    }
}

/// One of the two live branches above the root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Legal,
    Other,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Legal => Side::Other,
            Side::Other => Side::Legal,
        }
    }

    pub fn owner(self) -> Executor {
        match self {
            Side::Legal => Executor::R,
            Side::Other => Executor::UR,
        }
    }

    fn accepts(self, kind: BlockKind) -> bool {
        match self {
            Side::Legal => kind == BlockKind::Regulated,
            Side::Other => kind != BlockKind::Regulated,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub id: BlockId,
    pub parent: BlockId,
    /// Equal to the height: one block per epoch.
    pub epoch: u64,
    pub kind: BlockKind,
    pub notarizer: Executor,
    /// Oversight compliance fee carried by the block, zero unless regulated.
    pub ocf: f64,
    pub released: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("{kind:?} block cannot extend the {side:?} branch")]
    KindMismatch { side: Side, kind: BlockKind },
    #[error("block {0} is neither the root nor on the opposing branch")]
    UnknownBlock(BlockId),
    #[error("block {0} is on the abandoning side's own branch; not a defection")]
    NotADefection(BlockId),
    #[error("unconfirmed branch exceeded {cap} blocks")]
    BranchOverflow { cap: usize },
    #[error("ocf may only be attached to regulated blocks")]
    OcfOnUnregulated,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockTree {
    root: BlockId,
    root_epoch: u64,
    legal: Vec<Block>,
    other: Vec<Block>,
    confirmed: Vec<Block>,
    orphaned: Vec<Block>,
    /// Length of the published prefix of each branch, `[legal, other]`.
    released: [usize; 2],
    next_id: BlockId,
    cap: usize,
}

impl BlockTree {
    /// Fresh tree rooted at genesis. `cap` bounds each unconfirmed branch.
    pub fn new(cap: usize) -> Self {
        BlockTree {
            root: GENESIS,
            root_epoch: 0,
            legal: Vec::new(),
            other: Vec::new(),
            confirmed: Vec::new(),
            orphaned: Vec::new(),
            released: [0, 0],
            next_id: GENESIS + 1,
            cap,
        }
    }

    pub fn root(&self) -> BlockId {
        self.root
    }

    pub fn root_epoch(&self) -> u64 {
        self.root_epoch
    }

    pub fn branch(&self, side: Side) -> &[Block] {
        match side {
            Side::Legal => &self.legal,
            Side::Other => &self.other,
        }
    }

    fn branch_mut(&mut self, side: Side) -> &mut Vec<Block> {
        match side {
            Side::Legal => &mut self.legal,
            Side::Other => &mut self.other,
        }
    }

    /// Final blocks accumulated since the last [`BlockTree::take_confirmed`].
    pub fn confirmed(&self) -> &[Block] {
        &self.confirmed
    }

    pub fn orphaned(&self) -> &[Block] {
        &self.orphaned
    }

    pub fn take_confirmed(&mut self) -> Vec<Block> {
        std::mem::take(&mut self.confirmed)
    }

    pub fn take_orphaned(&mut self) -> Vec<Block> {
        std::mem::take(&mut self.orphaned)
    }

    /// Forget archived final and orphaned blocks, keeping their buffers.
    pub fn clear_archives(&mut self) {
        self.confirmed.clear();
        self.orphaned.clear();
    }

    /// Branch lengths above the root as `(b_other, b_legal)`.
    pub fn fork_heights(&self) -> (usize, usize) {
        (self.other.len(), self.legal.len())
    }

    pub fn height(&self, side: Side) -> usize {
        self.branch(side).len()
    }

    /// Number of leading blocks on `side` that have been published.
    pub fn released_height(&self, side: Side) -> usize {
        self.released[slot(side)]
    }

    /// Number of leading legal blocks on `side`.
    pub fn legal_prefix(&self, side: Side) -> usize {
        self.branch(side).iter().take_while(|b| b.kind.is_legal()).count()
    }

    /// Frontier id of `side`, or the root when the branch is empty.
    pub fn frontier(&self, side: Side) -> BlockId {
        self.branch(side).last().map_or(self.root, |b| b.id)
    }

    /// Id of the block at `offset` above the root on `side`; offset 0 is the root.
    pub fn block_at(&self, side: Side, offset: usize) -> Option<BlockId> {
        if offset == 0 {
            Some(self.root)
        } else {
            self.branch(side).get(offset - 1).map(|b| b.id)
        }
    }

    pub fn extend_branch(&mut self, side: Side, kind: BlockKind, ocf: f64) -> Result<BlockId, ChainError> {
        self.extend_with(side, kind, ocf, true)
    }

    /// Append a block to `side`, optionally withheld from the public view.
    pub fn extend_with(
        &mut self,
        side: Side,
        kind: BlockKind,
        ocf: f64,
        released: bool,
    ) -> Result<BlockId, ChainError> {
        if !side.accepts(kind) {
            return Err(ChainError::KindMismatch { side, kind });
        }
        if ocf > 0.0 && kind != BlockKind::Regulated {
            return Err(ChainError::OcfOnUnregulated);
        }
        let cap = self.cap;
        if self.height(side) >= cap {
            return Err(ChainError::BranchOverflow { cap });
        }
        let parent = self.frontier(side);
        let epoch = self.root_epoch + self.height(side) as u64 + 1;
        let id = self.next_id;
        self.next_id += 1;
        if released && self.released[slot(side)] == self.height(side) {
            self.released[slot(side)] += 1;
        }
        self.branch_mut(side).push(Block {
            id,
            parent,
            epoch,
            kind,
            notarizer: side.owner(),
            ocf,
            released,
        });
        Ok(id)
    }

    /// Publish the first `count` blocks of `side`.
    pub fn release(&mut self, side: Side, count: usize) {
        let n = count.min(self.height(side));
        for b in self.branch_mut(side).iter_mut().take(n) {
            b.released = true;
        }
        let r = &mut self.released[slot(side)];
        *r = (*r).max(n);
    }

    /// Confirm the first branch whose height reached `depth`.
    pub fn confirm_if_depth_reached(&mut self, depth: usize) -> Option<Side> {
        let winner = [Side::Legal, Side::Other]
            .into_iter()
            .find(|&s| self.height(s) >= depth.max(1))?;
        self.settle(winner);
        Some(winner)
    }

    /// Finalize `winner` wholesale and orphan the competing branch.
    pub fn settle(&mut self, winner: Side) {
        let won = std::mem::take(self.branch_mut(winner));
        let lost = std::mem::take(self.branch_mut(winner.opposite()));
        if let Some(last) = won.last() {
            self.root = last.id;
            self.root_epoch = last.epoch;
        }
        self.confirmed.extend(won);
        self.orphaned.extend(lost);
        self.released = [0, 0];
    }

    /// The `abandoning` side gives up its branch and builds on `target`,
    /// which must be the root or a block of the opposing branch. The path
    /// up to `target` becomes final and `target` becomes the new root.
    pub fn reset_root(&mut self, abandoning: Side, target: BlockId) -> Result<(), ChainError> {
        let keep = abandoning.opposite();
        let offset = if target == self.root {
            0
        } else if let Some(i) = self.branch(keep).iter().position(|b| b.id == target) {
            i + 1
        } else if self.branch(abandoning).iter().any(|b| b.id == target) {
            return Err(ChainError::NotADefection(target));
        } else {
            return Err(ChainError::UnknownBlock(target));
        };
        let dropped = std::mem::take(self.branch_mut(abandoning));
        self.orphaned.extend(dropped);
        self.released[slot(abandoning)] = 0;
        if offset > 0 {
            let r = &mut self.released[slot(keep)];
            *r = r.saturating_sub(offset);
            let rest = self.branch_mut(keep).split_off(offset);
            let done = std::mem::replace(self.branch_mut(keep), rest);
            let last = done.last().expect("offset > 0");
            self.root = last.id;
            self.root_epoch = last.epoch;
            self.confirmed.extend(done);
        }
        Ok(())
    }
}

fn slot(side: Side) -> usize {
    match side {
        Side::Legal => 0,
        Side::Other => 1,
    }
}

impl Default for BlockTree {
    fn default() -> Self {
        BlockTree::new(10_000)
    }
}
