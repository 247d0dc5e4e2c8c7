use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ledger::{settle_rewards, EpisodeStats, RewardLedger};
use super::{GameConfig, GameError, Horizon, Model, Strategy};
use crate::chain::{BlockKind, BlockTree, Executor, Side};

/// What the owner of an epoch does with its block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Action {
    ExtendOwn,
    /// Abandon the own branch and mine on the opponent block at this offset
    /// above the root (`0` is the root, the released height is the frontier).
    Capitulate(usize),
}

/// Fork heights plus release bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GameState {
    pub b_ur: usize,
    pub b_r: usize,
    pub released_ur: usize,
    pub released_r: usize,
}

impl GameState {
    pub fn is_fresh(&self) -> bool {
        self.b_ur == 0 && self.b_r == 0
    }
}

/// One trace record per epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StepRecord {
    pub epoch: u64,
    pub owner: Executor,
    pub action: Action,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub released: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confirmed: Option<Side>,
    pub state_after: GameState,
}

/// Independent random streams for owner draws and block contents, so that
/// two strategies run on the same trial see identical owner sequences.
#[derive(Clone, Debug)]
pub struct GameRng {
    pub owner: ChaCha8Rng,
    pub kind: ChaCha8Rng,
}

impl GameRng {
    pub fn for_trial(seed: u64, trial: u64) -> Self {
        let mut owner = ChaCha8Rng::seed_from_u64(seed);
        owner.set_stream(2 * trial);
        let mut kind = ChaCha8Rng::seed_from_u64(seed);
        kind.set_stream(2 * trial + 1);
        GameRng { owner, kind }
    }
}

/// Streams for trial `trial` of a run seeded with `seed`.
pub fn episode_rngs(seed: u64, trial: u64) -> GameRng {
    GameRng::for_trial(seed, trial)
}

/// `R` with probability `alpha_r`.
pub fn draw_owner<R: Rng + ?Sized>(rng: &mut R, alpha_r: f64) -> Executor {
    if rng.random::<f64>() < alpha_r {
        Executor::R
    } else {
        Executor::UR
    }
}

pub struct Engine {
    cfg: GameConfig,
    tree: BlockTree,
    ledger: RewardLedger,
    epoch: u64,
}

impl Engine {
    pub fn new(cfg: &GameConfig) -> Result<Self, GameError> {
        cfg.validate()?;
        Ok(Engine {
            cfg: cfg.clone(),
            tree: BlockTree::new(cfg.branch_cap()),
            ledger: RewardLedger::default(),
            epoch: 0,
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.cfg
    }

    pub fn tree(&self) -> &BlockTree {
        &self.tree
    }

    pub fn ledger(&self) -> &RewardLedger {
        &self.ledger
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn state(&self) -> GameState {
        let t = &self.tree;
        GameState {
            b_ur: t.height(Side::Other),
            b_r: t.height(Side::Legal),
            released_ur: t.released_height(Side::Other),
            released_r: t.released_height(Side::Legal),
        }
    }

    /// No fork is pending: the game sits at a renewal point.
    pub fn is_resolved(&self) -> bool {
        self.state().is_fresh()
    }

    fn strategy(&self, who: Executor) -> Strategy {
        match who {
            Executor::R => self.cfg.strategy_r,
            Executor::UR => self.cfg.strategy_ur,
        }
    }

    fn withholds(&self) -> Option<usize> {
        match self.cfg.strategy_r {
            Strategy::Withhold(l) if l >= 2 => Some(l as usize),
            _ => None,
        }
    }

    /// Opponent offset a rule-follower would move to right now, if any.
    fn adoption_target(&self, who: Executor) -> Option<usize> {
        let me = who.side();
        let opp = me.opposite();
        let own = self.tree.height(me);
        let rel = self.tree.released_height(opp);
        if rel < own {
            return None;
        }
        match self.strategy(who) {
            Strategy::RegFrontier => {
                // longest legal branch: the opponent's legal released prefix
                let legal = self.tree.legal_prefix(opp).min(rel);
                (legal > own).then_some(legal)
            }
            Strategy::LegFrontier => {
                let longer = rel > own || (self.cfg.tie_to_regulated && rel == own && own > 0);
                longer.then_some(rel)
            }
            Strategy::RDubFrontier | Strategy::DubFrontier => (rel > own).then_some(rel),
            _ => None,
        }
    }

    /// The owner's strategy decision for a freshly found block.
    pub fn decide(&self, who: Executor) -> Action {
        let me = who.side();
        let own = self.tree.height(me) as i64;
        let rel = self.tree.released_height(me.opposite()) as i64;
        let deficit = rel - own;
        match self.strategy(who) {
            s if s.is_rule_follower() => {
                self.adoption_target(who).map_or(Action::ExtendOwn, Action::Capitulate)
            }
            Strategy::CapitulateWhenBehind(k) if deficit >= k as i64 => Action::Capitulate(rel as usize),
            Strategy::AttackInterior(j) if deficit > j as i64 => Action::Capitulate((rel - j as i64) as usize),
            Strategy::Withhold(_) if deficit > 0 => Action::Capitulate(rel as usize),
            _ => Action::ExtendOwn,
        }
    }

    fn block_kind<R: Rng + ?Sized>(&self, who: Executor, rng: &mut R) -> BlockKind {
        match who {
            Executor::R => BlockKind::Regulated,
            Executor::UR => match self.cfg.strategy_ur {
                Strategy::DubFrontier => {
                    if rng.random::<f64>() < self.cfg.lambda_legal {
                        BlockKind::Legal
                    } else {
                        BlockKind::Dubious
                    }
                }
                _ => BlockKind::Legal,
            },
        }
    }

    /// Apply `action` for `who` and mine its new block.
    pub fn apply<R: Rng + ?Sized>(&mut self, who: Executor, action: Action, rng: &mut R) -> Result<(), GameError> {
        let me = who.side();
        if let Action::Capitulate(offset) = action {
            let len = self.tree.released_height(me.opposite());
            if offset > len {
                return Err(GameError::IllegalAction { offset, len });
            }
            let target = self.tree.block_at(me.opposite(), offset).expect("offset within branch");
            self.tree.reset_root(me, target)?;
        }
        let kind = self.block_kind(who, rng);
        let (ocf, released) = match who {
            Executor::R => (self.cfg.block_fee(), self.withholds().is_none()),
            Executor::UR => (0.0, true),
        };
        self.tree.extend_with(me, kind, ocf, released)?;
        Ok(())
    }

    /// Strategic release after `who` mined; returns the new released height.
    fn strategic_release(&mut self, who: Executor) -> Option<usize> {
        let l = self.withholds()? as i64;
        let b_r = self.tree.height(Side::Legal);
        let b_ur = self.tree.height(Side::Other);
        let rel = self.tree.released_height(Side::Legal);
        if b_r == 0 {
            return None;
        }
        let count = match who {
            Executor::UR => {
                let lead = b_r as i64 - b_ur as i64;
                if lead == l - 1 || lead == 0 {
                    b_r
                } else if lead > 0 {
                    b_r.min(b_ur)
                } else {
                    return None;
                }
            }
            // winning a tie race: publish everything
            Executor::R if rel + 1 == b_r && rel == b_ur && b_ur >= 1 => b_r,
            Executor::R => return None,
        };
        if count > rel {
            self.tree.release(Side::Legal, count);
            Some(count)
        } else {
            None
        }
    }

    fn adopt(&mut self) -> Result<(), GameError> {
        for _ in 0..2 {
            let mut moved = false;
            for who in [Executor::R, Executor::UR] {
                if let Some(offset) = self.adoption_target(who) {
                    let side = who.side();
                    let target = self.tree.block_at(side.opposite(), offset).expect("offset within branch");
                    self.tree.reset_root(side, target)?;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
        Ok(())
    }

    fn settle_archives(&mut self) {
        settle_rewards(self.tree.confirmed(), &mut self.ledger);
        self.ledger.record_orphans(self.tree.orphaned());
        self.tree.clear_archives();
    }

    /// Play one epoch with a given owner.
    pub fn step_as<R: Rng + ?Sized>(&mut self, owner: Executor, kind_rng: &mut R) -> Result<StepRecord, GameError> {
        let action = self.decide(owner);
        self.apply(owner, action, kind_rng)?;
        let released = self.strategic_release(owner);
        let confirmed = match self.cfg.depth {
            Horizon::Finite(e) => self.tree.confirm_if_depth_reached(e),
            Horizon::Infinite => None,
        };
        self.adopt()?;
        self.settle_archives();
        self.epoch += 1;
        self.ledger.epochs += 1;
        Ok(StepRecord { epoch: self.epoch, owner, action, released, confirmed, state_after: self.state() })
    }

    /// Draw the owner and play one epoch.
    pub fn step(&mut self, rng: &mut GameRng) -> Result<StepRecord, GameError> {
        let owner = draw_owner(&mut rng.owner, self.cfg.alpha_r);
        self.step_as(owner, &mut rng.kind)
    }

    /// Resolve any pending fork by fork choice and return the episode gains.
    /// The longer branch wins, private blocks included; ties go to the legal branch.
    pub fn finish(mut self) -> EpisodeStats {
        if !self.is_resolved() {
            let winner = if self.tree.height(Side::Other) > self.tree.height(Side::Legal) {
                Side::Other
            } else {
                Side::Legal
            };
            self.tree.settle(winner);
            self.settle_archives();
        }
        EpisodeStats::from_ledger(self.ledger)
    }
}

/// Run one episode: `maxEpochs` epochs, then up to as many more until the
/// pending fork resolves.
pub fn run_episode(cfg: &GameConfig, rng: &mut GameRng) -> Result<EpisodeStats, GameError> {
    run_episode_with(cfg, rng, |_| {})
}

/// [`run_episode`] with a per-epoch observer, used for traces.
pub fn run_episode_with<F>(cfg: &GameConfig, rng: &mut GameRng, mut observe: F) -> Result<EpisodeStats, GameError>
where
    F: FnMut(&StepRecord),
{
    let mut eng = Engine::new(cfg)?;
    for _ in 0..cfg.max_epochs {
        observe(&eng.step(rng)?);
    }
    let mut extra = 0;
    while !eng.is_resolved() && extra < cfg.max_epochs {
        observe(&eng.step(rng)?);
        extra += 1;
    }
    Ok(eng.finish())
}

impl Model {
    /// The frontier strategy of the category that may deviate in this model.
    pub fn frontier_for(self, who: Executor) -> Strategy {
        match (self, who) {
            (Model::Sr, Executor::R) => Strategy::RDubFrontier,
            (Model::Sr, Executor::UR) => Strategy::DubFrontier,
            (_, Executor::R) => Strategy::RegFrontier,
            (_, Executor::UR) => Strategy::LegFrontier,
        }
    }
}
