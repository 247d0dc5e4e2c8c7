//! The epoch-synchronous block-proposal game between regulated (`R`) and
//! unregulated (`UR`) executors.
//!
//! Each epoch exactly one executor category notarizes a block, `R` with
//! probability `alpha_r`. The owner's strategy picks an [`Action`]; the
//! engine then applies strategic release, depth confirmation and the
//! adoption rule of rule-following strategies, and settles final blocks.

mod engine;
mod ledger;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainError, Executor};

pub use engine::{
    draw_owner, episode_rngs, run_episode, run_episode_with, Action, Engine, GameRng, GameState,
    StepRecord,
};
pub use ledger::{settle_rewards, EpisodeStats, RewardLedger};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("capitulation target {offset} beyond opponent branch of length {len}")]
    IllegalAction { offset: usize, len: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Game depth: the oversight window `E`, or no confirmation by depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl Horizon {
    pub fn finite(self) -> Option<usize> {
        match self {
            Horizon::Finite(e) => Some(e),
            Horizon::Infinite => None,
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(e) => write!(f, "{e}"),
            Horizon::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Horizon {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinite" | "infinity" | "∞" => Ok(Horizon::Infinite),
            t => match t.parse::<usize>() {
                Ok(e) if e >= 1 => Ok(Horizon::Finite(e)),
                _ => Err(format!("game depth must be a positive integer or 'inf', got '{s}'")),
            },
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Horizon::Finite(e) => s.serialize_u64(*e as u64),
            Horizon::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Horizon;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive integer or \"inf\"")
            }

            fn visit_u64<E: serde::de::Error>(self, n: u64) -> Result<Horizon, E> {
                Horizon::from_str(&n.to_string()).map_err(E::custom)
            }

            fn visit_i64<E: serde::de::Error>(self, n: i64) -> Result<Horizon, E> {
                Horizon::from_str(&n.to_string()).map_err(E::custom)
            }

            // csv reads "inf" as a float
            fn visit_f64<E: serde::de::Error>(self, x: f64) -> Result<Horizon, E> {
                if x == f64::INFINITY {
                    Ok(Horizon::Infinite)
                } else if x.fract() == 0.0 && x >= 1.0 {
                    Ok(Horizon::Finite(x as usize))
                } else {
                    Err(E::custom(format!("game depth must be a positive integer, got {x}")))
                }
            }

            fn visit_str<E: serde::de::Error>(self, s: &str) -> Result<Horizon, E> {
                Horizon::from_str(s).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// Release model and whether regulated blocks carry the compliance fee.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "ir")]
    Ir,
    #[serde(rename = "ir-ocf")]
    IrOcf,
    #[serde(rename = "sr")]
    Sr,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Ir => "ir",
            Model::IrOcf => "ir-ocf",
            Model::Sr => "sr",
        })
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ir" => Ok(Model::Ir),
            "ir-ocf" | "irocf" | "ocf" => Ok(Model::IrOcf),
            "sr" => Ok(Model::Sr),
            _ => Err(format!("unknown model '{s}' (expected ir, ir-ocf or sr)")),
        }
    }
}

/// Notarization strategies of both categories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    /// `R`: regulated blocks on the longest legal branch.
    RegFrontier,
    /// `R`: regulated blocks on the longest branch, dubious or not.
    RDubFrontier,
    /// `UR`: legal blocks on the longest legal branch.
    LegFrontier,
    /// `UR`: blocks on the longest released branch.
    DubFrontier,
    /// Keep mining the own branch until `k` blocks behind, then take the frontier.
    CapitulateWhenBehind(u32),
    /// Once more than `j` blocks behind, fork off the block `j` below the opponent frontier.
    AttackInterior(u32),
    /// Strategic release with lead threshold `L`.
    Withhold(u32),
}

impl Strategy {
    /// Rule-followers adopt a longer acceptable opponent branch as soon as it appears.
    pub fn is_rule_follower(self) -> bool {
        matches!(
            self,
            Strategy::RegFrontier | Strategy::RDubFrontier | Strategy::LegFrontier | Strategy::DubFrontier
        )
    }

    /// Categories allowed to play this strategy.
    pub fn playable_by(self, who: Executor) -> bool {
        match self {
            Strategy::RegFrontier | Strategy::RDubFrontier | Strategy::Withhold(_) => who == Executor::R,
            _ => who == Executor::UR,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::RegFrontier => f.write_str("reg-frontier"),
            Strategy::RDubFrontier => f.write_str("rdub-frontier"),
            Strategy::LegFrontier => f.write_str("leg-frontier"),
            Strategy::DubFrontier => f.write_str("dub-frontier"),
            Strategy::CapitulateWhenBehind(k) => write!(f, "cwb:{k}"),
            Strategy::AttackInterior(j) => write!(f, "ai:{j}"),
            Strategy::Withhold(l) => write!(f, "withhold:{l}"),
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once([':', '(']) {
            Some((n, a)) => (n.to_string(), Some(a.trim_end_matches(')').to_string())),
            None => (lower.clone(), None),
        };
        let num = |a: Option<String>| -> Result<u32, String> {
            a.ok_or_else(|| format!("strategy '{s}' needs a parameter, e.g. '{name}:2'"))?
                .parse::<u32>()
                .map_err(|_| format!("bad strategy parameter in '{s}'"))
        };
        let st = match name.replace('_', "-").as_str() {
            "reg-frontier" | "regfrontier" => Strategy::RegFrontier,
            "rdub-frontier" | "rdubfrontier" => Strategy::RDubFrontier,
            "leg-frontier" | "legfrontier" | "frontier" => Strategy::LegFrontier,
            "dub-frontier" | "dubfrontier" => Strategy::DubFrontier,
            "cwb" | "capitulate-when-behind" | "capitulatewhenbehind" => {
                let k = num(arg)?;
                if k == 0 {
                    return Err("cwb needs k >= 1".into());
                }
                Strategy::CapitulateWhenBehind(k)
            }
            "ai" | "attack-interior" | "attackinterior" => Strategy::AttackInterior(num(arg)?),
            "withhold" | "sm" => {
                let l = num(arg)?;
                if l == 0 {
                    return Err("withhold needs L >= 1".into());
                }
                Strategy::Withhold(l)
            }
            _ => return Err(format!("unknown strategy '{s}'")),
        };
        Ok(st)
    }
}

impl TryFrom<String> for Strategy {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct GameConfig {
    pub alpha_r: f64,
    #[serde(rename = "E")]
    pub depth: Horizon,
    pub rho: f64,
    pub model: Model,
    pub strategy_r: Strategy,
    #[serde(rename = "strategyUR")]
    pub strategy_ur: Strategy,
    pub lambda_legal: f64,
    pub max_epochs: u64,
    pub seed: u64,
    /// LegFrontier breaks length ties toward the regulated branch.
    pub tie_to_regulated: bool,
    /// Bound on each unconfirmed branch; defaults to `10 E` or `10^4`.
    pub branch_cap: Option<usize>,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            alpha_r: 0.6,
            depth: Horizon::Finite(100),
            rho: 0.0,
            model: Model::Ir,
            strategy_r: Strategy::RegFrontier,
            strategy_ur: Strategy::LegFrontier,
            lambda_legal: 0.5,
            max_epochs: 1000,
            seed: 0,
            tie_to_regulated: true,
            branch_cap: None,
        }
    }
}

impl GameConfig {
    pub fn branch_cap(&self) -> usize {
        self.branch_cap.unwrap_or(match self.depth {
            Horizon::Finite(e) => 10 * e,
            Horizon::Infinite => 10_000,
        })
    }

    /// Fee carried by each regulated block.
    pub fn block_fee(&self) -> f64 {
        if self.model == Model::IrOcf {
            self.rho
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<(), GameError> {
        let bad = |m: String| Err(GameError::InvalidConfig(m));
        if !(0.0..=1.0).contains(&self.alpha_r) {
            return bad(format!("alphaR {} outside [0,1]", self.alpha_r));
        }
        if !(0.0..=1.0).contains(&self.lambda_legal) {
            return bad(format!("lambdaLegal {} outside [0,1]", self.lambda_legal));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return bad(format!("rho {} must be a finite non-negative number", self.rho));
        }
        if self.rho > 0.0 && self.model != Model::IrOcf {
            return bad("a compliance fee requires the ir-ocf model".into());
        }
        if let Horizon::Finite(e) = self.depth {
            if e < 1 {
                return bad("game depth must be at least 1".into());
            }
            if self.max_epochs < e as u64 {
                return bad(format!("maxEpochs {} below game depth {e}", self.max_epochs));
            }
        }
        if !self.strategy_r.playable_by(Executor::R) {
            return bad(format!("{} is not a regulated-executor strategy", self.strategy_r));
        }
        if !self.strategy_ur.playable_by(Executor::UR) {
            return bad(format!("{} is not an unregulated-executor strategy", self.strategy_ur));
        }
        match self.model {
            Model::Ir | Model::IrOcf => {
                if self.strategy_r != Strategy::RegFrontier {
                    return bad(format!("{} model requires strategyR reg-frontier", self.model));
                }
            }
            Model::Sr => {
                if self.strategy_ur != Strategy::DubFrontier {
                    return bad("sr model requires strategyUR dub-frontier".into());
                }
                if self.strategy_r == Strategy::RegFrontier {
                    return bad("sr model requires strategyR rdub-frontier or withhold:L".into());
                }
            }
        }
        Ok(())
    }
}
