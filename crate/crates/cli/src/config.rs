//! Game flags, config files and their merge into a resolved run.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use regchain_core::analyzer::alpha_grid;
use regchain_core::{Executor, GameConfig, Horizon, Model, Strategy};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Episodes per operating point unless overridden.
pub const DEFAULT_TRIALS: u64 = 100_000;

/// Inclusive `start:stop:step` grid of regulated shares.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        alpha_grid(self.start, self.stop, self.step).map_err(|e| CliError::Usage(e.to_string()))
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(format!("expected start:stop:step, got '{s}'"));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}' in grid '{s}'"));
        let g = GridSpec { start: num(a)?, stop: num(b)?, step: num(c)? };
        alpha_grid(g.start, g.stop, g.step).map_err(|e| e.to_string())?;
        Ok(g)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

impl TryFrom<String> for GridSpec {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<GridSpec> for String {
    fn from(g: GridSpec) -> String {
        g.to_string()
    }
}

/// Flags shared by every command that runs the game.
#[derive(Args, Debug, Clone, Default)]
pub struct GameFlags {
    /// TOML or JSON file with defaults for any of these flags
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Epochs per episode
    #[arg(long, value_name = "N")]
    pub epochs: Option<u64>,
    /// Game depth E, a positive integer or "inf"
    #[arg(short = 'E', long, value_name = "E")]
    pub depth: Option<Horizon>,
    /// ir, ir-ocf or sr
    #[arg(long)]
    pub model: Option<Model>,
    /// Pay-forward fee per regulated block (ir-ocf only)
    #[arg(long)]
    pub rho: Option<f64>,
    /// reg-frontier, rdub-frontier or withhold:L
    #[arg(long = "strategy-r", value_name = "STRATEGY")]
    pub strategy_r: Option<Strategy>,
    /// leg-frontier, dub-frontier, cwb:k or ai:j
    #[arg(long = "strategy-ur", value_name = "STRATEGY")]
    pub strategy_ur: Option<Strategy>,
    /// Probability that an unregulated block is legal
    #[arg(long = "lambda-legal", value_name = "P")]
    pub lambda_legal: Option<f64>,
    #[arg(long, env = "REGCHAIN_SEED")]
    pub seed: Option<u64>,
    /// Episodes per operating point
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: Option<u64>,
}

/// Everything a config file may set. Missing keys fall through to defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct FileConfig {
    pub alpha_r: Option<f64>,
    #[serde(rename = "E")]
    pub depth: Option<Horizon>,
    pub rho: Option<f64>,
    pub model: Option<Model>,
    pub strategy_r: Option<Strategy>,
    #[serde(rename = "strategyUR", alias = "strategyUr")]
    pub strategy_ur: Option<Strategy>,
    pub lambda_legal: Option<f64>,
    #[serde(alias = "epochs")]
    pub max_epochs: Option<u64>,
    pub seed: Option<u64>,
    pub tie_to_regulated: Option<bool>,
    pub branch_cap: Option<usize>,
    pub trials: Option<u64>,
    pub alpha_grid: Option<GridSpec>,
}

impl FileConfig {
    /// JSON for `.json` files, TOML otherwise.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let parsed = if path.extension().is_some_and(|x| x.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// A fully resolved run: game parameters plus trial count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunConfig {
    pub game: GameConfig,
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<GridSpec>,
}

/// Merge flags over the config file over `defaults`, then validate.
///
/// Strategies left unset anywhere default to the frontier strategy of the
/// resolved model, so `--model sr` alone is a valid run.
pub fn resolve(flags: &GameFlags, alpha_r: Option<f64>, defaults: &GameConfig, default_trials: u64) -> Result<(RunConfig, FileConfig), CliError> {
    let file = match &flags.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let model = flags.model.or(file.model).unwrap_or(defaults.model);
    let pick = |flag: Option<Strategy>, from_file: Option<Strategy>, who: Executor| {
        flag.or(from_file).unwrap_or(if model == defaults.model {
            match who {
                Executor::R => defaults.strategy_r,
                Executor::UR => defaults.strategy_ur,
            }
        } else {
            model.frontier_for(who)
        })
    };
    let game = GameConfig {
        alpha_r: alpha_r.or(file.alpha_r).unwrap_or(defaults.alpha_r),
        depth: flags.depth.or(file.depth).unwrap_or(defaults.depth),
        rho: flags.rho.or(file.rho).unwrap_or(defaults.rho),
        model,
        strategy_r: pick(flags.strategy_r, file.strategy_r, Executor::R),
        strategy_ur: pick(flags.strategy_ur, file.strategy_ur, Executor::UR),
        lambda_legal: flags.lambda_legal.or(file.lambda_legal).unwrap_or(defaults.lambda_legal),
        max_epochs: flags.epochs.or(file.max_epochs).unwrap_or(defaults.max_epochs),
        seed: flags.seed.or(file.seed).unwrap_or(defaults.seed),
        tie_to_regulated: file.tie_to_regulated.unwrap_or(defaults.tie_to_regulated),
        branch_cap: file.branch_cap.or(defaults.branch_cap),
    };
    game.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let trials = flags.trials.or(file.trials).unwrap_or(default_trials);
    if trials == 0 {
        return Err(CliError::Usage("trials must be positive".into()));
    }
    Ok((RunConfig { game, trials, alpha_grid: None }, file))
}
