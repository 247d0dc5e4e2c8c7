//! Sweep rows and their CSV form, the input of the plotting scripts.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::estimate::estimate;
use super::AnalyzerError;
use crate::game::{GameConfig, Horizon, Model, Strategy};

/// Exact CSV header of every sweep file.
pub const SWEEP_HEADER: &str = "alphaR,E,rho,model,strategyR,strategyUR,gR,gUR,tF,ci,trials";

/// One estimated operating point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "alphaR")]
    pub alpha_r: f64,
    #[serde(rename = "E")]
    pub depth: Horizon,
    pub rho: f64,
    pub model: Model,
    #[serde(rename = "strategyR")]
    pub strategy_r: Strategy,
    #[serde(rename = "strategyUR")]
    pub strategy_ur: Strategy,
    #[serde(rename = "gR")]
    pub g_r: f64,
    #[serde(rename = "gUR")]
    pub g_ur: f64,
    #[serde(rename = "tF")]
    pub t_f: f64,
    /// Largest 95% half-width among the three estimates.
    pub ci: f64,
    pub trials: u64,
}

/// Pooled gains and throughput of `trials` episodes of `cfg`.
pub fn estimate_gains(cfg: &GameConfig, trials: u64) -> Result<SweepRow, AnalyzerError> {
    if trials == 0 {
        return Err(AnalyzerError::NoTrials);
    }
    let est = estimate(cfg, trials)?;
    Ok(SweepRow {
        alpha_r: cfg.alpha_r,
        depth: cfg.depth,
        rho: cfg.rho,
        model: cfg.model,
        strategy_r: cfg.strategy_r,
        strategy_ur: cfg.strategy_ur,
        g_r: est.g_r.mean,
        g_ur: est.g_ur.mean,
        t_f: est.t_f.mean,
        ci: est.max_half_width(),
        trials,
    })
}

/// Points `start, start + step, ...` up to `stop` inclusive, rounded to
/// absorb floating accumulation.
pub fn alpha_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, AnalyzerError> {
    if !(step > 0.0) || !(start <= stop) || !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&stop) {
        return Err(AnalyzerError::InvalidGrid { start, stop, step });
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
}

/// One row per grid point, each run on the same seeds.
pub fn sweep_alpha(base: &GameConfig, grid: &[f64], trials: u64) -> Result<Vec<SweepRow>, AnalyzerError> {
    grid.iter()
        .map(|&a| estimate_gains(&GameConfig { alpha_r: a, ..base.clone() }, trials))
        .collect()
}

pub fn write_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), AnalyzerError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SWEEP_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| AnalyzerError::Csv(e.to_string()))?;
    Ok(())
}

/// Parse a sweep file, insisting on the exact header.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>, AnalyzerError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != SWEEP_HEADER {
        return Err(AnalyzerError::Csv(format!("unexpected header '{header}'")));
    }
    r.deserialize().map(|row| row.map_err(AnalyzerError::from)).collect()
}
