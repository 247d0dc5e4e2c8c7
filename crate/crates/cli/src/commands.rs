use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use regchain_core::analyzer::{
    closed_form_gain_e3, dp_optimal_gain_e3, estimate_gains, h_ir_exact, h_ir_mc, h_ocf_exact, h_sr_closed_form,
    h_sr_mc, min_sufficient_ocf, min_sufficient_ocf_exact, poly_root, sweep_alpha, sweep_hir_vs_e, write_csv,
    DeviationFamily, Polynomial, SweepMethod, SweepRow, ThresholdResult,
};
use regchain_core::game::{run_episode_with, GameRng};
use regchain_core::licensing::{public_key_from_seed, validate_license, BlockContent, Regulator, RootRef};
use regchain_core::notarization::{indistinguishability_test, sample_plain_attempts, sample_rbitcoin_attempts};
use regchain_core::stats::{chi_square_geometric, TestResult};
use regchain_core::{GameConfig, Horizon, LicenseStatus, Model, PuzzleTarget, Strategy};
use serde::Serialize;
use serde_json::json;

use crate::config::{resolve, RunConfig, DEFAULT_TRIALS};
use crate::error::CliError;
use crate::manifest::{now, RunManifest};
use crate::{usage_of, LicenseArgs, Method, OutputFlags, ReplayArgs, SelftestArgs, SimulateArgs, SweepArgs, ThresholdArgs, Which};

/// Default episodes per point for Monte Carlo threshold searches.
const MC_THRESHOLD_TRIALS: u64 = 2000;
/// Largest |DP - closed form| accepted by `e3-check`.
const E3_TOLERANCE: f64 = 1e-9;
const MINING_BUDGET: u64 = 1 << 24;

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => io::stdout().write_all(bytes).map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(buf)
}

fn records_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::SelfCheck(e.to_string()))
}

/// Write the CSV and, when a destination is known, the manifest.
fn finish_run(command: &str, run: RunConfig, started: String, rows: &[SweepRow], output: &OutputFlags, extra: Vec<PathBuf>) -> Result<(), CliError> {
    emit(output.out.as_deref(), &sweep_csv(rows)?)?;
    let target = output.manifest.clone().or_else(|| {
        output.out.as_ref().map(|o| {
            let mut s = o.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    if let Some(m) = target {
        let outputs = output.out.iter().cloned().chain(extra).collect();
        RunManifest::new(command, run, started, outputs).write(&m)?;
    }
    Ok(())
}

fn write_trace(cfg: &GameConfig, path: &Path) -> Result<(), CliError> {
    let mut lines = Vec::new();
    run_episode_with(cfg, &mut GameRng::for_trial(cfg.seed, 0), |r| {
        serde_json::to_writer(&mut lines, r).expect("step records serialize");
        lines.push(b'\n');
    })
    .map_err(regchain_core::AnalyzerError::from)?;
    fs::write(path, lines).map_err(|e| CliError::io(path, e))
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let started = now();
    let (run, file) = resolve(&args.game, args.alpha_r, &GameConfig::default(), DEFAULT_TRIALS)?;
    if args.alpha_r.is_none() && file.alpha_r.is_none() {
        return Err(CliError::Usage(format!("--alpha-r is required\n\n{}", usage_of("simulate"))));
    }
    let rows = [estimate_gains(&run.game, run.trials)?];
    if let Some(t) = &args.trace {
        write_trace(&run.game, t)?;
    }
    finish_run("simulate", run, started, &rows, &args.output, args.trace.iter().cloned().collect())
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let started = now();
    let (mut run, file) = resolve(&args.game, None, &GameConfig::default(), DEFAULT_TRIALS)?;
    let grid = args
        .alpha_grid
        .or(file.alpha_grid)
        .ok_or_else(|| CliError::Usage(format!("--alpha-grid is required\n\n{}", usage_of("sweep"))))?;
    let rows = sweep_alpha(&run.game, &grid.points()?, run.trials)?;
    run.alpha_grid = Some(grid);
    finish_run("sweep", run, started, &rows, &args.output, vec![])
}

pub fn replay(args: &ReplayArgs) -> Result<(), CliError> {
    let m = RunManifest::read(&args.manifest)?;
    let run = &m.config;
    run.game.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let rows = match (m.command.as_str(), run.alpha_grid) {
        ("simulate", _) => vec![estimate_gains(&run.game, run.trials)?],
        ("sweep", Some(g)) => sweep_alpha(&run.game, &g.points()?, run.trials)?,
        (c, _) => return Err(CliError::Usage(format!("cannot replay a '{c}' manifest"))),
    };
    let bytes = sweep_csv(&rows)?;
    if args.check {
        let recorded = m
            .outputs
            .first()
            .ok_or_else(|| CliError::Usage("manifest records no output file".into()))?;
        let old = fs::read(recorded).map_err(|e| CliError::io(recorded, e))?;
        if old != bytes {
            return Err(CliError::SelfCheck(format!("replay differs from {}", recorded.display())));
        }
    }
    emit(args.out.as_deref(), &bytes)
}

#[derive(Serialize)]
struct ThresholdRow {
    name: String,
    estimate: f64,
    lo: f64,
    hi: f64,
    method: String,
}

impl From<&ThresholdResult> for ThresholdRow {
    fn from(t: &ThresholdResult) -> Self {
        ThresholdRow {
            name: t.name.to_string(),
            estimate: t.estimate,
            lo: t.bracket.0,
            hi: t.bracket.1,
            method: t.method.to_string(),
        }
    }
}

#[derive(Serialize)]
struct RootRow {
    polynomial: &'static str,
    root: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct E3Row {
    points: usize,
    alpha_min: f64,
    alpha_max: f64,
    max_abs_diff: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct OcfRow {
    alpha_r: f64,
    #[serde(rename = "E")]
    depth: Horizon,
    rho: f64,
    rho_insufficient: f64,
    method: &'static str,
}

fn mc_defaults(which: Which) -> GameConfig {
    match which {
        Which::HSr => GameConfig {
            depth: Horizon::Infinite,
            model: Model::Sr,
            strategy_r: Strategy::Withhold(2),
            strategy_ur: Strategy::DubFrontier,
            max_epochs: 2000,
            ..Default::default()
        },
        Which::MinOcf => GameConfig { model: Model::IrOcf, ..Default::default() },
        _ => GameConfig::default(),
    }
}

fn depth_of(cfg: &GameConfig) -> Result<usize, CliError> {
    cfg.depth
        .finite()
        .filter(|&e| e >= 2)
        .ok_or_else(|| CliError::Usage("exact methods need a finite game depth of at least 2".into()))
}

pub fn thresholds(args: &ThresholdArgs) -> Result<(), CliError> {
    let exact = args.method == Method::Exact;
    let tol = args.tol.unwrap_or(if exact { 1e-3 } else { 5e-3 });
    if !(tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let (run, _) = resolve(&args.game, args.alpha_r, &mc_defaults(args.which), MC_THRESHOLD_TRIALS)?;
    let (base, trials) = (run.game, run.trials);
    let one = |t: ThresholdResult| records_csv(&[ThresholdRow::from(&t)]);
    let bytes = match args.which {
        Which::HIr if exact => one(h_ir_exact(depth_of(&base)?, tol)?)?,
        Which::HIr => one(h_ir_mc(&base, &DeviationFamily::unregulated(), trials, tol)?)?,
        Which::HOcfIr if exact => one(h_ocf_exact(depth_of(&base)?, args.rho_cap, tol)?)?,
        Which::HOcfIr => return Err(CliError::Usage("h-ocf-ir supports only --method exact".into())),
        Which::HSr if exact => one(h_sr_closed_form(tol)?)?,
        Which::HSr => one(h_sr_mc(&base, &DeviationFamily::regulated_withholding(), trials, tol)?)?,
        Which::PolyRoots => records_csv(&[
            RootRow { polynomial: "2a^2-(1-a)^3", root: poly_root(&Polynomial::frontier_bound(), 0.0, 1.0, 1e-12)? },
            RootRow { polynomial: "a^3-6a^2+5a-1", root: poly_root(&Polynomial::release_bound(), 0.0, 0.5, 1e-12)? },
        ])?,
        Which::E3Check => {
            // the closed form describes the deviation that is optimal on
            // [0.455, 0.685]; below 0.455 the optimum is honest play
            let pays: Vec<f64> = (46..=68).map(|i| i as f64 / 100.0).collect();
            let honest: Vec<f64> = (1..=35).map(|i| i as f64 / 100.0).collect();
            let worst = pays
                .iter()
                .map(|&a| (dp_optimal_gain_e3(a) - closed_form_gain_e3(a)).abs())
                .chain(honest.iter().map(|&a| (dp_optimal_gain_e3(a) - a).abs()))
                .fold(0.0, f64::max);
            let row = E3Row { points: pays.len() + honest.len(), alpha_min: honest[0], alpha_max: pays[pays.len() - 1], max_abs_diff: worst };
            let bytes = records_csv(&[row])?;
            if !(worst <= E3_TOLERANCE) {
                emit(args.out.as_deref(), &bytes)?;
                return Err(CliError::SelfCheck(format!("max |dp - closed form| {worst:e} exceeds {E3_TOLERANCE:e}")));
            }
            bytes
        }
        Which::HirVsE => {
            let method = if exact {
                SweepMethod::Exact
            } else {
                SweepMethod::MonteCarlo { base: base.clone(), family: DeviationFamily::unregulated(), trials }
            };
            let rows: Vec<SweepRow> = sweep_hir_vs_e(&args.e_values, &method, tol)?
                .into_iter()
                .map(|(e, t)| SweepRow {
                    alpha_r: 1.0 - t.estimate,
                    depth: Horizon::Finite(e),
                    rho: 0.0,
                    model: Model::Ir,
                    strategy_r: Strategy::RegFrontier,
                    strategy_ur: Strategy::LegFrontier,
                    g_r: 1.0 - t.estimate,
                    g_ur: t.estimate,
                    t_f: 1.0,
                    ci: 0.5 * (t.bracket.1 - t.bracket.0),
                    trials: if exact { 0 } else { trials },
                })
                .collect();
            sweep_csv(&rows)?
        }
        Which::MinOcf => {
            if args.alpha_r.is_none() {
                return Err(CliError::Usage(format!("min-ocf needs --alpha-r\n\n{}", usage_of("thresholds"))));
            }
            let row = if exact {
                let rho = min_sufficient_ocf_exact(base.alpha_r, depth_of(&base)?, tol, args.rho_cap)?;
                OcfRow { alpha_r: base.alpha_r, depth: base.depth, rho, rho_insufficient: (rho - tol).max(0.0), method: "exact" }
            } else {
                let s = min_sufficient_ocf(&base, &DeviationFamily::unregulated(), trials, tol, args.rho_cap)?;
                OcfRow { alpha_r: s.alpha_r, depth: base.depth, rho: s.rho, rho_insufficient: s.rho_insufficient, method: "mc" }
            };
            records_csv(&[row])?
        }
    };
    emit(args.out.as_deref(), &bytes)
}

/// Derived key seed of holder `i` in role `role`.
fn holder_seed(seed: u64, role: u64, i: u64) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(role << 40).wrapping_add(i + 1)
}

pub fn license_demo(args: &LicenseArgs) -> Result<(), CliError> {
    let reg = Regulator::from_seed(args.seed);
    let key = reg.verifying_key();
    let fs_: Vec<String> = (0..args.jurisdictions).map(|i| format!("F{i}")).collect();
    let as_: Vec<String> = (0..args.assets).map(|i| format!("A{i}")).collect();
    let payloads = fs_
        .iter()
        .map(|f| as_.iter().map(|a| format!("rules for {a} in {f}").into_bytes()).collect())
        .collect();
    let root = RootRef { id: args.seed, epoch: args.root_epoch };
    let ann = reg.announce_rules(fs_.clone(), as_.clone(), payloads, root, args.window)?;
    let e0 = args.root_epoch;

    let transactors = fs_
        .iter()
        .enumerate()
        .map(|(i, f)| reg.issue_transactor_license(&ann, public_key_from_seed(holder_seed(args.seed, 1, i as u64)), vec![f.clone()], as_.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let executors = (0..args.executors)
        .map(|i| reg.issue_executor_license(&ann, public_key_from_seed(holder_seed(args.seed, 2, i)), ann.rules_digest()))
        .collect::<Result<Vec<_>, _>>()?;

    let ann_ok = ann.verify(&key);
    let t_status: Vec<LicenseStatus> = transactors.iter().map(|l| validate_license(l, &key, e0, root)).collect();
    let e_status: Vec<LicenseStatus> = executors.iter().map(|l| validate_license(l, &key, e0, root)).collect();
    let expired_epoch = e0 + args.window;
    let expired = validate_license(&executors[0], &key, expired_epoch, root);
    let last_epoch = expired_epoch - 1;
    let still_valid = validate_license(&executors[0], &key, last_epoch, root);
    let all_valid = ann_ok && t_status.iter().chain(&e_status).all(|s| s.is_valid());
    let rejected = expired == LicenseStatus::Expired && still_valid.is_valid();

    let report = json!({
        "regulatorKey": hex::encode(key),
        "rulesDigest": hex::encode(ann.rules_digest()),
        "announcement": ann,
        "announcementVerified": ann_ok,
        "transactorLicenses": transactors.iter().zip(&t_status).map(|(l, s)| json!({"license": l, "status": s})).collect::<Vec<_>>(),
        "executorLicenses": executors.iter().zip(&e_status).map(|(l, s)| json!({
            "license": l,
            "evidence": hex::encode(l.evidence()),
            "status": s,
        })).collect::<Vec<_>>(),
        "windowCheck": {
            "lastValidEpoch": last_epoch,
            "statusAtLastValidEpoch": still_valid,
            "epoch": expired_epoch,
            "status": expired,
        },
        "allValid": all_valid,
    });
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    emit(None, text.as_bytes())?;
    if !all_valid {
        return Err(CliError::SelfCheck("a freshly issued license failed verification".into()));
    }
    if !rejected {
        return Err(CliError::SelfCheck(format!("license not rejected at epoch {expired_epoch}: {expired:?}")));
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SelftestRow {
    test: &'static str,
    samples: usize,
    statistic: f64,
    p_value: f64,
    expect: &'static str,
    pass: bool,
}

impl SelftestRow {
    fn same(test: &'static str, samples: usize, r: TestResult) -> Self {
        SelftestRow { test, samples, statistic: r.statistic, p_value: r.p_value, expect: "same", pass: r.p_value > 0.01 }
    }

    fn different(test: &'static str, samples: usize, r: TestResult) -> Self {
        SelftestRow { test, samples, statistic: r.statistic, p_value: r.p_value, expect: "different", pass: r.p_value < 0.001 }
    }
}

pub fn selftest(args: &SelftestArgs) -> Result<(), CliError> {
    let n = args.samples as usize;
    let seed = args.seed;
    let reg = Regulator::from_seed(seed);
    let ann = reg.announce_rules(
        vec!["F0".into()],
        vec!["A0".into()],
        vec![vec![b"rules".to_vec()]],
        RootRef { id: 1, epoch: 0 },
        u64::MAX / 2,
    )?;
    let lic = reg.issue_executor_license(&ann, public_key_from_seed(holder_seed(seed, 2, 0)), ann.rules_digest())?;
    let template = BlockContent { coinbase: b"coinbase".to_vec(), executor_license: None, transactions: vec![] };
    let target = PuzzleTarget::pow2(args.target_bits)?;
    let easier = PuzzleTarget::pow2(args.target_bits + 2)?;
    let p = target.success_probability();

    // disjoint nonce streams per sample
    let base = seed.wrapping_mul(3) << 20;
    let plain = sample_plain_attempts(b"block", &target, n, base, MINING_BUDGET)?;
    let regulated = sample_rbitcoin_attempts(&template, &lic, &ann, 0, &target, n, base + (1 << 20), MINING_BUDGET)?;
    let control = sample_plain_attempts(b"block", &easier, n, base + (2 << 20), MINING_BUDGET)?;

    let rows = [
        SelftestRow::same("ks-plain-vs-regulated", n, indistinguishability_test(&plain, &regulated)?),
        SelftestRow::different("ks-plain-vs-4x-target", n, indistinguishability_test(&plain, &control)?),
        SelftestRow::same("chi2-plain-geometric", n, chi_square_geometric(&plain, p)),
        SelftestRow::same("chi2-regulated-geometric", n, chi_square_geometric(&regulated, p)),
    ];
    emit(None, &records_csv(&rows)?)?;
    match rows.iter().find(|r| !r.pass) {
        Some(r) => Err(CliError::SelfCheck(format!("{} p-value {:.3e}", r.test, r.p_value))),
        None => Ok(()),
    }
}
