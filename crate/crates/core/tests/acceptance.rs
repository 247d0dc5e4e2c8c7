//! Acceptance checks, one PASS/FAIL line each. Runs as a plain binary so the
//! lines are always printed; exits non-zero if any check fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regchain_core::analyzer::{
    best_response, closed_form_gain_e3, dp_optimal_gain_e3, h_ir_exact, h_ir_mc, h_ocf_exact, h_sr_closed_form, h_sr_mc,
    min_sufficient_ocf, poly_root, run_trials, sm_markov_gain, DeviationFamily, GainEstimate, Polynomial, SIGNIFICANCE,
};
use regchain_core::game::{GameConfig, Horizon, Model, Strategy};
use regchain_core::licensing::{
    public_key_from_seed, validate_license, Announcement, ExecutorLicense, LicenseStatus, Regulator, RootRef,
    TransactorLicense,
};
use regchain_core::notarization::{indistinguishability_test, sample_plain_attempts, sample_rbitcoin_attempts, PuzzleTarget};
use regchain_core::BlockContent;

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool, detail: String, elapsed: Duration) {
        if !ok {
            self.failures += 1;
        }
        println!("{} {name}: {detail} [{:.1}s]", if ok { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn poly_roots(r: &mut Report) {
    let ((a, b), dt) = timed(|| {
        (
            poly_root(&Polynomial::frontier_bound(), 0.0, 1.0, 1e-12).unwrap(),
            poly_root(&Polynomial::release_bound(), 0.0, 0.5, 1e-12).unwrap(),
        )
    });
    let ok = (a - 0.361).abs() < 1e-3 && (b - 0.308).abs() < 1e-3 && dt < Duration::from_secs(1);
    r.check("poly_roots", ok, format!("frontier root {a:.6} (0.361), release root {b:.6} (0.308)"), dt);
}

fn e3_oracle(r: &mut Report) {
    let ((dev, fair), dt) = timed(|| {
        let dev = [0.46, 0.48, 0.50, 0.55]
            .iter()
            .map(|&a| (dp_optimal_gain_e3(a) - closed_form_gain_e3(a)).abs())
            .fold(0.0, f64::max);
        let fair = [0.1, 0.2, 0.3].iter().map(|&a| (dp_optimal_gain_e3(a) - a).abs()).fold(0.0, f64::max);
        (dev, fair)
    });
    let ok = dev < 1e-9 && fair < 1e-9 && dt < Duration::from_secs(10);
    r.check("e3_oracle", ok, format!("max |dp - closed form| {dev:.2e}, max |dp - alpha| below root {fair:.2e}"), dt);
}

fn fair_share(r: &mut Report) {
    let (res, dt) = timed(|| {
        [0.2, 0.5, 0.8]
            .iter()
            .map(|&a| {
                let cfg = GameConfig { alpha_r: a, max_epochs: 1000, seed: 1, ..Default::default() };
                let ledgers = run_trials(&cfg, 100_000).unwrap();
                let all_legal = ledgers.iter().all(|l| l.legal_confirmed == l.total_confirmed());
                let est = GainEstimate::from_ledgers(&ledgers);
                (a, est.g_r.mean, est.t_f.mean, all_legal)
            })
            .collect::<Vec<_>>()
    });
    let ok = res.iter().all(|&(a, g, t, legal)| (g - a).abs() < 0.01 && t == 1.0 && legal) && dt < Duration::from_secs(300);
    let detail = res.iter().map(|(a, g, t, _)| format!("alpha {a}: gR {g:.4} tF {t}")).collect::<Vec<_>>().join(", ");
    r.check("fair_share", ok, format!("1e5 episodes x 1e3 epochs; {detail}"), dt);
}

fn ir_base() -> GameConfig {
    GameConfig { depth: Horizon::Finite(100), max_epochs: 1000, seed: 2, ..Default::default() }
}

fn frontier_equilibrium_ir(r: &mut Report) {
    let fam = DeviationFamily::unregulated();
    let trials = 2000;
    let ((low, high, th, exact), dt) = timed(|| {
        let at = |a_ur: f64| {
            let cfg = GameConfig { alpha_r: 1.0 - a_ur, ..ir_base() };
            best_response(Strategy::RegFrontier, &fam, &cfg, trials).unwrap()
        };
        let th = h_ir_mc(&ir_base(), &fam, trials, 0.005).unwrap();
        (at(0.40), at(0.46), th, h_ir_exact(100, 1e-3).unwrap())
    });
    let strongest = |b: &regchain_core::BestResponse| {
        let (s, g) = b.strongest().unwrap();
        format!("{s} gap {:+.4} +- {:.4}", g.gap, g.half_width)
    };
    let ok = !low.deviation_wins(SIGNIFICANCE)
        && high.deviation_wins(SIGNIFICANCE)
        && (0.36..=0.46).contains(&th.estimate);
    r.check(
        "frontier_equilibrium_ir",
        ok,
        format!(
            "alphaUR 0.40 best deviation {}; alphaUR 0.46 best deviation {}; bisection h_IR {:.4} [{:.4}, {:.4}]; exact E=100 {:.4}",
            strongest(&low),
            strongest(&high),
            th.estimate,
            th.bracket.0,
            th.bracket.1,
            exact.estimate
        ),
        dt,
    );
}

fn ocf_boundary(r: &mut Report) {
    let fam = DeviationFamily::unregulated();
    let trials = 2000;
    let ((no_fee, search, boundary), dt) = timed(|| {
        let base = GameConfig { alpha_r: 0.55, model: Model::IrOcf, ..ir_base() };
        let no_fee = best_response(Strategy::RegFrontier, &fam, &base, trials).unwrap();
        let search = min_sufficient_ocf(&base, &fam, trials, 0.02, 1.0);
        (no_fee, search, h_ocf_exact(100, 1.0, 1e-3).unwrap())
    });
    let ai_wins = no_fee
        .gaps
        .iter()
        .any(|(s, g)| matches!(s, Strategy::AttackInterior(_)) && g.significant(SIGNIFICANCE));
    let (rho, verified) = match &search {
        Ok(s) => (s.rho, !s.verification.deviation_wins(SIGNIFICANCE) && s.verification.strategy == Strategy::LegFrontier),
        Err(_) => (f64::NAN, false),
    };
    let ok = ai_wins && verified && (boundary.estimate - 0.5).abs() <= 0.01;
    r.check(
        "ocf_boundary",
        ok,
        format!(
            "alphaR 0.55 rho 0: attack-interior wins {ai_wins} (best {}); min sufficient rho {rho:.3}, frontier re-verified {verified}; exact boundary with rho <= 1: {:.4}",
            no_fee.strategy, boundary.estimate
        ),
        dt,
    );
}

fn strategic_release(r: &mut Report) {
    let base = GameConfig {
        depth: Horizon::Infinite,
        model: Model::Sr,
        strategy_r: Strategy::Withhold(2),
        strategy_ur: Strategy::DubFrontier,
        max_epochs: 2000,
        seed: 3,
        ..Default::default()
    };
    let trials = 4000;
    let ((worst, th, cf, side_ok), dt) = timed(|| {
        let mut worst = 0.0f64;
        for i in 2..=9 {
            let a = i as f64 * 0.05;
            let est = GainEstimate::from_ledgers(&run_trials(&GameConfig { alpha_r: a, ..base.clone() }, trials).unwrap());
            worst = worst.max(est.g_r.distance_in_ci(sm_markov_gain(a)));
        }
        let fam = DeviationFamily::regulated_withholding();
        let th = h_sr_mc(&base, &fam, 2000, 0.005).unwrap();
        // the verdict agrees with the estimate away from the bracket
        let side_ok = [0.25, 0.30, 0.40, 0.45].iter().all(|&a| {
            let cfg = GameConfig { alpha_r: a, ..base.clone() };
            let wins = best_response(Strategy::DubFrontier, &fam, &cfg, 2000).unwrap().deviation_wins(SIGNIFICANCE);
            wins == (a > th.estimate)
        });
        (worst, th, h_sr_closed_form(1e-9).unwrap(), side_ok)
    });
    let ok = worst <= 3.0 && (0.30..=0.35).contains(&th.estimate) && side_ok;
    r.check(
        "strategic_release",
        ok,
        format!(
            "max |MC - markov| over alphaR 0.10..0.45 {worst:.2} half-widths; bisection h_SR {:.4} [{:.4}, {:.4}]; closed form {:.4}; verdicts consistent {side_ok}",
            th.estimate, th.bracket.0, th.bracket.1, cf.estimate
        ),
        dt,
    );
}

fn setup_licensing() -> (Regulator, Announcement) {
    let reg = Regulator::from_seed(42);
    let ann = reg
        .announce_rules(
            vec!["us".into(), "eu".into()],
            vec!["usd".into(), "eur".into(), "btc".into()],
            vec![vec![b"a".to_vec(), b"b".to_vec(), b"c".to_vec()], vec![b"d".to_vec(), b"e".to_vec(), b"f".to_vec()]],
            RootRef { id: 9, epoch: 100 },
            50,
        )
        .unwrap();
    (reg, ann)
}

fn mining_indistinguishable(r: &mut Report) {
    let ((same, control), dt) = timed(|| {
        let (reg, ann) = setup_licensing();
        let lic = reg.issue_executor_license(&ann, public_key_from_seed(1), ann.rules_digest()).unwrap();
        let template = BlockContent { coinbase: b"coinbase".to_vec(), executor_license: None, transactions: vec![] };
        let t = PuzzleTarget::pow2(248).unwrap();
        let n = 10_000;
        let plain = sample_plain_attempts(b"block", &t, n, 0, 1 << 24).unwrap();
        let regulated = sample_rbitcoin_attempts(&template, &lic, &ann, 120, &t, n, 1 << 20, 1 << 24).unwrap();
        let easier = sample_plain_attempts(b"block", &PuzzleTarget::pow2(250).unwrap(), n, 1 << 21, 1 << 24).unwrap();
        (indistinguishability_test(&plain, &regulated).unwrap(), indistinguishability_test(&plain, &easier).unwrap())
    });
    let ok = same.p_value > 0.01 && control.p_value < 0.001;
    r.check(
        "mining_indistinguishable",
        ok,
        format!(
            "plain vs regulated D {:.4} p {:.3}; 4x target control D {:.4} p {:.2e}",
            same.statistic, same.p_value, control.statistic, control.p_value
        ),
        dt,
    );
}

fn license_soundness(r: &mut Report) {
    let ((round_trips, mutations, rejected, window_ok), dt) = timed(|| {
        let (reg, ann) = setup_licensing();
        let rk = reg.verifying_key();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut round_trips, mut mutations, mut rejected) = (0, 0, 0);
        for i in 0..1000u64 {
            let holder = public_key_from_seed(1000 + i);
            let bytes = if i % 2 == 0 {
                let f = ann.rules.jurisdictions[..1 + (i as usize / 2) % 2].to_vec();
                let a = ann.rules.assets[..1 + (i as usize / 4) % 3].to_vec();
                reg.issue_transactor_license(&ann, holder, f, a).unwrap().to_bytes()
            } else {
                reg.issue_executor_license(&ann, holder, ann.rules_digest()).unwrap().to_bytes()
            };
            let accept = |b: &[u8]| -> bool {
                if i % 2 == 0 {
                    TransactorLicense::from_bytes(b).is_ok_and(|l| validate_license(&l, &rk, 120, ann.root).is_valid())
                } else {
                    ExecutorLicense::from_bytes(b).is_ok_and(|l| validate_license(&l, &rk, 120, ann.root).is_valid())
                }
            };
            if accept(&bytes) {
                round_trips += 1;
            }
            for pos in 0..bytes.len() {
                let mut m = bytes.clone();
                m[pos] ^= rng.random_range(1..=255u8);
                mutations += 1;
                if !accept(&m) {
                    rejected += 1;
                }
            }
        }
        let lic = reg.issue_executor_license(&ann, public_key_from_seed(7), ann.rules_digest()).unwrap();
        let window_ok = validate_license(&lic, &rk, 100, ann.root) == LicenseStatus::Valid
            && validate_license(&lic, &rk, 149, ann.root) == LicenseStatus::Valid
            && validate_license(&lic, &rk, 150, ann.root) == LicenseStatus::Expired;
        (round_trips, mutations, rejected, window_ok)
    });
    let ok = round_trips == 1000 && rejected == mutations && window_ok;
    r.check(
        "license_soundness",
        ok,
        format!("{round_trips}/1000 round-trips; {rejected}/{mutations} single-byte mutations rejected; window e0 accepted, e0+E rejected: {window_ok}"),
        dt,
    );
}

fn main() {
    // `cargo test -- --list` and similar harness flags: nothing to list
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut r = Report { failures: 0 };
    poly_roots(&mut r);
    e3_oracle(&mut r);
    license_soundness(&mut r);
    mining_indistinguishable(&mut r);
    fair_share(&mut r);
    frontier_equilibrium_ir(&mut r);
    ocf_boundary(&mut r);
    strategic_release(&mut r);
    if r.failures > 0 {
        println!("{} acceptance check(s) failed", r.failures);
        std::process::exit(1);
    }
}
