//! Toy-difficulty proof-of-work for plain and regulated blocks, stake-based
//! eligibility, and the harness checking that regulated mining is
//! statistically indistinguishable from plain mining.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::licensing::{hash, validate_license, Announcement, BlockContent, Digest32, ExecutorLicense, LicenseStatus};
use crate::stats::{ks_two_sample, TestResult};

/// Smallest sample accepted by [`indistinguishability_test`].
pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NotarizationError {
    #[error("target must satisfy 0 < T <= 2^256")]
    InvalidTarget,
    #[error("no solution within {budget} attempts")]
    AttemptBudgetExceeded { budget: u64 },
    #[error("executor license rejected: {0:?}")]
    InvalidLicense(LicenseStatus),
    #[error("stake share {0} outside (0, 1]")]
    InvalidStake(f64),
    #[error("need at least {min} samples per side, got {got}")]
    SampleTooSmall { min: usize, got: usize },
}

/// Hash images strictly below the threshold succeed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PuzzleTarget {
    threshold: BigUint,
    /// Big-endian threshold for byte-wise comparison; `None` when it is 2^256.
    bound: Option<[u8; 32]>,
}

fn two_pow_256() -> BigUint {
    BigUint::from(1u8) << 256
}

impl PuzzleTarget {
    pub fn new(threshold: BigUint) -> Result<Self, NotarizationError> {
        let full = two_pow_256();
        if threshold == BigUint::ZERO || threshold > full {
            return Err(NotarizationError::InvalidTarget);
        }
        let bound = (threshold < full).then(|| {
            let b = threshold.to_bytes_be();
            let mut out = [0u8; 32];
            out[32 - b.len()..].copy_from_slice(&b);
            out
        });
        Ok(PuzzleTarget { threshold, bound })
    }

    /// Threshold `2^k`, success probability `2^(k-256)`.
    pub fn pow2(k: u32) -> Result<Self, NotarizationError> {
        if k > 256 {
            return Err(NotarizationError::InvalidTarget);
        }
        PuzzleTarget::new(BigUint::from(1u8) << k)
    }

    pub fn threshold(&self) -> &BigUint {
        &self.threshold
    }

    /// Per-attempt success probability.
    pub fn success_probability(&self) -> f64 {
        let bits = self.threshold.bits();
        let top = if bits > 64 { &self.threshold >> (bits - 64) } else { self.threshold.clone() };
        let shift = bits.saturating_sub(64) as i32;
        top.to_u64_digits().first().copied().unwrap_or(0) as f64 * 2f64.powi(shift - 256)
    }

    pub fn accepts(&self, image: &Digest32) -> bool {
        match &self.bound {
            None => true,
            Some(b) => image < b,
        }
    }
}

impl Serialize for PuzzleTarget {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.threshold.to_str_radix(16))
    }
}

impl<'de> Deserialize<'de> for PuzzleTarget {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let t = BigUint::parse_bytes(s.as_bytes(), 16).ok_or_else(|| serde::de::Error::custom("bad hex target"))?;
        PuzzleTarget::new(t).map_err(serde::de::Error::custom)
    }
}

/// Deterministic nonce counter; seed `s` owns the range `[s * 2^32, (s+1) * 2^32)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonceStream {
    next: u64,
}

impl NonceStream {
    pub fn seeded(seed: u64) -> Self {
        NonceStream { next: seed << 32 }
    }
}

impl Iterator for NonceStream {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let n = self.next;
        self.next = self.next.wrapping_add(1);
        Some(n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningAttemptRecord {
    pub nonce: u64,
    pub attempts: u64,
    pub succeeded: bool,
}

/// `H*(nonce ∘ bytes)` with the nonce as 8 big-endian bytes.
pub fn pow_image(nonce: u64, bytes: &[u8]) -> Digest32 {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(nonce.to_be_bytes());
    h.update(bytes);
    h.finalize().into()
}

/// Try nonces from `stream` until `H*(nonce ∘ bytes) < T`, at most `budget` times.
pub fn mine_plain(
    bytes: &[u8],
    target: &PuzzleTarget,
    stream: &mut NonceStream,
    budget: u64,
) -> Result<MiningAttemptRecord, NotarizationError> {
    for attempts in 1..=budget {
        let nonce = stream.next().expect("infinite stream");
        if target.accepts(&pow_image(nonce, bytes)) {
            return Ok(MiningAttemptRecord { nonce, attempts, succeeded: true });
        }
    }
    Err(NotarizationError::AttemptBudgetExceeded { budget })
}

/// Regulated mining: check the executor license, put `H*(beta)` in the
/// coinbase, then mine the resulting block bytes like a plain block.
pub fn mine_rbitcoin(
    block: &BlockContent,
    license: &ExecutorLicense,
    ann: &Announcement,
    epoch: u64,
    target: &PuzzleTarget,
    stream: &mut NonceStream,
    budget: u64,
) -> Result<(BlockContent, MiningAttemptRecord), NotarizationError> {
    let status = validate_license(license, &ann.regulator_key, epoch, ann.root);
    if !status.is_valid() {
        return Err(NotarizationError::InvalidLicense(status));
    }
    let mut regulated = block.clone();
    regulated.coinbase.extend_from_slice(&license.evidence());
    regulated.executor_license = Some(license.clone());
    let rec = mine_plain(&regulated.to_bytes(), target, stream, budget)?;
    Ok((regulated, rec))
}

/// Stake eligibility: `H*(vk ∘ beta ∘ nonce) < base * alpha * slot`,
/// the target growing linearly with stake and elapsed time.
#[allow(clippy::too_many_arguments)]
pub fn pos_is_eligible(
    vk: &[u8; 32],
    license: &ExecutorLicense,
    ann: &Announcement,
    epoch: u64,
    nonce: u64,
    time_slot: u64,
    alpha: f64,
    base_target: &BigUint,
) -> Result<bool, NotarizationError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(NotarizationError::InvalidStake(alpha));
    }
    let status = validate_license(license, &ann.regulator_key, epoch, ann.root);
    if !status.is_valid() {
        return Err(NotarizationError::InvalidLicense(status));
    }
    // alpha as a 2^-53 fixed-point fraction keeps the product exact
    let scale = 1u64 << 53;
    let num = BigUint::from((alpha * scale as f64).round() as u64);
    let window = (base_target * time_slot * num) >> 53u32;
    if window >= two_pow_256() {
        return Ok(true);
    }
    let image = hash(&[vk.as_slice(), &license.to_bytes(), &nonce.to_be_bytes()].concat());
    Ok(BigUint::from_bytes_be(&image) < window)
}

/// Two-sample KS test on attempt counts.
pub fn indistinguishability_test(a: &[u64], b: &[u64]) -> Result<TestResult, NotarizationError> {
    let got = a.len().min(b.len());
    if got < MIN_SAMPLES {
        return Err(NotarizationError::SampleTooSmall { min: MIN_SAMPLES, got });
    }
    let fa: Vec<f64> = a.iter().map(|&x| x as f64).collect();
    let fb: Vec<f64> = b.iter().map(|&x| x as f64).collect();
    Ok(ks_two_sample(&fa, &fb))
}

/// Attempt counts of `n` independent plain mining runs, run `i` mining
/// `prefix ∘ i` from nonce stream `seed + i`.
pub fn sample_plain_attempts(prefix: &[u8], target: &PuzzleTarget, n: usize, seed: u64, budget: u64) -> Result<Vec<u64>, NotarizationError> {
    (0..n as u64)
        .map(|i| {
            let bytes = [prefix, &i.to_be_bytes()].concat();
            mine_plain(&bytes, target, &mut NonceStream::seeded(seed + i), budget).map(|r| r.attempts)
        })
        .collect()
}

/// Attempt counts of `n` regulated mining runs, block `i` carrying
/// transaction payload `i`.
#[allow(clippy::too_many_arguments)]
pub fn sample_rbitcoin_attempts(
    template: &BlockContent,
    license: &ExecutorLicense,
    ann: &Announcement,
    epoch: u64,
    target: &PuzzleTarget,
    n: usize,
    seed: u64,
    budget: u64,
) -> Result<Vec<u64>, NotarizationError> {
    (0..n as u64)
        .map(|i| {
            let mut b = template.clone();
            b.coinbase.extend_from_slice(&i.to_be_bytes());
            mine_rbitcoin(&b, license, ann, epoch, target, &mut NonceStream::seeded(seed + i), budget).map(|(_, r)| r.attempts)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::BlockKind;
    use crate::licensing::{classify_block, public_key_from_seed, Regulator, RootRef};
    use crate::stats::chi_square_geometric;

    fn setup() -> (Announcement, ExecutorLicense) {
        let reg = Regulator::from_seed(11);
        let ann = reg
            .announce_rules(vec!["us".into()], vec!["usd".into()], vec![vec![b"rule".to_vec()]], RootRef { id: 3, epoch: 20 }, 10)
            .unwrap();
        let lic = reg.issue_executor_license(&ann, public_key_from_seed(12), ann.rules_digest()).unwrap();
        (ann, lic)
    }

    fn empty_block() -> BlockContent {
        BlockContent { coinbase: b"cb".to_vec(), executor_license: None, transactions: vec![] }
    }

    #[test]
    fn target_bounds() {
        assert!(PuzzleTarget::new(BigUint::ZERO).is_err());
        assert!(PuzzleTarget::new(two_pow_256() + 1u8).is_err());
        assert!(PuzzleTarget::pow2(256).is_ok());
        assert_eq!(PuzzleTarget::pow2(248).unwrap().success_probability(), 1.0 / 256.0);
        let t = PuzzleTarget::new(BigUint::from(1u8)).unwrap();
        assert!(t.accepts(&[0; 32]));
        assert!(!t.accepts(&[0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1]));
    }

    #[test]
    fn trivial_target_succeeds_at_once() {
        let r = mine_plain(b"x", &PuzzleTarget::pow2(256).unwrap(), &mut NonceStream::seeded(0), 10).unwrap();
        assert_eq!((r.nonce, r.attempts), (0, 1));
    }

    #[test]
    fn impossible_target_exhausts_budget() {
        let t = PuzzleTarget::new(BigUint::from(1u8)).unwrap();
        assert_eq!(
            mine_plain(b"x", &t, &mut NonceStream::seeded(0), 1000),
            Err(NotarizationError::AttemptBudgetExceeded { budget: 1000 })
        );
    }

    #[test]
    fn attempts_are_geometric() {
        let t = PuzzleTarget::pow2(248).unwrap();
        let s = sample_plain_attempts(b"geo", &t, 10_000, 0, 1 << 20).unwrap();
        let mean = s.iter().sum::<u64>() as f64 / s.len() as f64;
        assert!((mean / 256.0 - 1.0).abs() < 0.1, "{mean}");
        assert!(chi_square_geometric(&s, 1.0 / 256.0).p_value > 0.01);
    }

    #[test]
    fn regulated_block_is_classified_regulated() {
        let (ann, lic) = setup();
        let (b, r) = mine_rbitcoin(&empty_block(), &lic, &ann, 22, &PuzzleTarget::pow2(256).unwrap(), &mut NonceStream::seeded(1), 5)
            .unwrap();
        assert_eq!(r.attempts, 1);
        assert_eq!(classify_block(&b, &ann, 22), BlockKind::Regulated);
    }

    #[test]
    fn expired_license_cannot_mine() {
        let (ann, lic) = setup();
        let r = mine_rbitcoin(&empty_block(), &lic, &ann, 30, &PuzzleTarget::pow2(256).unwrap(), &mut NonceStream::seeded(1), 5);
        assert_eq!(r, Err(NotarizationError::InvalidLicense(LicenseStatus::Expired)));
    }

    #[test]
    fn stake_scales_eligibility() {
        let (ann, lic) = setup();
        let vk = public_key_from_seed(12);
        let full = BigUint::from(1u8) << 256;
        assert!((0..50).all(|n| pos_is_eligible(&vk, &lic, &ann, 21, n, 1, 1.0, &full).unwrap()));
        let base = BigUint::from(1u8) << 250;
        let rate = |alpha: f64| (0..10_000u64).filter(|&n| pos_is_eligible(&vk, &lic, &ann, 21, n, 4, alpha, &base).unwrap()).count() as f64;
        let ratio = rate(0.5) / rate(1.0);
        assert!((ratio - 0.5).abs() < 0.05, "{ratio}");
        assert!(matches!(
            pos_is_eligible(&vk, &lic, &ann, 40, 0, 1, 1.0, &full),
            Err(NotarizationError::InvalidLicense(_))
        ));
    }

    #[test]
    fn small_samples_rejected() {
        assert_eq!(
            indistinguishability_test(&[1; 999], &[1; 2000]),
            Err(NotarizationError::SampleTooSmall { min: 1000, got: 999 })
        );
        let a: Vec<u64> = (0..1000).map(|i| i % 13 + 1).collect();
        assert_eq!(indistinguishability_test(&a, &a).unwrap().statistic, 0.0);
    }
}
