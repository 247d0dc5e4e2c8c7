//! Regulator-issued licenses: the rules matrix, transactor and executor
//! licenses with their oversight windows, and the legality classification
//! of transactions and blocks.
//!
//! Every signed artifact is serialized canonically: fields in a fixed
//! order, each byte string prefixed by its big-endian `u64` length, so
//! digests and signatures are reproducible bit for bit.

use ed25519_dalek::{Signature, Signer, SigningKey, VerifyingKey};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chain::BlockKind;

/// Protocol tag carried by every announcement and license.
pub const PROTOCOL_TAG: &str = "RBChain";

const ROLE_TRANSACTOR: &str = "TRANSACTOR";
const ROLE_EXECUTOR: &str = "EXECUTOR";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LicenseError {
    #[error("jurisdiction and asset lists must be non-empty")]
    EmptyDomain,
    #[error("rules matrix is {rows}x{cols} but {jurisdictions} jurisdictions and {assets} assets were given")]
    DimensionMismatch { rows: usize, cols: usize, jurisdictions: usize, assets: usize },
    #[error("rule payload for ({jurisdiction}, {asset}) is empty")]
    EmptyPayload { jurisdiction: String, asset: String },
    #[error("'{0}' is not in the announced scope")]
    ScopeNotSubset(String),
    #[error("rules digest does not match the announced rules")]
    DigestMismatch,
    #[error("malformed encoding: {0}")]
    Malformed(&'static str),
}

pub type Digest32 = [u8; 32];

/// SHA-256, the hash `H*` of the protocol.
pub fn hash(bytes: &[u8]) -> Digest32 {
    Sha256::digest(bytes).into()
}

/// Canonical length-prefixed encoder.
#[derive(Default)]
struct Enc(Vec<u8>);

impl Enc {
    fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.0.extend_from_slice(&(b.len() as u64).to_be_bytes());
        self.0.extend_from_slice(b);
        self
    }

    fn u64(&mut self, x: u64) -> &mut Self {
        self.0.extend_from_slice(&x.to_be_bytes());
        self
    }

    fn strs(&mut self, v: &[String]) -> &mut Self {
        self.u64(v.len() as u64);
        for s in v {
            self.bytes(s.as_bytes());
        }
        self
    }
}

/// Decoder matching [`Enc`]; every read checks bounds.
struct Dec<'a>(&'a [u8]);

impl<'a> Dec<'a> {
    fn u64(&mut self) -> Result<u64, LicenseError> {
        if self.0.len() < 8 {
            return Err(LicenseError::Malformed("truncated integer"));
        }
        let (h, t) = self.0.split_at(8);
        self.0 = t;
        Ok(u64::from_be_bytes(h.try_into().expect("8 bytes")))
    }

    fn bytes(&mut self) -> Result<&'a [u8], LicenseError> {
        let n = self.u64()?;
        if n > self.0.len() as u64 {
            return Err(LicenseError::Malformed("length prefix beyond input"));
        }
        let (h, t) = self.0.split_at(n as usize);
        self.0 = t;
        Ok(h)
    }

    fn string(&mut self) -> Result<String, LicenseError> {
        String::from_utf8(self.bytes()?.to_vec()).map_err(|_| LicenseError::Malformed("invalid utf-8"))
    }

    fn strs(&mut self) -> Result<Vec<String>, LicenseError> {
        let n = self.u64()?;
        if n > self.0.len() as u64 / 8 {
            return Err(LicenseError::Malformed("list count beyond input"));
        }
        (0..n).map(|_| self.string()).collect()
    }

    fn expect(&mut self, want: &str) -> Result<(), LicenseError> {
        if self.bytes()? != want.as_bytes() {
            return Err(LicenseError::Malformed("unexpected tag or role"));
        }
        Ok(())
    }

    fn fixed<const N: usize>(&mut self) -> Result<[u8; N], LicenseError> {
        self.bytes()?.try_into().map_err(|_| LicenseError::Malformed("wrong fixed-size field length"))
    }

    fn finish(&self) -> Result<(), LicenseError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(LicenseError::Malformed("trailing bytes"))
        }
    }
}

mod hex_array {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(b: &[u8; N], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[u8; N], D::Error> {
        let s = String::deserialize(d)?;
        let v = hex::decode(&s).map_err(serde::de::Error::custom)?;
        v.try_into().map_err(|_| serde::de::Error::custom(format!("expected {N} hex bytes")))
    }
}

/// The fork root `B^{e0}` a license window starts from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RootRef {
    pub id: u64,
    pub epoch: u64,
}

/// Jurisdictions `F`, assets `A` and the `|F| x |A|` matrix of opaque rule payloads.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RulesMatrix {
    pub jurisdictions: Vec<String>,
    pub assets: Vec<String>,
    pub rules: Vec<Vec<Vec<u8>>>,
}

impl RulesMatrix {
    pub fn new(jurisdictions: Vec<String>, assets: Vec<String>, rules: Vec<Vec<Vec<u8>>>) -> Result<Self, LicenseError> {
        if jurisdictions.is_empty() || assets.is_empty() {
            return Err(LicenseError::EmptyDomain);
        }
        let cols = rules.first().map_or(0, Vec::len);
        if rules.len() != jurisdictions.len() || rules.iter().any(|r| r.len() != assets.len()) {
            return Err(LicenseError::DimensionMismatch {
                rows: rules.len(),
                cols,
                jurisdictions: jurisdictions.len(),
                assets: assets.len(),
            });
        }
        for (f, row) in jurisdictions.iter().zip(&rules) {
            for (a, p) in assets.iter().zip(row) {
                if p.is_empty() {
                    return Err(LicenseError::EmptyPayload { jurisdiction: f.clone(), asset: a.clone() });
                }
            }
        }
        Ok(RulesMatrix { jurisdictions, assets, rules })
    }

    fn encode(&self, e: &mut Enc) {
        e.strs(&self.jurisdictions).strs(&self.assets);
        for row in &self.rules {
            for p in row {
                e.bytes(p);
            }
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Enc::default();
        self.encode(&mut e);
        e.0
    }

    /// `H*(Gamma)`.
    pub fn digest(&self) -> Digest32 {
        hash(&self.to_bytes())
    }

    pub fn covers(&self, jurisdiction: &str, asset: &str) -> bool {
        self.jurisdictions.iter().any(|f| f == jurisdiction) && self.assets.iter().any(|a| a == asset)
    }
}

fn verify_sig(key: &[u8; 32], msg: &[u8], sig: &[u8; 64]) -> bool {
    match VerifyingKey::from_bytes(key) {
        Ok(vk) => vk.verify_strict(msg, &Signature::from_bytes(sig)).is_ok(),
        Err(_) => false,
    }
}

/// The regulator's signed rules announcement `(RBChain, B^{e0}, E, Gamma)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Announcement {
    pub root: RootRef,
    pub window: u64,
    pub rules: RulesMatrix,
    #[serde(with = "hex_array")]
    pub regulator_key: [u8; 32],
    #[serde(with = "hex_array")]
    pub signature: [u8; 64],
}

impl Announcement {
    fn signed_bytes(root: RootRef, window: u64, rules: &RulesMatrix) -> Vec<u8> {
        let mut e = Enc::default();
        e.bytes(PROTOCOL_TAG.as_bytes()).u64(root.id).u64(root.epoch).u64(window);
        rules.encode(&mut e);
        e.0
    }

    /// Check the signature against a trusted regulator key.
    pub fn verify(&self, regulator: &[u8; 32]) -> bool {
        &self.regulator_key == regulator
            && verify_sig(regulator, &Self::signed_bytes(self.root, self.window, &self.rules), &self.signature)
    }

    pub fn rules_digest(&self) -> Digest32 {
        self.rules.digest()
    }

    /// Whether `epoch` lies in `[e0, e0 + E)`.
    pub fn in_window(&self, epoch: u64) -> bool {
        window_status(self.root, self.window, epoch) == LicenseStatus::Valid
    }
}

/// License `sigma_j` letting a transactor move assets `A_j` in jurisdictions `F_j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TransactorLicense {
    pub root: RootRef,
    pub window: u64,
    #[serde(with = "hex_array")]
    pub holder_key: [u8; 32],
    pub jurisdictions: Vec<String>,
    pub assets: Vec<String>,
    #[serde(with = "hex_array")]
    pub signature: [u8; 64],
}

impl TransactorLicense {
    fn signed_bytes(&self) -> Vec<u8> {
        let mut e = Enc::default();
        e.bytes(PROTOCOL_TAG.as_bytes())
            .u64(self.root.id)
            .u64(self.root.epoch)
            .u64(self.window)
            .bytes(&self.holder_key)
            .bytes(ROLE_TRANSACTOR.as_bytes())
            .strs(&self.jurisdictions)
            .strs(&self.assets);
        e.0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Enc(self.signed_bytes());
        e.bytes(&self.signature);
        e.0
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, LicenseError> {
        let mut d = Dec(b);
        d.expect(PROTOCOL_TAG)?;
        let root = RootRef { id: d.u64()?, epoch: d.u64()? };
        let window = d.u64()?;
        let holder_key = d.fixed()?;
        d.expect(ROLE_TRANSACTOR)?;
        let jurisdictions = d.strs()?;
        let assets = d.strs()?;
        let signature = d.fixed()?;
        d.finish()?;
        Ok(TransactorLicense { root, window, holder_key, jurisdictions, assets, signature })
    }

    pub fn verify(&self, regulator: &[u8; 32]) -> bool {
        verify_sig(regulator, &self.signed_bytes(), &self.signature)
    }

    pub fn covers(&self, jurisdiction: &str, asset: &str) -> bool {
        self.jurisdictions.iter().any(|f| f == jurisdiction) && self.assets.iter().any(|a| a == asset)
    }
}

/// License `beta_i` binding an executor to the announced rules digest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExecutorLicense {
    pub root: RootRef,
    pub window: u64,
    #[serde(with = "hex_array")]
    pub holder_key: [u8; 32],
    #[serde(with = "hex_array")]
    pub rules_digest: Digest32,
    #[serde(with = "hex_array")]
    pub signature: [u8; 64],
}

impl ExecutorLicense {
    fn signed_bytes(&self) -> Vec<u8> {
        let mut e = Enc::default();
        e.bytes(PROTOCOL_TAG.as_bytes())
            .u64(self.root.id)
            .u64(self.root.epoch)
            .u64(self.window)
            .bytes(&self.holder_key)
            .bytes(ROLE_EXECUTOR.as_bytes())
            .bytes(&self.rules_digest);
        e.0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Enc(self.signed_bytes());
        e.bytes(&self.signature);
        e.0
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, LicenseError> {
        let mut d = Dec(b);
        d.expect(PROTOCOL_TAG)?;
        let root = RootRef { id: d.u64()?, epoch: d.u64()? };
        let window = d.u64()?;
        let holder_key = d.fixed()?;
        d.expect(ROLE_EXECUTOR)?;
        let rules_digest = d.fixed()?;
        let signature = d.fixed()?;
        d.finish()?;
        Ok(ExecutorLicense { root, window, holder_key, rules_digest, signature })
    }

    pub fn verify(&self, regulator: &[u8; 32]) -> bool {
        verify_sig(regulator, &self.signed_bytes(), &self.signature)
    }

    /// `H*(beta_i)`, the evidence placed in a regulated block's coinbase.
    pub fn evidence(&self) -> Digest32 {
        hash(&self.to_bytes())
    }
}

/// Signing authority for announcements and licenses.
pub struct Regulator {
    key: SigningKey,
}

impl Regulator {
    pub fn from_secret(secret: [u8; 32]) -> Self {
        Regulator { key: SigningKey::from_bytes(&secret) }
    }

    /// Deterministic key from a 64-bit seed.
    pub fn from_seed(seed: u64) -> Self {
        Regulator::from_secret(secret_from_seed(seed))
    }

    pub fn verifying_key(&self) -> [u8; 32] {
        self.key.verifying_key().to_bytes()
    }

    fn sign(&self, msg: &[u8]) -> [u8; 64] {
        self.key.sign(msg).to_bytes()
    }

    pub fn announce_rules(
        &self,
        jurisdictions: Vec<String>,
        assets: Vec<String>,
        payloads: Vec<Vec<Vec<u8>>>,
        root: RootRef,
        window: u64,
    ) -> Result<Announcement, LicenseError> {
        let rules = RulesMatrix::new(jurisdictions, assets, payloads)?;
        let signature = self.sign(&Announcement::signed_bytes(root, window, &rules));
        Ok(Announcement { root, window, rules, regulator_key: self.verifying_key(), signature })
    }

    /// Issue `sigma_j` for the announcement's window; the scope must lie
    /// within the announced jurisdictions and assets.
    pub fn issue_transactor_license(
        &self,
        ann: &Announcement,
        holder_key: [u8; 32],
        jurisdictions: Vec<String>,
        assets: Vec<String>,
    ) -> Result<TransactorLicense, LicenseError> {
        for f in &jurisdictions {
            if !ann.rules.jurisdictions.contains(f) {
                return Err(LicenseError::ScopeNotSubset(f.clone()));
            }
        }
        for a in &assets {
            if !ann.rules.assets.contains(a) {
                return Err(LicenseError::ScopeNotSubset(a.clone()));
            }
        }
        let mut lic = TransactorLicense {
            root: ann.root,
            window: ann.window,
            holder_key,
            jurisdictions,
            assets,
            signature: [0; 64],
        };
        lic.signature = self.sign(&lic.signed_bytes());
        Ok(lic)
    }

    pub fn issue_executor_license(
        &self,
        ann: &Announcement,
        holder_key: [u8; 32],
        rules_digest: Digest32,
    ) -> Result<ExecutorLicense, LicenseError> {
        if rules_digest != ann.rules_digest() {
            return Err(LicenseError::DigestMismatch);
        }
        let mut lic = ExecutorLicense { root: ann.root, window: ann.window, holder_key, rules_digest, signature: [0; 64] };
        lic.signature = self.sign(&lic.signed_bytes());
        Ok(lic)
    }
}

/// 32 secret bytes expanded from a seed.
pub fn secret_from_seed(seed: u64) -> [u8; 32] {
    let mut s = [0u8; 32];
    ChaCha20Rng::seed_from_u64(seed).fill_bytes(&mut s);
    s
}

/// Public key of the deterministic key pair for `seed`.
pub fn public_key_from_seed(seed: u64) -> [u8; 32] {
    SigningKey::from_bytes(&secret_from_seed(seed)).verifying_key().to_bytes()
}

/// Outcome of a license check; only `Valid` admits the license.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LicenseStatus {
    Valid,
    BadSignature,
    RootMismatch,
    NotYetValid,
    Expired,
}

impl LicenseStatus {
    pub fn is_valid(self) -> bool {
        self == LicenseStatus::Valid
    }
}

fn window_status(root: RootRef, window: u64, epoch: u64) -> LicenseStatus {
    if epoch < root.epoch {
        LicenseStatus::NotYetValid
    } else if epoch - root.epoch >= window {
        LicenseStatus::Expired
    } else {
        LicenseStatus::Valid
    }
}

/// Anything carrying a signed oversight window.
pub trait License {
    fn root(&self) -> RootRef;
    fn window(&self) -> u64;
    fn verify(&self, regulator: &[u8; 32]) -> bool;
}

impl License for TransactorLicense {
    fn root(&self) -> RootRef {
        self.root
    }
    fn window(&self) -> u64 {
        self.window
    }
    fn verify(&self, regulator: &[u8; 32]) -> bool {
        TransactorLicense::verify(self, regulator)
    }
}

impl License for ExecutorLicense {
    fn root(&self) -> RootRef {
        self.root
    }
    fn window(&self) -> u64 {
        self.window
    }
    fn verify(&self, regulator: &[u8; 32]) -> bool {
        ExecutorLicense::verify(self, regulator)
    }
}

/// Signature, root and window check: valid iff `e0 <= epoch < e0 + E`.
pub fn validate_license<L: License>(lic: &L, regulator: &[u8; 32], epoch: u64, root: RootRef) -> LicenseStatus {
    if !lic.verify(regulator) {
        return LicenseStatus::BadSignature;
    }
    if lic.root() != root {
        return LicenseStatus::RootMismatch;
    }
    window_status(root, lic.window(), epoch)
}

/// Off-chain receipt `delta` naming the jurisdiction and asset of a transfer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub jurisdiction: String,
    pub asset: String,
}

/// A transaction; legal ones carry `sigma_j ∘ delta` in their script.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub payload: Vec<u8>,
    pub license: Option<TransactorLicense>,
    pub receipt: Option<Receipt>,
}

impl Transaction {
    pub fn plain(payload: Vec<u8>) -> Self {
        Transaction { payload, license: None, receipt: None }
    }

    fn encode(&self, e: &mut Enc) {
        e.bytes(&self.payload);
        e.bytes(&self.license.as_ref().map(TransactorLicense::to_bytes).unwrap_or_default());
        match &self.receipt {
            Some(r) => e.u64(1).bytes(r.jurisdiction.as_bytes()).bytes(r.asset.as_bytes()),
            None => e.u64(0),
        };
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TxClass {
    Legal,
    Dubious,
}

/// Legal iff the transaction carries an in-window license from the
/// announcing regulator whose scope covers its receipt.
pub fn classify_transaction(tx: &Transaction, ann: &Announcement, epoch: u64) -> TxClass {
    let (Some(lic), Some(rc)) = (&tx.license, &tx.receipt) else {
        return TxClass::Dubious;
    };
    let ok = validate_license(lic, &ann.regulator_key, epoch, ann.root).is_valid()
        && lic.covers(&rc.jurisdiction, &rc.asset)
        && ann.rules.covers(&rc.jurisdiction, &rc.asset);
    if ok {
        TxClass::Legal
    } else {
        TxClass::Dubious
    }
}

/// Block body: coinbase, optional executor license, transactions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockContent {
    pub coinbase: Vec<u8>,
    pub executor_license: Option<ExecutorLicense>,
    pub transactions: Vec<Transaction>,
}

impl BlockContent {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Enc::default();
        e.bytes(&self.coinbase);
        e.bytes(&self.executor_license.as_ref().map(ExecutorLicense::to_bytes).unwrap_or_default());
        e.u64(self.transactions.len() as u64);
        for t in &self.transactions {
            t.encode(&mut e);
        }
        e.0
    }

    /// Whether the coinbase embeds `H*(beta)` of the carried license.
    pub fn has_evidence(&self) -> bool {
        self.executor_license.as_ref().is_some_and(|l| {
            let h = l.evidence();
            self.coinbase.windows(h.len()).any(|w| w == h)
        })
    }
}

/// Dubious if any transaction is dubious; Regulated if additionally a valid
/// executor license for the announced rules is evidenced in the coinbase;
/// Legal otherwise.
pub fn classify_block(block: &BlockContent, ann: &Announcement, epoch: u64) -> BlockKind {
    if block.transactions.iter().any(|t| classify_transaction(t, ann, epoch) == TxClass::Dubious) {
        return BlockKind::Dubious;
    }
    let regulated = block.executor_license.as_ref().is_some_and(|l| {
        validate_license(l, &ann.regulator_key, epoch, ann.root).is_valid() && l.rules_digest == ann.rules_digest()
    }) && block.has_evidence();
    if regulated {
        BlockKind::Regulated
    } else {
        BlockKind::Legal
    }
}
