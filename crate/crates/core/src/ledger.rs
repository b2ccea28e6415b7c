//! The validating state machine for deposits, transfers and withdrawals.
//!
//! Every mutating operation checks all of its preconditions before touching
//! state, so a rejected call leaves the ledger unchanged.
//!
//! Exclusion and timelock checks need to know which commitments a payload
//! spends. Only a witness-revealing backend discloses that; under a hiding
//! backend those checks would have to move inside the proven relation.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use rand_core::CryptoRngCore;
use sha2::{Digest as _, Sha256};

use crate::commitment::{commit_with_point, AmountVector, AssetId, AssetRegistry, Commitment, MAX_OUTPUTS};
use crate::error::{DecodeError, LedgerError, SchnorrError};
use crate::group::{Point, Scalar};
use crate::relations::{
    Proof, ProofSuite, RangeStatement, RelationKind, SpendStatement, Statement, WithdrawStatement, DEFAULT_BIT_WIDTH,
};
use crate::schnorr::{sig_gen, sig_ver, Signature};
use crate::smt::{Digest, SparseMerkleTree, DEFAULT_DEPTH};
use crate::wire::{self, Decode, Encode, Message, Reader, Writer};

/// How many recent roots a payload may reference.
pub const DEFAULT_ROOT_WINDOW: u32 = 64;

const STATE_MAGIC: &[u8; 4] = b"ATLS";
const STATE_VERSION: u8 = 1;
const EXCLUDE_TAG: &[u8] = b"atlantis/exclude";

pub type AccountId = String;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LedgerConfig {
    pub suite: ProofSuite,
    pub range_bits: u8,
    pub root_window: u32,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        LedgerConfig { suite: ProofSuite::SigmaRange, range_bits: DEFAULT_BIT_WIDTH, root_window: DEFAULT_ROOT_WINDOW }
    }
}

/// Public parameters a wallet needs to build proofs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicParams {
    pub registry: AssetRegistry,
    pub suite: ProofSuite,
    pub range_bits: u8,
}

impl PublicParams {
    pub fn range_statement(&self, c: Commitment) -> RangeStatement {
        RangeStatement::new(c, &self.registry, self.range_bits)
    }
}

/// One commitment in a deposit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepositRequest {
    pub amounts: AmountVector,
    pub public_key: Point,
    pub timelock: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransferPayload {
    pub spend_statement: SpendStatement,
    pub spend_proof: Proof,
    /// Recipient outputs followed by the change output, each with its range proof.
    pub outputs: Vec<(Commitment, Proof)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WithdrawPayload {
    /// Carries the destination account.
    pub statement: WithdrawStatement,
    pub proof: Proof,
}

/// Message an administrator signs to exclude `c`.
pub fn exclusion_message(c: &Commitment) -> Vec<u8> {
    let mut m = EXCLUDE_TAG.to_vec();
    m.extend_from_slice(&c.to_bytes());
    m
}

/// The administrator's signing key for exclusions.
#[derive(Clone, PartialEq, Eq)]
pub struct AdminKey(Scalar);

impl AdminKey {
    pub fn generate<R: CryptoRngCore + ?Sized>(rng: &mut R) -> Self {
        AdminKey(Scalar::random_nonzero(rng))
    }

    pub fn from_scalar(sk: Scalar) -> Result<Self, SchnorrError> {
        if sk.is_zero() {
            return Err(SchnorrError::InvalidKey);
        }
        Ok(AdminKey(sk))
    }

    pub fn public(&self) -> Point {
        Point::mul_base(&self.0)
    }

    pub fn sign_exclusion<R: CryptoRngCore + ?Sized>(
        &self,
        c: &Commitment,
        rng: &mut R,
    ) -> Result<Signature, SchnorrError> {
        sig_gen(&self.0, &exclusion_message(c), rng)
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        self.0.to_be_bytes()
    }

    pub fn from_bytes(bytes: &[u8; 32]) -> Result<Self, DecodeError> {
        AdminKey::from_scalar(Scalar::from_be_bytes(bytes)?)
            .map_err(|_| DecodeError::InvalidValue { offset: 0, what: "administrator key" })
    }
}

impl std::fmt::Debug for AdminKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("AdminKey(..)")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ledger {
    config: LedgerConfig,
    admin: Point,
    registry: AssetRegistry,
    tree: SparseMerkleTree,
    /// Most recent last; the back is always the live root.
    recent_roots: VecDeque<Digest>,
    nullifiers: BTreeSet<Scalar>,
    exclusions: BTreeSet<Commitment>,
    timelocks: BTreeMap<u32, u64>,
    balances: BTreeMap<(AccountId, AssetId), u128>,
    clock: u64,
}

impl Ledger {
    pub fn new(config: LedgerConfig, admin: Point) -> Result<Self, LedgerError> {
        if !(1..=128).contains(&config.range_bits) {
            return Err(LedgerError::InvalidParameter("range bit width outside 1..=128"));
        }
        if config.root_window == 0 {
            return Err(LedgerError::InvalidParameter("root window must be positive"));
        }
        if admin.is_identity() {
            return Err(LedgerError::InvalidParameter("administrator key is the identity"));
        }
        let tree = SparseMerkleTree::new();
        let recent_roots = VecDeque::from([tree.root()]);
        Ok(Ledger {
            config,
            admin,
            registry: AssetRegistry::new(),
            tree,
            recent_roots,
            nullifiers: BTreeSet::new(),
            exclusions: BTreeSet::new(),
            timelocks: BTreeMap::new(),
            balances: BTreeMap::new(),
            clock: 0,
        })
    }

    pub fn config(&self) -> &LedgerConfig {
        &self.config
    }

    pub fn admin(&self) -> &Point {
        &self.admin
    }

    pub fn registry(&self) -> &AssetRegistry {
        &self.registry
    }

    pub fn tree(&self) -> &SparseMerkleTree {
        &self.tree
    }

    pub fn root(&self) -> Digest {
        self.tree.root()
    }

    pub fn recent_roots(&self) -> impl Iterator<Item = &Digest> {
        self.recent_roots.iter()
    }

    pub fn is_recent_root(&self, root: &Digest) -> bool {
        self.recent_roots.contains(root)
    }

    pub fn nullifiers(&self) -> impl Iterator<Item = &Scalar> {
        self.nullifiers.iter()
    }

    pub fn is_spent(&self, nullifier: &Scalar) -> bool {
        self.nullifiers.contains(nullifier)
    }

    pub fn exclusions(&self) -> impl Iterator<Item = &Commitment> {
        self.exclusions.iter()
    }

    pub fn timelocks(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.timelocks.iter().map(|(i, t)| (*i, *t))
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn balance(&self, account: &str, asset: &AssetId) -> u128 {
        self.balances.get(&(account.to_string(), asset.clone())).copied().unwrap_or(0)
    }

    pub fn balances(&self) -> impl Iterator<Item = (&AccountId, &AssetId, u128)> {
        self.balances.iter().map(|((acc, asset), v)| (acc, asset, *v))
    }

    pub fn params(&self) -> PublicParams {
        PublicParams { registry: self.registry.clone(), suite: self.config.suite, range_bits: self.config.range_bits }
    }

    pub fn register_asset(&mut self, id: AssetId) -> Result<Point, LedgerError> {
        Ok(self.registry.register(id)?)
    }

    /// Test faucet: credits a public balance.
    pub fn fund(&mut self, account: &str, asset: &AssetId, amount: u128) -> Result<(), LedgerError> {
        if !self.registry.contains(asset) {
            return Err(LedgerError::UnsupportedAsset(asset.to_string()));
        }
        let key = (account.to_string(), asset.clone());
        let updated =
            self.balances.get(&key).copied().unwrap_or(0).checked_add(amount).ok_or(LedgerError::BalanceOverflow)?;
        if updated > 0 {
            self.balances.insert(key, updated);
        }
        Ok(())
    }

    pub fn deposit(
        &mut self,
        account: &str,
        amounts: &AmountVector,
        public_key: &Point,
        timelock: Option<u64>,
    ) -> Result<u32, LedgerError> {
        let req = DepositRequest { amounts: amounts.clone(), public_key: *public_key, timelock };
        Ok(self.deposit_many(account, &[req])?[0])
    }

    /// Deposits several commitments atomically; each lands in its own leaf.
    pub fn deposit_many(&mut self, account: &str, requests: &[DepositRequest]) -> Result<Vec<u32>, LedgerError> {
        if requests.is_empty() {
            return Err(LedgerError::InvalidParameter("empty deposit"));
        }
        if requests.len() > MAX_OUTPUTS {
            return Err(LedgerError::InvalidParameter("too many deposit commitments"));
        }
        let mut total = AmountVector::new();
        let mut commitments = Vec::with_capacity(requests.len());
        for req in requests {
            for id in req.amounts.assets() {
                if !self.registry.contains(id) {
                    return Err(LedgerError::UnsupportedAsset(id.to_string()));
                }
            }
            if req.public_key.is_identity() {
                return Err(LedgerError::InvalidParameter("deposit key is the identity"));
            }
            total = total.checked_add(&req.amounts).ok_or(LedgerError::BalanceOverflow)?;
            commitments.push(commit_with_point(&req.amounts, &req.public_key, &self.registry)?);
        }
        for (asset, amount) in total.iter() {
            if self.balance(account, asset) < amount {
                return Err(LedgerError::InsufficientBalance {
                    account: account.to_string(),
                    asset: asset.to_string(),
                });
            }
        }
        self.check_free_leaves(&commitments)?;

        for (asset, amount) in total.iter() {
            let key = (account.to_string(), asset.clone());
            let left = self.balances[&key] - amount;
            if left == 0 {
                self.balances.remove(&key);
            } else {
                self.balances.insert(key, left);
            }
        }
        let indices = self.insert_outputs(&commitments);
        for (idx, req) in indices.iter().zip(requests) {
            if let Some(t) = req.timelock {
                self.timelocks.insert(*idx, t);
            }
        }
        Ok(indices)
    }

    fn check_free_leaves(&self, commitments: &[Commitment]) -> Result<(), LedgerError> {
        let mut seen = HashSet::new();
        for c in commitments {
            let idx = self.tree.leaf_index(c);
            if self.tree.is_occupied(idx) || !seen.insert(idx) {
                return Err(LedgerError::IndexCollision(idx));
            }
        }
        Ok(())
    }

    /// Inserts pre-checked commitments and records the new root.
    fn insert_outputs(&mut self, commitments: &[Commitment]) -> Vec<u32> {
        let indices = commitments
            .iter()
            .map(|c| {
                self.tree.insert(c).expect("leaf checked free");
                self.tree.leaf_index(c)
            })
            .collect();
        self.recent_roots.push_back(self.tree.root());
        while self.recent_roots.len() > self.config.root_window as usize {
            self.recent_roots.pop_front();
        }
        indices
    }

    fn check_spendable(&self, kind: RelationKind, proof: &Proof) -> Result<(), LedgerError> {
        let Some(inputs) = self.config.suite.relation_backend().revealed_inputs(kind, proof) else {
            return Ok(());
        };
        for (c, _) in &inputs {
            if self.exclusions.contains(c) {
                return Err(LedgerError::ExcludedCommitment);
            }
            if let Some(&until) = self.timelocks.get(&self.tree.leaf_index(c)) {
                if self.clock < until {
                    return Err(LedgerError::Timelocked { until, now: self.clock });
                }
            }
        }
        Ok(())
    }

    /// Runs every acceptance check for a transfer without mutating state.
    pub fn validate_transfer(&self, payload: &TransferPayload) -> Result<(), LedgerError> {
        let stmt = &payload.spend_statement;
        if payload.outputs.is_empty() || payload.outputs.len() > MAX_OUTPUTS {
            return Err(LedgerError::Malformed("output count"));
        }
        if stmt.outputs.len() != payload.outputs.len()
            || stmt.outputs.iter().zip(&payload.outputs).any(|(a, (b, _))| a != b)
        {
            return Err(LedgerError::Malformed("statement outputs differ from payload outputs"));
        }
        if stmt.nullifiers.is_empty() || !stmt.nullifiers.windows(2).all(|w| w[0] < w[1]) {
            return Err(LedgerError::Malformed("nullifier list"));
        }
        if stmt.nullifiers.iter().any(|n| self.nullifiers.contains(n)) {
            return Err(LedgerError::DoubleSpend);
        }
        if !self.is_recent_root(&stmt.root) {
            return Err(LedgerError::StaleRoot);
        }
        let backend = self.config.suite.relation_backend();
        if payload.spend_proof.backend != backend.tag() || !backend.verify(Statement::Spend(stmt), &payload.spend_proof)
        {
            return Err(LedgerError::InvalidProof("spend"));
        }
        let range_backend = self.config.suite.range_backend();
        for (c, proof) in &payload.outputs {
            let rs = RangeStatement::new(*c, &self.registry, self.config.range_bits);
            if proof.backend != range_backend.tag() || !range_backend.verify(Statement::Range(&rs), proof) {
                return Err(LedgerError::InvalidProof("range"));
            }
        }
        self.check_spendable(RelationKind::Spend, &payload.spend_proof)?;
        self.check_free_leaves(&stmt.outputs)?;
        Ok(())
    }

    /// Validates and applies a transfer, returning the new root.
    pub fn apply_transfer(&mut self, payload: &TransferPayload) -> Result<Digest, LedgerError> {
        self.validate_transfer(payload)?;
        self.insert_outputs(&payload.spend_statement.outputs);
        self.nullifiers.extend(payload.spend_statement.nullifiers.iter().copied());
        Ok(self.tree.root())
    }

    pub fn validate_withdraw(&self, payload: &WithdrawPayload) -> Result<(), LedgerError> {
        let stmt = &payload.statement;
        if stmt.amounts.is_zero() {
            return Err(LedgerError::Malformed("withdrawal of nothing"));
        }
        if stmt.destination.is_empty() {
            return Err(LedgerError::Malformed("empty destination"));
        }
        for id in stmt.amounts.assets() {
            if !self.registry.contains(id) {
                return Err(LedgerError::UnsupportedAsset(id.to_string()));
            }
        }
        if self.nullifiers.contains(&stmt.nullifier) {
            return Err(LedgerError::DoubleSpend);
        }
        if !self.is_recent_root(&stmt.root) {
            return Err(LedgerError::StaleRoot);
        }
        let backend = self.config.suite.relation_backend();
        if payload.proof.backend != backend.tag()
            || !backend.verify(Statement::Withdraw(stmt, &self.registry), &payload.proof)
        {
            return Err(LedgerError::InvalidProof("withdraw"));
        }
        self.check_spendable(RelationKind::Withdraw, &payload.proof)?;
        for (asset, amount) in stmt.amounts.iter() {
            self.balance(&stmt.destination, asset).checked_add(amount).ok_or(LedgerError::BalanceOverflow)?;
        }
        Ok(())
    }

    /// Validates a withdrawal and credits the destination's public balance.
    pub fn apply_withdraw(&mut self, payload: &WithdrawPayload) -> Result<(), LedgerError> {
        self.validate_withdraw(payload)?;
        for (asset, amount) in payload.statement.amounts.iter() {
            let key = (payload.statement.destination.clone(), asset.clone());
            *self.balances.entry(key).or_insert(0) += amount;
        }
        self.nullifiers.insert(payload.statement.nullifier);
        Ok(())
    }

    /// Bars `c` from being spent. Requires the administrator's signature over
    /// [`exclusion_message`]. Idempotent.
    pub fn exclude_commitment(&mut self, c: &Commitment, admin_sig: &Signature) -> Result<(), LedgerError> {
        if !sig_ver(admin_sig, &self.admin, &exclusion_message(c)) {
            return Err(LedgerError::Unauthorized);
        }
        self.exclusions.insert(*c);
        Ok(())
    }

    pub fn advance_clock(&mut self, to: u64) -> Result<(), LedgerError> {
        if to < self.clock {
            return Err(LedgerError::InvalidParameter("clock cannot move backwards"));
        }
        self.clock = to;
        Ok(())
    }

    /// State file: `"ATLS" || version || body || sha256(body)`.
    pub fn to_state_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(self.config.suite as u8);
        w.u8(self.config.range_bits);
        w.u32(self.config.root_window);
        w.point(&self.admin);
        w.list(&self.registry.generators());
        w.u8(self.tree.depth() as u8);
        w.u32(self.tree.len() as u32);
        for (idx, c) in self.tree.leaves() {
            w.u32(idx);
            c.encode(&mut w);
        }
        w.scalar(&self.tree.root());
        w.list(&self.recent_roots.iter().copied().collect::<Vec<_>>());
        wire::encode_sorted_scalars(&mut w, &self.nullifiers.iter().copied().collect::<Vec<_>>());
        w.list(&self.exclusions.iter().copied().collect::<Vec<_>>());
        w.u32(self.timelocks.len() as u32);
        for (idx, t) in &self.timelocks {
            w.u32(*idx);
            w.u64(*t);
        }
        w.u32(self.balances.len() as u32);
        for ((acc, asset), v) in &self.balances {
            acc.encode(&mut w);
            asset.encode(&mut w);
            w.u128(*v);
        }
        w.u64(self.clock);
        let body = w.into_bytes();

        let mut out = STATE_MAGIC.to_vec();
        out.push(STATE_VERSION);
        out.extend_from_slice(&body);
        out.extend_from_slice(&Sha256::digest(&body));
        out
    }

    /// Loads a state file, re-deriving generators and the tree root.
    pub fn from_state_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        if bytes.len() < 5 + 32 {
            return Err(DecodeError::Truncated { offset: bytes.len() });
        }
        if &bytes[..4] != STATE_MAGIC {
            return Err(DecodeError::InvalidValue { offset: 0, what: "state file magic" });
        }
        if bytes[4] != STATE_VERSION {
            return Err(DecodeError::UnsupportedVersion { offset: 4, version: bytes[4] });
        }
        let (body, digest) = bytes[5..].split_at(bytes.len() - 5 - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(DecodeError::ChecksumMismatch);
        }
        decode_state_body(body).map_err(|e| e.at(5))
    }
}

fn decode_state_body(body: &[u8]) -> Result<Ledger, DecodeError> {
    let mut r = Reader::new(body);
    let at = r.position();
    let suite = ProofSuite::from_byte(r.u8()?).ok_or(r.invalid(at, "proof suite"))?;
    let config = LedgerConfig { suite, range_bits: r.u8()?, root_window: r.u32()? };
    let admin = r.point()?;
    let mut ledger = Ledger::new(config, admin).map_err(|_| r.invalid(at, "ledger configuration"))?;

    let at = r.position();
    let generators: Vec<(AssetId, Point)> = r.list(4 + 1 + 32)?;
    if !generators.windows(2).all(|w| w[0].0 < w[1].0) {
        return Err(r.invalid(at, "registry order"));
    }
    for (id, h) in generators {
        ledger.registry.insert_checked(id, h).map_err(|_| r.invalid(at, "asset generator"))?;
    }

    let at = r.position();
    let depth = r.u8()? as u32;
    if depth != DEFAULT_DEPTH {
        return Err(r.invalid(at, "tree depth"));
    }
    let n = r.count(4 + 32)?;
    let mut prev: Option<u32> = None;
    for _ in 0..n {
        let at = r.position();
        let idx = r.u32()?;
        let c = Commitment::decode(&mut r)?;
        if prev.is_some_and(|p| p >= idx) || ledger.tree.leaf_index(&c) != idx {
            return Err(r.invalid(at, "tree leaf"));
        }
        prev = Some(idx);
        ledger.tree.insert(&c).map_err(|_| r.invalid(at, "tree leaf"))?;
    }
    let at = r.position();
    if r.scalar()? != ledger.tree.root() {
        return Err(r.invalid(at, "tree root"));
    }

    let at = r.position();
    let roots: Vec<Scalar> = r.list(32)?;
    if roots.is_empty() || roots.len() > config.root_window as usize || roots.last() != Some(&ledger.tree.root()) {
        return Err(r.invalid(at, "root history"));
    }
    ledger.recent_roots = roots.into();

    ledger.nullifiers = wire::decode_scalar_set(&mut r)?.into_iter().collect();

    let at = r.position();
    let exclusions: Vec<Commitment> = r.list(32)?;
    if !exclusions.windows(2).all(|w| w[0] < w[1]) {
        return Err(r.invalid(at, "exclusion order"));
    }
    ledger.exclusions = exclusions.into_iter().collect();

    let n = r.count(12)?;
    let mut prev: Option<u32> = None;
    for _ in 0..n {
        let at = r.position();
        let idx = r.u32()?;
        let t = r.u64()?;
        if prev.is_some_and(|p| p >= idx) || !ledger.tree.is_occupied(idx) {
            return Err(r.invalid(at, "timelock entry"));
        }
        prev = Some(idx);
        ledger.timelocks.insert(idx, t);
    }

    let n = r.count(4 + 4 + 1 + 16)?;
    let mut prev: Option<(AccountId, AssetId)> = None;
    for _ in 0..n {
        let at = r.position();
        let key = (String::decode(&mut r)?, AssetId::decode(&mut r)?);
        let v = r.u128()?;
        if v == 0 || prev.as_ref().is_some_and(|p| *p >= key) || !ledger.registry.contains(&key.1) {
            return Err(r.invalid(at, "balance entry"));
        }
        prev = Some(key.clone());
        ledger.balances.insert(key, v);
    }
    ledger.clock = r.u64()?;
    r.finish()?;
    Ok(ledger)
}

impl Encode for TransferPayload {
    fn encode(&self, w: &mut Writer) {
        self.spend_statement.encode(w);
        self.spend_proof.encode(w);
        w.u32(self.outputs.len() as u32);
        for (c, p) in &self.outputs {
            c.encode(w);
            p.encode(w);
        }
    }
}

impl Decode for TransferPayload {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let spend_statement = r.decode()?;
        let spend_proof = r.decode()?;
        let n = r.count(32 + 4 + 2)?;
        let outputs = (0..n).map(|_| Ok((r.decode()?, r.decode()?))).collect::<Result<_, DecodeError>>()?;
        Ok(TransferPayload { spend_statement, spend_proof, outputs })
    }
}

impl Message for TransferPayload {
    const TAG: u8 = 0x12;
    const NAME: &'static str = "TRANSFER-PAYLOAD";
}

impl Encode for WithdrawPayload {
    fn encode(&self, w: &mut Writer) {
        self.statement.encode(w);
        self.proof.encode(w);
    }
}

impl Decode for WithdrawPayload {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(WithdrawPayload { statement: r.decode()?, proof: r.decode()? })
    }
}

impl Message for WithdrawPayload {
    const TAG: u8 = 0x13;
    const NAME: &'static str = "WITHDRAW-PAYLOAD";
}
