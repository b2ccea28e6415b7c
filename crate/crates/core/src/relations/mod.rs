//! Proof relations for outputs (range), transfers (spend) and withdrawals,
//! plus the backends that prove them.
//!
//! Each relation is first an explicit predicate over (statement, witness).
//! Backends implement [`ProofBackend`]; the simulation backend ships the
//! witness in the clear and is **not zero-knowledge**.

use std::collections::BTreeMap;

use rand_core::CryptoRngCore;

use crate::commitment::{excess, AmountVector, AssetId, AssetRegistry, Commitment, MAX_OUTPUTS};
use crate::error::RelationError;
use crate::group::{hash_parts_to_scalar, Point, Scalar};
use crate::schnorr::{verify_aggregate, Signature};
use crate::smt::{verify_membership, Digest, MerkleProof, MAX_DEPTH};
use crate::wire;

pub mod sigma;
pub mod sim;

pub use sigma::SigmaRangeBackend;
pub use sim::SimulationBackend;

pub const DEFAULT_BIT_WIDTH: u8 = 128;

const NULLIFIER_TAG: &[u8] = b"atlantis/null";

/// `hash("atlantis/null" || enc(sk))`.
pub fn nullifier(sk: &Scalar) -> Scalar {
    hash_parts_to_scalar(&[NULLIFIER_TAG, &sk.to_be_bytes()])
}

/// Output statement: `C = Σ aᵢ·Hᵢ + sk·G` with every `aᵢ < 2^bit_width`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RangeStatement {
    pub commitment: Commitment,
    /// Sorted by asset id.
    pub generators: Vec<(AssetId, Point)>,
    pub g: Point,
    pub bit_width: u8,
}

impl RangeStatement {
    /// Statement covering every registered asset.
    pub fn new(commitment: Commitment, registry: &AssetRegistry, bit_width: u8) -> Self {
        RangeStatement { commitment, generators: registry.generators(), g: Point::generator(), bit_width }
    }

    pub(crate) fn is_well_formed(&self) -> bool {
        (1..=128).contains(&self.bit_width)
            && !self.generators.is_empty()
            && self.generators.windows(2).all(|w| w[0].0 < w[1].0)
    }
}

/// Opening of a range statement. Amounts are field elements so that
/// out-of-range values (including `≥ 2^128`) are representable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RangeWitness {
    pub amounts: BTreeMap<AssetId, Scalar>,
    pub sk: Scalar,
}

impl RangeWitness {
    pub fn new(amounts: &AmountVector, sk: Scalar) -> Self {
        let amounts = amounts.iter().map(|(id, a)| (id.clone(), Scalar::from_u128(a))).collect();
        RangeWitness { amounts, sk }
    }

    /// The amount for `asset` when it lies below `2^bit_width`.
    pub(crate) fn bounded_amount(&self, asset: &AssetId, bit_width: u8) -> Option<u128> {
        let a = self.amounts.get(asset).copied().unwrap_or(Scalar::ZERO).to_u128()?;
        if bit_width < 128 && a >> bit_width != 0 {
            return None;
        }
        Some(a)
    }
}

pub fn check_range_relation(stmt: &RangeStatement, wit: &RangeWitness) -> bool {
    if !stmt.is_well_formed() {
        return false;
    }
    if wit.amounts.keys().any(|id| !stmt.generators.iter().any(|(g, _)| g == id)) {
        return false;
    }
    let mut acc = stmt.g * wit.sk;
    for (id, h) in &stmt.generators {
        match wit.bounded_amount(id, stmt.bit_width) {
            Some(a) => acc += *h * Scalar::from_u128(a),
            None => return false,
        }
    }
    acc == stmt.commitment.point()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpendStatement {
    /// Sorted ascending, distinct.
    pub nullifiers: Vec<Scalar>,
    pub outputs: Vec<Commitment>,
    pub root: Digest,
}

impl SpendStatement {
    /// The message every party signs.
    pub fn message(&self) -> Option<Vec<u8>> {
        wire::encode_nullifier_list(&self.nullifiers).ok()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpendWitness {
    /// Ordered to match the sorted nullifier list.
    pub input_keys: Vec<Scalar>,
    pub input_commitments: Vec<Commitment>,
    pub merkle_proofs: Vec<MerkleProof>,
    pub agg_sig: Signature,
}

fn membership(c: &Commitment, proof: &MerkleProof, root: &Digest) -> bool {
    let depth = proof.depth() as u32;
    depth <= MAX_DEPTH && verify_membership(c, proof, root, depth)
}

pub fn check_spend_relation(stmt: &SpendStatement, wit: &SpendWitness) -> bool {
    let n = stmt.nullifiers.len();
    if n == 0
        || wit.input_keys.len() != n
        || wit.input_commitments.len() != n
        || wit.merkle_proofs.len() != n
        || stmt.outputs.is_empty()
        || stmt.outputs.len() > MAX_OUTPUTS
    {
        return false;
    }
    let Some(message) = stmt.message() else {
        return false;
    };
    for i in 0..n {
        if stmt.nullifiers[i] != nullifier(&wit.input_keys[i]) {
            return false;
        }
        if !membership(&wit.input_commitments[i], &wit.merkle_proofs[i], &stmt.root) {
            return false;
        }
    }
    let x = excess(&wit.input_commitments, &stmt.outputs);
    !x.is_identity() && verify_aggregate(&wit.agg_sig, &x, &message)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WithdrawStatement {
    pub amounts: AmountVector,
    pub nullifier: Scalar,
    pub root: Digest,
    /// Account credited. Bound by the proof, not constrained by the relation.
    pub destination: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WithdrawWitness {
    pub sk: Scalar,
    pub commitment: Commitment,
    pub merkle_proof: MerkleProof,
}

pub fn check_withdraw_relation(stmt: &WithdrawStatement, wit: &WithdrawWitness, registry: &AssetRegistry) -> bool {
    if stmt.nullifier != nullifier(&wit.sk) {
        return false;
    }
    if !membership(&wit.commitment, &wit.merkle_proof, &stmt.root) {
        return false;
    }
    match crate::commitment::commit(&stmt.amounts, &wit.sk, registry) {
        Ok(c) => c == wit.commitment,
        Err(_) => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum BackendTag {
    Simulation = 0x01,
    SigmaRange = 0x02,
}

impl BackendTag {
    pub fn name(self) -> &'static str {
        match self {
            BackendTag::Simulation => "simulation",
            BackendTag::SigmaRange => "sigma-range",
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x01 => Some(BackendTag::Simulation),
            0x02 => Some(BackendTag::SigmaRange),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum RelationKind {
    Range = 0x01,
    Spend = 0x02,
    Withdraw = 0x03,
}

/// Opaque proof blob tagged with the backend that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Proof {
    pub backend: BackendTag,
    pub payload: Vec<u8>,
}

#[derive(Clone, Copy, Debug)]
pub enum Statement<'a> {
    Range(&'a RangeStatement),
    Spend(&'a SpendStatement),
    Withdraw(&'a WithdrawStatement, &'a AssetRegistry),
}

impl Statement<'_> {
    pub fn kind(&self) -> RelationKind {
        match self {
            Statement::Range(_) => RelationKind::Range,
            Statement::Spend(_) => RelationKind::Spend,
            Statement::Withdraw(..) => RelationKind::Withdraw,
        }
    }

    /// Canonical encoding of the public inputs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = wire::Writer::new();
        w.u8(self.kind() as u8);
        match self {
            Statement::Range(s) => w.put(*s),
            Statement::Spend(s) => w.put(*s),
            Statement::Withdraw(s, reg) => {
                w.put(*s);
                w.list(&reg.generators());
            }
        }
        w.into_bytes()
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Witness<'a> {
    Range(&'a RangeWitness),
    Spend(&'a SpendWitness),
    Withdraw(&'a WithdrawWitness),
}

/// Checks the bare relation for a matching (statement, witness) pair.
pub fn check_relation(stmt: Statement<'_>, wit: Witness<'_>) -> bool {
    match (stmt, wit) {
        (Statement::Range(s), Witness::Range(w)) => check_range_relation(s, w),
        (Statement::Spend(s), Witness::Spend(w)) => check_spend_relation(s, w),
        (Statement::Withdraw(s, reg), Witness::Withdraw(w)) => check_withdraw_relation(s, w, reg),
        _ => false,
    }
}

/// A proof system for some or all of the relations.
pub trait ProofBackend: Sync {
    fn tag(&self) -> BackendTag;

    fn prove(&self, stmt: Statement<'_>, wit: Witness<'_>, rng: &mut dyn CryptoRngCore)
        -> Result<Proof, RelationError>;

    fn verify(&self, stmt: Statement<'_>, proof: &Proof) -> bool;

    /// Input commitments and their leaf indices, when the proof discloses them.
    /// A hiding backend returns `None`.
    fn revealed_inputs(&self, _kind: RelationKind, _proof: &Proof) -> Option<Vec<(Commitment, u32)>> {
        None
    }
}

/// Which backends a ledger and its wallets use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ProofSuite {
    /// Every relation through the simulation backend.
    Simulation = 0x01,
    /// Range proofs through sigma OR-proofs, spend and withdraw through simulation.
    SigmaRange = 0x02,
}

static SIMULATION: SimulationBackend = SimulationBackend;
static SIGMA_RANGE: SigmaRangeBackend = SigmaRangeBackend;

impl ProofSuite {
    pub fn range_backend(self) -> &'static dyn ProofBackend {
        match self {
            ProofSuite::Simulation => &SIMULATION,
            ProofSuite::SigmaRange => &SIGMA_RANGE,
        }
    }

    pub fn relation_backend(self) -> &'static dyn ProofBackend {
        &SIMULATION
    }

    pub fn name(self) -> &'static str {
        match self {
            ProofSuite::Simulation => "simulation",
            ProofSuite::SigmaRange => "sigma-range+simulation",
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x01 => Some(ProofSuite::Simulation),
            0x02 => Some(ProofSuite::SigmaRange),
            _ => None,
        }
    }
}

impl std::str::FromStr for ProofSuite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simulation" => Ok(ProofSuite::Simulation),
            "sigma-range+simulation" | "sigma-range" => Ok(ProofSuite::SigmaRange),
            other => Err(format!("unknown proof backend {other}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commitment::commit;
    use crate::schnorr::{aggregate, compute_agg_challenge, SecretNonce, Sign};
    use crate::smt::SparseMerkleTree;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn a(s: &str) -> AssetId {
        AssetId::new(s).unwrap()
    }

    fn registry() -> AssetRegistry {
        let mut r = AssetRegistry::new();
        r.register(a("A")).unwrap();
        r.register(a("B")).unwrap();
        r
    }

    #[test]
    fn range_relation_cases() {
        let reg = registry();
        let sk = Scalar::from_u64(99);
        let stmt = |c| RangeStatement::new(c, &reg, 128);
        let zero = RangeWitness::new(&AmountVector::single(a("A"), 0), sk);
        assert!(check_range_relation(&stmt(Commitment(Point::mul_base(&sk))), &zero));

        let mut over = RangeWitness::new(&AmountVector::new(), sk);
        over.amounts.insert(a("A"), Scalar::pow2(128));
        let c_over = Commitment(*reg.get(&a("A")).unwrap() * Scalar::pow2(128) + Point::mul_base(&sk));
        assert!(!check_range_relation(&stmt(c_over), &over));

        let c6 = commit(&AmountVector::single(a("A"), 6), &sk, &reg).unwrap();
        assert!(!check_range_relation(&stmt(c6), &RangeWitness::new(&AmountVector::single(a("A"), 5), sk)));
        assert!(check_range_relation(&stmt(c6), &RangeWitness::new(&AmountVector::single(a("A"), 6), sk)));

        let narrow = RangeStatement::new(c6, &reg, 2);
        assert!(!check_range_relation(&narrow, &RangeWitness::new(&AmountVector::single(a("A"), 6), sk)));

        let mut unknown = RangeWitness::new(&AmountVector::single(a("A"), 6), sk);
        unknown.amounts.insert(a("Z"), Scalar::ZERO);
        assert!(!check_range_relation(&stmt(c6), &unknown));
    }

    pub(crate) fn honest_spend(rng: &mut ChaCha20Rng) -> (SpendStatement, SpendWitness, SparseMerkleTree) {
        let reg = registry();
        let mut tree = SparseMerkleTree::new();
        let k_in = Scalar::random_nonzero(rng);
        let c_in = commit(&AmountVector::single(a("A"), 10), &k_in, &reg).unwrap();
        tree.insert(&c_in).unwrap();
        let k_out = Scalar::random_nonzero(rng);
        let k_chg = Scalar::random_nonzero(rng);
        let out = commit(&AmountVector::single(a("A"), 7), &k_out, &reg).unwrap();
        let chg = commit(&AmountVector::single(a("A"), 3), &k_chg, &reg).unwrap();
        let stmt = SpendStatement { nullifiers: vec![nullifier(&k_in)], outputs: vec![out, chg], root: tree.root() };
        let msg = stmt.message().unwrap();
        let nonces: Vec<SecretNonce> = (0..3).map(|_| SecretNonce::generate(rng)).collect();
        let r_agg = nonces[0].commitment().0 - nonces[1].commitment().0 - nonces[2].commitment().0;
        let e = compute_agg_challenge(&r_agg, &msg).unwrap();
        let mut it = nonces.into_iter();
        let partials = [
            it.next().unwrap().sign(&k_in, &e, Sign::Plus).unwrap(),
            it.next().unwrap().sign(&k_out, &e, Sign::Minus).unwrap(),
            it.next().unwrap().sign(&k_chg, &e, Sign::Minus).unwrap(),
        ];
        let wit = SpendWitness {
            input_keys: vec![k_in],
            input_commitments: vec![c_in],
            merkle_proofs: vec![tree.prove_membership(&c_in).unwrap()],
            agg_sig: aggregate(&partials).unwrap(),
        };
        (stmt, wit, tree)
    }

    #[test]
    fn spend_relation_cases() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let (stmt, wit, mut tree) = honest_spend(&mut rng);
        assert!(check_spend_relation(&stmt, &wit));

        let mut bad_null = stmt.clone();
        bad_null.nullifiers[0] += Scalar::ONE;
        assert!(!check_spend_relation(&bad_null, &wit));

        let stale = stmt.root;
        tree.insert(&Commitment(Point::mul_base(&Scalar::from_u64(5)))).unwrap();
        let mut fresh = stmt.clone();
        fresh.root = tree.root();
        let mut fresh_wit = wit.clone();
        fresh_wit.merkle_proofs = vec![tree.prove_membership(&wit.input_commitments[0]).unwrap()];
        // signature is unaffected by the root, so the updated pair still holds
        assert!(check_spend_relation(&fresh, &fresh_wit));
        let mut stale_stmt = fresh.clone();
        stale_stmt.root = stale;
        assert!(!check_spend_relation(&stale_stmt, &fresh_wit));

        let mut inflated = stmt.clone();
        inflated.outputs[0] = Commitment(inflated.outputs[0].0 + *registry().get(&a("A")).unwrap());
        assert!(!check_spend_relation(&inflated, &wit));
    }

    #[test]
    fn withdraw_relation_cases() {
        let reg = registry();
        let sk = Scalar::from_u64(1234);
        let amounts = AmountVector::single(a("B"), 7);
        let c = commit(&amounts, &sk, &reg).unwrap();
        let mut tree = SparseMerkleTree::new();
        tree.insert(&c).unwrap();
        let wit = WithdrawWitness { sk, commitment: c, merkle_proof: tree.prove_membership(&c).unwrap() };
        let stmt = WithdrawStatement {
            amounts: amounts.clone(),
            nullifier: nullifier(&sk),
            root: tree.root(),
            destination: "bob".into(),
        };
        assert!(check_withdraw_relation(&stmt, &wit, &reg));
        let off = WithdrawStatement { amounts: AmountVector::single(a("B"), 8), ..stmt.clone() };
        assert!(!check_withdraw_relation(&off, &wit, &reg));
        let wrong_root = WithdrawStatement { root: stmt.root + Scalar::ONE, ..stmt.clone() };
        assert!(!check_withdraw_relation(&wrong_root, &wit, &reg));
    }
}
