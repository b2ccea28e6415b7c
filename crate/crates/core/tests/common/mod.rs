//! Shared test support: a plaintext shadow ledger, random instances of
//! every wire type, and a simulation-proof forger written independently of
//! the backend.
#![allow(dead_code)]

use std::collections::BTreeMap;

use atlantis::commitment::{commit, excess};
use atlantis::group::hash_parts_to_scalar;
use atlantis::ledger::{AdminKey, DepositRequest, LedgerConfig, PublicParams};
use atlantis::relations::{
    nullifier, BackendTag, Proof, RangeStatement, RangeWitness, SpendStatement, SpendWitness, Statement,
    WithdrawStatement, WithdrawWitness,
};
use atlantis::schnorr::{
    aggregate, compute_agg_challenge, partial_sign, NonceCommitment, PartialSignature, Sign, Signature,
};
use atlantis::smt::{MerkleProof, SparseMerkleTree};
use atlantis::wire::{self, Encode};
use atlantis::{
    AmountVector, AssetId, AssetRegistry, Commitment, Ledger, Point, ProofSuite, Scalar, TransferInit, TransferPayload,
    TransferResponse, Wallet, WithdrawPayload,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn asset(s: &str) -> AssetId {
    AssetId::new(s).unwrap()
}

pub fn amounts(pairs: &[(&str, u128)]) -> AmountVector {
    pairs.iter().map(|(id, n)| (asset(id), *n)).collect()
}

pub fn new_ledger(suite: ProofSuite, range_bits: u8, assets: &[&str]) -> (Ledger, AdminKey) {
    let mut r = rng(0xad);
    let admin = AdminKey::generate(&mut r);
    let config = LedgerConfig { suite, range_bits, ..LedgerConfig::default() };
    let mut ledger = Ledger::new(config, admin.public()).unwrap();
    for a in assets {
        ledger.register_asset(asset(a)).unwrap();
    }
    (ledger, admin)
}

/// Plaintext model of the ledger: public balances plus the opening of every
/// unspent commitment. Conservation means the per-asset total never moves
/// except through the faucet.
#[derive(Default, Clone)]
pub struct Shadow {
    pub public: BTreeMap<(String, AssetId), u128>,
    pub notes: BTreeMap<[u8; 32], AmountVector>,
    pub issued: BTreeMap<AssetId, u128>,
}

impl Shadow {
    pub fn fund(&mut self, account: &str, a: &AssetId, n: u128) {
        *self.public.entry((account.into(), a.clone())).or_default() += n;
        *self.issued.entry(a.clone()).or_default() += n;
    }

    pub fn deposit(&mut self, account: &str, v: &AmountVector, c: &Commitment) {
        for (a, n) in v.iter() {
            let e = self.public.get_mut(&(account.into(), a.clone())).expect("funded");
            *e = e.checked_sub(n).expect("shadow balance");
        }
        assert!(self.notes.insert(c.to_bytes(), v.clone()).is_none());
    }

    /// Panics unless inputs and outputs carry equal per-asset totals.
    pub fn transfer(&mut self, inputs: &[Commitment], outputs: &[(Commitment, AmountVector)]) {
        let mut sum_in = AmountVector::new();
        for c in inputs {
            sum_in = sum_in.checked_add(&self.notes.remove(&c.to_bytes()).expect("unspent note")).unwrap();
        }
        let mut sum_out = AmountVector::new();
        for (c, v) in outputs {
            sum_out = sum_out.checked_add(v).unwrap();
            assert!(self.notes.insert(c.to_bytes(), v.clone()).is_none());
        }
        assert_eq!(sum_in, sum_out, "transfer does not conserve value");
    }

    pub fn withdraw(&mut self, c: &Commitment, account: &str) {
        let v = self.notes.remove(&c.to_bytes()).expect("unspent note");
        for (a, n) in v.iter() {
            *self.public.entry((account.into(), a.clone())).or_default() += n;
        }
    }

    /// Compares against the ledger and checks conservation.
    pub fn check(&self, ledger: &Ledger) -> Result<(), String> {
        let public: BTreeMap<(String, AssetId), u128> =
            self.public.iter().filter(|(_, v)| **v > 0).map(|(k, v)| (k.clone(), *v)).collect();
        let actual: BTreeMap<(String, AssetId), u128> =
            ledger.balances().map(|(acc, a, v)| ((acc.clone(), a.clone()), v)).collect();
        if public != actual {
            return Err(format!("public balances differ: shadow {public:?}, ledger {actual:?}"));
        }
        for (a, issued) in &self.issued {
            let held: u128 = public.iter().filter(|((_, x), _)| x == a).map(|(_, v)| v).sum::<u128>()
                + self.notes.values().map(|v| v.get(a)).sum::<u128>();
            if held != *issued {
                return Err(format!("asset {a}: issued {issued}, accounted {held}"));
            }
        }
        for c in self.notes.keys() {
            let c: Commitment = wire::from_bytes(c).unwrap();
            if !ledger.tree().contains(&c) {
                return Err("unspent note missing from the tree".into());
            }
        }
        Ok(())
    }
}

/// Simulation proof for an arbitrary witness encoding, built from the
/// documented payload layout without consulting the relation.
pub fn forge_sim_proof(stmt: Statement<'_>, witness: &impl Encode) -> Proof {
    let mut payload = vec![stmt.kind() as u8];
    payload.extend_from_slice(&hash_parts_to_scalar(&[b"atlantis/sim-statement", &stmt.to_bytes()]).to_be_bytes());
    payload.extend_from_slice(&wire::to_bytes(witness));
    Proof { backend: BackendTag::Simulation, payload }
}

/// Deposits `v` under key `sk` directly, bypassing the wallet.
pub fn raw_deposit(
    ledger: &mut Ledger,
    shadow: &mut Shadow,
    account: &str,
    v: &AmountVector,
    sk: &Scalar,
) -> Commitment {
    let req = DepositRequest { amounts: v.clone(), public_key: Point::mul_base(sk), timelock: None };
    ledger.deposit_many(account, &[req]).unwrap();
    let c = commit(v, sk, ledger.registry()).unwrap();
    shadow.deposit(account, v, &c);
    c
}

/// A transfer assembled by hand: every party signs honestly over whatever
/// outputs are given, and the spend proof is forged so that only the
/// ledger's own verification decides. Outputs are `(amounts, key)`.
pub fn hand_built_transfer(
    ledger: &Ledger,
    inputs: &[(Scalar, Commitment)],
    outputs: &[(AmountVector, Scalar)],
    rng: &mut ChaCha20Rng,
) -> TransferPayload {
    let params = ledger.params();
    let mut inputs = inputs.to_vec();
    inputs.sort_by_key(|(sk, _)| nullifier(sk));
    let nullifiers: Vec<Scalar> = inputs.iter().map(|(sk, _)| nullifier(sk)).collect();
    let message = wire::encode_nullifier_list(&nullifiers).unwrap();
    let out_cs: Vec<Commitment> = outputs.iter().map(|(v, sk)| commit(v, sk, &params.registry).unwrap()).collect();

    let in_nonces: Vec<Scalar> = inputs.iter().map(|_| Scalar::random_nonzero(rng)).collect();
    let out_nonces: Vec<Scalar> = outputs.iter().map(|_| Scalar::random_nonzero(rng)).collect();
    let r_agg =
        in_nonces.iter().map(Point::mul_base).sum::<Point>() - out_nonces.iter().map(Point::mul_base).sum::<Point>();
    let e = compute_agg_challenge(&r_agg, &message).unwrap();
    let mut partials: Vec<PartialSignature> =
        inputs.iter().zip(&in_nonces).map(|((sk, _), k)| partial_sign(sk, k, &e, Sign::Plus).unwrap()).collect();
    partials.extend(outputs.iter().zip(&out_nonces).map(|((_, sk), k)| partial_sign(sk, k, &e, Sign::Minus).unwrap()));
    let agg_sig = aggregate(&partials).unwrap();

    let stmt = SpendStatement { nullifiers, outputs: out_cs.clone(), root: ledger.root() };
    let wit = SpendWitness {
        input_keys: inputs.iter().map(|(sk, _)| *sk).collect(),
        input_commitments: inputs.iter().map(|(_, c)| *c).collect(),
        merkle_proofs: inputs.iter().map(|(_, c)| ledger.tree().prove_membership(c).unwrap()).collect(),
        agg_sig,
    };
    let spend_proof = forge_sim_proof(Statement::Spend(&stmt), &wit);
    let range = params.suite.range_backend();
    let outputs = outputs
        .iter()
        .zip(&out_cs)
        .map(|((v, sk), c)| {
            let rs = params.range_statement(*c);
            let proof = range
                .prove(Statement::Range(&rs), atlantis::relations::Witness::Range(&RangeWitness::new(v, *sk)), rng)
                .unwrap();
            (*c, proof)
        })
        .collect();
    TransferPayload { spend_statement: stmt, spend_proof, outputs }
}

/// Whether `excess(inputs, outputs)` is a multiple of G only, via the openings.
pub fn balanced(inputs: &[AmountVector], outputs: &[AmountVector]) -> bool {
    let sum = |vs: &[AmountVector]| vs.iter().fold(AmountVector::new(), |a, v| a.checked_add(v).unwrap());
    sum(inputs) == sum(outputs)
}

pub fn excess_of(inputs: &[Commitment], outputs: &[Commitment]) -> Point {
    excess(inputs, outputs)
}

// Random instances of wire types.

pub fn scalar(r: &mut ChaCha20Rng) -> Scalar {
    Scalar::random(r)
}

pub fn point(r: &mut ChaCha20Rng) -> Point {
    if r.gen_ratio(1, 50) {
        Point::identity()
    } else {
        Point::mul_base(&Scalar::random(r))
    }
}

pub fn nonzero_point(r: &mut ChaCha20Rng) -> Point {
    Point::mul_base(&Scalar::random_nonzero(r))
}

pub fn commitment(r: &mut ChaCha20Rng) -> Commitment {
    Commitment(point(r))
}

pub fn asset_id(r: &mut ChaCha20Rng) -> AssetId {
    let len = r.gen_range(1..12);
    AssetId::new((0..len).map(|_| r.gen::<u8>()).collect::<Vec<u8>>()).unwrap()
}

pub fn amount(r: &mut ChaCha20Rng) -> u128 {
    match r.gen_range(0..4) {
        0 => 0,
        1 => r.gen_range(1..1000),
        2 => u128::MAX,
        _ => r.gen(),
    }
}

pub fn amount_vector(r: &mut ChaCha20Rng) -> AmountVector {
    (0..r.gen_range(0..4)).map(|_| (asset_id(r), amount(r))).collect()
}

pub fn scalars_sorted(r: &mut ChaCha20Rng, min: usize, max: usize) -> Vec<Scalar> {
    let mut v: Vec<Scalar> = (0..r.gen_range(min..=max)).map(|_| scalar(r)).collect();
    v.sort();
    v.dedup();
    v
}

pub fn signature(r: &mut ChaCha20Rng) -> Signature {
    Signature { r: nonzero_point(r), s: scalar(r) }
}

pub fn partial(r: &mut ChaCha20Rng) -> PartialSignature {
    PartialSignature { r: nonzero_point(r), s: scalar(r), sign: if r.gen() { Sign::Plus } else { Sign::Minus } }
}

pub fn merkle_proof(r: &mut ChaCha20Rng) -> MerkleProof {
    let depth = r.gen_range(1..=32u32);
    let leaf_index = if depth == 32 { r.gen() } else { r.gen_range(0..1u32 << depth) };
    MerkleProof { leaf_index, siblings: (0..depth).map(|_| scalar(r)).collect() }
}

pub fn proof(r: &mut ChaCha20Rng) -> Proof {
    let backend = if r.gen() { BackendTag::Simulation } else { BackendTag::SigmaRange };
    Proof { backend, payload: (0..r.gen_range(0..200)).map(|_| r.gen()).collect() }
}

pub fn generators(r: &mut ChaCha20Rng) -> Vec<(AssetId, Point)> {
    let mut g: BTreeMap<AssetId, Point> = BTreeMap::new();
    for _ in 0..r.gen_range(1..4) {
        g.insert(asset_id(r), point(r));
    }
    g.into_iter().collect()
}

pub fn range_statement(r: &mut ChaCha20Rng) -> RangeStatement {
    RangeStatement { commitment: commitment(r), generators: generators(r), g: point(r), bit_width: r.gen() }
}

pub fn range_witness(r: &mut ChaCha20Rng) -> RangeWitness {
    RangeWitness { amounts: (0..r.gen_range(0..4)).map(|_| (asset_id(r), scalar(r))).collect(), sk: scalar(r) }
}

pub fn spend_statement(r: &mut ChaCha20Rng) -> SpendStatement {
    SpendStatement {
        nullifiers: scalars_sorted(r, 1, 4),
        outputs: (0..r.gen_range(0..4)).map(|_| commitment(r)).collect(),
        root: scalar(r),
    }
}

pub fn spend_witness(r: &mut ChaCha20Rng) -> SpendWitness {
    let n = r.gen_range(0..3);
    SpendWitness {
        input_keys: (0..n).map(|_| scalar(r)).collect(),
        input_commitments: (0..n).map(|_| commitment(r)).collect(),
        merkle_proofs: (0..n).map(|_| merkle_proof(r)).collect(),
        agg_sig: signature(r),
    }
}

pub fn destination(r: &mut ChaCha20Rng) -> String {
    let len = r.gen_range(0..10);
    (0..len).map(|_| r.gen_range('a'..='z')).collect()
}

pub fn withdraw_statement(r: &mut ChaCha20Rng) -> WithdrawStatement {
    WithdrawStatement { amounts: amount_vector(r), nullifier: scalar(r), root: scalar(r), destination: destination(r) }
}

pub fn withdraw_witness(r: &mut ChaCha20Rng) -> WithdrawWitness {
    WithdrawWitness { sk: scalar(r), commitment: commitment(r), merkle_proof: merkle_proof(r) }
}

pub fn transfer_init(r: &mut ChaCha20Rng) -> TransferInit {
    let mut cosigner_nonces: Vec<Point> = (0..r.gen_range(0..3)).map(|_| point(r)).collect();
    cosigner_nonces.sort_by_key(|p| p.to_bytes());
    cosigner_nonces.dedup();
    TransferInit {
        nullifiers: scalars_sorted(r, 1, 4),
        transfer_amounts: amount_vector(r),
        sender_nonce_sum: point(r),
        cosigner_nonces,
    }
}

pub fn transfer_response(r: &mut ChaCha20Rng) -> TransferResponse {
    TransferResponse {
        output_commitment: commitment(r),
        recipient_nonce: point(r),
        partial: partial(r),
        range_proof: proof(r),
    }
}

pub fn transfer_payload(r: &mut ChaCha20Rng) -> TransferPayload {
    TransferPayload {
        spend_statement: spend_statement(r),
        spend_proof: proof(r),
        outputs: (0..r.gen_range(0..4)).map(|_| (commitment(r), proof(r))).collect(),
    }
}

pub fn withdraw_payload(r: &mut ChaCha20Rng) -> WithdrawPayload {
    WithdrawPayload { statement: withdraw_statement(r), proof: proof(r) }
}

pub fn nonce_commitment(r: &mut ChaCha20Rng) -> NonceCommitment {
    NonceCommitment(nonzero_point(r))
}

/// A ledger reached through a random sequence of valid operations.
pub fn random_ledger(r: &mut ChaCha20Rng) -> Ledger {
    let suite = if r.gen() { ProofSuite::Simulation } else { ProofSuite::SigmaRange };
    let admin = AdminKey::generate(r);
    let config = LedgerConfig { suite, range_bits: r.gen_range(1..=128), root_window: r.gen_range(1..100) };
    let mut ledger = Ledger::new(config, admin.public()).unwrap();
    let ids: Vec<AssetId> = (0..r.gen_range(0..3)).map(|_| asset_id(r)).collect();
    for id in &ids {
        let _ = ledger.register_asset(id.clone());
    }
    for _ in 0..r.gen_range(0..4) {
        let account = destination(r);
        let Some(id) = ids.first() else { break };
        let n: u64 = r.gen();
        ledger.fund(&account, id, n as u128).unwrap();
        if r.gen() {
            let v = AmountVector::single(id.clone(), n as u128 / 2);
            let t = if r.gen() { Some(r.gen()) } else { None };
            let req = DepositRequest { amounts: v, public_key: nonzero_point(r), timelock: t };
            ledger.deposit_many(&account, &[req]).unwrap();
        }
    }
    if r.gen() {
        let c = commitment(r);
        let sig = admin.sign_exclusion(&c, r).unwrap();
        ledger.exclude_commitment(&c, &sig).unwrap();
    }
    ledger.advance_clock(r.gen_range(0..1000)).unwrap();
    ledger
}

/// A wallet that has deposited, received, and holds an open session.
pub fn random_wallet(r: &mut ChaCha20Rng) -> Wallet {
    let (mut ledger, _) = new_ledger(ProofSuite::Simulation, 8, &["A", "B"]);
    let mut w = Wallet::new();
    ledger.fund("x", &asset("A"), 1000).unwrap();
    ledger.fund("x", &asset("B"), 1000).unwrap();
    let mut leaves = Vec::new();
    for _ in 0..r.gen_range(0..4) {
        let v = amounts(&[("A", r.gen_range(1..100)), ("B", r.gen_range(0..100))]);
        let t = if r.gen() { Some(r.gen()) } else { None };
        let req = w.prepare_deposit(&ledger, &v, t, r).unwrap();
        leaves.extend(ledger.deposit_many("x", &[req]).unwrap());
    }
    w.sync(&ledger);
    for _ in 0..r.gen_range(0..3) {
        w.precommit_nonce(r);
    }
    if let Some(leaf) = leaves.first() {
        if r.gen() {
            let (s, _) = w.initiate_transfer(&[*leaf], &amounts(&[("A", 1)]), r).unwrap();
            w.store_session(s);
        }
    }
    w
}

pub fn params(ledger: &Ledger) -> PublicParams {
    ledger.params()
}

/// Plain registry with the given assets.
pub fn registry(ids: &[&str]) -> AssetRegistry {
    let mut reg = AssetRegistry::new();
    for id in ids {
        reg.register(asset(id)).unwrap();
    }
    reg
}

/// Tree holding `n` random commitments plus `extra`.
pub fn tree_with(r: &mut ChaCha20Rng, n: usize, extra: &[Commitment]) -> SparseMerkleTree {
    let mut t = SparseMerkleTree::new();
    for c in extra {
        t.insert(c).unwrap();
    }
    while t.len() < n + extra.len() {
        let _ = t.insert(&Commitment(nonzero_point(r)));
    }
    t
}
