//! Client-side coin management and the interactive transfer session.
//!
//! A single-recipient transfer takes three messages: the sender's
//! [`TransferInit`], the recipient's [`TransferResponse`], and the
//! [`TransferPayload`] the sender submits. With several recipients, all of
//! them must sign under one aggregate challenge, so each recipient first
//! publishes a nonce commitment ([`Wallet::precommit_nonce`]). Every `TransferInit`
//! then lists the other recipients' nonces, and each recipient derives the
//! same aggregate nonce.
//!
//! The wallet file stores secret keys in plaintext.

use std::collections::BTreeMap;

use rand_core::CryptoRngCore;
use sha2::{Digest as _, Sha256};

use crate::commitment::{commit, AmountVector, Commitment, MAX_OUTPUTS};
use crate::error::{DecodeError, WalletError};
use crate::group::{Point, Scalar};
use crate::ledger::{DepositRequest, Ledger, PublicParams, TransferPayload, WithdrawPayload};
use crate::relations::{
    nullifier, Proof, RangeStatement, RangeWitness, SpendStatement, SpendWitness, Statement, WithdrawStatement,
    WithdrawWitness, Witness,
};
use crate::schnorr::{aggregate, compute_agg_challenge, NonceCommitment, PartialSignature, SecretNonce, Sign};
use crate::smt::{leaf_index, DEFAULT_DEPTH};
use crate::wire::{self, Decode, Encode, Message, Reader, Writer};

/// The message the sender submits to the ledger.
pub type TransferFinal = TransferPayload;

/// Nullifier of a coin key. Zero keys have no coin.
pub fn nullifier_for(sk: &Scalar) -> Result<Scalar, WalletError> {
    if sk.is_zero() {
        return Err(WalletError::Schnorr(crate::error::SchnorrError::InvalidKey));
    }
    Ok(nullifier(sk))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoinRecord {
    pub sk: Scalar,
    pub amounts: AmountVector,
    pub commitment: Commitment,
    pub leaf_index: u32,
    /// Set once the ledger has accepted an operation revealing this coin's nullifier.
    pub spent: bool,
    /// Set once the commitment is in the ledger's tree.
    pub confirmed: bool,
    pub timelock: Option<u64>,
}

impl CoinRecord {
    fn new(sk: Scalar, amounts: AmountVector, commitment: Commitment, timelock: Option<u64>) -> Self {
        CoinRecord {
            sk,
            amounts,
            commitment,
            leaf_index: leaf_index(&commitment, DEFAULT_DEPTH),
            spent: false,
            confirmed: false,
            timelock,
        }
    }

    pub fn nullifier(&self) -> Scalar {
        nullifier(&self.sk)
    }

    pub fn is_spendable(&self) -> bool {
        self.confirmed && !self.spent
    }
}

/// Sender to recipient (M1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransferInit {
    /// Sorted, distinct, non-empty.
    pub nullifiers: Vec<Scalar>,
    /// What this recipient receives.
    pub transfer_amounts: AmountVector,
    /// Input nonces minus the change nonce.
    pub sender_nonce_sum: Point,
    /// Precommitted nonces of the other recipients, sorted by encoding.
    pub cosigner_nonces: Vec<Point>,
}

impl TransferInit {
    fn message(&self) -> Result<Vec<u8>, WalletError> {
        wire::encode_nullifier_list(&self.nullifiers).map_err(|_| WalletError::Protocol("nullifier list"))
    }
}

/// Recipient to sender (M2).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransferResponse {
    pub output_commitment: Commitment,
    pub recipient_nonce: Point,
    pub partial: PartialSignature,
    pub range_proof: Proof,
}

#[derive(Debug, PartialEq, Eq)]
struct SessionInput {
    sk: Scalar,
    commitment: Commitment,
    amounts: AmountVector,
    nonce: Option<SecretNonce>,
}

/// Sender-side state between [`TransferInit`] and finalization. Single use.
#[derive(Debug, PartialEq, Eq)]
pub struct TransferSession {
    /// Ordered by nullifier.
    inputs: Vec<SessionInput>,
    change_nonce: Option<SecretNonce>,
    change_amounts: AmountVector,
    recipients: Vec<AmountVector>,
    /// Precommitted nonce per recipient; absent in the single-recipient flow.
    expected_nonces: Vec<Option<Point>>,
    consumed: bool,
}

impl TransferSession {
    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    pub fn nullifiers(&self) -> Vec<Scalar> {
        self.inputs.iter().map(|i| nullifier(&i.sk)).collect()
    }

    pub fn change_amounts(&self) -> &AmountVector {
        &self.change_amounts
    }

    pub fn recipient_amounts(&self) -> &[AmountVector] {
        &self.recipients
    }

    pub fn input_amounts(&self) -> AmountVector {
        self.inputs
            .iter()
            .fold(AmountVector::new(), |acc, i| acc.checked_add(&i.amounts).expect("checked at initiation"))
    }

    /// Discards the session. Nothing reached the ledger.
    pub fn abort(self) {}

    /// Inputs open to their recorded amounts, which equal recipients plus change.
    fn check_consistent(&self, params: &PublicParams) -> Result<(), WalletError> {
        let mut total_in = AmountVector::new();
        for i in &self.inputs {
            if commit(&i.amounts, &i.sk, &params.registry)? != i.commitment {
                return Err(WalletError::Protocol("session input does not open to its amounts"));
            }
            total_in = total_in.checked_add(&i.amounts).ok_or(WalletError::Protocol("coin sum overflow"))?;
        }
        let total_out = self
            .recipients
            .iter()
            .try_fold(self.change_amounts.clone(), |acc, a| acc.checked_add(a))
            .ok_or(WalletError::Protocol("transfer sum overflow"))?;
        if total_in != total_out {
            return Err(WalletError::Protocol("session amounts do not balance"));
        }
        Ok(())
    }
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct Wallet {
    coins: BTreeMap<u32, CoinRecord>,
    /// Secret halves of published nonce commitments, awaiting a multi-recipient TransferInit.
    precommitted: Vec<SecretNonce>,
    sessions: BTreeMap<u32, TransferSession>,
    next_session: u32,
}

impl Wallet {
    pub fn new() -> Self {
        Wallet::default()
    }

    pub fn coins(&self) -> impl Iterator<Item = &CoinRecord> {
        self.coins.values()
    }

    pub fn coin(&self, leaf: u32) -> Option<&CoinRecord> {
        self.coins.get(&leaf)
    }

    /// Sum over spendable coins.
    pub fn balance(&self) -> AmountVector {
        self.coins
            .values()
            .filter(|c| c.is_spendable())
            .fold(AmountVector::new(), |acc, c| acc.checked_add(&c.amounts).unwrap_or(acc))
    }

    fn add_coin(&mut self, coin: CoinRecord) -> Result<(), WalletError> {
        if self.coins.contains_key(&coin.leaf_index) {
            return Err(WalletError::Protocol("leaf index already held by this wallet"));
        }
        self.coins.insert(coin.leaf_index, coin);
        Ok(())
    }

    /// Fresh key whose leaf is free both here and in `ledger`.
    fn fresh_key<R: CryptoRngCore>(
        &self,
        amounts: &AmountVector,
        params: &PublicParams,
        ledger: Option<&Ledger>,
        rng: &mut R,
    ) -> Result<(Scalar, Commitment), WalletError> {
        loop {
            let sk = Scalar::random_nonzero(rng);
            let c = commit(amounts, &sk, &params.registry)?;
            let idx = leaf_index(&c, DEFAULT_DEPTH);
            if !self.coins.contains_key(&idx) && !ledger.is_some_and(|l| l.tree().is_occupied(idx)) {
                return Ok((sk, c));
            }
        }
    }

    /// New unconfirmed coin to be deposited through [`Ledger::deposit_many`].
    pub fn prepare_deposit<R: CryptoRngCore>(
        &mut self,
        ledger: &Ledger,
        amounts: &AmountVector,
        timelock: Option<u64>,
        rng: &mut R,
    ) -> Result<DepositRequest, WalletError> {
        let (sk, c) = self.fresh_key(amounts, &ledger.params(), Some(ledger), rng)?;
        self.add_coin(CoinRecord::new(sk, amounts.clone(), c, timelock))?;
        Ok(DepositRequest { amounts: amounts.clone(), public_key: Point::mul_base(&sk), timelock })
    }

    /// Reconciles coin flags with the ledger.
    pub fn sync(&mut self, ledger: &Ledger) {
        for coin in self.coins.values_mut() {
            coin.confirmed = ledger.tree().leaf_at(coin.leaf_index) == Some(&coin.commitment);
            coin.spent = ledger.is_spent(&coin.nullifier());
        }
    }

    /// Drops coins the ledger never accepted.
    pub fn discard_unconfirmed(&mut self) {
        self.coins.retain(|_, c| c.confirmed);
    }

    /// Greedy selection of spendable coins covering `target`, by leaf order.
    pub fn select_coins(&self, target: &AmountVector) -> Result<Vec<u32>, WalletError> {
        let mut picked = Vec::new();
        let mut have = AmountVector::new();
        for coin in self.coins.values().filter(|c| c.is_spendable()) {
            if have.shortfall(target).is_none() && !picked.is_empty() {
                break;
            }
            let useful = coin.amounts.iter().any(|(id, a)| a > 0 && have.get(id) < target.get(id));
            if useful || (target.is_zero() && picked.is_empty()) {
                have = have.checked_add(&coin.amounts).ok_or(WalletError::Protocol("coin sum overflow"))?;
                picked.push(coin.leaf_index);
            }
        }
        if let Some(id) = have.shortfall(target) {
            return Err(WalletError::InsufficientFunds(id.to_string()));
        }
        if picked.is_empty() {
            return Err(WalletError::NoCoins);
        }
        Ok(picked)
    }

    /// Publishes a nonce commitment for a later multi-recipient [`TransferInit`].
    pub fn precommit_nonce<R: CryptoRngCore>(&mut self, rng: &mut R) -> NonceCommitment {
        let nonce = SecretNonce::generate(rng);
        let commitment = nonce.commitment();
        self.precommitted.push(nonce);
        commitment
    }

    pub fn initiate_transfer<R: CryptoRngCore>(
        &mut self,
        coins: &[u32],
        amounts: &AmountVector,
        rng: &mut R,
    ) -> Result<(TransferSession, TransferInit), WalletError> {
        let (session, mut inits) = self.initiate(coins, &[(amounts.clone(), None)], rng)?;
        Ok((session, inits.remove(0)))
    }

    /// One [`TransferInit`] per recipient, each built against every recipient's precommitted nonce.
    pub fn initiate_multi_transfer<R: CryptoRngCore>(
        &mut self,
        coins: &[u32],
        recipients: &[(AmountVector, NonceCommitment)],
        rng: &mut R,
    ) -> Result<(TransferSession, Vec<TransferInit>), WalletError> {
        let mut seen = Vec::new();
        for (_, n) in recipients {
            if n.0.is_identity() || seen.contains(&n.0.to_bytes()) {
                return Err(WalletError::Protocol("recipient nonces must be distinct and non-identity"));
            }
            seen.push(n.0.to_bytes());
        }
        let list: Vec<_> = recipients.iter().map(|(a, n)| (a.clone(), Some(n.0))).collect();
        self.initiate(coins, &list, rng)
    }

    fn initiate<R: CryptoRngCore>(
        &mut self,
        coins: &[u32],
        recipients: &[(AmountVector, Option<Point>)],
        rng: &mut R,
    ) -> Result<(TransferSession, Vec<TransferInit>), WalletError> {
        if coins.is_empty() {
            return Err(WalletError::NoCoins);
        }
        if recipients.is_empty() || recipients.len() >= MAX_OUTPUTS {
            return Err(WalletError::Protocol("recipient count"));
        }
        if recipients.iter().any(|(a, _)| a.is_zero()) {
            return Err(WalletError::Protocol("empty transfer amount"));
        }
        let mut inputs = Vec::with_capacity(coins.len());
        let mut total_in = AmountVector::new();
        for leaf in coins {
            let coin = self.coins.get(leaf).ok_or(WalletError::UnknownCoin(*leaf))?;
            if coin.spent {
                return Err(WalletError::SpentCoin(*leaf));
            }
            if !coin.confirmed {
                return Err(WalletError::UnknownCoin(*leaf));
            }
            total_in = total_in.checked_add(&coin.amounts).ok_or(WalletError::Protocol("coin sum overflow"))?;
            inputs.push((coin.nullifier(), coin.sk, coin.commitment, coin.amounts.clone()));
        }
        inputs.sort_by_key(|a| a.0);
        if inputs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(WalletError::Protocol("coin selected twice"));
        }
        let mut total_out = AmountVector::new();
        for (a, _) in recipients {
            total_out = total_out.checked_add(a).ok_or(WalletError::Protocol("transfer sum overflow"))?;
        }
        if let Some(id) = total_in.shortfall(&total_out) {
            return Err(WalletError::InsufficientFunds(id.to_string()));
        }
        let change_amounts = total_in.checked_sub(&total_out).expect("no shortfall");

        let inputs: Vec<SessionInput> = inputs
            .into_iter()
            .map(|(_, sk, commitment, amounts)| SessionInput {
                sk,
                commitment,
                amounts,
                nonce: Some(SecretNonce::generate(rng)),
            })
            .collect();
        let change_nonce = SecretNonce::generate(rng);
        let sender_nonce_sum = inputs.iter().map(|i| i.nonce.as_ref().expect("fresh").commitment().0).sum::<Point>()
            - change_nonce.commitment().0;
        let nullifiers: Vec<Scalar> = inputs.iter().map(|i| nullifier(&i.sk)).collect();

        let inits = recipients
            .iter()
            .enumerate()
            .map(|(j, (amounts, _))| {
                let mut cosigner_nonces: Vec<Point> =
                    recipients.iter().enumerate().filter(|(i, _)| *i != j).filter_map(|(_, (_, n))| *n).collect();
                cosigner_nonces.sort_by_key(|p| p.to_bytes());
                TransferInit {
                    nullifiers: nullifiers.clone(),
                    transfer_amounts: amounts.clone(),
                    sender_nonce_sum,
                    cosigner_nonces,
                }
            })
            .collect();
        let session = TransferSession {
            inputs,
            change_nonce: Some(change_nonce),
            change_amounts,
            recipients: recipients.iter().map(|(a, _)| a.clone()).collect(),
            expected_nonces: recipients.iter().map(|(_, n)| *n).collect(),
            consumed: false,
        };
        Ok((session, inits))
    }

    /// Recipient side. `precommit` names the nonce published for a multi-recipient session.
    pub fn respond_transfer<R: CryptoRngCore>(
        &mut self,
        params: &PublicParams,
        m1: &TransferInit,
        precommit: Option<&NonceCommitment>,
        rng: &mut R,
    ) -> Result<TransferResponse, WalletError> {
        let message = m1.message()?;
        if m1.transfer_amounts.is_zero() {
            return Err(WalletError::Protocol("empty transfer amount"));
        }
        if !m1.cosigner_nonces.windows(2).all(|w| w[0].to_bytes() < w[1].to_bytes()) {
            return Err(WalletError::Protocol("cosigner nonce order"));
        }
        let nonce = match precommit {
            Some(pc) => {
                if m1.cosigner_nonces.contains(&pc.0) {
                    return Err(WalletError::Protocol("own nonce listed as cosigner"));
                }
                let pos = self
                    .precommitted
                    .iter()
                    .position(|n| n.commitment() == *pc)
                    .ok_or(WalletError::Protocol("unknown precommitted nonce"))?;
                self.precommitted.remove(pos)
            }
            None if !m1.cosigner_nonces.is_empty() => {
                return Err(WalletError::Protocol("multi-recipient transfer needs a precommitted nonce"));
            }
            None => SecretNonce::generate(rng),
        };
        let (sk_r, c_r) = self.fresh_key(&m1.transfer_amounts, params, None, rng)?;
        let r_r = nonce.commitment().0;
        let r_agg = m1.sender_nonce_sum - m1.cosigner_nonces.iter().copied().sum::<Point>() - r_r;
        let e = compute_agg_challenge(&r_agg, &message)?;
        let partial = nonce.sign(&sk_r, &e, Sign::Minus)?;
        let range_proof = prove_range(params, c_r, &m1.transfer_amounts, sk_r, rng)?;
        self.add_coin(CoinRecord::new(sk_r, m1.transfer_amounts.clone(), c_r, None))?;
        Ok(TransferResponse { output_commitment: c_r, recipient_nonce: r_r, partial, range_proof })
    }

    /// Sender side: builds the spend proof once every recipient has answered.
    pub fn finalize_transfer<R: CryptoRngCore>(
        &mut self,
        session: &mut TransferSession,
        responses: &[TransferResponse],
        ledger: &Ledger,
        rng: &mut R,
    ) -> Result<TransferFinal, WalletError> {
        if session.consumed {
            return Err(WalletError::SessionConsumed);
        }
        if responses.len() != session.recipients.len() {
            return Err(WalletError::Protocol("one response per recipient required"));
        }
        let params = ledger.params();
        session.check_consistent(&params)?;
        for (resp, expected) in responses.iter().zip(&session.expected_nonces) {
            if resp.partial.r != resp.recipient_nonce || resp.partial.sign != Sign::Minus {
                return Err(WalletError::Protocol("recipient partial does not match its nonce"));
            }
            if expected.is_some_and(|n| n != resp.recipient_nonce) {
                return Err(WalletError::ChallengeMismatch);
            }
            let stmt = params.range_statement(resp.output_commitment);
            if !params.suite.range_backend().verify(Statement::Range(&stmt), &resp.range_proof) {
                return Err(WalletError::Protocol("recipient range proof"));
            }
        }
        let mut merkle_proofs = Vec::with_capacity(session.inputs.len());
        for input in &session.inputs {
            merkle_proofs.push(ledger.tree().prove_membership(&input.commitment)?);
        }

        let (sk_c, c_c) = self.fresh_key(&session.change_amounts, &params, Some(ledger), rng)?;
        let change_proof = prove_range(&params, c_c, &session.change_amounts, sk_c, rng)?;

        let nullifiers = session.nullifiers();
        let message = wire::encode_nullifier_list(&nullifiers).map_err(|_| WalletError::Protocol("nullifier list"))?;
        let change_nonce = session.change_nonce.take().ok_or(WalletError::SessionConsumed)?;
        let r_agg = session.inputs.iter().map(|i| i.nonce.as_ref().expect("unused").commitment().0).sum::<Point>()
            - responses.iter().map(|r| r.recipient_nonce).sum::<Point>()
            - change_nonce.commitment().0;
        session.consumed = true;
        let e = compute_agg_challenge(&r_agg, &message)?;

        let mut partials: Vec<PartialSignature> = Vec::with_capacity(session.inputs.len() + responses.len() + 1);
        for input in &mut session.inputs {
            let nonce = input.nonce.take().expect("unused");
            partials.push(nonce.sign(&input.sk, &e, Sign::Plus)?);
        }
        partials.push(change_nonce.sign(&sk_c, &e, Sign::Minus)?);
        partials.extend(responses.iter().map(|r| r.partial));
        let agg_sig = aggregate(&partials)?;

        let mut outputs: Vec<(Commitment, Proof)> =
            responses.iter().map(|r| (r.output_commitment, r.range_proof.clone())).collect();
        outputs.push((c_c, change_proof));
        let stmt =
            SpendStatement { nullifiers, outputs: outputs.iter().map(|(c, _)| *c).collect(), root: ledger.root() };
        let wit = SpendWitness {
            input_keys: session.inputs.iter().map(|i| i.sk).collect(),
            input_commitments: session.inputs.iter().map(|i| i.commitment).collect(),
            merkle_proofs,
            agg_sig,
        };
        let spend_proof = params.suite.relation_backend().prove(Statement::Spend(&stmt), Witness::Spend(&wit), rng)?;
        self.add_coin(CoinRecord::new(sk_c, session.change_amounts.clone(), c_c, None))?;
        Ok(TransferPayload { spend_statement: stmt, spend_proof, outputs })
    }

    pub fn build_withdrawal<R: CryptoRngCore>(
        &self,
        leaf: u32,
        destination: &str,
        ledger: &Ledger,
        rng: &mut R,
    ) -> Result<WithdrawPayload, WalletError> {
        let coin = self.coins.get(&leaf).ok_or(WalletError::UnknownCoin(leaf))?;
        if coin.spent {
            return Err(WalletError::SpentCoin(leaf));
        }
        let stmt = WithdrawStatement {
            amounts: coin.amounts.clone(),
            nullifier: nullifier_for(&coin.sk)?,
            root: ledger.root(),
            destination: destination.to_string(),
        };
        let wit = WithdrawWitness {
            sk: coin.sk,
            commitment: coin.commitment,
            merkle_proof: ledger.tree().prove_membership(&coin.commitment)?,
        };
        let proof = ledger.params().suite.relation_backend().prove(
            Statement::Withdraw(&stmt, ledger.registry()),
            Witness::Withdraw(&wit),
            rng,
        )?;
        Ok(WithdrawPayload { statement: stmt, proof })
    }

    /// Parks a session in the wallet, returning its id.
    pub fn store_session(&mut self, session: TransferSession) -> u32 {
        let id = self.next_session;
        self.next_session += 1;
        self.sessions.insert(id, session);
        id
    }

    pub fn take_session(&mut self, id: u32) -> Option<TransferSession> {
        self.sessions.remove(&id)
    }

    /// Puts back a session taken with [`Wallet::take_session`] if it is still usable.
    pub fn restore_session(&mut self, id: u32, session: TransferSession) {
        if !session.consumed {
            self.sessions.insert(id, session);
        }
    }

    pub fn session_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.sessions.keys().copied()
    }

    /// Wallet file: the tagged message followed by `sha256` of it.
    pub fn to_file_bytes(&self) -> Vec<u8> {
        let mut out = wire::encode_message(self);
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_file_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        if bytes.len() < 32 {
            return Err(DecodeError::Truncated { offset: bytes.len() });
        }
        let (msg, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(msg).as_slice() != digest {
            return Err(DecodeError::ChecksumMismatch);
        }
        wire::decode_message(msg)
    }
}

fn prove_range<R: CryptoRngCore>(
    params: &PublicParams,
    c: Commitment,
    amounts: &AmountVector,
    sk: Scalar,
    rng: &mut R,
) -> Result<Proof, WalletError> {
    let stmt = RangeStatement::new(c, &params.registry, params.range_bits);
    let wit = RangeWitness::new(amounts, sk);
    Ok(params.suite.range_backend().prove(Statement::Range(&stmt), Witness::Range(&wit), rng)?)
}

impl Encode for TransferInit {
    fn encode(&self, w: &mut Writer) {
        w.list(&self.nullifiers);
        self.transfer_amounts.encode(w);
        w.point(&self.sender_nonce_sum);
        w.list(&self.cosigner_nonces);
    }
}

impl Decode for TransferInit {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let nullifiers = wire::decode_sorted_scalars(r, false)?;
        let transfer_amounts = r.decode()?;
        let sender_nonce_sum = r.point()?;
        let at = r.position();
        let cosigner_nonces: Vec<Point> = r.list(32)?;
        if !cosigner_nonces.windows(2).all(|w| w[0].to_bytes() < w[1].to_bytes()) {
            return Err(r.invalid(at, "cosigner nonce order"));
        }
        Ok(TransferInit { nullifiers, transfer_amounts, sender_nonce_sum, cosigner_nonces })
    }
}

impl Message for TransferInit {
    const TAG: u8 = 0x10;
    const NAME: &'static str = "TRANSFER-INIT";
}

impl Encode for TransferResponse {
    fn encode(&self, w: &mut Writer) {
        self.output_commitment.encode(w);
        w.point(&self.recipient_nonce);
        self.partial.encode(w);
        self.range_proof.encode(w);
    }
}

impl Decode for TransferResponse {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(TransferResponse {
            output_commitment: r.decode()?,
            recipient_nonce: r.point()?,
            partial: r.decode()?,
            range_proof: r.decode()?,
        })
    }
}

impl Message for TransferResponse {
    const TAG: u8 = 0x11;
    const NAME: &'static str = "TRANSFER-RESPONSE";
}

fn encode_nonce(w: &mut Writer, n: &Option<SecretNonce>) {
    match n {
        None => w.u8(0),
        Some(n) => {
            w.u8(1);
            w.scalar(n.scalar());
        }
    }
}

fn decode_nonce(r: &mut Reader<'_>) -> Result<Option<SecretNonce>, DecodeError> {
    let at = r.position();
    match r.u8()? {
        0 => Ok(None),
        1 => {
            let at = r.position();
            let k = r.scalar()?;
            if k.is_zero() {
                return Err(r.invalid(at, "zero nonce"));
            }
            Ok(Some(SecretNonce::from_scalar(k)))
        }
        tag => Err(DecodeError::BadTag { offset: at, tag }),
    }
}

impl Encode for TransferSession {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.inputs.len() as u32);
        for i in &self.inputs {
            w.scalar(&i.sk);
            i.commitment.encode(w);
            i.amounts.encode(w);
            encode_nonce(w, &i.nonce);
        }
        encode_nonce(w, &self.change_nonce);
        self.change_amounts.encode(w);
        w.u32(self.recipients.len() as u32);
        for (a, n) in self.recipients.iter().zip(&self.expected_nonces) {
            a.encode(w);
            match n {
                None => w.u8(0),
                Some(p) => {
                    w.u8(1);
                    w.point(p);
                }
            }
        }
        w.u8(self.consumed as u8);
    }
}

impl Decode for TransferSession {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let n = r.count(32 + 32 + 4 + 1)?;
        let mut inputs = Vec::with_capacity(n);
        for _ in 0..n {
            let at = r.position();
            let sk = r.scalar()?;
            if sk.is_zero() {
                return Err(r.invalid(at, "zero key"));
            }
            inputs.push(SessionInput { sk, commitment: r.decode()?, amounts: r.decode()?, nonce: decode_nonce(r)? });
        }
        let change_nonce = decode_nonce(r)?;
        let change_amounts = r.decode()?;
        let m = r.count(4 + 1)?;
        let mut recipients = Vec::with_capacity(m);
        let mut expected_nonces = Vec::with_capacity(m);
        for _ in 0..m {
            recipients.push(r.decode()?);
            let at = r.position();
            expected_nonces.push(match r.u8()? {
                0 => None,
                1 => Some(r.point()?),
                tag => return Err(DecodeError::BadTag { offset: at, tag }),
            });
        }
        let at = r.position();
        let consumed = match r.u8()? {
            0 => false,
            1 => true,
            _ => return Err(r.invalid(at, "consumed flag")),
        };
        Ok(TransferSession { inputs, change_nonce, change_amounts, recipients, expected_nonces, consumed })
    }
}

impl Message for TransferSession {
    const TAG: u8 = 0x21;
    const NAME: &'static str = "TRANSFER-SESSION";
}

impl Encode for CoinRecord {
    fn encode(&self, w: &mut Writer) {
        w.scalar(&self.sk);
        self.amounts.encode(w);
        self.commitment.encode(w);
        w.u32(self.leaf_index);
        w.u8(self.spent as u8 | (self.confirmed as u8) << 1);
        w.option_u64(self.timelock);
    }
}

impl Decode for CoinRecord {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let at = r.position();
        let sk = r.scalar()?;
        if sk.is_zero() {
            return Err(r.invalid(at, "zero key"));
        }
        let amounts = r.decode()?;
        let commitment: Commitment = r.decode()?;
        let at = r.position();
        let leaf = r.u32()?;
        if leaf != leaf_index(&commitment, DEFAULT_DEPTH) {
            return Err(r.invalid(at, "leaf index"));
        }
        let at = r.position();
        let flags = r.u8()?;
        if flags > 3 {
            return Err(r.invalid(at, "coin flags"));
        }
        Ok(CoinRecord {
            sk,
            amounts,
            commitment,
            leaf_index: leaf,
            spent: flags & 1 != 0,
            confirmed: flags & 2 != 0,
            timelock: r.option_u64()?,
        })
    }
}

impl Encode for Wallet {
    fn encode(&self, w: &mut Writer) {
        w.u32(self.coins.len() as u32);
        for coin in self.coins.values() {
            coin.encode(w);
        }
        w.u32(self.precommitted.len() as u32);
        for n in &self.precommitted {
            w.scalar(n.scalar());
        }
        w.u32(self.sessions.len() as u32);
        for (id, s) in &self.sessions {
            w.u32(*id);
            s.encode(w);
        }
        w.u32(self.next_session);
    }
}

impl Decode for Wallet {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let mut wallet = Wallet::new();
        let n = r.count(32 + 4 + 32 + 4 + 1 + 1)?;
        let mut prev = None;
        for _ in 0..n {
            let at = r.position();
            let coin = CoinRecord::decode(r)?;
            if prev.is_some_and(|p| p >= coin.leaf_index) {
                return Err(r.invalid(at, "coin order"));
            }
            prev = Some(coin.leaf_index);
            wallet.coins.insert(coin.leaf_index, coin);
        }
        let n = r.count(32)?;
        for _ in 0..n {
            let at = r.position();
            let k = r.scalar()?;
            if k.is_zero() {
                return Err(r.invalid(at, "zero nonce"));
            }
            wallet.precommitted.push(SecretNonce::from_scalar(k));
        }
        let n = r.count(4 + 4 + 1 + 4 + 4 + 1)?;
        let mut prev = None;
        for _ in 0..n {
            let at = r.position();
            let id = r.u32()?;
            if prev.is_some_and(|p| p >= id) {
                return Err(r.invalid(at, "session order"));
            }
            prev = Some(id);
            wallet.sessions.insert(id, TransferSession::decode(r)?);
        }
        let at = r.position();
        wallet.next_session = r.u32()?;
        if prev.is_some_and(|p| p >= wallet.next_session) {
            return Err(r.invalid(at, "next session id"));
        }
        Ok(wallet)
    }
}

impl Message for Wallet {
    const TAG: u8 = 0x20;
    const NAME: &'static str = "WALLET";
}
