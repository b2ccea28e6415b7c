//! Witness-revealing simulation backend.
//!
//! The proof payload is `relation tag || statement digest || encoded witness`;
//! verification checks the digest, decodes the witness and re-runs the
//! relation predicate. The digest binds public inputs the relation leaves
//! unconstrained, such as a withdrawal's destination. This exercises protocol
//! and state-machine logic only. It hides nothing.

use rand_core::CryptoRngCore;

use super::{
    check_relation, BackendTag, Proof, ProofBackend, RangeWitness, RelationKind, SpendWitness, Statement,
    WithdrawWitness, Witness,
};
use crate::commitment::Commitment;
use crate::error::RelationError;
use crate::group::{hash_parts_to_scalar, Scalar};
use crate::wire::{self, Reader, Writer};

#[derive(Clone, Copy, Debug, Default)]
pub struct SimulationBackend;

enum OwnedWitness {
    Range(RangeWitness),
    Spend(SpendWitness),
    Withdraw(WithdrawWitness),
}

impl OwnedWitness {
    fn as_ref(&self) -> Witness<'_> {
        match self {
            OwnedWitness::Range(w) => Witness::Range(w),
            OwnedWitness::Spend(w) => Witness::Spend(w),
            OwnedWitness::Withdraw(w) => Witness::Withdraw(w),
        }
    }
}

const STATEMENT_TAG: &[u8] = b"atlantis/sim-statement";

fn statement_digest(stmt: Statement<'_>) -> Scalar {
    hash_parts_to_scalar(&[STATEMENT_TAG, &stmt.to_bytes()])
}

fn encode_payload(stmt: Statement<'_>, wit: Witness<'_>) -> Vec<u8> {
    let mut w = Writer::new();
    w.u8(stmt.kind() as u8);
    w.scalar(&statement_digest(stmt));
    match wit {
        Witness::Range(x) => wire::Encode::encode(x, &mut w),
        Witness::Spend(x) => wire::Encode::encode(x, &mut w),
        Witness::Withdraw(x) => wire::Encode::encode(x, &mut w),
    }
    w.into_bytes()
}

/// Splits a payload into its statement digest and witness.
fn decode_payload(kind: RelationKind, payload: &[u8]) -> Option<(Scalar, OwnedWitness)> {
    let mut r = Reader::new(payload);
    if r.u8().ok()? != kind as u8 {
        return None;
    }
    let digest = r.scalar().ok()?;
    let wit = match kind {
        RelationKind::Range => OwnedWitness::Range(r.decode().ok()?),
        RelationKind::Spend => OwnedWitness::Spend(r.decode().ok()?),
        RelationKind::Withdraw => OwnedWitness::Withdraw(r.decode().ok()?),
    };
    r.finish().ok()?;
    Some((digest, wit))
}

fn decode_witness(kind: RelationKind, payload: &[u8]) -> Option<OwnedWitness> {
    decode_payload(kind, payload).map(|(_, w)| w)
}

/// Proves by serializing the witness. Refuses when the relation does not hold.
pub fn sim_prove(stmt: Statement<'_>, wit: Witness<'_>) -> Result<Proof, RelationError> {
    if !check_relation(stmt, wit) {
        return Err(RelationError::Unsatisfied(match stmt.kind() {
            RelationKind::Range => "range",
            RelationKind::Spend => "spend",
            RelationKind::Withdraw => "withdraw",
        }));
    }
    Ok(Proof { backend: BackendTag::Simulation, payload: encode_payload(stmt, wit) })
}

pub fn sim_verify(stmt: Statement<'_>, proof: &Proof) -> bool {
    if proof.backend != BackendTag::Simulation {
        return false;
    }
    match decode_payload(stmt.kind(), &proof.payload) {
        Some((digest, wit)) => digest == statement_digest(stmt) && check_relation(stmt, wit.as_ref()),
        None => false,
    }
}

/// Recovers the witness carried by a simulation proof.
pub fn sim_extract_spend(proof: &Proof) -> Option<SpendWitness> {
    match decode_witness(RelationKind::Spend, &proof.payload)? {
        OwnedWitness::Spend(w) => Some(w),
        _ => None,
    }
}

pub fn sim_extract_withdraw(proof: &Proof) -> Option<WithdrawWitness> {
    match decode_witness(RelationKind::Withdraw, &proof.payload)? {
        OwnedWitness::Withdraw(w) => Some(w),
        _ => None,
    }
}

pub fn sim_extract_range(proof: &Proof) -> Option<RangeWitness> {
    match decode_witness(RelationKind::Range, &proof.payload)? {
        OwnedWitness::Range(w) => Some(w),
        _ => None,
    }
}

impl ProofBackend for SimulationBackend {
    fn tag(&self) -> BackendTag {
        BackendTag::Simulation
    }

    fn prove(
        &self,
        stmt: Statement<'_>,
        wit: Witness<'_>,
        _rng: &mut dyn CryptoRngCore,
    ) -> Result<Proof, RelationError> {
        sim_prove(stmt, wit)
    }

    fn verify(&self, stmt: Statement<'_>, proof: &Proof) -> bool {
        sim_verify(stmt, proof)
    }

    fn revealed_inputs(&self, kind: RelationKind, proof: &Proof) -> Option<Vec<(Commitment, u32)>> {
        if proof.backend != BackendTag::Simulation {
            return None;
        }
        match decode_witness(kind, &proof.payload)? {
            OwnedWitness::Spend(w) => {
                Some(w.input_commitments.iter().zip(&w.merkle_proofs).map(|(c, p)| (*c, p.leaf_index)).collect())
            }
            OwnedWitness::Withdraw(w) => Some(vec![(w.commitment, w.merkle_proof.leaf_index)]),
            OwnedWitness::Range(_) => Some(Vec::new()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::tests::honest_spend;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn round_trip_and_tamper() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let (stmt, wit, _) = honest_spend(&mut rng);
        let proof = sim_prove(Statement::Spend(&stmt), Witness::Spend(&wit)).unwrap();
        assert!(sim_verify(Statement::Spend(&stmt), &proof));
        assert_eq!(sim_extract_spend(&proof), Some(wit.clone()));

        let mut truncated = proof.clone();
        truncated.payload.pop();
        assert!(!sim_verify(Statement::Spend(&stmt), &truncated));

        let mut mutated = wit.clone();
        mutated.agg_sig.s += Scalar::ONE;
        let forged = Proof {
            backend: BackendTag::Simulation,
            payload: encode_payload(Statement::Spend(&stmt), Witness::Spend(&mutated)),
        };
        assert!(!sim_verify(Statement::Spend(&stmt), &forged));

        let mut other = stmt.clone();
        other.root += Scalar::ONE;
        let rebound = Proof {
            backend: BackendTag::Simulation,
            payload: encode_payload(Statement::Spend(&other), Witness::Spend(&wit)),
        };
        assert!(!sim_verify(Statement::Spend(&stmt), &rebound));

        let relabeled = Proof { backend: BackendTag::SigmaRange, ..proof.clone() };
        assert!(!sim_verify(Statement::Spend(&stmt), &relabeled));
    }

    #[test]
    fn refuses_false_relation() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let (mut stmt, wit, _) = honest_spend(&mut rng);
        stmt.nullifiers[0] += Scalar::ONE;
        assert_eq!(sim_prove(Statement::Spend(&stmt), Witness::Spend(&wit)), Err(RelationError::Unsatisfied("spend")));
    }
}
