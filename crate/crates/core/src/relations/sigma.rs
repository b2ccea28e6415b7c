//! Bit-decomposition range proof with Fiat–Shamir OR-proofs.
//!
//! For asset `i` and bit `j` the prover publishes `B_ij = b_ij·Hᵢ + r_ij·G`
//! and an OR-proof that `B_ij` opens to 0 or 1. Blinders satisfy
//! `Σ 2^j·r_ij = sk`, so the verifier can also check `Σ 2^j·B_ij == C`.

use rand_core::CryptoRngCore;

use super::{check_range_relation, BackendTag, Proof, ProofBackend, RangeStatement, RangeWitness, Statement, Witness};
use crate::commitment::Commitment;
use crate::error::{DecodeError, RelationError};
use crate::group::{hash_parts_to_scalar, Point, Scalar};
use crate::wire::{Decode, Encode, Reader, Writer};

const OR_TAG: &[u8] = b"atlantis/or";

/// One bit commitment and its OR-proof transcript.
///
/// Branch 0 shows knowledge of `r` with `B = r·G`, branch 1 with `B − H = r·G`.
/// The verifier recomputes `A_k = z_k·G − e_k·Y_k` and requires `e0 + e1`
/// to equal the Fiat–Shamir challenge over `(C, B, A0, A1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BitRecord {
    pub commitment: Point,
    pub e0: Scalar,
    pub e1: Scalar,
    pub z0: Scalar,
    pub z1: Scalar,
}

/// Records for every asset (statement order) and bit (ascending).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaRangeProof {
    pub bit_width: u8,
    pub records: Vec<Vec<BitRecord>>,
}

fn or_challenge(c: &Commitment, b: &Point, a0: &Point, a1: &Point) -> Scalar {
    hash_parts_to_scalar(&[OR_TAG, &c.to_bytes(), &b.to_bytes(), &a0.to_bytes(), &a1.to_bytes()])
}

/// Produces an OR-proof for `b_commit` claiming it opens to `bit` with blinder `r`.
///
/// No check is made that the claim is true; a false claim yields a transcript
/// that fails [`verify_bit`].
pub fn prove_bit<R: CryptoRngCore + ?Sized>(
    rng: &mut R,
    c: &Commitment,
    h: &Point,
    g: &Point,
    b_commit: Point,
    bit: bool,
    r: &Scalar,
) -> BitRecord {
    let ys = [b_commit, b_commit - *h];
    let real = bit as usize;
    let fake = 1 - real;
    let k = Scalar::random_nonzero(rng);
    let e_fake = Scalar::random(rng);
    let z_fake = Scalar::random(rng);
    let mut a = [Point::identity(); 2];
    a[real] = *g * k;
    a[fake] = *g * z_fake - ys[fake] * e_fake;
    let e = or_challenge(c, &b_commit, &a[0], &a[1]);
    let e_real = e - e_fake;
    let z_real = k + e_real * *r;
    let (mut es, mut zs) = ([Scalar::ZERO; 2], [Scalar::ZERO; 2]);
    es[real] = e_real;
    es[fake] = e_fake;
    zs[real] = z_real;
    zs[fake] = z_fake;
    BitRecord { commitment: b_commit, e0: es[0], e1: es[1], z0: zs[0], z1: zs[1] }
}

pub fn verify_bit(c: &Commitment, h: &Point, g: &Point, rec: &BitRecord) -> bool {
    let a0 = *g * rec.z0 - rec.commitment * rec.e0;
    let a1 = *g * rec.z1 - (rec.commitment - *h) * rec.e1;
    rec.e0 + rec.e1 == or_challenge(c, &rec.commitment, &a0, &a1)
}

pub fn prove_range<R: CryptoRngCore + ?Sized>(
    stmt: &RangeStatement,
    wit: &RangeWitness,
    rng: &mut R,
) -> Result<SigmaRangeProof, RelationError> {
    if !check_range_relation(stmt, wit) {
        return Err(RelationError::Unsatisfied("range"));
    }
    let bits = stmt.bit_width as u32;
    let n = stmt.generators.len();

    // Blinders: all random except (0, 0), which has weight 1 and absorbs the remainder.
    let mut blinders: Vec<Vec<Scalar>> = (0..n).map(|_| (0..bits).map(|_| Scalar::random(rng)).collect()).collect();
    let weighted: Scalar =
        blinders.iter().flat_map(|row| row.iter().enumerate().map(|(j, r)| Scalar::pow2(j as u32) * *r)).sum();
    blinders[0][0] = wit.sk - (weighted - blinders[0][0]);

    let mut records = Vec::with_capacity(n);
    for ((id, h), row) in stmt.generators.iter().zip(&blinders) {
        let amount = wit.bounded_amount(id, stmt.bit_width).expect("checked by relation");
        let asset_records = (0..bits)
            .map(|j| {
                let bit = (amount >> j) & 1 == 1;
                let r = row[j as usize];
                let b_commit = if bit { *h + stmt.g * r } else { stmt.g * r };
                prove_bit(rng, &stmt.commitment, h, &stmt.g, b_commit, bit, &r)
            })
            .collect();
        records.push(asset_records);
    }
    Ok(SigmaRangeProof { bit_width: stmt.bit_width, records })
}

pub fn verify_range(stmt: &RangeStatement, proof: &SigmaRangeProof) -> bool {
    if !stmt.is_well_formed() || proof.bit_width != stmt.bit_width || proof.records.len() != stmt.generators.len() {
        return false;
    }
    let mut total = Point::identity();
    for ((_, h), row) in stmt.generators.iter().zip(&proof.records) {
        if row.len() != stmt.bit_width as usize {
            return false;
        }
        // Horner: Σ 2^j·B_j from the top bit down
        let mut acc = Point::identity();
        for rec in row.iter().rev() {
            if !verify_bit(&stmt.commitment, h, &stmt.g, rec) {
                return false;
            }
            acc = acc + acc + rec.commitment;
        }
        total += acc;
    }
    total == stmt.commitment.point()
}

impl Encode for BitRecord {
    fn encode(&self, w: &mut Writer) {
        w.point(&self.commitment);
        w.scalar(&self.e0);
        w.scalar(&self.e1);
        w.scalar(&self.z0);
        w.scalar(&self.z1);
    }
}

impl Decode for BitRecord {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(BitRecord { commitment: r.point()?, e0: r.scalar()?, e1: r.scalar()?, z0: r.scalar()?, z1: r.scalar()? })
    }
}

const RECORD_LEN: usize = 32 * 5;

impl Encode for SigmaRangeProof {
    /// `u8 bit_width || u32 asset_count || records`, assets then bits ascending.
    fn encode(&self, w: &mut Writer) {
        w.u8(self.bit_width);
        w.u32(self.records.len() as u32);
        for row in &self.records {
            for rec in row {
                rec.encode(w);
            }
        }
    }
}

impl Decode for SigmaRangeProof {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let start = r.position();
        let bit_width = r.u8()?;
        if !(1..=128).contains(&bit_width) {
            return Err(DecodeError::InvalidValue { offset: start, what: "bit width" });
        }
        let n = r.u32()? as usize;
        if n.saturating_mul(bit_width as usize).saturating_mul(RECORD_LEN) > r.remaining() {
            return Err(DecodeError::Truncated { offset: r.position() });
        }
        let records = (0..n)
            .map(|_| (0..bit_width).map(|_| BitRecord::decode(r)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SigmaRangeProof { bit_width, records })
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SigmaRangeBackend;

impl SigmaRangeBackend {
    pub fn prove_proof<R: CryptoRngCore + ?Sized>(
        stmt: &RangeStatement,
        wit: &RangeWitness,
        rng: &mut R,
    ) -> Result<Proof, RelationError> {
        let proof = prove_range(stmt, wit, rng)?;
        Ok(Proof { backend: BackendTag::SigmaRange, payload: crate::wire::to_bytes(&proof) })
    }

    pub fn decode_payload(proof: &Proof) -> Option<SigmaRangeProof> {
        if proof.backend != BackendTag::SigmaRange {
            return None;
        }
        crate::wire::from_bytes(&proof.payload).ok()
    }
}

impl ProofBackend for SigmaRangeBackend {
    fn tag(&self) -> BackendTag {
        BackendTag::SigmaRange
    }

    fn prove(
        &self,
        stmt: Statement<'_>,
        wit: Witness<'_>,
        rng: &mut dyn CryptoRngCore,
    ) -> Result<Proof, RelationError> {
        match (stmt, wit) {
            (Statement::Range(s), Witness::Range(w)) => Self::prove_proof(s, w, rng),
            _ => Err(RelationError::Unsupported(BackendTag::SigmaRange.name())),
        }
    }

    fn verify(&self, stmt: Statement<'_>, proof: &Proof) -> bool {
        match stmt {
            Statement::Range(s) => Self::decode_payload(proof).is_some_and(|p| verify_range(s, &p)),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commitment::{commit, AmountVector, AssetId, AssetRegistry};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn a(s: &str) -> AssetId {
        AssetId::new(s).unwrap()
    }

    fn setup(bits: u8, amounts: &[(&str, u128)]) -> (RangeStatement, RangeWitness) {
        let mut reg = AssetRegistry::new();
        reg.register(a("A")).unwrap();
        reg.register(a("B")).unwrap();
        let v: AmountVector = amounts.iter().map(|(k, n)| (a(k), *n)).collect();
        let sk = Scalar::from_u64(0xdead_beef);
        let c = commit(&v, &sk, &reg).unwrap();
        (RangeStatement::new(c, &reg, bits), RangeWitness::new(&v, sk))
    }

    #[test]
    fn honest_proofs_verify() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for amounts in [&[("A", 0)][..], &[("A", 5), ("B", 9)][..]] {
            let (stmt, wit) = setup(4, amounts);
            let proof = prove_range(&stmt, &wit, &mut rng).unwrap();
            assert!(verify_range(&stmt, &proof));
        }
    }

    #[test]
    fn prover_refuses_out_of_range() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (stmt, wit) = setup(4, &[("A", 16)]);
        assert_eq!(prove_range(&stmt, &wit, &mut rng), Err(RelationError::Unsatisfied("range")));
    }

    #[test]
    fn bit_forged_to_two_is_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (stmt, wit) = setup(4, &[("A", 5), ("B", 9)]);
        let h = stmt.generators[0].1;
        let mut proof = prove_range(&stmt, &wit, &mut rng).unwrap();
        proof.records[0][1].commitment += h;
        assert!(!verify_range(&stmt, &proof));
    }

    #[test]
    fn swapping_bit_positions_is_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let (stmt, wit) = setup(4, &[("A", 5), ("B", 9)]);
        let mut proof = prove_range(&stmt, &wit, &mut rng).unwrap();
        proof.records[1].swap(0, 3);
        assert!(!verify_range(&stmt, &proof));
    }

    #[test]
    fn wrong_shape_is_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let (stmt, wit) = setup(4, &[("A", 5)]);
        let proof = prove_range(&stmt, &wit, &mut rng).unwrap();
        let mut short = proof.clone();
        short.records[0].pop();
        assert!(!verify_range(&stmt, &short));
        let wide = RangeStatement { bit_width: 5, ..stmt.clone() };
        assert!(!verify_range(&wide, &proof));
    }

    #[test]
    fn payload_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let (stmt, wit) = setup(8, &[("B", 200)]);
        let proof = SigmaRangeBackend::prove_proof(&stmt, &wit, &mut rng).unwrap();
        let decoded = SigmaRangeBackend::decode_payload(&proof).unwrap();
        assert!(verify_range(&stmt, &decoded));
        assert!(SigmaRangeBackend.verify(Statement::Range(&stmt), &proof));
    }
}
