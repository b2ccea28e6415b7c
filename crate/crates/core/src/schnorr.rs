//! Schnorr signatures and two-phase aggregate signing.
//!
//! Parties first publish nonce commitments `Rᵢ = kᵢ·G`; the signed sum
//! `R_agg = Σ signᵢ·Rᵢ` fixes a common challenge `e`, after which each party
//! answers with `sᵢ = kᵢ + e·skᵢ`. Summing the responses with the same signs
//! yields a plain Schnorr signature under `X = Σ signᵢ·skᵢ·G`.

use rand_core::CryptoRngCore;

use crate::error::SchnorrError;
use crate::group::{hash_parts_to_scalar, Point, Scalar};

const SIG_TAG: &[u8] = b"atlantis/sig";
const AGG_TAG: &[u8] = b"atlantis/agg";

/// Encoded signature width: `enc(R) || enc(s)`.
pub const SIGNATURE_LEN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Signature {
    pub r: Point,
    pub s: Scalar,
}

impl Signature {
    pub fn to_bytes(&self) -> [u8; SIGNATURE_LEN] {
        let mut out = [0u8; SIGNATURE_LEN];
        out[..32].copy_from_slice(&self.r.to_bytes());
        out[32..].copy_from_slice(&self.s.to_be_bytes());
        out
    }
}

/// Which side of the transaction a partial signature belongs to.
/// Inputs sign with `+1`, outputs with `−1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn apply_point(self, p: Point) -> Point {
        match self {
            Sign::Plus => p,
            Sign::Minus => -p,
        }
    }

    pub fn apply_scalar(self, s: Scalar) -> Scalar {
        match self {
            Sign::Plus => s,
            Sign::Minus => -s,
        }
    }
}

/// Public half of a signing nonce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NonceCommitment(pub Point);

/// Secret signing nonce. Not `Clone`: signing consumes it.
#[derive(Debug, PartialEq, Eq)]
pub struct SecretNonce(Scalar);

impl SecretNonce {
    pub fn generate<R: CryptoRngCore + ?Sized>(rng: &mut R) -> Self {
        SecretNonce(Scalar::random_nonzero(rng))
    }

    pub fn commitment(&self) -> NonceCommitment {
        NonceCommitment(Point::mul_base(&self.0))
    }

    /// Consumes the nonce into a partial signature.
    pub fn sign(self, sk: &Scalar, challenge: &Scalar, sign: Sign) -> Result<PartialSignature, SchnorrError> {
        partial_sign(sk, &self.0, challenge, sign)
    }

    pub(crate) fn from_scalar(k: Scalar) -> Self {
        SecretNonce(k)
    }

    pub(crate) fn scalar(&self) -> &Scalar {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartialSignature {
    pub r: Point,
    pub s: Scalar,
    pub sign: Sign,
}

fn challenge(r: &Point, pk: &Point, message: &[u8]) -> Scalar {
    hash_parts_to_scalar(&[SIG_TAG, &r.to_bytes(), &pk.to_bytes(), message])
}

/// Single-signer Schnorr signature with a fresh random nonce.
pub fn sig_gen<R: CryptoRngCore + ?Sized>(sk: &Scalar, message: &[u8], rng: &mut R) -> Result<Signature, SchnorrError> {
    if sk.is_zero() {
        return Err(SchnorrError::InvalidKey);
    }
    let k = Scalar::random_nonzero(rng);
    let r = Point::mul_base(&k);
    let e = challenge(&r, &Point::mul_base(sk), message);
    Ok(Signature { r, s: k + e * *sk })
}

pub fn sig_ver(sig: &Signature, pk: &Point, message: &[u8]) -> bool {
    if pk.is_identity() || sig.r.is_identity() {
        return false;
    }
    let e = challenge(&sig.r, pk, message);
    Point::mul_base(&sig.s) == sig.r + *pk * e
}

/// `s = nonce + challenge·sk`, `R = nonce·G`.
pub fn partial_sign(
    sk: &Scalar,
    nonce: &Scalar,
    challenge: &Scalar,
    sign: Sign,
) -> Result<PartialSignature, SchnorrError> {
    if sk.is_zero() {
        return Err(SchnorrError::InvalidKey);
    }
    if nonce.is_zero() {
        return Err(SchnorrError::InvalidParameter("zero nonce"));
    }
    Ok(PartialSignature { r: Point::mul_base(nonce), s: *nonce + *challenge * *sk, sign })
}

/// Signed sum of nonce commitments.
pub fn aggregate_nonces(commitments: impl IntoIterator<Item = (NonceCommitment, Sign)>) -> Point {
    commitments.into_iter().map(|(c, sign)| sign.apply_point(c.0)).sum()
}

/// Combines partials into `(Σ signᵢ·Rᵢ, Σ signᵢ·sᵢ)`.
pub fn aggregate(partials: &[PartialSignature]) -> Result<Signature, SchnorrError> {
    if partials.is_empty() {
        return Err(SchnorrError::InvalidParameter("no partial signatures"));
    }
    let r: Point = partials.iter().map(|p| p.sign.apply_point(p.r)).sum();
    let s: Scalar = partials.iter().map(|p| p.sign.apply_scalar(p.s)).sum();
    if r.is_identity() {
        return Err(SchnorrError::InvalidParameter("aggregate nonce is the identity"));
    }
    Ok(Signature { r, s })
}

/// Common challenge binding the aggregate nonce and the message, but not the key.
pub fn compute_agg_challenge(r_agg: &Point, message: &[u8]) -> Result<Scalar, SchnorrError> {
    if r_agg.is_identity() {
        return Err(SchnorrError::InvalidParameter("aggregate nonce is the identity"));
    }
    Ok(hash_parts_to_scalar(&[AGG_TAG, &r_agg.to_bytes(), message]))
}

/// `s_agg·G == R_agg + e·X` with `e = compute_agg_challenge(R_agg, message)`.
pub fn verify_aggregate(sig: &Signature, x: &Point, message: &[u8]) -> bool {
    let Ok(e) = compute_agg_challenge(&sig.r, message) else {
        return false;
    };
    Point::mul_base(&sig.s) == sig.r + *x * e
}
