//! Prime-order group instantiation.
//!
//! Backed by the Ristretto group over Curve25519: prime order
//! `p = 2^252 + 27742317777372353535851937790883648493`, 32-byte canonical
//! compressed point encoding. Scalars are serialized big-endian.

use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar as DalekScalar;
use curve25519_dalek::traits::Identity;
use rand_core::CryptoRngCore;
use sha2::{Digest, Sha512};

use crate::error::DecodeError;

/// Width in bytes of an encoded scalar.
pub const SCALAR_LEN: usize = 32;
/// Width in bytes of an encoded point.
pub const POINT_LEN: usize = 32;

const H2S_TAG: &[u8] = b"atlantis/h2s";
const NUMS_TAG: &[u8] = b"atlantis/nums";
const NUMS_MAX_TRIES: u32 = 256;

/// An element of the scalar field, always canonically reduced.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Scalar(DalekScalar);

impl Scalar {
    pub const ZERO: Scalar = Scalar(DalekScalar::ZERO);
    pub const ONE: Scalar = Scalar(DalekScalar::ONE);

    pub fn random<R: CryptoRngCore + ?Sized>(rng: &mut R) -> Self {
        let mut wide = [0u8; 64];
        rng.fill_bytes(&mut wide);
        Scalar(DalekScalar::from_bytes_mod_order_wide(&wide))
    }

    /// Random scalar that is never zero.
    pub fn random_nonzero<R: CryptoRngCore + ?Sized>(rng: &mut R) -> Self {
        loop {
            let s = Self::random(rng);
            if !s.is_zero() {
                return s;
            }
        }
    }

    pub fn from_u64(v: u64) -> Self {
        Scalar(DalekScalar::from(v))
    }

    /// Lossless embedding of a 128-bit amount.
    pub fn from_u128(v: u128) -> Self {
        Scalar(DalekScalar::from(v))
    }

    /// `2^exp` for `exp < 252`.
    pub fn pow2(exp: u32) -> Self {
        assert!(exp < 252, "power of two exceeds field size");
        let mut be = [0u8; SCALAR_LEN];
        be[SCALAR_LEN - 1 - (exp / 8) as usize] = 1 << (exp % 8);
        Self::from_be_bytes(&be).expect("power of two below the group order is canonical")
    }

    pub fn is_zero(&self) -> bool {
        self.0 == DalekScalar::ZERO
    }

    pub fn invert(&self) -> Scalar {
        Scalar(self.0.invert())
    }

    pub fn to_be_bytes(&self) -> [u8; SCALAR_LEN] {
        let mut out = self.0.to_bytes();
        out.reverse();
        out
    }

    /// Decodes a big-endian scalar, rejecting values `>= p`.
    pub fn from_be_bytes(bytes: &[u8; SCALAR_LEN]) -> Result<Self, DecodeError> {
        let mut le = *bytes;
        le.reverse();
        Option::<DalekScalar>::from(DalekScalar::from_canonical_bytes(le))
            .map(Scalar)
            .ok_or(DecodeError::NonCanonicalScalar { offset: 0 })
    }

    /// The value as an integer, when it fits in 128 bits.
    pub fn to_u128(&self) -> Option<u128> {
        let be = self.to_be_bytes();
        if be[..16].iter().any(|&b| b != 0) {
            return None;
        }
        Some(u128::from_be_bytes(be[16..].try_into().unwrap()))
    }

    /// Low 64 bits of the integer value.
    pub fn low_u64(&self) -> u64 {
        let be = self.to_be_bytes();
        u64::from_be_bytes(be[SCALAR_LEN - 8..].try_into().unwrap())
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar(")?;
        for b in self.to_be_bytes() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Integer order of the canonical representatives.
impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.to_be_bytes().cmp(&other.to_be_bytes())
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 + rhs.0)
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        self.0 += rhs.0;
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 - rhs.0)
    }
}

impl SubAssign for Scalar {
    fn sub_assign(&mut self, rhs: Scalar) {
        self.0 -= rhs.0;
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 * rhs.0)
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl core::iter::Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::ZERO, |acc, s| acc + s)
    }
}

/// A group element.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Point(RistrettoPoint);

impl Point {
    pub fn identity() -> Self {
        Point(RistrettoPoint::identity())
    }

    /// The ownership generator `G`.
    pub fn generator() -> Self {
        Point(RISTRETTO_BASEPOINT_POINT)
    }

    /// `s·G`.
    pub fn mul_base(s: &Scalar) -> Self {
        Point(RistrettoPoint::mul_base(&s.0))
    }

    pub fn is_identity(&self) -> bool {
        self.0 == RistrettoPoint::identity()
    }

    pub fn to_bytes(&self) -> [u8; POINT_LEN] {
        self.0.compress().to_bytes()
    }

    /// Decodes a canonical compressed point; the identity is accepted.
    pub fn from_bytes(bytes: &[u8; POINT_LEN]) -> Result<Self, DecodeError> {
        CompressedRistretto(*bytes).decompress().map(Point).ok_or(DecodeError::InvalidPoint { offset: 0 })
    }
}

impl Default for Point {
    fn default() -> Self {
        Point::identity()
    }
}

impl core::hash::Hash for Point {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        self.to_bytes().hash(state);
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point(")?;
        for b in self.to_bytes() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point(self.0 + rhs.0)
    }
}

impl AddAssign for Point {
    fn add_assign(&mut self, rhs: Point) {
        self.0 += rhs.0;
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point(self.0 - rhs.0)
    }
}

impl SubAssign for Point {
    fn sub_assign(&mut self, rhs: Point) {
        self.0 -= rhs.0;
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point(-self.0)
    }
}

impl Mul<Scalar> for Point {
    type Output = Point;
    fn mul(self, rhs: Scalar) -> Point {
        Point(self.0 * rhs.0)
    }
}

impl Mul<Point> for Scalar {
    type Output = Point;
    fn mul(self, rhs: Point) -> Point {
        Point(self.0 * rhs.0)
    }
}

impl core::iter::Sum for Point {
    fn sum<I: Iterator<Item = Point>>(iter: I) -> Point {
        iter.fold(Point::identity(), |acc, p| acc + p)
    }
}

/// Hashes an arbitrary message into the scalar field.
///
/// SHA-512 over `"atlantis/h2s" || message`, reduced mod `p`.
pub fn hash_to_scalar(message: &[u8]) -> Scalar {
    hash_parts_to_scalar(&[message])
}

/// [`hash_to_scalar`] over the concatenation of `parts`, without allocating.
pub fn hash_parts_to_scalar(parts: &[&[u8]]) -> Scalar {
    let mut h = Sha512::new();
    h.update(H2S_TAG);
    for p in parts {
        h.update(p);
    }
    let wide: [u8; 64] = h.finalize().into();
    Scalar(DalekScalar::from_bytes_mod_order_wide(&wide))
}

/// Derives a generator with unknown discrete log relative to `G`.
///
/// Try-and-increment: hash `"atlantis/nums" || label || counter` and attempt
/// to decode the first 32 bytes as a compressed point.
pub fn nums_to_point(label: &[u8]) -> Result<Point, crate::error::GroupError> {
    for counter in 0..NUMS_MAX_TRIES {
        let mut h = Sha512::new();
        h.update(NUMS_TAG);
        h.update(label);
        h.update(counter.to_be_bytes());
        let digest = h.finalize();
        let candidate: [u8; 32] = digest[..32].try_into().unwrap();
        if let Some(p) = CompressedRistretto(candidate).decompress() {
            if p != RistrettoPoint::identity() {
                return Ok(Point(p));
            }
        }
    }
    Err(crate::error::GroupError::NumsExhausted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn hash_to_scalar_is_deterministic_and_separates_inputs() {
        assert_eq!(hash_to_scalar(b"m"), hash_to_scalar(b"m"));
        assert_ne!(hash_to_scalar(b"a"), hash_to_scalar(b"b"));
        // canonical decoding only succeeds for values below p
        let bytes = hash_to_scalar(b"").to_be_bytes();
        assert!(Scalar::from_be_bytes(&bytes).is_ok());
    }

    #[test]
    fn hash_parts_matches_concatenation() {
        assert_eq!(hash_parts_to_scalar(&[b"ab", b"c"]), hash_to_scalar(b"abc"));
    }

    #[test]
    fn nums_points_are_distinct_and_non_identity() {
        let a = nums_to_point(b"asset:0").unwrap();
        let b = nums_to_point(b"asset:1").unwrap();
        assert_eq!(a, nums_to_point(b"asset:0").unwrap());
        assert_ne!(a.to_bytes(), b.to_bytes());
        assert!(!a.is_identity());
        assert_ne!(a, Point::generator());
    }

    #[test]
    fn scalar_group_order_is_rejected() {
        // p in big-endian
        let p = hex("1000000000000000000000000000000014def9dea2f79cd65812631a5cf5d3ed");
        assert!(Scalar::from_be_bytes(&p).is_err());
        let mut below = p;
        below[31] -= 1;
        assert_eq!(Scalar::from_be_bytes(&below).unwrap(), -Scalar::ONE);
    }

    #[test]
    fn small_integer_conversions() {
        assert_eq!(Scalar::from_u128(u128::MAX).to_u128(), Some(u128::MAX));
        assert_eq!(Scalar::pow2(128) - Scalar::ONE, Scalar::from_u128(u128::MAX));
        assert_eq!(Scalar::pow2(128).to_u128(), None);
        assert_eq!(Scalar::pow2(3), Scalar::from_u64(8));
        assert_eq!(Scalar::from_u64(0x1234).low_u64(), 0x1234);
    }

    #[test]
    fn identity_round_trips() {
        let id = Point::identity();
        assert_eq!(id.to_bytes(), [0u8; 32]);
        assert!(Point::from_bytes(&id.to_bytes()).unwrap().is_identity());
    }

    #[test]
    fn group_laws_hold_on_random_inputs() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let g = Point::generator();
        for _ in 0..100 {
            let a = Scalar::random(&mut rng);
            let b = Scalar::random(&mut rng);
            let p = Point::mul_base(&Scalar::random(&mut rng));
            assert_eq!((a + b) * p, a * p + b * p);
            assert_eq!((a * b) * g, a * (b * g));
            assert_eq!(Point::mul_base(&a), a * g);
            assert_eq!(p - p, Point::identity());
            assert_eq!(Scalar::from_be_bytes(&a.to_be_bytes()).unwrap(), a);
            assert_eq!(Point::from_bytes(&p.to_bytes()).unwrap(), p);
        }
    }

    fn hex(s: &str) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).unwrap();
        }
        out
    }
}
