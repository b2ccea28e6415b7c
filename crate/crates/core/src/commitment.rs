//! Multi-asset Pedersen commitments.
//!
//! A commitment is a single point `C = Σ aᵢ·Hᵢ + sk·G` where each asset `i`
//! has an independent NUMS generator `Hᵢ` and `G` is the ownership generator.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::CommitmentError;
use crate::group::{nums_to_point, Point, Scalar};

/// Upper bound on outputs in a single transaction, keeping per-asset sums
/// of 128-bit amounts far below the group order.
pub const MAX_OUTPUTS: usize = 1 << 16;

const ASSET_LABEL_PREFIX: &[u8] = b"asset:";

/// Asset identifier, e.g. a token contract address.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AssetId(Vec<u8>);

impl AssetId {
    pub fn new(id: impl Into<Vec<u8>>) -> Result<Self, CommitmentError> {
        let id = id.into();
        if id.is_empty() {
            return Err(CommitmentError::EmptyAssetId);
        }
        Ok(AssetId(id))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    fn nums_label(&self) -> Vec<u8> {
        let mut label = ASSET_LABEL_PREFIX.to_vec();
        label.extend_from_slice(&self.0);
        label
    }

    /// `NUMS("asset:" || id)`.
    pub fn derive_generator(&self) -> Result<Point, CommitmentError> {
        Ok(nums_to_point(&self.nums_label())?)
    }
}

impl fmt::Display for AssetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&String::from_utf8_lossy(&self.0))
    }
}

impl fmt::Debug for AssetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AssetId({self})")
    }
}

impl std::str::FromStr for AssetId {
    type Err = CommitmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AssetId::new(s.as_bytes())
    }
}

/// Public map from asset identifiers to their generators.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AssetRegistry {
    entries: BTreeMap<AssetId, Point>,
}

impl AssetRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Derives and stores the generator for `id`.
    pub fn register(&mut self, id: AssetId) -> Result<Point, CommitmentError> {
        let h = id.derive_generator()?;
        self.insert_checked(id, h)?;
        Ok(h)
    }

    /// Inserts an externally supplied generator after re-deriving it.
    pub fn insert_checked(&mut self, id: AssetId, h: Point) -> Result<(), CommitmentError> {
        if self.entries.contains_key(&id) {
            return Err(CommitmentError::AlreadyRegistered(id.to_string()));
        }
        if id.derive_generator()? != h || self.entries.values().any(|p| *p == h) {
            return Err(CommitmentError::GeneratorMismatch(id.to_string()));
        }
        self.entries.insert(id, h);
        Ok(())
    }

    pub fn get(&self, id: &AssetId) -> Option<&Point> {
        self.entries.get(id)
    }

    pub fn contains(&self, id: &AssetId) -> bool {
        self.entries.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AssetId, &Point)> {
        self.entries.iter()
    }

    /// All `(id, Hᵢ)` pairs sorted by id.
    pub fn generators(&self) -> Vec<(AssetId, Point)> {
        self.entries.iter().map(|(id, h)| (id.clone(), *h)).collect()
    }

    fn generator(&self, id: &AssetId) -> Result<Point, CommitmentError> {
        self.get(id).copied().ok_or_else(|| CommitmentError::UnsupportedAsset(id.to_string()))
    }
}

/// Per-asset amounts. Zero entries are never stored.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct AmountVector(BTreeMap<AssetId, u128>);

impl AmountVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(asset: AssetId, amount: u128) -> Self {
        let mut v = Self::new();
        v.set(asset, amount);
        v
    }

    pub fn set(&mut self, asset: AssetId, amount: u128) {
        if amount == 0 {
            self.0.remove(&asset);
        } else {
            self.0.insert(asset, amount);
        }
    }

    pub fn get(&self, asset: &AssetId) -> u128 {
        self.0.get(asset).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AssetId, u128)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn assets(&self) -> impl Iterator<Item = &AssetId> {
        self.0.keys()
    }

    /// Componentwise sum; `None` on overflow.
    pub fn checked_add(&self, other: &AmountVector) -> Option<AmountVector> {
        let mut out = self.clone();
        for (id, a) in other.iter() {
            let sum = out.get(id).checked_add(a)?;
            out.set(id.clone(), sum);
        }
        Some(out)
    }

    /// Componentwise difference; `None` if any component would go negative.
    pub fn checked_sub(&self, other: &AmountVector) -> Option<AmountVector> {
        let mut out = self.clone();
        for (id, a) in other.iter() {
            let diff = out.get(id).checked_sub(a)?;
            out.set(id.clone(), diff);
        }
        Some(out)
    }

    /// Splits into `parts` vectors summing to `self`, spreading each asset as evenly as possible.
    pub fn split(&self, parts: usize) -> Vec<AmountVector> {
        let mut out = vec![AmountVector::new(); parts];
        let n = parts as u128;
        for (id, a) in self.iter() {
            for (i, v) in out.iter_mut().enumerate() {
                v.set(id.clone(), a / n + u128::from((i as u128) < a % n));
            }
        }
        out
    }

    /// First asset where `self` is below `other`.
    pub fn shortfall<'a>(&self, other: &'a AmountVector) -> Option<&'a AssetId> {
        other.iter().find(|(id, a)| self.get(id) < *a).map(|(id, _)| id)
    }
}

impl fmt::Debug for AmountVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.0.iter().map(|(k, v)| (k.to_string(), v))).finish()
    }
}

impl fmt::Display for AmountVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("{}");
        }
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(","))
    }
}

impl std::str::FromStr for AmountVector {
    type Err = CommitmentError;

    /// Parses the [`Display`](fmt::Display) form: `A=1,B=2` or `{}`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CommitmentError::InvalidAmounts(s.to_string());
        let mut out = AmountVector::new();
        if s == "{}" {
            return Ok(out);
        }
        for part in s.split(',') {
            let (id, n) = part.split_once('=').ok_or_else(bad)?;
            let id = AssetId::new(id.trim()).map_err(|_| bad())?;
            if out.0.contains_key(&id) {
                return Err(bad());
            }
            out.set(id, n.trim().parse().map_err(|_| bad())?);
        }
        Ok(out)
    }
}

impl FromIterator<(AssetId, u128)> for AmountVector {
    /// Later entries for the same asset overwrite earlier ones.
    fn from_iter<I: IntoIterator<Item = (AssetId, u128)>>(iter: I) -> Self {
        let mut v = AmountVector::new();
        for (id, a) in iter {
            v.set(id, a);
        }
        v
    }
}

/// A commitment to an amount vector and an ownership key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Commitment(pub Point);

impl Commitment {
    pub fn point(&self) -> Point {
        self.0
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        self.0.to_bytes()
    }
}

impl PartialOrd for Commitment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Commitment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.to_bytes().cmp(&other.to_bytes())
    }
}

/// `Σ aᵢ·Hᵢ` over the registry.
pub fn amounts_point(amounts: &AmountVector, registry: &AssetRegistry) -> Result<Point, CommitmentError> {
    let mut acc = Point::identity();
    for (id, a) in amounts.iter() {
        acc += registry.generator(id)? * Scalar::from_u128(a);
    }
    Ok(acc)
}

/// `C = Σ aᵢ·Hᵢ + sk·G`.
pub fn commit(amounts: &AmountVector, sk: &Scalar, registry: &AssetRegistry) -> Result<Commitment, CommitmentError> {
    if sk.is_zero() {
        return Err(CommitmentError::InvalidKey);
    }
    Ok(Commitment(amounts_point(amounts, registry)? + Point::mul_base(sk)))
}

/// `C = Σ aᵢ·Hᵢ + P` for a public key supplied by a depositor.
pub fn commit_with_point(
    amounts: &AmountVector,
    public_key: &Point,
    registry: &AssetRegistry,
) -> Result<Commitment, CommitmentError> {
    if public_key.is_identity() {
        return Err(CommitmentError::InvalidKey);
    }
    Ok(Commitment(amounts_point(amounts, registry)? + *public_key))
}

/// `Σ inputs − Σ outputs`. A pure multiple of `G` exactly when amounts conserve per asset.
pub fn excess(inputs: &[Commitment], outputs: &[Commitment]) -> Point {
    inputs.iter().map(Commitment::point).sum::<Point>() - outputs.iter().map(Commitment::point).sum::<Point>()
}
