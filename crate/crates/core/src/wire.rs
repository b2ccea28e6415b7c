//! Canonical binary encoding for every protocol object.
//!
//! Layout rules:
//! - scalars: 32-byte big-endian, canonical (`< p`)
//! - points: 32-byte compressed Ristretto
//! - integers: big-endian (`u32`, `u64`; amounts are 16-byte `u128`)
//! - lists: 4-byte big-endian count, then the elements
//! - byte strings: 4-byte big-endian length, then the bytes
//! - maps and sets: sorted strictly ascending by key bytes
//! - top-level messages: `type tag || version || body`
//!
//! Decoders reject anything a canonical encoder would not produce, so
//! re-encoding a decoded value is byte-identical.
//!
//! A text mirror ([`to_text`] / [`from_text`]) wraps the binary form in a
//! hex armor for files handled by people. Only the binary form is ever hashed.

use crate::commitment::{AmountVector, AssetId, Commitment};
use crate::error::DecodeError;
use crate::group::{Point, Scalar, POINT_LEN, SCALAR_LEN};
use crate::relations::{
    BackendTag, Proof, RangeStatement, RangeWitness, SpendStatement, SpendWitness, WithdrawStatement, WithdrawWitness,
};
use crate::schnorr::{NonceCommitment, PartialSignature, Sign, Signature};
use crate::smt::{MerkleProof, MAX_DEPTH};

pub const VERSION: u8 = 1;

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn u128(&mut self, v: u128) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn raw(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    pub fn var_bytes(&mut self, bytes: &[u8]) {
        self.u32(bytes.len() as u32);
        self.raw(bytes);
    }

    pub fn scalar(&mut self, s: &Scalar) {
        self.raw(&s.to_be_bytes());
    }

    pub fn point(&mut self, p: &Point) {
        self.raw(&p.to_bytes());
    }

    pub fn list<T: Encode>(&mut self, items: &[T]) {
        self.u32(items.len() as u32);
        for item in items {
            item.encode(self);
        }
    }

    pub fn option_u64(&mut self, v: Option<u64>) {
        match v {
            None => self.u8(0),
            Some(t) => {
                self.u8(1);
                self.u64(t);
            }
        }
    }

    pub fn put<T: Encode + ?Sized>(&mut self, v: &T) {
        v.encode(self);
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.remaining() < n {
            return Err(DecodeError::Truncated { offset: self.buf.len() });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    pub fn u128(&mut self) -> Result<u128, DecodeError> {
        Ok(u128::from_be_bytes(self.array()?))
    }

    pub fn var_bytes(&mut self) -> Result<&'a [u8], DecodeError> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    pub fn scalar(&mut self) -> Result<Scalar, DecodeError> {
        let at = self.pos;
        let bytes: [u8; SCALAR_LEN] = self.array()?;
        Scalar::from_be_bytes(&bytes).map_err(|e| e.at(at))
    }

    pub fn point(&mut self) -> Result<Point, DecodeError> {
        let at = self.pos;
        let bytes: [u8; POINT_LEN] = self.array()?;
        Point::from_bytes(&bytes).map_err(|e| e.at(at))
    }

    /// Reads a list count, rejecting counts that cannot fit in the remaining input.
    pub fn count(&mut self, min_elem_len: usize) -> Result<usize, DecodeError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_elem_len.max(1)) > self.remaining() {
            return Err(DecodeError::Truncated { offset: self.buf.len() });
        }
        Ok(n)
    }

    pub fn list<T: Decode>(&mut self, min_elem_len: usize) -> Result<Vec<T>, DecodeError> {
        let n = self.count(min_elem_len)?;
        (0..n).map(|_| T::decode(self)).collect()
    }

    pub fn option_u64(&mut self) -> Result<Option<u64>, DecodeError> {
        let at = self.pos;
        match self.u8()? {
            0 => Ok(None),
            1 => Ok(Some(self.u64()?)),
            tag => Err(DecodeError::BadTag { offset: at, tag }),
        }
    }

    pub fn decode<T: Decode>(&mut self) -> Result<T, DecodeError> {
        T::decode(self)
    }

    pub fn invalid(&self, at: usize, what: &'static str) -> DecodeError {
        DecodeError::InvalidValue { offset: at, what }
    }

    /// Fails if any bytes remain.
    pub fn finish(&self) -> Result<(), DecodeError> {
        match self.remaining() {
            0 => Ok(()),
            count => Err(DecodeError::TrailingBytes { offset: self.pos, count }),
        }
    }
}

pub trait Encode {
    fn encode(&self, w: &mut Writer);
}

pub trait Decode: Sized {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError>;
}

pub fn to_bytes<T: Encode + ?Sized>(v: &T) -> Vec<u8> {
    let mut w = Writer::new();
    v.encode(&mut w);
    w.into_bytes()
}

/// Decodes a complete value, rejecting trailing bytes.
pub fn from_bytes<T: Decode>(bytes: &[u8]) -> Result<T, DecodeError> {
    let mut r = Reader::new(bytes);
    let v = T::decode(&mut r)?;
    r.finish()?;
    Ok(v)
}

/// A top-level message with its own type tag.
pub trait Message: Encode + Decode {
    const TAG: u8;
    /// Label used in the text armor.
    const NAME: &'static str;
}

pub fn encode_message<T: Message>(v: &T) -> Vec<u8> {
    let mut w = Writer::new();
    w.u8(T::TAG);
    w.u8(VERSION);
    v.encode(&mut w);
    w.into_bytes()
}

pub fn decode_message<T: Message>(bytes: &[u8]) -> Result<T, DecodeError> {
    let mut r = Reader::new(bytes);
    let tag = r.u8()?;
    if tag != T::TAG {
        return Err(DecodeError::BadTag { offset: 0, tag });
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(DecodeError::UnsupportedVersion { offset: 1, version });
    }
    let v = T::decode(&mut r)?;
    r.finish()?;
    Ok(v)
}

/// Reads the type tag of an encoded message without decoding it.
pub fn peek_tag(bytes: &[u8]) -> Option<u8> {
    bytes.first().copied()
}

const ARMOR_WIDTH: usize = 64;

/// Hex-armored text form of a binary message.
pub fn armor(name: &str, bytes: &[u8]) -> String {
    let hex = hex::encode(bytes);
    let mut out = format!("-----BEGIN ATLANTIS {name}-----\n");
    for chunk in hex.as_bytes().chunks(ARMOR_WIDTH) {
        out.push_str(std::str::from_utf8(chunk).unwrap());
        out.push('\n');
    }
    out.push_str(&format!("-----END ATLANTIS {name}-----\n"));
    out
}

/// Inverse of [`armor`]; returns the label and the binary body.
pub fn dearmor(text: &str) -> Result<(String, Vec<u8>), DecodeError> {
    let bad = |what| DecodeError::InvalidValue { offset: 0, what };
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or(bad("armor header"))?;
    let name = header
        .strip_prefix("-----BEGIN ATLANTIS ")
        .and_then(|s| s.strip_suffix("-----"))
        .ok_or(bad("armor header"))?
        .to_string();
    let footer = format!("-----END ATLANTIS {name}-----");
    let mut hex = String::new();
    let mut closed = false;
    for line in lines {
        if closed {
            return Err(bad("text after armor footer"));
        }
        if line == footer {
            closed = true;
        } else {
            hex.push_str(line);
        }
    }
    if !closed {
        return Err(bad("armor body"));
    }
    // Lowercase only, so each binary message has exactly one text form.
    if hex.bytes().any(|b| b.is_ascii_uppercase()) {
        return Err(bad("hex digit"));
    }
    let bytes = hex::decode(&hex).map_err(|_| bad("hex digit"))?;
    Ok((name, bytes))
}

pub fn to_text<T: Message>(v: &T) -> String {
    armor(T::NAME, &encode_message(v))
}

pub fn from_text<T: Message>(text: &str) -> Result<T, DecodeError> {
    let (name, bytes) = dearmor(text)?;
    if name != T::NAME {
        return Err(DecodeError::InvalidValue { offset: 0, what: "armor label" });
    }
    decode_message(&bytes)
}

/// Accepts either the binary or the armored text form.
pub fn decode_any<T: Message>(bytes: &[u8]) -> Result<T, DecodeError> {
    if bytes.starts_with(b"-----BEGIN ATLANTIS ") {
        let text = std::str::from_utf8(bytes).map_err(|_| DecodeError::InvalidValue { offset: 0, what: "utf-8" })?;
        from_text(text)
    } else {
        decode_message(bytes)
    }
}

/// The message signed by every party to a transfer: `u32 count || nullifiers`.
pub fn encode_nullifier_list(nullifiers: &[Scalar]) -> Result<Vec<u8>, DecodeError> {
    if nullifiers.is_empty() {
        return Err(DecodeError::InvalidValue { offset: 0, what: "empty nullifier list" });
    }
    if !nullifiers.windows(2).all(|w| w[0] < w[1]) {
        return Err(DecodeError::InvalidValue { offset: 0, what: "unsorted nullifier list" });
    }
    let mut w = Writer::new();
    w.list(nullifiers);
    Ok(w.into_bytes())
}

pub(crate) fn decode_sorted_scalars(r: &mut Reader<'_>, allow_empty: bool) -> Result<Vec<Scalar>, DecodeError> {
    let at = r.position();
    let list: Vec<Scalar> = r.list(SCALAR_LEN)?;
    if (!allow_empty && list.is_empty()) || !list.windows(2).all(|w| w[0] < w[1]) {
        return Err(r.invalid(at, "sorted scalar list"));
    }
    Ok(list)
}

pub(crate) fn encode_sorted_scalars(w: &mut Writer, items: &[Scalar]) {
    w.list(items);
}

pub(crate) fn decode_scalar_set(r: &mut Reader<'_>) -> Result<Vec<Scalar>, DecodeError> {
    decode_sorted_scalars(r, true)
}

impl Encode for Scalar {
    fn encode(&self, w: &mut Writer) {
        w.scalar(self);
    }
}

impl Decode for Scalar {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        r.scalar()
    }
}

impl Encode for Point {
    fn encode(&self, w: &mut Writer) {
        w.point(self);
    }
}

impl Decode for Point {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        r.point()
    }
}

impl Encode for Commitment {
    fn encode(&self, w: &mut Writer) {
        w.point(&self.0);
    }
}

impl Decode for Commitment {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Commitment(r.point()?))
    }
}

impl Encode for AssetId {
    fn encode(&self, w: &mut Writer) {
        w.var_bytes(self.as_bytes());
    }
}

impl Decode for AssetId {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let at = r.position();
        AssetId::new(r.var_bytes()?).map_err(|_| r.invalid(at, "asset id"))
    }
}

impl Encode for String {
    fn encode(&self, w: &mut Writer) {
        w.var_bytes(self.as_bytes());
    }
}

impl Decode for String {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let at = r.position();
        String::from_utf8(r.var_bytes()?.to_vec()).map_err(|_| r.invalid(at, "utf-8 string"))
    }
}

impl Encode for AmountVector {
    /// List of `(asset id, u128)` pairs, ids ascending, no zero amounts.
    fn encode(&self, w: &mut Writer) {
        w.u32(self.len() as u32);
        for (id, a) in self.iter() {
            id.encode(w);
            w.u128(a);
        }
    }
}

impl Decode for AmountVector {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let n = r.count(4 + 1 + 16)?;
        let mut out = AmountVector::new();
        let mut prev: Option<AssetId> = None;
        for _ in 0..n {
            let at = r.position();
            let id = AssetId::decode(r)?;
            let amount = r.u128()?;
            if amount == 0 || prev.as_ref().is_some_and(|p| *p >= id) {
                return Err(r.invalid(at, "amount vector entry"));
            }
            prev = Some(id.clone());
            out.set(id, amount);
        }
        Ok(out)
    }
}

impl Encode for Signature {
    fn encode(&self, w: &mut Writer) {
        w.raw(&self.to_bytes());
    }
}

impl Decode for Signature {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let at = r.position();
        let sig = Signature { r: r.point()?, s: r.scalar()? };
        if sig.r.is_identity() {
            return Err(r.invalid(at, "signature nonce"));
        }
        Ok(sig)
    }
}

impl Encode for Sign {
    fn encode(&self, w: &mut Writer) {
        w.u8(match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        });
    }
}

impl Decode for Sign {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let at = r.position();
        match r.u8()? {
            0 => Ok(Sign::Plus),
            1 => Ok(Sign::Minus),
            tag => Err(DecodeError::BadTag { offset: at, tag }),
        }
    }
}

impl Encode for PartialSignature {
    fn encode(&self, w: &mut Writer) {
        w.point(&self.r);
        w.scalar(&self.s);
        self.sign.encode(w);
    }
}

impl Decode for PartialSignature {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let at = r.position();
        let p = PartialSignature { r: r.point()?, s: r.scalar()?, sign: r.decode()? };
        if p.r.is_identity() {
            return Err(r.invalid(at, "partial signature nonce"));
        }
        Ok(p)
    }
}

impl Encode for NonceCommitment {
    fn encode(&self, w: &mut Writer) {
        w.point(&self.0);
    }
}

impl Decode for NonceCommitment {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let at = r.position();
        let p = r.point()?;
        if p.is_identity() {
            return Err(r.invalid(at, "nonce commitment"));
        }
        Ok(NonceCommitment(p))
    }
}

impl Message for NonceCommitment {
    const TAG: u8 = 0x14;
    const NAME: &'static str = "NONCE-COMMITMENT";
}

impl Encode for MerkleProof {
    /// `u32 leaf index || u32 depth || depth × sibling`.
    fn encode(&self, w: &mut Writer) {
        w.u32(self.leaf_index);
        w.list(&self.siblings);
    }
}

impl Decode for MerkleProof {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let at = r.position();
        let leaf_index = r.u32()?;
        let siblings: Vec<Scalar> = r.list(SCALAR_LEN)?;
        let depth = siblings.len() as u32;
        if depth == 0 || depth > MAX_DEPTH || (depth < 32 && leaf_index >> depth != 0) {
            return Err(r.invalid(at, "merkle proof shape"));
        }
        Ok(MerkleProof { leaf_index, siblings })
    }
}

impl Proof {
    /// Standalone form: `backend tag || version || payload`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.payload.len() + 2);
        out.push(self.backend as u8);
        out.push(VERSION);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let tag = *bytes.first().ok_or(DecodeError::Truncated { offset: 0 })?;
        let backend = BackendTag::from_byte(tag).ok_or(DecodeError::BadTag { offset: 0, tag })?;
        let version = *bytes.get(1).ok_or(DecodeError::Truncated { offset: 1 })?;
        if version != VERSION {
            return Err(DecodeError::UnsupportedVersion { offset: 1, version });
        }
        Ok(Proof { backend, payload: bytes[2..].to_vec() })
    }
}

impl Encode for Proof {
    /// Embedded form: the standalone form, length-prefixed.
    fn encode(&self, w: &mut Writer) {
        w.var_bytes(&self.to_bytes());
    }
}

impl Decode for Proof {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let at = r.position() + 4;
        Proof::from_bytes(r.var_bytes()?).map_err(|e| e.at(at))
    }
}

impl Encode for (AssetId, Point) {
    fn encode(&self, w: &mut Writer) {
        self.0.encode(w);
        w.point(&self.1);
    }
}

impl Decode for (AssetId, Point) {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok((r.decode()?, r.point()?))
    }
}

impl Encode for RangeStatement {
    fn encode(&self, w: &mut Writer) {
        self.commitment.encode(w);
        w.list(&self.generators);
        w.point(&self.g);
        w.u8(self.bit_width);
    }
}

impl Decode for RangeStatement {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(RangeStatement {
            commitment: r.decode()?,
            generators: r.list(4 + 1 + 32)?,
            g: r.point()?,
            bit_width: r.u8()?,
        })
    }
}

impl Encode for RangeWitness {
    /// `list of (asset id, scalar amount)`, ids ascending, then `sk`.
    fn encode(&self, w: &mut Writer) {
        w.u32(self.amounts.len() as u32);
        for (id, a) in &self.amounts {
            id.encode(w);
            w.scalar(a);
        }
        w.scalar(&self.sk);
    }
}

impl Decode for RangeWitness {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let n = r.count(4 + 1 + 32)?;
        let mut amounts = std::collections::BTreeMap::new();
        let mut prev: Option<AssetId> = None;
        for _ in 0..n {
            let at = r.position();
            let id = AssetId::decode(r)?;
            let a = r.scalar()?;
            if prev.as_ref().is_some_and(|p| *p >= id) {
                return Err(r.invalid(at, "range witness entry"));
            }
            prev = Some(id.clone());
            amounts.insert(id, a);
        }
        Ok(RangeWitness { amounts, sk: r.scalar()? })
    }
}

impl Encode for SpendStatement {
    fn encode(&self, w: &mut Writer) {
        w.list(&self.nullifiers);
        w.list(&self.outputs);
        w.scalar(&self.root);
    }
}

impl Decode for SpendStatement {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(SpendStatement {
            nullifiers: decode_sorted_scalars(r, false)?,
            outputs: r.list(POINT_LEN)?,
            root: r.scalar()?,
        })
    }
}

impl Encode for SpendWitness {
    fn encode(&self, w: &mut Writer) {
        w.list(&self.input_keys);
        w.list(&self.input_commitments);
        w.list(&self.merkle_proofs);
        self.agg_sig.encode(w);
    }
}

impl Decode for SpendWitness {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(SpendWitness {
            input_keys: r.list(SCALAR_LEN)?,
            input_commitments: r.list(POINT_LEN)?,
            merkle_proofs: r.list(8)?,
            agg_sig: r.decode()?,
        })
    }
}

impl Encode for WithdrawStatement {
    fn encode(&self, w: &mut Writer) {
        self.amounts.encode(w);
        w.scalar(&self.nullifier);
        w.scalar(&self.root);
        self.destination.encode(w);
    }
}

impl Decode for WithdrawStatement {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(WithdrawStatement {
            amounts: r.decode()?,
            nullifier: r.scalar()?,
            root: r.scalar()?,
            destination: r.decode()?,
        })
    }
}

impl Encode for WithdrawWitness {
    fn encode(&self, w: &mut Writer) {
        w.scalar(&self.sk);
        self.commitment.encode(w);
        self.merkle_proof.encode(w);
    }
}

impl Decode for WithdrawWitness {
    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(WithdrawWitness { sk: r.scalar()?, commitment: r.decode()?, merkle_proof: r.decode()? })
    }
}
