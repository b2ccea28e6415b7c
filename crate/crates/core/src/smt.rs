//! Fixed-depth sparse Merkle tree over commitments.
//!
//! Leaves live at `leaf_index(C)`, the low `depth` bits of a hash of the
//! commitment. Digests are scalars; empty subtrees hash to a per-level
//! default anchored at `hash("atlantis/empty")`. The tree is append-only.

use std::collections::{BTreeMap, HashMap};

use crate::commitment::Commitment;
use crate::error::SmtError;
use crate::group::{hash_parts_to_scalar, Scalar};

pub const DEFAULT_DEPTH: u32 = 32;
pub const MAX_DEPTH: u32 = 32;

const LEAF_INDEX_TAG: &[u8] = b"atlantis/leaf";
const LEAF_VALUE_TAG: &[u8] = b"atlantis/leafval";
const NODE_TAG: &[u8] = b"atlantis/node";
const EMPTY_TAG: &[u8] = b"atlantis/empty";

pub type Digest = Scalar;

pub fn leaf_index(c: &Commitment, depth: u32) -> u32 {
    let h = hash_parts_to_scalar(&[LEAF_INDEX_TAG, &c.to_bytes()]).low_u64();
    (h & index_mask(depth)) as u32
}

fn index_mask(depth: u32) -> u64 {
    (1u64 << depth) - 1
}

pub fn leaf_digest(c: &Commitment) -> Digest {
    hash_parts_to_scalar(&[LEAF_VALUE_TAG, &c.to_bytes()])
}

pub fn node_hash(left: &Digest, right: &Digest) -> Digest {
    hash_parts_to_scalar(&[NODE_TAG, &left.to_be_bytes(), &right.to_be_bytes()])
}

pub fn empty_leaf_digest() -> Digest {
    hash_parts_to_scalar(&[EMPTY_TAG])
}

/// `defaults[l]` is the digest of an all-empty subtree of height `l`.
pub fn default_digests(depth: u32) -> Vec<Digest> {
    let mut out = Vec::with_capacity(depth as usize + 1);
    out.push(empty_leaf_digest());
    for level in 0..depth as usize {
        out.push(node_hash(&out[level], &out[level]));
    }
    out
}

/// Sibling path for one leaf, leaf-to-root order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MerkleProof {
    pub leaf_index: u32,
    pub siblings: Vec<Digest>,
}

impl MerkleProof {
    pub fn depth(&self) -> usize {
        self.siblings.len()
    }

    /// Folds the leaf digest of `c` up the path.
    pub fn compute_root(&self, c: &Commitment) -> Digest {
        let mut acc = leaf_digest(c);
        let mut idx = self.leaf_index;
        for sib in &self.siblings {
            acc = if idx & 1 == 0 { node_hash(&acc, sib) } else { node_hash(sib, &acc) };
            idx >>= 1;
        }
        acc
    }
}

/// Membership check against `root` for a tree of the given depth.
pub fn verify_membership(c: &Commitment, proof: &MerkleProof, root: &Digest, depth: u32) -> bool {
    if depth == 0 || depth > MAX_DEPTH || proof.siblings.len() != depth as usize {
        return false;
    }
    if proof.leaf_index != leaf_index(c, depth) {
        return false;
    }
    proof.compute_root(c) == *root
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMerkleTree {
    depth: u32,
    leaves: BTreeMap<u32, Commitment>,
    nodes: HashMap<(u32, u32), Digest>,
    defaults: Vec<Digest>,
    root: Digest,
}

impl Default for SparseMerkleTree {
    fn default() -> Self {
        Self::new()
    }
}

impl SparseMerkleTree {
    pub fn new() -> Self {
        Self::with_depth(DEFAULT_DEPTH).expect("default depth is valid")
    }

    pub fn with_depth(depth: u32) -> Result<Self, SmtError> {
        if depth == 0 || depth > MAX_DEPTH {
            return Err(SmtError::InvalidDepth(depth));
        }
        let defaults = default_digests(depth);
        let root = defaults[depth as usize];
        Ok(SparseMerkleTree { depth, leaves: BTreeMap::new(), nodes: HashMap::new(), defaults, root })
    }

    /// Rebuilds a tree from its leaves.
    pub fn from_leaves(depth: u32, leaves: impl IntoIterator<Item = Commitment>) -> Result<Self, SmtError> {
        let mut tree = Self::with_depth(depth)?;
        for c in leaves {
            tree.insert(&c)?;
        }
        Ok(tree)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn root(&self) -> Digest {
        self.root
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn leaf_index(&self, c: &Commitment) -> u32 {
        leaf_index(c, self.depth)
    }

    pub fn leaf_at(&self, index: u32) -> Option<&Commitment> {
        self.leaves.get(&index)
    }

    pub fn contains(&self, c: &Commitment) -> bool {
        self.leaf_at(self.leaf_index(c)) == Some(c)
    }

    /// Occupied leaves in index order.
    pub fn leaves(&self) -> impl Iterator<Item = (u32, &Commitment)> {
        self.leaves.iter().map(|(i, c)| (*i, c))
    }

    pub fn is_occupied(&self, index: u32) -> bool {
        self.leaves.contains_key(&index)
    }

    fn node(&self, level: u32, index: u32) -> Digest {
        self.nodes.get(&(level, index)).copied().unwrap_or(self.defaults[level as usize])
    }

    /// Inserts `c` at its hash-derived index and returns the new root.
    pub fn insert(&mut self, c: &Commitment) -> Result<Digest, SmtError> {
        let index = self.leaf_index(c);
        if self.leaves.contains_key(&index) {
            return Err(SmtError::IndexCollision(index));
        }
        self.leaves.insert(index, *c);
        let mut digest = leaf_digest(c);
        let mut idx = index;
        self.nodes.insert((0, idx), digest);
        for level in 0..self.depth {
            let sibling = self.node(level, idx ^ 1);
            digest = if idx & 1 == 0 { node_hash(&digest, &sibling) } else { node_hash(&sibling, &digest) };
            idx >>= 1;
            if level + 1 < self.depth {
                self.nodes.insert((level + 1, idx), digest);
            }
        }
        self.root = digest;
        Ok(digest)
    }

    pub fn prove_membership(&self, c: &Commitment) -> Result<MerkleProof, SmtError> {
        let index = self.leaf_index(c);
        if self.leaves.get(&index) != Some(c) {
            return Err(SmtError::NotFound);
        }
        let mut idx = index;
        let siblings = (0..self.depth)
            .map(|level| {
                let s = self.node(level, idx ^ 1);
                idx >>= 1;
                s
            })
            .collect();
        Ok(MerkleProof { leaf_index: index, siblings })
    }

    pub fn verify(&self, c: &Commitment, proof: &MerkleProof) -> bool {
        verify_membership(c, proof, &self.root, self.depth)
    }

    /// Root computed from the leaves alone, ignoring the cached node map.
    pub fn recompute_root(&self) -> Digest {
        self.subtree_digest(self.depth, 0)
    }

    fn subtree_digest(&self, level: u32, index: u32) -> Digest {
        let lo = (index as u64) << level;
        let hi = lo + (1u64 << level);
        let mut range = self.leaves.range(lo as u32..=(hi - 1) as u32);
        if range.next().is_none() {
            return self.defaults[level as usize];
        }
        if level == 0 {
            return leaf_digest(&self.leaves[&index]);
        }
        node_hash(&self.subtree_digest(level - 1, 2 * index), &self.subtree_digest(level - 1, 2 * index + 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Point;
    use rand::{seq::SliceRandom, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random_commitment(rng: &mut ChaCha20Rng) -> Commitment {
        Commitment(Point::mul_base(&Scalar::random_nonzero(rng)))
    }

    #[test]
    fn default_chain() {
        let d = default_digests(4);
        assert_eq!(d[0], empty_leaf_digest());
        for l in 1..=4 {
            assert_eq!(d[l], node_hash(&d[l - 1], &d[l - 1]));
        }
        assert_eq!(SparseMerkleTree::with_depth(4).unwrap().root(), d[4]);
        assert!(SparseMerkleTree::with_depth(0).is_err());
        assert!(SparseMerkleTree::with_depth(33).is_err());
    }

    #[test]
    fn insert_prove_verify() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut tree = SparseMerkleTree::new();
        let c = random_commitment(&mut rng);
        let before = tree.root();
        tree.insert(&c).unwrap();
        let proof = tree.prove_membership(&c).unwrap();
        assert!(tree.verify(&c, &proof));
        assert!(!verify_membership(&c, &proof, &before, 32));
        assert_eq!(tree.insert(&c), Err(SmtError::IndexCollision(tree.leaf_index(&c))));

        let absent = random_commitment(&mut rng);
        assert_eq!(tree.prove_membership(&absent), Err(SmtError::NotFound));
    }

    #[test]
    fn mutated_or_misshaped_proofs_fail() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut tree = SparseMerkleTree::new();
        let cs: Vec<_> = (0..5).map(|_| random_commitment(&mut rng)).collect();
        for c in &cs {
            tree.insert(c).unwrap();
        }
        let proof = tree.prove_membership(&cs[0]).unwrap();
        let mut flipped = proof.clone();
        flipped.siblings[3] += Scalar::ONE;
        assert!(!tree.verify(&cs[0], &flipped));
        let mut short = proof.clone();
        short.siblings.pop();
        assert!(!tree.verify(&cs[0], &short));
        assert!(!verify_membership(&cs[0], &short, &tree.root(), 31));

        let mut other = SparseMerkleTree::new();
        other.insert(&cs[1]).unwrap();
        assert!(!verify_membership(&cs[0], &proof, &other.root(), 32));
    }

    #[test]
    fn root_is_insertion_order_independent() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let c1 = random_commitment(&mut rng);
        let c2 = random_commitment(&mut rng);
        let a = SparseMerkleTree::from_leaves(32, [c1, c2]).unwrap();
        let b = SparseMerkleTree::from_leaves(32, [c2, c1]).unwrap();
        assert_eq!(a.root(), b.root());
    }

    #[test]
    fn leaf_indices_are_in_range_and_distinct() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..1000 {
            let c = random_commitment(&mut rng);
            assert_eq!(leaf_index(&c, 32), leaf_index(&c, 32));
            assert!(leaf_index(&c, 10) < 1 << 10);
            assert!(seen.insert(leaf_index(&c, 32)));
        }
    }

    #[test]
    fn collisions_surface_at_small_depth() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut tree = SparseMerkleTree::with_depth(2).unwrap();
        let mut collided = false;
        for _ in 0..16 {
            let c = random_commitment(&mut rng);
            match tree.insert(&c) {
                Ok(_) => assert!(tree.verify(&c, &tree.prove_membership(&c).unwrap())),
                Err(SmtError::IndexCollision(_)) => collided = true,
                Err(e) => panic!("{e}"),
            }
        }
        assert!(collided);
        assert_eq!(tree.len(), 4);
        assert_eq!(tree.recompute_root(), tree.root());
    }

    #[test]
    fn incremental_root_matches_recomputation() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let mut cs: Vec<_> = (0..64).map(|_| random_commitment(&mut rng)).collect();
        cs.shuffle(&mut rng);
        let mut tree = SparseMerkleTree::with_depth(16).unwrap();
        for c in &cs {
            tree.insert(c).unwrap();
            assert_eq!(tree.recompute_root(), tree.root());
        }
    }
}
