//! Small shared helpers: per-graph bitsets, subset enumeration, hashing.

use sha2::{Digest, Sha256};

/// Fixed-width bitset over node indices of one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct NodeMask {
    words: Vec<u64>,
}

impl NodeMask {
    pub fn new(len: usize) -> Self {
        NodeMask {
            words: vec![0; len.div_ceil(64)],
        }
    }

    #[inline]
    pub fn set(&mut self, i: u32) {
        self.words[(i / 64) as usize] |= 1u64 << (i % 64);
    }

    #[inline]
    pub fn unset(&mut self, i: u32) {
        self.words[(i / 64) as usize] &= !(1u64 << (i % 64));
    }

    #[inline]
    pub fn contains(&self, i: u32) -> bool {
        self.words[(i / 64) as usize] & (1u64 << (i % 64)) != 0
    }

    #[inline]
    pub fn intersects(&self, other: &NodeMask) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .any(|(a, b)| a & b != 0)
    }

    pub fn union_with(&mut self, other: &NodeMask) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }
}

/// All subsets of `items` with size at most `max_size`, in increasing
/// cardinality, lexicographic within one cardinality. `items` must be sorted
/// for the lexicographic guarantee to be meaningful.
pub(crate) fn subsets_by_size<T: Clone>(items: &[T], max_size: usize) -> Vec<Vec<T>> {
    use itertools::Itertools;
    let mut out = Vec::new();
    for k in 0..=max_size.min(items.len()) {
        for combo in items.iter().cloned().combinations(k) {
            out.push(combo);
        }
    }
    out
}

/// Hex-encoded SHA-256 digest, used for config hashes and input digests in
/// run manifests.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
