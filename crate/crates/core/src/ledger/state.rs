//! Versioned key-value world state.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Bound;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Position of the transaction that last wrote a key.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Version {
    pub block_no: u64,
    pub tx_index: u32,
}

impl Version {
    pub fn new(block_no: u64, tx_index: u32) -> Self {
        Version { block_no, tx_index }
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.block_no, self.tx_index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateEntry {
    pub value: Arc<[u8]>,
    pub version: Version,
    content_digest: [u8; 32],
}

/// 256-bit digest of a whole state.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateHash(pub [u8; 32]);

impl fmt::Display for StateHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for StateHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateHash({self})")
    }
}

/// Order-independent sum of per-entry digests, maintained on every write so
/// the state hash costs O(1) regardless of state size.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct DigestSum([u64; 4]);

impl DigestSum {
    fn add(&mut self, digest: &[u8; 32]) {
        for (lane, chunk) in self.0.iter_mut().zip(digest.chunks_exact(8)) {
            *lane = lane.wrapping_add(u64::from_le_bytes(chunk.try_into().expect("8 bytes")));
        }
    }

    fn sub(&mut self, digest: &[u8; 32]) {
        for (lane, chunk) in self.0.iter_mut().zip(digest.chunks_exact(8)) {
            *lane = lane.wrapping_sub(u64::from_le_bytes(chunk.try_into().expect("8 bytes")));
        }
    }

    fn finish(&self, domain: &[u8], count: usize) -> StateHash {
        let mut h = Sha256::new();
        h.update(domain);
        for lane in self.0 {
            h.update(lane.to_le_bytes());
        }
        h.update((count as u64).to_le_bytes());
        StateHash(h.finalize().into())
    }
}

fn content_digest(key: &str, value: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((key.len() as u64).to_le_bytes());
    h.update(key.as_bytes());
    h.update(value);
    h.finalize().into()
}

fn versioned_digest(content: &[u8; 32], version: Version) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(content);
    h.update(version.block_no.to_le_bytes());
    h.update(version.tx_index.to_le_bytes());
    h.finalize().into()
}

/// The committed key-value state of one peer. Cloning is cheap relative to
/// the data: keys and values are shared.
#[derive(Clone, Debug, Default)]
pub struct WorldState {
    entries: BTreeMap<Arc<str>, StateEntry>,
    height: u64,
    content_sum: DigestSum,
    full_sum: DigestSum,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of the next block to commit.
    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn set_height(&mut self, height: u64) {
        debug_assert!(height >= self.height);
        self.height = height;
    }

    pub fn get(&self, key: &str) -> Option<&StateEntry> {
        self.entries.get(key)
    }

    pub fn version(&self, key: &str) -> Option<Version> {
        self.entries.get(key).map(|e| e.version)
    }

    /// Writes (or with `None`, deletes) `key` at `version`.
    pub fn apply(&mut self, key: &str, value: Option<Arc<[u8]>>, version: Version) {
        if let Some(old) = self.entries.get(key) {
            let old_content = old.content_digest;
            let old_full = versioned_digest(&old_content, old.version);
            self.content_sum.sub(&old_content);
            self.full_sum.sub(&old_full);
        }
        match value {
            Some(value) => {
                let digest = content_digest(key, &value);
                self.content_sum.add(&digest);
                self.full_sum.add(&versioned_digest(&digest, version));
                let entry = StateEntry { value, version, content_digest: digest };
                match self.entries.get_mut(key) {
                    Some(slot) => *slot = entry,
                    None => {
                        self.entries.insert(Arc::from(key), entry);
                    }
                }
            }
            None => {
                self.entries.remove(key);
            }
        }
    }

    /// Entries with `start <= key < end`, ascending.
    pub fn range<'a>(&'a self, start: &str, end: &str) -> impl DoubleEndedIterator<Item = (&'a str, &'a StateEntry)> + 'a {
        // BTreeMap::range panics on inverted bounds.
        let iter = (start < end).then(|| self.entries.range::<str, _>((Bound::Included(start), Bound::Excluded(end))));
        iter.into_iter().flatten().map(|(k, v)| (k.as_ref(), v))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &StateEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_ref(), v))
    }

    /// Digest over keys, values and versions.
    pub fn state_hash(&self) -> StateHash {
        self.full_sum.finish(b"state", self.entries.len())
    }

    /// Digest over keys and values only.
    pub fn content_hash(&self) -> StateHash {
        self.content_sum.finish(b"content", self.entries.len())
    }

    /// Recomputes [`state_hash`](Self::state_hash) from scratch.
    pub fn recompute_state_hash(&self) -> StateHash {
        let mut sum = DigestSum::default();
        for (key, entry) in &self.entries {
            sum.add(&versioned_digest(&content_digest(key, &entry.value), entry.version));
        }
        sum.finish(b"state", self.entries.len())
    }
}

impl PartialEq for WorldState {
    fn eq(&self, other: &Self) -> bool {
        self.height == other.height && self.entries == other.entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &str) -> Option<Arc<[u8]>> {
        Some(Arc::from(x.as_bytes()))
    }

    #[test]
    fn hash_tracks_content_independent_of_order() {
        let mut a = WorldState::new();
        a.apply("k1", v("one"), Version::new(1, 0));
        a.apply("k2", v("two"), Version::new(1, 1));
        let mut b = WorldState::new();
        b.apply("k2", v("two"), Version::new(1, 1));
        b.apply("k1", v("one"), Version::new(1, 0));
        assert_eq!(a.state_hash(), b.state_hash());
        assert_eq!(a.state_hash(), a.recompute_state_hash());

        b.apply("k1", v("uno"), Version::new(2, 0));
        assert_ne!(a.state_hash(), b.state_hash());
        b.apply("k1", v("one"), Version::new(1, 0));
        assert_eq!(a.state_hash(), b.state_hash());
    }

    #[test]
    fn content_hash_ignores_versions() {
        let mut a = WorldState::new();
        a.apply("k", v("x"), Version::new(1, 0));
        let mut b = WorldState::new();
        b.apply("k", v("x"), Version::new(9, 3));
        assert_eq!(a.content_hash(), b.content_hash());
        assert_ne!(a.state_hash(), b.state_hash());
    }

    #[test]
    fn delete_restores_hash() {
        let mut a = WorldState::new();
        a.apply("k", v("x"), Version::new(1, 0));
        let before = a.state_hash();
        a.apply("z", v("y"), Version::new(2, 0));
        a.apply("z", None, Version::new(3, 0));
        assert_eq!(a.state_hash(), before);
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn range_bounds() {
        let mut s = WorldState::new();
        for k in ["a", "b", "c", "d"] {
            s.apply(k, v(k), Version::default());
        }
        let keys: Vec<&str> = s.range("b", "d").map(|(k, _)| k).collect();
        assert_eq!(keys, ["b", "c"]);
        assert_eq!(s.range("c", "b").count(), 0);
        assert_eq!(s.range("c", "c").count(), 0);
        let rev: Vec<&str> = s.range("a", "z").rev().map(|(k, _)| k).collect();
        assert_eq!(rev, ["d", "c", "b", "a"]);
    }
}
