use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::state::{Version, WorldState};

/// A range query as validated at commit: the effective `[start, end)` bounds
/// and every committed `(key, version)` seen inside them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RangeRead {
    pub start: String,
    pub end: String,
    pub observed: Vec<(String, Version)>,
}

/// Keys read (with the version observed, `None` if absent) and keys written
/// (`None` value = delete) by one transaction execution.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReadWriteSet {
    pub reads: BTreeMap<String, Option<Version>>,
    pub writes: BTreeMap<String, Option<Arc<[u8]>>>,
    pub range_reads: Vec<RangeRead>,
}

/// Data-access counters of one execution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessStats {
    pub read_count: u64,
    pub write_count: u64,
    pub range_read_count: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
}

impl ReadWriteSet {
    pub fn is_read_only(&self) -> bool {
        self.writes.is_empty()
    }

    pub fn bytes_written(&self) -> u64 {
        self.writes.values().map(|v| v.as_ref().map_or(0, |v| v.len() as u64)).sum()
    }

    /// Approximate envelope size used by the orderer's byte limit.
    pub fn size_bytes(&self) -> u64 {
        let reads: u64 = self.reads.keys().map(|k| k.len() as u64 + 12).sum();
        let writes: u64 = self.writes.iter().map(|(k, v)| k.len() as u64 + v.as_ref().map_or(0, |v| v.len() as u64)).sum();
        let ranges: u64 = self
            .range_reads
            .iter()
            .map(|r| (r.start.len() + r.end.len()) as u64 + r.observed.iter().map(|(k, _)| k.len() as u64 + 12).sum::<u64>())
            .sum();
        reads + writes + ranges
    }

    pub fn clear_writes(&mut self) {
        self.writes.clear();
    }

    /// MVCC check against `state`: every read version must still be current
    /// and every range must still contain exactly the same keys and versions.
    pub fn validate(&self, state: &WorldState) -> bool {
        let points_ok = self.reads.iter().all(|(key, version)| state.version(key) == *version);
        points_ok
            && self.range_reads.iter().all(|range| {
                let mut current = state.range(&range.start, &range.end);
                let same = range.observed.iter().all(|(key, version)| match current.next() {
                    Some((k, entry)) => k == key && entry.version == *version,
                    None => false,
                });
                same && current.next().is_none()
            })
    }

    pub fn apply(&self, state: &mut WorldState, version: Version) {
        for (key, value) in &self.writes {
            state.apply(key, value.clone(), version);
        }
    }
}
