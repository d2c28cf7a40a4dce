//! The state API seen by chaincode during endorsement.

use std::ops::Bound;
use std::sync::Arc;

use super::rwset::{AccessStats, RangeRead, ReadWriteSet};
use super::state::WorldState;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

/// Byte-level state access for chaincode. Every call is captured in the
/// executing transaction's read-write set.
pub trait ChaincodeStub {
    fn get_state(&mut self, key: &str) -> Option<Arc<[u8]>>;
    fn put_state(&mut self, key: &str, value: Vec<u8>);
    fn delete_state(&mut self, key: &str);
    /// Keys in `[start, end)` in `direction` order, at most `limit` of them.
    fn get_state_range(&mut self, start: &str, end: &str, limit: Option<usize>, direction: Direction) -> Vec<(String, Arc<[u8]>)>;
}

/// Simulation context of one endorsement: reads come from a fixed snapshot,
/// writes are buffered and visible to the same execution's later reads.
pub struct TxContext<'a> {
    snapshot: &'a WorldState,
    rwset: ReadWriteSet,
    bytes_read: u64,
}

impl<'a> TxContext<'a> {
    pub fn new(snapshot: &'a WorldState) -> Self {
        TxContext { snapshot, rwset: ReadWriteSet::default(), bytes_read: 0 }
    }

    pub fn rwset(&self) -> &ReadWriteSet {
        &self.rwset
    }

    pub fn finish(self) -> (ReadWriteSet, AccessStats) {
        let stats = AccessStats {
            read_count: self.rwset.reads.len() as u64,
            write_count: self.rwset.writes.len() as u64,
            range_read_count: self.rwset.range_reads.len() as u64,
            bytes_read: self.bytes_read,
            bytes_written: self.rwset.bytes_written(),
        };
        (self.rwset, stats)
    }
}

impl ChaincodeStub for TxContext<'_> {
    fn get_state(&mut self, key: &str) -> Option<Arc<[u8]>> {
        if let Some(buffered) = self.rwset.writes.get(key) {
            return buffered.clone();
        }
        let entry = self.snapshot.get(key);
        if !self.rwset.reads.contains_key(key) {
            self.rwset.reads.insert(key.to_string(), entry.map(|e| e.version));
            self.bytes_read += entry.map_or(0, |e| e.value.len() as u64);
        }
        entry.map(|e| e.value.clone())
    }

    fn put_state(&mut self, key: &str, value: Vec<u8>) {
        self.rwset.writes.insert(key.to_string(), Some(Arc::from(value)));
    }

    fn delete_state(&mut self, key: &str) {
        self.rwset.writes.insert(key.to_string(), None);
    }

    fn get_state_range(&mut self, start: &str, end: &str, limit: Option<usize>, direction: Direction) -> Vec<(String, Arc<[u8]>)> {
        if start >= end || limit == Some(0) {
            return Vec::new();
        }
        let limit = limit.unwrap_or(usize::MAX);
        let buffered: Vec<(&String, &Option<Arc<[u8]>>)> = self
            .rwset
            .writes
            .range::<str, _>((Bound::Included(start), Bound::Excluded(end)))
            .collect();
        let committed = self.snapshot.range(start, end);
        let mut result: Vec<(String, Arc<[u8]>)> = Vec::new();
        let mut committed_bytes = 0u64;

        // Merge the committed snapshot with this execution's buffered writes;
        // buffered entries shadow committed ones.
        let mut push = |key: &str, value: Option<&Arc<[u8]>>, from_snapshot: bool, result: &mut Vec<(String, Arc<[u8]>)>| {
            if let Some(value) = value {
                if from_snapshot {
                    committed_bytes += value.len() as u64;
                }
                result.push((key.to_string(), value.clone()));
            }
        };
        match direction {
            Direction::Forward => merge(committed, buffered.into_iter(), |a, b| a < b, limit, &mut result, &mut push),
            Direction::Reverse => merge(committed.rev(), buffered.into_iter().rev(), |a, b| a > b, limit, &mut result, &mut push),
        }

        // A truncated scan is validated only over the part actually visited.
        let (eff_start, eff_end) = match (result.len() == limit, direction, result.last()) {
            (true, Direction::Forward, Some((last, _))) => (start.to_string(), format!("{last}\u{0}")),
            (true, Direction::Reverse, Some((last, _))) => (last.clone(), end.to_string()),
            _ => (start.to_string(), end.to_string()),
        };
        let observed = self.snapshot.range(&eff_start, &eff_end).map(|(k, e)| (k.to_string(), e.version)).collect();
        self.rwset.range_reads.push(RangeRead { start: eff_start, end: eff_end, observed });
        self.bytes_read += committed_bytes;
        result
    }
}

fn merge<'s, 'b, C, B, F, P>(committed: C, buffered: B, before: F, limit: usize, out: &mut Vec<(String, Arc<[u8]>)>, push: &mut P)
where
    C: Iterator<Item = (&'s str, &'s super::state::StateEntry)>,
    B: Iterator<Item = (&'b String, &'b Option<Arc<[u8]>>)>,
    F: Fn(&str, &str) -> bool,
    P: FnMut(&str, Option<&Arc<[u8]>>, bool, &mut Vec<(String, Arc<[u8]>)>),
{
    let mut committed = committed.peekable();
    let mut buffered = buffered.peekable();
    while out.len() < limit {
        match (committed.peek(), buffered.peek()) {
            (None, None) => break,
            (Some(_), None) => {
                let (k, e) = committed.next().expect("peeked");
                push(k, Some(&e.value), true, out);
            }
            (None, Some(_)) => {
                let (k, v) = buffered.next().expect("peeked");
                push(k, v.as_ref(), false, out);
            }
            (Some((ck, _)), Some((bk, _))) => {
                if *ck == bk.as_str() {
                    committed.next();
                    let (k, v) = buffered.next().expect("peeked");
                    push(k, v.as_ref(), false, out);
                } else if before(ck, bk) {
                    let (k, e) = committed.next().expect("peeked");
                    push(k, Some(&e.value), true, out);
                } else {
                    let (k, v) = buffered.next().expect("peeked");
                    push(k, v.as_ref(), false, out);
                }
            }
        }
    }
}
