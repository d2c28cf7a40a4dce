//! Ordering service: batches submitted transactions into blocks.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::time::{SimDuration, SimTime};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockConfig {
    pub max_tx: usize,
    pub max_bytes: u64,
    pub block_time: SimDuration,
}

impl Default for BlockConfig {
    fn default() -> Self {
        BlockConfig { max_tx: 500, max_bytes: 2 * 1024 * 1024, block_time: SimDuration::from_millis(100) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutReason {
    Timeout,
    MaxCount,
    MaxBytes,
}

impl fmt::Display for CutReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CutReason::Timeout => "timeout",
            CutReason::MaxCount => "max-count",
            CutReason::MaxBytes => "max-bytes",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block<T> {
    pub block_no: u64,
    pub cut_reason: CutReason,
    pub cut_time: SimTime,
    pub transactions: Vec<T>,
}

#[derive(Debug)]
struct Pending<T> {
    tx: T,
    bytes: u64,
    arrived: SimTime,
}

/// Pending transactions in arrival order plus the cutting rules.
#[derive(Debug)]
pub struct Orderer<T> {
    config: BlockConfig,
    pending: VecDeque<Pending<T>>,
    pending_bytes: u64,
    next_block_no: u64,
}

impl<T> Orderer<T> {
    pub fn new(config: BlockConfig, first_block_no: u64) -> Self {
        assert!(config.max_tx > 0, "max_tx must be positive");
        Orderer { config, pending: VecDeque::new(), pending_bytes: 0, next_block_no: first_block_no }
    }

    pub fn config(&self) -> &BlockConfig {
        &self.config
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn next_block_no(&self) -> u64 {
        self.next_block_no
    }

    pub fn enqueue(&mut self, tx: T, bytes: u64, now: SimTime) {
        self.pending_bytes += bytes;
        self.pending.push_back(Pending { tx, bytes, arrived: now });
    }

    /// When the oldest pending transaction reaches the block time.
    pub fn deadline(&self) -> Option<SimTime> {
        self.pending.front().map(|p| p.arrived + self.config.block_time)
    }

    /// Cuts one block if any criterion holds at `now`.
    pub fn cut_block(&mut self, now: SimTime) -> Option<Block<T>> {
        let oldest = self.pending.front()?.arrived;
        let (reason, count) = if self.pending.len() >= self.config.max_tx {
            (CutReason::MaxCount, self.config.max_tx)
        } else if self.pending_bytes >= self.config.max_bytes {
            (CutReason::MaxBytes, self.pending.len())
        } else if now - oldest >= self.config.block_time {
            (CutReason::Timeout, self.pending.len())
        } else {
            return None;
        };
        let transactions: Vec<T> = self
            .pending
            .drain(..count)
            .map(|p| {
                self.pending_bytes -= p.bytes;
                p.tx
            })
            .collect();
        let block_no = self.next_block_no;
        self.next_block_no += 1;
        Some(Block { block_no, cut_reason: reason, cut_time: now, transactions })
    }
}
