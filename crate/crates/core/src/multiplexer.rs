//! Per-worker rate controller: a time-ordered queue of terminal requests and
//! the precision of each release.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::ProfileType;
use crate::stats::FiveNumber;
use crate::terminal::TerminalRequest;
use crate::time::SimTime;

#[derive(Debug, Clone)]
struct Queued(TerminalRequest);

impl Queued {
    fn key(&self) -> (SimTime, u32, u64, u32) {
        (self.0.scheduled_at, self.0.terminal_id, self.0.seq, self.0.attempt)
    }
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Requests ordered by scheduled time, then terminal id, sequence number
/// and attempt.
#[derive(Debug, Default, Clone)]
pub struct ScheduledQueue {
    heap: BinaryHeap<Reverse<Queued>>,
    pushed: u64,
    popped: u64,
}

/// One release: `d = t2 - t1` in seconds, negative when the request was
/// popped after its scheduled time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionSample {
    pub t1: SimTime,
    pub t2: SimTime,
    pub d: f64,
    pub terminal_id: u32,
    pub profile: ProfileType,
}

impl PrecisionSample {
    pub fn is_violation(&self) -> bool {
        self.d < 0.0
    }
}

impl ScheduledQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, request: TerminalRequest) {
        self.pushed += 1;
        self.heap.push(Reverse(Queued(request)));
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn pushed(&self) -> u64 {
        self.pushed
    }

    pub fn popped(&self) -> u64 {
        self.popped
    }

    pub fn next_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse(q)| q.0.scheduled_at)
    }

    /// Pops the earliest request at time `t1`. The caller waits `d` when it
    /// is positive and submits at once otherwise. `None` means idle.
    pub fn pop_at(&mut self, t1: SimTime) -> Option<(TerminalRequest, PrecisionSample)> {
        let Reverse(Queued(request)) = self.heap.pop()?;
        self.popped += 1;
        let sample = PrecisionSample {
            t1,
            t2: request.scheduled_at,
            d: request.scheduled_at.signed_secs_since(t1),
            terminal_id: request.terminal_id,
            profile: request.profile(),
        };
        Some((request, sample))
    }

    /// Pops the earliest request if it is due by `now`. In virtual time the
    /// pop happens exactly at the scheduled instant, so `d = 0`.
    pub fn pop_due(&mut self, now: SimTime) -> Option<(TerminalRequest, PrecisionSample)> {
        let due = self.next_time()?;
        if due > now {
            return None;
        }
        self.pop_at(due)
    }

    /// Removes everything still queued.
    pub fn drain(&mut self) -> Vec<TerminalRequest> {
        let mut out: Vec<TerminalRequest> = std::mem::take(&mut self.heap).into_sorted_vec().into_iter().map(|Reverse(q)| q.0).collect();
        out.reverse();
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PrecisionError {
    #[error("precision report needs at least one sample")]
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub samples: usize,
    pub summary: FiveNumber,
    pub violations: usize,
}

pub fn precision_report(samples: &[PrecisionSample]) -> Result<PrecisionReport, PrecisionError> {
    let summary = FiveNumber::of(samples.iter().map(|s| s.d)).map_err(|_| PrecisionError::Empty)?;
    Ok(PrecisionReport { samples: samples.len(), summary, violations: samples.iter().filter(|s| s.is_violation()).count() })
}

/// True when the medians, listed by increasing terminals per worker,
/// strictly decrease.
pub fn medians_strictly_decrease(reports: &[PrecisionReport]) -> bool {
    reports.windows(2).all(|w| w[1].summary.median < w[0].summary.median)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ProfileInput, StockLevelInput};
    use proptest::prelude::*;

    fn req(terminal_id: u32, seq: u64, at: f64) -> TerminalRequest {
        TerminalRequest {
            terminal_id,
            seq,
            attempt: 0,
            created_at: SimTime::ZERO,
            scheduled_at: SimTime::from_secs_f64(at),
            input: ProfileInput::StockLevel(StockLevelInput { w_id: 1, d_id: 1, threshold: 10 }),
            deferred: false,
        }
    }

    fn sample(d: f64) -> PrecisionSample {
        PrecisionSample { t1: SimTime::ZERO, t2: SimTime::ZERO, d, terminal_id: 1, profile: ProfileType::Payment }
    }

    #[test]
    fn pops_in_time_order() {
        let mut q = ScheduledQueue::new();
        for (i, t) in [5.0, 3.0, 9.0].into_iter().enumerate() {
            q.push(req(i as u32 + 1, 0, t));
        }
        let order: Vec<f64> = std::iter::from_fn(|| q.pop_at(SimTime::ZERO)).map(|(r, _)| r.scheduled_at.as_secs_f64()).collect();
        assert_eq!(order, [3.0, 5.0, 9.0]);
        assert!(q.pop_at(SimTime::ZERO).is_none());
    }

    #[test]
    fn ties_break_by_terminal_then_seq() {
        let mut q = ScheduledQueue::new();
        q.push(req(2, 0, 1.0));
        q.push(req(1, 1, 1.0));
        q.push(req(1, 0, 1.0));
        let order: Vec<(u32, u64)> = std::iter::from_fn(|| q.pop_at(SimTime::ZERO)).map(|(r, _)| (r.terminal_id, r.seq)).collect();
        assert_eq!(order, [(1, 0), (1, 1), (2, 0)]);
    }

    #[test]
    fn precision_sign() {
        let mut q = ScheduledQueue::new();
        q.push(req(1, 0, 5.0));
        let (_, s) = q.pop_at(SimTime::from_secs_f64(2.0)).unwrap();
        assert_eq!(s.d, 3.0);
        assert!(!s.is_violation());
        q.push(req(1, 1, 5.0));
        let (_, s) = q.pop_at(SimTime::from_secs_f64(5.5)).unwrap();
        assert!(s.is_violation());
    }

    #[test]
    fn virtual_pop_is_exact() {
        let mut q = ScheduledQueue::new();
        q.push(req(1, 0, 5.0));
        assert!(q.pop_due(SimTime::from_secs_f64(4.0)).is_none());
        let (_, s) = q.pop_due(SimTime::from_secs_f64(7.0)).unwrap();
        assert_eq!(s.d, 0.0);
    }

    #[test]
    fn report() {
        let r = precision_report(&[sample(1.0); 4]).unwrap();
        assert_eq!((r.summary.min, r.summary.median, r.summary.max, r.violations), (1.0, 1.0, 1.0, 0));
        let r = precision_report(&[sample(-0.1), sample(0.2), sample(0.3)]).unwrap();
        assert_eq!(r.violations, 1);
        assert_eq!(precision_report(&[]), Err(PrecisionError::Empty));
    }

    proptest! {
        #[test]
        fn nothing_is_lost_and_order_holds(times in prop::collection::vec(0u32..1000, 0..100), pops in 0usize..120) {
            let mut q = ScheduledQueue::new();
            for (i, t) in times.iter().enumerate() {
                q.push(req(i as u32 % 7 + 1, i as u64, f64::from(*t) / 10.0));
            }
            let mut last = SimTime::ZERO;
            for _ in 0..pops {
                if let Some((r, _)) = q.pop_at(SimTime::ZERO) {
                    prop_assert!(r.scheduled_at >= last);
                    last = r.scheduled_at;
                }
            }
            prop_assert_eq!(q.pushed(), q.popped() + q.len() as u64);
            let rest = q.drain();
            prop_assert!(rest.windows(2).all(|w| w[0].scheduled_at <= w[1].scheduled_at));
        }
    }
}
