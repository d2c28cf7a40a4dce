use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::rwset::AccessStats;
use super::sim::{LedgerEvent, LedgerService, Proposal, TxId, TxOutcome, TxStatus};
use crate::time::{SimDuration, SimTime};

type Script = Box<dyn FnMut(&Proposal) -> TxStatus + Send>;

/// A ledger stand-in that answers every proposal with a status chosen by a
/// script after a fixed latency. Used to drive clients with known outcomes.
pub struct ScriptedLedger {
    script: Script,
    latency: SimDuration,
    pending: BinaryHeap<Reverse<(SimTime, TxId, TxStatus)>>,
    now: SimTime,
    closed: bool,
}

impl ScriptedLedger {
    pub fn new(latency: SimDuration, script: impl FnMut(&Proposal) -> TxStatus + Send + 'static) -> Self {
        ScriptedLedger { script: Box::new(script), latency, pending: BinaryHeap::new(), now: SimTime::ZERO, closed: false }
    }
}

impl LedgerService for ScriptedLedger {
    fn next_event_time(&self) -> Option<SimTime> {
        self.pending.peek().map(|Reverse((t, _, _))| *t)
    }

    fn advance_to(&mut self, until: SimTime) -> Vec<LedgerEvent> {
        let mut out = Vec::new();
        while let Some(Reverse((t, tx_id, status))) = self.pending.peek().copied() {
            if t > until {
                break;
            }
            self.pending.pop();
            let proposed_at = SimTime(t.0 - self.latency.0.min(t.0));
            out.push(LedgerEvent::Outcome(TxOutcome {
                tx_id,
                status,
                proposed_at,
                endorsed_at: Some(proposed_at),
                ordered_at: Some(proposed_at),
                finished_at: t,
                block_no: None,
                stats: AccessStats::default(),
                payload: None,
            }));
        }
        self.now = self.now.max(until);
        out
    }

    fn propose(&mut self, proposal: Proposal, at: SimTime) {
        self.now = at;
        let status = if self.closed { TxStatus::Rejected } else { (self.script)(&proposal) };
        let latency = if self.closed { SimDuration::ZERO } else { self.latency };
        self.pending.push(Reverse((at + latency, proposal.tx_id, status)));
    }

    fn close_round(&mut self) {
        self.closed = true;
    }

    fn open_round(&mut self) {
        self.closed = false;
    }

    fn unresolved(&self) -> usize {
        self.pending.len()
    }
}
