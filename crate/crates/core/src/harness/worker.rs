use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::plan::PreparedState;
use super::HarnessError;
use crate::chaincode::marshal;
use crate::domain::{InputGenerator, ProfileType};
use crate::ledger::{Proposal, TxId, TxOutcome};
use crate::metrics::MetricsRecord;
use crate::multiplexer::{PrecisionSample, ScheduledQueue};
use crate::terminal::{Terminal, TerminalRequest, TerminalStats};
use crate::time::SimTime;

/// Answer to a step: proposals to submit now and the worker's next due time.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepReply {
    pub proposals: Vec<Proposal>,
    pub next_due: Option<SimTime>,
}

/// What a worker hands back when its round ends.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkerReport {
    pub records: Vec<MetricsRecord>,
    pub samples: Vec<PrecisionSample>,
    pub stats: TerminalStats,
    /// Submissions that never received an outcome.
    pub unresolved: usize,
}

/// Manager-side handle of one worker, in-process or remote.
pub trait WorkerLink {
    /// Installs the round's shared state; returns the digest the worker
    /// computed over what it received.
    fn prepare(&mut self, prepared: &PreparedState, index: usize) -> Result<String, HarnessError>;
    /// Starts the terminals at `now`; returns the first due time.
    fn start(&mut self, now: SimTime) -> Result<Option<SimTime>, HarnessError>;
    /// Delivers `outcomes`, then releases every request due by `now`, at most
    /// `limit` of them.
    fn step(&mut self, now: SimTime, outcomes: Vec<TxOutcome>, limit: u64) -> Result<StepReply, HarnessError>;
    fn finish(&mut self) -> Result<WorkerReport, HarnessError>;
}

#[derive(Debug, Clone)]
struct Pending {
    profile: ProfileType,
    created_at: SimTime,
    submitted_at: SimTime,
}

/// The terminals of one worker and their multiplexer.
#[derive(Debug, Default)]
pub struct Worker {
    terminals: BTreeMap<u32, Terminal>,
    queue: ScheduledQueue,
    pending: HashMap<TxId, Pending>,
    records: Vec<MetricsRecord>,
    samples: Vec<PrecisionSample>,
    accepting: bool,
}

impl Worker {
    pub fn new(prepared: &PreparedState, index: usize) -> Result<Self, HarnessError> {
        let range = *prepared
            .assignments
            .get(index)
            .ok_or_else(|| HarnessError::Protocol(format!("no assignment for worker {index}")))?;
        let w = &prepared.workload;
        let generator = InputGenerator::new(w.warehouses, prepared.constants);
        let terminals = range
            .ids()
            .map(|id| (id, Terminal::new(id, prepared.terminal_seed, generator, w.timing, w.mix, w.retry)))
            .collect();
        Ok(Worker { terminals, accepting: true, ..Worker::default() })
    }

    pub fn terminal_count(&self) -> usize {
        self.terminals.len()
    }

    pub fn start(&mut self, now: SimTime) {
        for t in self.terminals.values_mut() {
            let request = t.start_staggered(now);
            self.queue.push(request);
        }
    }

    pub fn next_due(&self) -> Option<SimTime> {
        if self.accepting {
            self.queue.next_time()
        } else {
            None
        }
    }

    /// Stops releasing requests; later follow-ups are discarded.
    pub fn stop(&mut self) {
        self.accepting = false;
        self.queue.drain();
    }

    pub fn is_accepting(&self) -> bool {
        self.accepting
    }

    pub fn queue_mut(&mut self) -> &mut ScheduledQueue {
        &mut self.queue
    }

    /// Records the outcome and feeds it to the owning terminal.
    pub fn deliver(&mut self, outcome: &TxOutcome, now: SimTime) -> Result<(), HarnessError> {
        let tx_id = outcome.tx_id;
        let terminal = self.terminals.get_mut(&tx_id.client).ok_or(HarnessError::UnknownTerminal(tx_id))?;
        let pending = self.pending.remove(&tx_id).ok_or(HarnessError::UnknownTransaction(tx_id))?;
        let resolution = terminal.advance(tx_id, outcome.status, now)?;
        self.records.push(MetricsRecord {
            tx_id,
            profile: pending.profile,
            status: resolution.status,
            created_at: pending.created_at,
            submitted_at: pending.submitted_at,
            endorsed_at: outcome.endorsed_at,
            ordered_at: outcome.ordered_at,
            finished_at: outcome.finished_at,
            block_no: outcome.block_no,
            stats: outcome.stats,
        });
        if self.accepting {
            for request in resolution.follow_up {
                self.queue.push(request);
            }
        }
        Ok(())
    }

    /// Submits a popped request at `now`.
    pub fn dispatch(&mut self, request: TerminalRequest, sample: PrecisionSample, now: SimTime) -> Proposal {
        let terminal = self.terminals.get_mut(&request.terminal_id).expect("queued requests belong to local terminals");
        if let Some(next) = terminal.on_dispatched(&request, now) {
            self.queue.push(next);
        }
        let (function, args) = marshal(&request.input);
        let tx_id = request.tx_id();
        self.pending.insert(tx_id, Pending { profile: request.profile(), created_at: request.created_at, submitted_at: now });
        self.samples.push(sample);
        Proposal { tx_id, function: function.to_string(), args }
    }

    pub fn report(&mut self) -> WorkerReport {
        let stats = self.terminals.values().map(Terminal::stats).fold(TerminalStats::default(), |a, s| TerminalStats {
            business_requests: a.business_requests + s.business_requests,
            submissions: a.submissions + s.submissions,
            resubmissions: a.resubmissions + s.resubmissions,
            abandoned: a.abandoned + s.abandoned,
        });
        WorkerReport {
            records: std::mem::take(&mut self.records),
            samples: std::mem::take(&mut self.samples),
            stats,
            unresolved: self.pending.len(),
        }
    }

    /// Virtual-time step: deliver, then pop everything due by `now`.
    pub fn step(&mut self, now: SimTime, outcomes: &[TxOutcome], limit: u64) -> Result<StepReply, HarnessError> {
        for outcome in outcomes {
            self.deliver(outcome, now)?;
        }
        let mut proposals = Vec::new();
        if limit == 0 {
            self.stop();
        }
        while self.accepting && (proposals.len() as u64) < limit {
            let Some((request, sample)) = self.queue.pop_due(now) else { break };
            proposals.push(self.dispatch(request, sample, now));
        }
        Ok(StepReply { proposals, next_due: self.next_due() })
    }
}

/// In-process worker.
#[derive(Debug, Default)]
pub struct LocalWorker {
    worker: Option<Worker>,
}

impl LocalWorker {
    pub fn new() -> Self {
        Self::default()
    }

    fn worker(&mut self) -> Result<&mut Worker, HarnessError> {
        self.worker.as_mut().ok_or_else(|| HarnessError::Protocol("worker used before prepare".into()))
    }
}

impl WorkerLink for LocalWorker {
    fn prepare(&mut self, prepared: &PreparedState, index: usize) -> Result<String, HarnessError> {
        self.worker = Some(Worker::new(prepared, index)?);
        Ok(prepared.digest())
    }

    fn start(&mut self, now: SimTime) -> Result<Option<SimTime>, HarnessError> {
        let w = self.worker()?;
        w.start(now);
        Ok(w.next_due())
    }

    fn step(&mut self, now: SimTime, outcomes: Vec<TxOutcome>, limit: u64) -> Result<StepReply, HarnessError> {
        self.worker()?.step(now, &outcomes, limit)
    }

    fn finish(&mut self) -> Result<WorkerReport, HarnessError> {
        let report = self.worker()?.report();
        self.worker = None;
        Ok(report)
    }
}
