//! Manager/worker benchmark lifecycle: plans, rounds, prepared state, the
//! load round, execution rounds in virtual or wall-clock time, and sweeps.

mod load;
mod plan;
mod remote;
mod snapshot;
mod sweep;
mod wall;
mod worker;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub use load::{run_load_round, LoadOutcome};
pub use plan::{
    partition, prepare_round, BenchmarkPlan, ClockMode, DrivingMode, LoadParams, PreparedState, RoundKind, RoundPlan, TerminalRange, WorkloadParams,
};
pub use remote::{serve_connection, serve_worker, Envelope, RemoteWorker};
pub use snapshot::{read_snapshot, write_snapshot};
pub use sweep::{run_sweep, sweep_grid, SweepPoint, SweepResult};
pub use wall::{run_wall_clock_round, WallClock};
pub use worker::{LocalWorker, StepReply, Worker, WorkerLink, WorkerReport};

use crate::chaincode::TpccChaincode;
use crate::ledger::{BlockRecord, LedgerEvent, LedgerService, LedgerSim, TxId, TxOutcome, TxStatus, WorldState};
use crate::metrics::{sort_records, MetricsError, MetricsRecord, RunSummary, RunTag, Window};
use crate::multiplexer::PrecisionSample;
use crate::terminal::{TerminalError, TerminalStats};
use crate::time::{SimDuration, SimTime};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("load batch {batch} still failing after {attempts} attempts (last status {status})")]
    LoadAborted { batch: u64, attempts: u32, status: TxStatus },
    #[error("worker {worker} crashed: {reason}")]
    WorkerCrashed { worker: usize, reason: String },
    #[error("worker {worker} prepared state digest {got} differs from {expected}")]
    PreparedMismatch { worker: usize, expected: String, got: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("outcome for {0} has no local terminal")]
    UnknownTerminal(TxId),
    #[error("outcome for {0} matches no submission")]
    UnknownTransaction(TxId),
    #[error("{0} transactions were never resolved")]
    Unresolved(usize),
    #[error(transparent)]
    Terminal(#[from] TerminalError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Snapshot { path: PathBuf, message: String },
}

/// Everything one execution round produced.
#[derive(Debug, Clone)]
pub struct ExecutionResult {
    pub label: String,
    pub prepared_digest: String,
    pub workers: u32,
    pub terminals: u32,
    pub warehouses: u32,
    /// Sorted by submission time, then transaction id.
    pub records: Vec<MetricsRecord>,
    pub samples: Vec<PrecisionSample>,
    pub blocks: Vec<BlockRecord>,
    pub stats: TerminalStats,
    /// When dispatching stopped.
    pub dispatch_end: SimTime,
    /// When the last transaction resolved.
    pub finished_at: SimTime,
    pub window: Window,
    pub summary: RunSummary,
}

/// Outcome of the manager's event loop.
#[derive(Debug, Default)]
pub struct DriveOutcome {
    pub blocks: Vec<BlockRecord>,
    pub reports: Vec<WorkerReport>,
    pub dispatch_end: SimTime,
    pub finished_at: SimTime,
}

/// Runs one execution round against `ledger` in virtual time. At each
/// instant, ledger events are processed first, then workers in index order.
pub fn drive<L: LedgerService + ?Sized>(
    ledger: &mut L,
    workers: &mut [Box<dyn WorkerLink>],
    prepared: &PreparedState,
    mode: DrivingMode,
) -> Result<DriveOutcome, HarnessError> {
    let expected = prepared.digest();
    for (i, w) in workers.iter_mut().enumerate() {
        let got = w.prepare(prepared, i)?;
        if got != expected {
            return Err(HarnessError::PreparedMismatch { worker: i, expected, got });
        }
    }
    ledger.open_round();
    let mut due: Vec<Option<SimTime>> = Vec::with_capacity(workers.len());
    for w in workers.iter_mut() {
        due.push(w.start(SimTime::ZERO)?);
    }

    let end = match mode {
        DrivingMode::Duration { secs } => Some(SimTime::from_secs_f64(secs)),
        _ => None,
    };
    let budget = match mode {
        DrivingMode::TxCount { count } => count,
        _ => u64::MAX,
    };
    let mut dispatched = 0u64;
    let mut open = true;
    let mut out = DriveOutcome::default();
    let mut inbox: Vec<Vec<TxOutcome>> = vec![Vec::new(); workers.len()];

    let close = |ledger: &mut L, open: &mut bool, out: &mut DriveOutcome, at: SimTime| {
        *open = false;
        out.dispatch_end = at;
        ledger.close_round();
    };
    if budget == 0 {
        close(ledger, &mut open, &mut out, SimTime::ZERO);
    }

    loop {
        let next_worker = if open { due.iter().flatten().min().copied() } else { None };
        if open {
            if let (Some(end), Some(t)) = (end, next_worker) {
                if t >= end {
                    close(ledger, &mut open, &mut out, end);
                }
            }
        }
        let next_worker = if open { next_worker } else { None };
        let Some(now) = [next_worker, ledger.next_event_time()].into_iter().flatten().min() else {
            if open {
                close(ledger, &mut open, &mut out, end.unwrap_or(SimTime::ZERO));
            }
            break;
        };

        for event in ledger.advance_to(now) {
            match event {
                LedgerEvent::BlockCommitted(block) => out.blocks.push(block),
                LedgerEvent::Outcome(outcome) => {
                    let worker = prepared.worker_of(outcome.tx_id.client).ok_or(HarnessError::UnknownTerminal(outcome.tx_id))?;
                    inbox[worker].push(outcome);
                }
            }
        }
        out.finished_at = now;

        for (i, w) in workers.iter_mut().enumerate() {
            let is_due = open && due[i].is_some_and(|t| t <= now);
            if inbox[i].is_empty() && !is_due {
                continue;
            }
            let limit = if open { budget - dispatched } else { 0 };
            let reply = w.step(now, std::mem::take(&mut inbox[i]), limit)?;
            due[i] = reply.next_due;
            dispatched += reply.proposals.len() as u64;
            for proposal in reply.proposals {
                ledger.propose(proposal, now);
            }
            if open && dispatched >= budget {
                close(ledger, &mut open, &mut out, now + SimDuration(1));
            }
        }
    }

    if ledger.unresolved() > 0 {
        return Err(HarnessError::Unresolved(ledger.unresolved()));
    }
    for w in workers.iter_mut() {
        let report = w.finish()?;
        if report.unresolved > 0 {
            return Err(HarnessError::Unresolved(report.unresolved));
        }
        out.reports.push(report);
    }
    Ok(out)
}

/// Assembles the round result from the workers' reports.
pub fn collect_result(plan: &BenchmarkPlan, prepared: &PreparedState, outcome: DriveOutcome) -> Result<ExecutionResult, HarnessError> {
    let round = &plan.rounds[prepared.round];
    let mut records = Vec::new();
    let mut samples = Vec::new();
    let mut stats = TerminalStats::default();
    for r in outcome.reports {
        records.extend(r.records);
        samples.extend(r.samples);
        stats.business_requests += r.stats.business_requests;
        stats.submissions += r.stats.submissions;
        stats.resubmissions += r.stats.resubmissions;
        stats.abandoned += r.stats.abandoned;
    }
    sort_records(&mut records);
    samples.sort_by_key(|s| (s.t1, s.terminal_id, s.t2));
    let start = SimTime::from_secs_f64(round.warmup_secs);
    let window = Window::new(start, outcome.dispatch_end.max(start + SimDuration(1)));
    let tag = RunTag {
        label: round.label.clone(),
        warehouses: plan.workload.warehouses,
        terminals: prepared.terminal_count(),
        workers: round.worker_count,
    };
    let summary = RunSummary::compute(tag, &records, &samples, window)?;
    Ok(ExecutionResult {
        label: round.label.clone(),
        prepared_digest: prepared.digest(),
        workers: round.worker_count,
        terminals: prepared.terminal_count(),
        warehouses: plan.workload.warehouses,
        records,
        samples,
        blocks: outcome.blocks,
        stats,
        dispatch_end: outcome.dispatch_end,
        finished_at: outcome.finished_at,
        window,
        summary,
    })
}

pub fn local_workers(count: u32) -> Vec<Box<dyn WorkerLink>> {
    (0..count).map(|_| Box::new(LocalWorker::new()) as Box<dyn WorkerLink>).collect()
}

/// Runs execution round `round` of `plan` in virtual time on top of
/// `state`, with the given workers. Returns the result and the final state.
pub fn run_execution_round(
    plan: &BenchmarkPlan,
    round: usize,
    state: WorldState,
    mut workers: Vec<Box<dyn WorkerLink>>,
) -> Result<(ExecutionResult, WorldState), HarnessError> {
    plan.validate()?;
    let prepared = prepare_round(plan, round)?;
    let round_spec = &plan.rounds[round];
    if round_spec.kind != RoundKind::Execute {
        return Err(HarnessError::InvalidPlan(format!("round {round} is not an execution round")));
    }
    if workers.len() != round_spec.worker_count as usize {
        return Err(HarnessError::InvalidPlan(format!("round {round} needs {} workers, got {}", round_spec.worker_count, workers.len())));
    }
    let config = crate::ledger::LedgerConfig { seed: prepared.ledger_seed, ..round_spec.ledger };
    let mut ledger = LedgerSim::with_state(TpccChaincode, config, state);
    let outcome = drive(&mut ledger, &mut workers, &prepared, round_spec.mode)?;
    let result = collect_result(plan, &prepared, outcome)?;
    Ok((result, ledger.into_state()))
}

/// Result of a whole plan.
#[derive(Debug)]
pub struct BenchmarkResult {
    pub load: Option<LoadOutcome>,
    pub rounds: Vec<ExecutionResult>,
    pub state: WorldState,
}

/// Runs every round of `plan` with in-process workers in virtual time. With
/// `initial` given, the load round is skipped and execution starts from it.
pub fn run_benchmark(plan: &BenchmarkPlan, initial: Option<WorldState>) -> Result<BenchmarkResult, HarnessError> {
    plan.validate()?;
    let mut state = initial;
    let mut load = None;
    let mut rounds = Vec::new();
    for (i, round) in plan.rounds.iter().enumerate() {
        match round.kind {
            RoundKind::Load => {
                if state.is_none() {
                    let prepared = prepare_round(plan, i)?;
                    let outcome = run_load_round(plan, &prepared)?;
                    state = Some(outcome.state.clone());
                    load = Some(outcome);
                }
            }
            RoundKind::Execute => {
                let current = state.take().unwrap_or_default();
                let (result, next) = run_execution_round(plan, i, current, local_workers(round.worker_count))?;
                rounds.push(result);
                state = Some(next);
            }
        }
    }
    Ok(BenchmarkResult { load, rounds, state: state.unwrap_or_default() })
}

#[cfg(test)]
mod tests;
