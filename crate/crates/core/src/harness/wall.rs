use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::{Duration, Instant};

use super::plan::{prepare_round, BenchmarkPlan, DrivingMode, PreparedState, RoundKind};
use super::worker::{Worker, WorkerReport};
use super::{collect_result, DriveOutcome, ExecutionResult, HarnessError};
use crate::chaincode::TpccChaincode;
use crate::ledger::{BlockRecord, LedgerConfig, LedgerEvent, LedgerService, LedgerSim, Proposal, TxOutcome, WorldState};
use crate::time::SimTime;

/// Maps real elapsed time onto simulated time.
#[derive(Clone, Copy, Debug)]
pub struct WallClock {
    start: Instant,
    speedup: f64,
}

impl WallClock {
    pub fn start(speedup: f64) -> Self {
        assert!(speedup > 0.0, "speedup must be positive");
        WallClock { start: Instant::now(), speedup }
    }

    pub fn now(&self) -> SimTime {
        SimTime::from_secs_f64(self.start.elapsed().as_secs_f64() * self.speedup)
    }

    /// Real time left until simulated time `t`.
    pub fn real_until(&self, t: SimTime) -> Duration {
        Duration::from_secs_f64((t.signed_secs_since(self.now()) / self.speedup).max(0.0))
    }
}

enum ToLedger {
    Propose(Proposal, SimTime),
    Done,
}

/// Longest the ledger thread sleeps without checking the clock.
const LEDGER_TICK: Duration = Duration::from_millis(5);

/// Runs execution round `round` against the real clock: one thread per
/// worker multiplexer and one for the ledger, connected by channels.
/// Only duration-driven rounds are supported.
pub fn run_wall_clock_round(plan: &BenchmarkPlan, round: usize, state: WorldState, speedup: f64) -> Result<(ExecutionResult, WorldState), HarnessError> {
    plan.validate()?;
    let prepared = prepare_round(plan, round)?;
    let round_spec = &plan.rounds[round];
    if round_spec.kind != RoundKind::Execute {
        return Err(HarnessError::InvalidPlan(format!("round {round} is not an execution round")));
    }
    let DrivingMode::Duration { secs } = round_spec.mode else {
        return Err(HarnessError::InvalidPlan("wall-clock rounds are driven by duration".into()));
    };
    let end = SimTime::from_secs_f64(secs);
    let config = LedgerConfig { seed: prepared.ledger_seed, ..round_spec.ledger };
    let mut ledger = LedgerSim::with_state(TpccChaincode, config, state);
    let mut workers: Vec<Worker> = (0..round_spec.worker_count as usize).map(|i| Worker::new(&prepared, i)).collect::<Result<_, _>>()?;

    let clock = WallClock::start(speedup);
    let (to_ledger, ledger_rx) = mpsc::channel::<ToLedger>();
    let (outcome_txs, outcome_rxs): (Vec<Sender<TxOutcome>>, Vec<Receiver<TxOutcome>>) = workers.iter().map(|_| mpsc::channel()).unzip();

    let (reports, blocks, finished_at) = thread::scope(|scope| {
        let ledger_thread = scope.spawn(|| run_ledger(&mut ledger, &prepared, clock, ledger_rx, outcome_txs));
        let handles: Vec<_> = workers
            .iter_mut()
            .zip(outcome_rxs)
            .map(|(worker, rx)| {
                let tx = to_ledger.clone();
                scope.spawn(move || run_worker(worker, clock, end, rx, tx))
            })
            .collect();
        drop(to_ledger);
        let reports: Result<Vec<WorkerReport>, HarnessError> = handles.into_iter().map(|h| h.join().expect("worker thread panicked")).collect();
        let (blocks, finished_at) = ledger_thread.join().expect("ledger thread panicked");
        reports.map(|r| (r, blocks, finished_at))
    })?;

    if ledger.unresolved() > 0 {
        return Err(HarnessError::Unresolved(ledger.unresolved()));
    }
    if let Some(r) = reports.iter().find(|r| r.unresolved > 0) {
        return Err(HarnessError::Unresolved(r.unresolved));
    }
    let outcome = DriveOutcome { blocks, reports, dispatch_end: end, finished_at };
    let result = collect_result(plan, &prepared, outcome)?;
    Ok((result, ledger.into_state()))
}

fn route(events: Vec<LedgerEvent>, prepared: &PreparedState, outcome_txs: &[Sender<TxOutcome>], blocks: &mut Vec<BlockRecord>) {
    for event in events {
        match event {
            LedgerEvent::BlockCommitted(b) => blocks.push(b),
            LedgerEvent::Outcome(o) => {
                if let Some(w) = prepared.worker_of(o.tx_id.client) {
                    // A worker that already returned has nothing left to learn.
                    let _ = outcome_txs[w].send(o);
                }
            }
        }
    }
}

fn run_ledger(
    ledger: &mut LedgerSim<TpccChaincode>,
    prepared: &PreparedState,
    clock: WallClock,
    rx: Receiver<ToLedger>,
    outcome_txs: Vec<Sender<TxOutcome>>,
) -> (Vec<BlockRecord>, SimTime) {
    let mut blocks = Vec::new();
    let mut done = 0;
    let workers = outcome_txs.len();
    while done < workers {
        let wait = ledger.next_event_time().map_or(LEDGER_TICK, |t| clock.real_until(t).min(LEDGER_TICK));
        match rx.recv_timeout(wait) {
            Ok(ToLedger::Propose(proposal, at)) => {
                let at = at.max(ledger.now());
                route(ledger.advance_to(at), prepared, &outcome_txs, &mut blocks);
                ledger.propose(proposal, at);
            }
            Ok(ToLedger::Done) => done += 1,
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => break,
        }
        let now = clock.now().max(ledger.now());
        route(ledger.advance_to(now), prepared, &outcome_txs, &mut blocks);
    }
    ledger.close_round();
    // Nothing new can arrive: finish outstanding work without waiting.
    let mut finished_at = ledger.now();
    while let Some(t) = ledger.next_event_time() {
        route(ledger.advance_to(t), prepared, &outcome_txs, &mut blocks);
        finished_at = t;
    }
    (blocks, finished_at)
}

fn run_worker(worker: &mut Worker, clock: WallClock, end: SimTime, rx: Receiver<TxOutcome>, tx: Sender<ToLedger>) -> Result<WorkerReport, HarnessError> {
    worker.start(clock.now());
    'dispatch: loop {
        while let Ok(o) = rx.try_recv() {
            worker.deliver(&o, clock.now())?;
        }
        let now = clock.now();
        if now >= end {
            break;
        }
        let Some((request, sample)) = worker.queue_mut().pop_at(now) else {
            match rx.recv_timeout(clock.real_until(end)) {
                Ok(o) => worker.deliver(&o, clock.now())?,
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => break,
            }
            continue;
        };
        // Wait for the scheduled time, still taking in responses. A response
        // that schedules something earlier sends this request back.
        while clock.now() < request.scheduled_at {
            match rx.recv_timeout(clock.real_until(request.scheduled_at)) {
                Ok(o) => worker.deliver(&o, clock.now())?,
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => break 'dispatch,
            }
            if worker.queue_mut().next_time().is_some_and(|t| t < request.scheduled_at) {
                worker.queue_mut().push(request);
                continue 'dispatch;
            }
        }
        let at = clock.now();
        if at >= end {
            break;
        }
        let proposal = worker.dispatch(request, sample, at);
        if tx.send(ToLedger::Propose(proposal, at)).is_err() {
            break;
        }
    }
    worker.stop();
    let _ = tx.send(ToLedger::Done);
    drop(tx);
    for o in rx {
        worker.deliver(&o, o.finished_at)?;
    }
    Ok(worker.report())
}
