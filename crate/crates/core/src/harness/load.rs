use std::collections::BTreeMap;

use super::plan::{BenchmarkPlan, PreparedState, RoundKind};
use super::HarnessError;
use crate::chaincode::{marshal_rows, TpccChaincode, INIT_ENTITIES};
use crate::domain::{Population, PopulationCounts, Row};
use crate::ledger::{LedgerConfig, LedgerEvent, LedgerService, LedgerSim, Proposal, TxId, TxStatus, ValidationCode, WorldState};
use crate::time::SimTime;

/// Client id of the loading worker.
pub const LOADER_CLIENT: u32 = 0;

#[derive(Debug, Clone)]
pub struct LoadOutcome {
    pub state: WorldState,
    /// Rows streamed through the pipeline, by table.
    pub counts: PopulationCounts,
    pub batches: u64,
    pub resubmissions: u64,
    pub blocks: u64,
    /// Simulated time of the completion signal.
    pub signaled_at: SimTime,
}

struct Batch {
    args: Vec<String>,
    attempt: u32,
}

/// Streams the initial population through endorsement, ordering and commit
/// as create transactions, and returns once every batch is committed.
pub fn run_load_round(plan: &BenchmarkPlan, prepared: &PreparedState) -> Result<LoadOutcome, HarnessError> {
    let round = plan.rounds.get(prepared.round).ok_or_else(|| HarnessError::InvalidPlan("missing load round".into()))?;
    if round.kind != RoundKind::Load {
        return Err(HarnessError::InvalidPlan(format!("round {} is not the load round", prepared.round)));
    }
    let config = LedgerConfig { seed: prepared.ledger_seed, ..round.ledger };
    let mut ledger = LedgerSim::new(TpccChaincode, config);
    let population = Population::new(plan.workload.warehouses, prepared.population_seed, prepared.load_constants);
    let mut loader = Loader {
        rows: population,
        counts: PopulationCounts::default(),
        batch_size: plan.load.batch_size,
        window: plan.load.window,
        max_retries: plan.load.max_retries,
        inflight: BTreeMap::new(),
        next_seq: 0,
        resubmissions: 0,
        exhausted: false,
    };

    let mut now = SimTime::ZERO;
    let mut blocks = 0u64;
    loader.refill(&mut ledger, now);
    while !loader.is_done() {
        let Some(t) = ledger.next_event_time() else {
            return Err(HarnessError::Protocol("load stalled with batches in flight".into()));
        };
        now = t;
        let mut retry: Vec<(u64, TxStatus)> = Vec::new();
        for event in ledger.advance_to(now) {
            match event {
                LedgerEvent::BlockCommitted(block) => {
                    blocks += 1;
                    for tx in block.txs.iter().filter(|tx| tx.proposal.tx_id.client == LOADER_CLIENT) {
                        let seq = tx.proposal.tx_id.seq;
                        match tx.code {
                            ValidationCode::Valid => {
                                loader.inflight.remove(&seq);
                            }
                            ValidationCode::MvccConflict => retry.push((seq, TxStatus::MvccConflict)),
                        }
                    }
                }
                // Committed and conflicting transactions are settled by their
                // block; a commit timeout only means the answer is late.
                LedgerEvent::Outcome(o) => match o.status {
                    TxStatus::Committed | TxStatus::MvccConflict | TxStatus::CommitTimeout => {}
                    status => retry.push((o.tx_id.seq, status)),
                },
            }
        }
        for (seq, status) in retry {
            loader.resubmit(&mut ledger, seq, status, now)?;
        }
        loader.refill(&mut ledger, now);
    }
    // Let stale timers run out so the ledger is quiescent.
    while let Some(t) = ledger.next_event_time() {
        ledger.advance_to(t);
    }
    let batches = loader.next_seq;
    Ok(LoadOutcome {
        counts: loader.counts,
        batches,
        resubmissions: loader.resubmissions,
        blocks,
        signaled_at: now,
        state: ledger.into_state(),
    })
}

struct Loader {
    rows: Population,
    counts: PopulationCounts,
    batch_size: usize,
    window: usize,
    max_retries: u32,
    inflight: BTreeMap<u64, Batch>,
    next_seq: u64,
    resubmissions: u64,
    exhausted: bool,
}

impl Loader {
    fn is_done(&self) -> bool {
        self.exhausted && self.inflight.is_empty()
    }

    fn next_batch(&mut self) -> Option<Vec<Row>> {
        let batch: Vec<Row> = self.rows.by_ref().take(self.batch_size).collect();
        if batch.is_empty() {
            self.exhausted = true;
            return None;
        }
        for row in &batch {
            self.counts.record(row);
        }
        Some(batch)
    }

    fn refill(&mut self, ledger: &mut LedgerSim<TpccChaincode>, now: SimTime) {
        while self.inflight.len() < self.window && !self.exhausted {
            let Some(rows) = self.next_batch() else { break };
            let seq = self.next_seq;
            self.next_seq += 1;
            let args = marshal_rows(&rows);
            ledger.propose(Proposal { tx_id: TxId::new(LOADER_CLIENT, seq, 0), function: INIT_ENTITIES.into(), args: args.clone() }, now);
            self.inflight.insert(seq, Batch { args, attempt: 0 });
        }
    }

    fn resubmit(&mut self, ledger: &mut LedgerSim<TpccChaincode>, seq: u64, status: TxStatus, now: SimTime) -> Result<(), HarnessError> {
        let Some(batch) = self.inflight.get_mut(&seq) else { return Ok(()) };
        if batch.attempt >= self.max_retries {
            return Err(HarnessError::LoadAborted { batch: seq, attempts: batch.attempt + 1, status });
        }
        batch.attempt += 1;
        self.resubmissions += 1;
        ledger.propose(Proposal { tx_id: TxId::new(LOADER_CLIENT, seq, batch.attempt), function: INIT_ENTITIES.into(), args: batch.args.clone() }, now);
        Ok(())
    }
}
