//! Discrete-event simulation of one peer plus one ordering node.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::endorse::{endorse, Chaincode, Endorsement};
use super::latency::{LatencyModel, PeerLoad};
use super::orderer::{Block, BlockConfig, CutReason, Orderer};
use super::rwset::{AccessStats, ReadWriteSet};
use super::state::{Version, WorldState};
use crate::time::{SimDuration, SimTime};

/// Transaction identity: submitting client, its business request number and
/// the resubmission attempt. The derived order is the orderer's tie-break.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TxId {
    pub client: u32,
    pub seq: u64,
    pub attempt: u32,
}

impl TxId {
    pub fn new(client: u32, seq: u64, attempt: u32) -> Self {
        TxId { client, seq, attempt }
    }
}

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.client, self.seq, self.attempt)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub tx_id: TxId,
    pub function: String,
    pub args: Vec<String>,
}

/// Final status of a transaction as seen by its client.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TxStatus {
    Committed,
    BusinessRollback,
    MvccConflict,
    EndorsementTimeout,
    CommitTimeout,
    /// The chaincode returned an error during endorsement.
    EndorsementFailed,
    /// Conflicted after the client's retry budget was spent.
    Abandoned,
    /// Arrived after the round was closed.
    Rejected,
}

impl TxStatus {
    pub const ALL: [TxStatus; 8] = [
        TxStatus::Committed,
        TxStatus::BusinessRollback,
        TxStatus::MvccConflict,
        TxStatus::EndorsementTimeout,
        TxStatus::CommitTimeout,
        TxStatus::EndorsementFailed,
        TxStatus::Abandoned,
        TxStatus::Rejected,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TxStatus::Committed => "committed",
            TxStatus::BusinessRollback => "business-rollback",
            TxStatus::MvccConflict => "mvcc-conflict",
            TxStatus::EndorsementTimeout => "endorsement-timeout",
            TxStatus::CommitTimeout => "commit-timeout",
            TxStatus::EndorsementFailed => "endorsement-failed",
            TxStatus::Abandoned => "abandoned",
            TxStatus::Rejected => "rejected",
        }
    }

    pub fn is_invalidated(self) -> bool {
        matches!(self, TxStatus::MvccConflict | TxStatus::Abandoned)
    }
}

impl fmt::Display for TxStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TxStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TxStatus::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| format!("unknown status {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationCode {
    Valid,
    MvccConflict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TxOutcome {
    pub tx_id: TxId,
    pub status: TxStatus,
    pub proposed_at: SimTime,
    pub endorsed_at: Option<SimTime>,
    pub ordered_at: Option<SimTime>,
    pub finished_at: SimTime,
    pub block_no: Option<u64>,
    pub stats: AccessStats,
    pub payload: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommittedTx {
    pub proposal: Arc<Proposal>,
    pub code: ValidationCode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockRecord {
    pub block_no: u64,
    pub cut_reason: CutReason,
    pub cut_time: SimTime,
    pub committed_at: SimTime,
    pub txs: Vec<CommittedTx>,
}

impl BlockRecord {
    /// One line of the newline-delimited block dump.
    pub fn to_json_line(&self) -> String {
        let txs: Vec<serde_json::Value> = self
            .txs
            .iter()
            .map(|t| serde_json::json!({"tx_id": t.proposal.tx_id.to_string(), "function": t.proposal.function, "code": t.code}))
            .collect();
        serde_json::json!({
            "block_no": self.block_no,
            "cut_reason": self.cut_reason,
            "cut_time": self.cut_time,
            "committed_at": self.committed_at,
            "txs": txs,
        })
        .to_string()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LedgerEvent {
    Outcome(TxOutcome),
    BlockCommitted(BlockRecord),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerConfig {
    pub block: BlockConfig,
    pub latency: LatencyModel,
    pub endorsement_timeout: SimDuration,
    pub commit_timeout: SimDuration,
    pub seed: u64,
}

impl LedgerConfig {
    /// Calibrated latency model with deadlines short enough that an
    /// overloaded peer produces timeouts.
    pub fn calibrated() -> Self {
        LedgerConfig {
            latency: LatencyModel::calibrated(),
            endorsement_timeout: SimDuration::from_secs(1),
            commit_timeout: SimDuration::from_secs(2),
            ..Self::default()
        }
    }
}

impl Default for LedgerConfig {
    fn default() -> Self {
        LedgerConfig {
            block: BlockConfig::default(),
            latency: LatencyModel::default(),
            endorsement_timeout: SimDuration::from_secs(30),
            commit_timeout: SimDuration::from_secs(60),
            seed: 0,
        }
    }
}

/// What the harness needs from a ledger: accept proposals at the current
/// time and report events as simulated time advances.
pub trait LedgerService {
    /// Earliest time at which [`advance_to`](Self::advance_to) would yield
    /// something, or `None` when idle.
    fn next_event_time(&self) -> Option<SimTime>;
    /// Processes everything up to and including `until`.
    fn advance_to(&mut self, until: SimTime) -> Vec<LedgerEvent>;
    /// Requires that the ledger was advanced to `at`.
    fn propose(&mut self, proposal: Proposal, at: SimTime);
    /// Rejects later proposals; accepted ones still run to completion.
    fn close_round(&mut self);
    fn open_round(&mut self);
    /// Transactions whose client has not yet received an outcome.
    fn unresolved(&self) -> usize;
}

/// Validates `txs` in order against `state`, applying each valid write set
/// before the next transaction is checked.
pub fn validate_and_commit<'a, I>(state: &mut WorldState, block_no: u64, txs: I) -> Vec<ValidationCode>
where
    I: IntoIterator<Item = &'a ReadWriteSet>,
{
    let codes = txs
        .into_iter()
        .enumerate()
        .map(|(index, rwset)| {
            if rwset.validate(state) {
                rwset.apply(state, Version::new(block_no, index as u32));
                ValidationCode::Valid
            } else {
                ValidationCode::MvccConflict
            }
        })
        .collect();
    state.set_height(block_no + 1);
    codes
}

#[derive(Debug)]
struct OrderedTx {
    proposal: Arc<Proposal>,
    rwset: ReadWriteSet,
}

#[derive(Debug)]
struct InFlight {
    proposed_at: SimTime,
    endorsed_at: Option<SimTime>,
    ordered_at: Option<SimTime>,
    stats: AccessStats,
    payload: Option<String>,
    proposal: Arc<Proposal>,
    endorsement: Option<Endorsement>,
    submitted: Option<ReadWriteSet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    CommitDone,
    EndorsementDone,
    EndorserRelease,
    OrdererArrival,
    BlockTimer,
    EndorsementTimeout,
    CommitTimeout,
}

impl EventKind {
    fn class(self) -> u8 {
        match self {
            EventKind::CommitDone => 0,
            EventKind::EndorsementDone | EventKind::EndorserRelease | EventKind::OrdererArrival => 1,
            EventKind::BlockTimer => 2,
            EventKind::EndorsementTimeout => 3,
            EventKind::CommitTimeout => 4,
        }
    }
}

#[derive(Debug)]
struct Event {
    time: SimTime,
    kind: EventKind,
    tx: TxId,
    seq: u64,
}

impl Event {
    fn key(&self) -> (SimTime, u8, TxId, u64) {
        (self.time, self.kind.class(), self.tx, self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Single peer, single orderer. Chaincode runs when a proposal arrives, so
/// it observes exactly the state committed at that instant; the drawn
/// endorsement latency only delays the response.
pub struct LedgerSim<C> {
    chaincode: C,
    config: LedgerConfig,
    state: WorldState,
    rng: ChaCha8Rng,
    now: SimTime,
    events: BinaryHeap<Reverse<Event>>,
    event_seq: u64,
    ready: Vec<LedgerEvent>,
    orderer: Orderer<OrderedTx>,
    commit_queue: VecDeque<Block<OrderedTx>>,
    committing: bool,
    active_endorsements: u32,
    cpu_free_at: SimTime,
    inflight: HashMap<TxId, InFlight>,
    closed: bool,
    rejected: u64,
}

impl<C: Chaincode> LedgerSim<C> {
    pub fn new(chaincode: C, config: LedgerConfig) -> Self {
        Self::with_state(chaincode, config, WorldState::new())
    }

    /// Starts from an existing committed state; blocks continue at its height.
    pub fn with_state(chaincode: C, config: LedgerConfig, mut state: WorldState) -> Self {
        if state.height() == 0 {
            state.set_height(1);
        }
        LedgerSim {
            chaincode,
            orderer: Orderer::new(config.block, state.height()),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            state,
            now: SimTime::ZERO,
            events: BinaryHeap::new(),
            event_seq: 0,
            ready: Vec::new(),
            commit_queue: VecDeque::new(),
            committing: false,
            active_endorsements: 0,
            cpu_free_at: SimTime::ZERO,
            inflight: HashMap::new(),
            closed: false,
            rejected: 0,
        }
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn into_state(self) -> WorldState {
        self.state
    }

    pub fn config(&self) -> &LedgerConfig {
        &self.config
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn chaincode(&self) -> &C {
        &self.chaincode
    }

    pub fn active_endorsements(&self) -> u32 {
        self.active_endorsements
    }

    /// Submissions ignored because the round was closed.
    pub fn rejected_count(&self) -> u64 {
        self.rejected
    }

    pub fn is_idle(&self) -> bool {
        self.events.is_empty() && self.ready.is_empty()
    }

    fn peer_load(&self) -> PeerLoad {
        PeerLoad { active_endorsements: self.active_endorsements, cpu_free_at: self.cpu_free_at }
    }

    fn schedule(&mut self, time: SimTime, kind: EventKind, tx: TxId) {
        self.event_seq += 1;
        self.events.push(Reverse(Event { time, kind, tx, seq: self.event_seq }));
    }

    fn set_now(&mut self, at: SimTime) {
        assert!(at >= self.now, "ledger time cannot go backwards ({at} < {})", self.now);
        debug_assert!(self.events.peek().is_none_or(|Reverse(e)| e.time >= at), "ledger not advanced to {at}");
        self.now = at;
    }

    fn reject(&mut self, tx_id: TxId, at: SimTime) {
        self.rejected += 1;
        self.ready.push(LedgerEvent::Outcome(TxOutcome {
            tx_id,
            status: TxStatus::Rejected,
            proposed_at: at,
            endorsed_at: None,
            ordered_at: None,
            finished_at: at,
            block_no: None,
            stats: AccessStats::default(),
            payload: None,
        }));
    }

    /// Hands an already endorsed transaction to the ordering service.
    pub fn submit_endorsed(&mut self, proposal: Proposal, rwset: ReadWriteSet, at: SimTime) {
        self.set_now(at);
        let tx_id = proposal.tx_id;
        if self.closed {
            self.reject(tx_id, at);
            return;
        }
        let proposal = Arc::new(proposal);
        self.inflight.insert(
            tx_id,
            InFlight {
                proposed_at: at,
                endorsed_at: Some(at),
                ordered_at: None,
                stats: AccessStats::default(),
                payload: None,
                proposal,
                endorsement: None,
                submitted: Some(rwset),
            },
        );
        self.schedule(at, EventKind::OrdererArrival, tx_id);
    }

    fn enqueue_for_ordering(&mut self, proposal: Arc<Proposal>, rwset: ReadWriteSet) {
        let tx_id = proposal.tx_id;
        let was_empty = self.orderer.pending_len() == 0;
        let bytes = rwset.size_bytes();
        self.orderer.enqueue(OrderedTx { proposal, rwset }, bytes, self.now);
        self.schedule(self.now + self.config.commit_timeout, EventKind::CommitTimeout, tx_id);
        if was_empty {
            if let Some(deadline) = self.orderer.deadline() {
                self.schedule(deadline, EventKind::BlockTimer, TxId::default());
            }
        }
        self.try_cut();
    }

    fn try_cut(&mut self) {
        let mut cut = false;
        while let Some(block) = self.orderer.cut_block(self.now) {
            for tx in &block.transactions {
                if let Some(f) = self.inflight.get_mut(&tx.proposal.tx_id) {
                    f.ordered_at = Some(self.now);
                }
            }
            self.commit_queue.push_back(block);
            cut = true;
        }
        if cut {
            if let Some(deadline) = self.orderer.deadline() {
                self.schedule(deadline, EventKind::BlockTimer, TxId::default());
            }
            self.start_commit();
        }
    }

    fn start_commit(&mut self) {
        if self.committing {
            return;
        }
        if let Some(block) = self.commit_queue.front() {
            let n = block.transactions.len();
            let mut load = self.peer_load();
            let duration = self.config.latency.commit_duration(n, self.now, &mut load, &mut self.rng);
            self.cpu_free_at = load.cpu_free_at;
            self.committing = true;
            self.schedule(self.now + duration, EventKind::CommitDone, TxId::default());
        }
    }

    fn finish_commit(&mut self) {
        self.committing = false;
        let block = self.commit_queue.pop_front().expect("commit in progress");
        let codes = validate_and_commit(&mut self.state, block.block_no, block.transactions.iter().map(|t| &t.rwset));
        let txs: Vec<CommittedTx> = block
            .transactions
            .into_iter()
            .zip(codes)
            .map(|(tx, code)| CommittedTx { proposal: tx.proposal, code })
            .collect();
        self.ready.push(LedgerEvent::BlockCommitted(BlockRecord {
            block_no: block.block_no,
            cut_reason: block.cut_reason,
            cut_time: block.cut_time,
            committed_at: self.now,
            txs: txs.clone(),
        }));
        for tx in txs {
            let status = match tx.code {
                ValidationCode::Valid => TxStatus::Committed,
                ValidationCode::MvccConflict => TxStatus::MvccConflict,
            };
            self.resolve(tx.proposal.tx_id, status, Some(block.block_no));
        }
        self.start_commit();
    }

    fn resolve(&mut self, tx_id: TxId, status: TxStatus, block_no: Option<u64>) {
        if let Some(f) = self.inflight.remove(&tx_id) {
            self.ready.push(LedgerEvent::Outcome(TxOutcome {
                tx_id,
                status,
                proposed_at: f.proposed_at,
                endorsed_at: f.endorsed_at,
                ordered_at: f.ordered_at,
                finished_at: self.now,
                block_no,
                stats: f.stats,
                payload: f.payload,
            }));
        }
    }

    fn handle(&mut self, event: Event) {
        match event.kind {
            EventKind::CommitDone => self.finish_commit(),
            EventKind::EndorserRelease => self.active_endorsements -= 1,
            EventKind::EndorsementDone => {
                self.active_endorsements -= 1;
                let Some(f) = self.inflight.get_mut(&event.tx) else { return };
                f.endorsed_at = Some(self.now);
                let endorsement = f.endorsement.take().expect("endorsement result");
                let proposal = f.proposal.clone();
                match endorsement.response {
                    Err(message) => {
                        f.payload = Some(message);
                        self.resolve(event.tx, TxStatus::EndorsementFailed, None);
                    }
                    Ok(r) if r.rollback => {
                        f.payload = Some(r.payload);
                        self.resolve(event.tx, TxStatus::BusinessRollback, None);
                    }
                    Ok(r) => {
                        f.payload = Some(r.payload);
                        self.enqueue_for_ordering(proposal, endorsement.rwset);
                    }
                }
            }
            EventKind::OrdererArrival => {
                let Some(f) = self.inflight.get_mut(&event.tx) else { return };
                let rwset = f.submitted.take().expect("submitted read-write set");
                let proposal = f.proposal.clone();
                self.enqueue_for_ordering(proposal, rwset);
            }
            EventKind::BlockTimer => self.try_cut(),
            EventKind::EndorsementTimeout => self.resolve(event.tx, TxStatus::EndorsementTimeout, None),
            EventKind::CommitTimeout => self.resolve(event.tx, TxStatus::CommitTimeout, None),
        }
    }
}

impl<C: Chaincode> LedgerService for LedgerSim<C> {
    fn next_event_time(&self) -> Option<SimTime> {
        if !self.ready.is_empty() {
            return Some(self.now);
        }
        self.events.peek().map(|Reverse(e)| e.time)
    }

    fn advance_to(&mut self, until: SimTime) -> Vec<LedgerEvent> {
        while let Some(Reverse(next)) = self.events.peek() {
            if next.time > until {
                break;
            }
            let Reverse(event) = self.events.pop().expect("peeked");
            self.now = self.now.max(event.time);
            self.handle(event);
        }
        self.now = self.now.max(until);
        std::mem::take(&mut self.ready)
    }

    fn propose(&mut self, proposal: Proposal, at: SimTime) {
        self.set_now(at);
        let tx_id = proposal.tx_id;
        if self.closed {
            self.reject(tx_id, at);
            return;
        }
        let endorsement = endorse(&self.chaincode, &self.state, &proposal.function, &proposal.args);
        self.active_endorsements += 1;
        let mut load = self.peer_load();
        let latency = self.config.latency.endorsement_latency(at, &mut load, &mut self.rng);
        self.cpu_free_at = load.cpu_free_at;
        let stats = endorsement.stats;
        let timed_out = latency > self.config.endorsement_timeout;
        self.inflight.insert(
            tx_id,
            InFlight {
                proposed_at: at,
                endorsed_at: None,
                ordered_at: None,
                stats,
                payload: None,
                proposal: Arc::new(proposal),
                endorsement: (!timed_out).then_some(endorsement),
                submitted: None,
            },
        );
        if timed_out {
            self.schedule(at + self.config.endorsement_timeout, EventKind::EndorsementTimeout, tx_id);
            self.schedule(at + latency, EventKind::EndorserRelease, tx_id);
        } else {
            self.schedule(at + latency, EventKind::EndorsementDone, tx_id);
        }
    }

    fn close_round(&mut self) {
        self.closed = true;
    }

    fn open_round(&mut self) {
        self.closed = false;
    }

    fn unresolved(&self) -> usize {
        self.inflight.len()
    }
}
