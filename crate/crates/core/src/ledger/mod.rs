//! Simulated execute-order-validate ledger: endorsement against snapshots,
//! block cutting, MVCC validation and commit.

mod endorse;
mod latency;
mod orderer;
mod rwset;
mod scripted;
mod sim;
mod state;
mod stub;

pub use endorse::{endorse, Chaincode, Endorsement, InvokeResponse};
pub use latency::{Contention, LatencyModel, PeerLoad, ServiceTime};
pub use orderer::{Block, BlockConfig, CutReason, Orderer};
pub use rwset::{AccessStats, RangeRead, ReadWriteSet};
pub use scripted::ScriptedLedger;
pub use sim::{
    validate_and_commit, BlockRecord, CommittedTx, LedgerConfig, LedgerEvent, LedgerService, LedgerSim, Proposal, TxId,
    TxOutcome, TxStatus, ValidationCode,
};
pub use state::{StateEntry, StateHash, Version, WorldState};
pub use stub::{ChaincodeStub, Direction, TxContext};
