use super::rwset::{AccessStats, ReadWriteSet};
use super::state::WorldState;
use super::stub::{ChaincodeStub, TxContext};

/// Successful chaincode response. `rollback` marks an application-level
/// abort whose writes must be discarded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvokeResponse {
    pub payload: String,
    pub rollback: bool,
}

/// Smart contract executed by the peer during endorsement.
pub trait Chaincode {
    fn invoke(&self, stub: &mut dyn ChaincodeStub, function: &str, args: &[String]) -> Result<InvokeResponse, String>;
}

#[derive(Clone, Debug)]
pub struct Endorsement {
    pub rwset: ReadWriteSet,
    pub stats: AccessStats,
    pub response: Result<InvokeResponse, String>,
}

impl Endorsement {
    pub fn is_rollback(&self) -> bool {
        matches!(&self.response, Ok(r) if r.rollback)
    }
}

/// Simulates `function(args)` against `snapshot` without changing it.
/// Rolled back and failed executions carry an empty write set.
pub fn endorse(chaincode: &dyn Chaincode, snapshot: &WorldState, function: &str, args: &[String]) -> Endorsement {
    let mut ctx = TxContext::new(snapshot);
    let response = chaincode.invoke(&mut ctx, function, args);
    let (mut rwset, mut stats) = ctx.finish();
    if !matches!(&response, Ok(r) if !r.rollback) {
        rwset.clear_writes();
        stats.write_count = 0;
        stats.bytes_written = 0;
    }
    Endorsement { rwset, stats, response }
}
