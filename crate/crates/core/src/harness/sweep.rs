use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::plan::{BenchmarkPlan, ClockMode, RoundKind};
use super::{local_workers, run_execution_round, run_wall_clock_round, ExecutionResult, HarnessError};
use crate::ledger::WorldState;
use crate::metrics::{error_profile, ErrorProfile, RunSummary};

/// One configuration of the terminal-count grid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub series: String,
    pub terminals_per_warehouse: u32,
}

/// 10 to 100 terminals in steps of 10, then 100 to 400 in steps of 50.
/// Both series contain 100, giving 17 configurations.
pub fn sweep_grid() -> Vec<SweepPoint> {
    let fine = (10..=100).step_by(10).map(|n| SweepPoint { series: "fine".into(), terminals_per_warehouse: n });
    let coarse = (100..=400).step_by(50).map(|n| SweepPoint { series: "coarse".into(), terminals_per_warehouse: n });
    fine.chain(coarse).collect()
}

#[derive(Debug)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// One run per distinct terminal count, ascending.
    pub runs: Vec<ExecutionResult>,
    pub error_profile: Vec<ErrorProfile>,
}

impl SweepResult {
    pub fn summaries(&self) -> Vec<RunSummary> {
        self.runs.iter().map(|r| r.summary.clone()).collect()
    }
}

/// Runs the first execution round of `template` once per distinct
/// terminal count in `points`, each from a copy of `loaded`.
pub fn run_sweep(template: &BenchmarkPlan, loaded: &WorldState, points: &[SweepPoint], clock: ClockMode) -> Result<SweepResult, HarnessError> {
    let round = template
        .rounds
        .iter()
        .position(|r| r.kind == RoundKind::Execute)
        .ok_or_else(|| HarnessError::InvalidPlan("sweep needs an execution round".into()))?;
    let distinct: BTreeMap<u32, ()> = points.iter().map(|p| (p.terminals_per_warehouse, ())).collect();
    let mut runs = Vec::new();
    for &tpw in distinct.keys() {
        let mut plan = template.clone();
        plan.workload.terminals_per_warehouse = tpw;
        plan.rounds[round].label = format!("t{}", plan.workload.terminal_count());
        let workers = plan.rounds[round].worker_count;
        let (result, _) = match clock {
            ClockMode::Virtual => run_execution_round(&plan, round, loaded.clone(), local_workers(workers))?,
            ClockMode::Wall { speedup } => run_wall_clock_round(&plan, round, loaded.clone(), speedup)?,
        };
        runs.push(result);
    }
    let summaries: Vec<RunSummary> = runs.iter().map(|r| r.summary.clone()).collect();
    Ok(SweepResult { points: points.to_vec(), error_profile: error_profile(&summaries), runs })
}
