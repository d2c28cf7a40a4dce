use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::domain::NurandConstants;
use crate::ledger::LedgerConfig;
use crate::terminal::{Mix, RetryPolicy, TimingConstraints};
use crate::time::SimDuration;

/// When a round ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DrivingMode {
    /// Dispatch stops at this simulated time.
    Duration { secs: f64 },
    /// Dispatch stops after this many submissions.
    TxCount { count: u64 },
    /// The round ends when its worker reports that all work is done.
    CompletionSignal,
}

/// How simulated time advances during execution rounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClockMode {
    /// Discrete-event time; fully deterministic.
    Virtual,
    /// Simulated time follows the real clock, `speedup` simulated seconds
    /// per real second.
    Wall { speedup: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundKind {
    Load,
    Execute,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadParams {
    pub warehouses: u32,
    pub terminals_per_warehouse: u32,
    pub timing: TimingConstraints,
    pub mix: Mix,
    pub retry: RetryPolicy,
}

impl WorkloadParams {
    pub fn terminal_count(&self) -> u32 {
        self.warehouses * self.terminals_per_warehouse
    }
}

impl Default for WorkloadParams {
    fn default() -> Self {
        WorkloadParams {
            warehouses: 1,
            terminals_per_warehouse: 10,
            timing: TimingConstraints::tpcc_standard(),
            mix: Mix::default(),
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadParams {
    /// Entities per create transaction.
    pub batch_size: usize,
    /// Create transactions in flight at once.
    pub window: usize,
    /// Resubmissions of one batch before the round is aborted.
    pub max_retries: u32,
}

impl Default for LoadParams {
    fn default() -> Self {
        LoadParams { batch_size: 50, window: 64, max_retries: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundPlan {
    pub label: String,
    pub kind: RoundKind,
    pub worker_count: u32,
    pub mode: DrivingMode,
    /// Submissions before this point are left out of the summary.
    pub warmup_secs: f64,
    pub ledger: LedgerConfig,
}

impl RoundPlan {
    pub fn load(ledger: LedgerConfig) -> Self {
        RoundPlan { label: "load".into(), kind: RoundKind::Load, worker_count: 1, mode: DrivingMode::CompletionSignal, warmup_secs: 0.0, ledger }
    }

    pub fn execute(label: impl Into<String>, worker_count: u32, mode: DrivingMode, warmup_secs: f64, ledger: LedgerConfig) -> Self {
        RoundPlan { label: label.into(), kind: RoundKind::Execute, worker_count, mode, warmup_secs, ledger }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPlan {
    pub seed: u64,
    pub workload: WorkloadParams,
    pub load: LoadParams,
    pub rounds: Vec<RoundPlan>,
}

impl BenchmarkPlan {
    /// A load round followed by one execution round.
    pub fn single_run(seed: u64, workload: WorkloadParams, workers: u32, mode: DrivingMode, warmup_secs: f64, ledger: LedgerConfig) -> Self {
        BenchmarkPlan {
            seed,
            workload,
            load: LoadParams::default(),
            rounds: vec![RoundPlan::load(LedgerConfig { latency: crate::ledger::LatencyModel::constant(), ..ledger }), RoundPlan::execute("run", workers, mode, warmup_secs, ledger)],
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |m: String| Err(HarnessError::InvalidPlan(m));
        if self.load.batch_size == 0 || self.load.window == 0 {
            return invalid("load batch size and window must be positive".into());
        }
        for (i, round) in self.rounds.iter().enumerate() {
            if round.worker_count == 0 {
                return invalid(format!("round {i} ({}): worker_count must be at least 1", round.label));
            }
            if round.ledger.block.block_time == SimDuration::ZERO {
                return invalid(format!("round {i} ({}): block_time must be positive", round.label));
            }
            match (round.kind, round.mode) {
                (RoundKind::Load, DrivingMode::CompletionSignal) if i == 0 => {}
                (RoundKind::Load, _) if i == 0 => return invalid("the load round ends on its completion signal".into()),
                (RoundKind::Load, _) => return invalid(format!("round {i} ({}): the load round must come first", round.label)),
                (RoundKind::Execute, DrivingMode::CompletionSignal) => {
                    return invalid(format!("round {i} ({}): execution rounds run by duration or transaction count", round.label))
                }
                (RoundKind::Execute, DrivingMode::Duration { secs }) if secs.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) => {
                    return invalid(format!("round {i} ({}): duration must be positive", round.label))
                }
                _ => {}
            }
            if round.warmup_secs < 0.0 {
                return invalid(format!("round {i} ({}): warmup must be non-negative", round.label));
            }
        }
        if self.rounds.first().is_some_and(|r| r.kind == RoundKind::Load) || self.rounds.is_empty() {
            Ok(())
        } else {
            invalid("a plan starts with its load round".into())
        }
    }
}

/// Terminal ids `first .. first + count` run on one worker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalRange {
    pub first: u32,
    pub count: u32,
}

impl TerminalRange {
    pub fn ids(&self) -> Range<u32> {
        self.first..self.first + self.count
    }

    pub fn contains(&self, id: u32) -> bool {
        self.ids().contains(&id)
    }
}

/// Splits terminals `1..=terminals` into `workers` contiguous ranges; the
/// first `terminals % workers` ranges get one extra terminal.
pub fn partition(terminals: u32, workers: u32) -> Vec<TerminalRange> {
    let base = terminals / workers;
    let extra = terminals % workers;
    let mut first = 1;
    (0..workers)
        .map(|i| {
            let count = base + u32::from(i < extra);
            let range = TerminalRange { first, count };
            first += count;
            range
        })
        .collect()
}

/// Everything a worker needs before a round starts, computed once by the
/// manager.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparedState {
    pub round: usize,
    pub label: String,
    pub population_seed: u64,
    pub terminal_seed: u64,
    pub ledger_seed: u64,
    pub load_constants: NurandConstants,
    /// Constants the round's input generators use.
    pub constants: NurandConstants,
    pub workload: WorkloadParams,
    pub assignments: Vec<TerminalRange>,
}

impl PreparedState {
    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("prepared state serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn terminal_count(&self) -> u32 {
        self.assignments.iter().map(|a| a.count).sum()
    }

    pub fn worker_of(&self, terminal_id: u32) -> Option<usize> {
        self.assignments.iter().position(|a| a.contains(terminal_id))
    }
}

/// Derives seeds and constants for `round` of `plan`.
pub fn prepare_round(plan: &BenchmarkPlan, round: usize) -> Result<PreparedState, HarnessError> {
    let round_spec = plan.rounds.get(round).ok_or_else(|| HarnessError::InvalidPlan(format!("no round {round}")))?;
    let mut base = ChaCha8Rng::seed_from_u64(plan.seed);
    let load_constants = NurandConstants::for_load(&mut base);
    let run_constants = NurandConstants::for_run(&load_constants, &mut base);
    let population_seed = base.random();
    let mut per_round = ChaCha8Rng::seed_from_u64(plan.seed);
    per_round.set_stream(round as u64 + 1);
    let terminal_seed = per_round.random();
    let ledger_seed = per_round.random();
    let (constants, assignments) = match round_spec.kind {
        RoundKind::Load => (load_constants, vec![TerminalRange { first: 0, count: 0 }]),
        RoundKind::Execute => (run_constants, partition(plan.workload.terminal_count(), round_spec.worker_count)),
    };
    Ok(PreparedState {
        round,
        label: round_spec.label.clone(),
        population_seed,
        terminal_seed,
        ledger_seed,
        load_constants,
        constants,
        workload: plan.workload.clone(),
        assignments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plan() -> BenchmarkPlan {
        BenchmarkPlan::single_run(7, WorkloadParams::default(), 3, DrivingMode::Duration { secs: 60.0 }, 0.0, LedgerConfig::default())
    }

    #[test]
    fn even_and_remainder_split() {
        assert!(partition(100, 4).iter().all(|r| r.count == 25));
        let split: Vec<u32> = partition(10, 3).iter().map(|r| r.count).collect();
        assert_eq!(split, [4, 3, 3]);
        assert_eq!(partition(10, 3)[1].first, 5);
        assert!(partition(0, 2).iter().all(|r| r.count == 0));
    }

    #[test]
    fn prepare_is_deterministic() {
        let p = plan();
        assert_eq!(prepare_round(&p, 1).unwrap(), prepare_round(&p, 1).unwrap());
        assert_eq!(prepare_round(&p, 1).unwrap().digest(), prepare_round(&p, 1).unwrap().digest());
        assert_ne!(prepare_round(&p, 0).unwrap().digest(), prepare_round(&p, 1).unwrap().digest());
        let run = prepare_round(&p, 1).unwrap();
        assert!(NurandConstants::valid_last_delta(run.load_constants.c_last, run.constants.c_last));
        assert_eq!(run.worker_of(5), Some(1));
        assert!(prepare_round(&p, 5).is_err());
    }

    #[test]
    fn validation() {
        assert!(plan().validate().is_ok());
        let mut p = plan();
        p.rounds[1].worker_count = 0;
        assert!(p.validate().unwrap_err().to_string().contains("worker_count"));
        let mut p = plan();
        p.rounds.swap(0, 1);
        assert!(p.validate().is_err());
        let mut p = plan();
        p.rounds[1].mode = DrivingMode::CompletionSignal;
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn partition_covers_all(terminals in 0u32..5000, workers in 1u32..64) {
            let parts = partition(terminals, workers);
            prop_assert_eq!(parts.len() as u32, workers);
            prop_assert_eq!(parts.iter().map(|p| p.count).sum::<u32>(), terminals);
            let max = parts.iter().map(|p| p.count).max().unwrap();
            let min = parts.iter().map(|p| p.count).min().unwrap();
            prop_assert!(max - min <= 1);
            prop_assert!(parts.windows(2).all(|w| w[0].count >= w[1].count && w[0].first + w[0].count == w[1].first));
        }
    }
}
