use super::*;
use crate::ledger::{LatencyModel, LedgerConfig, ScriptedLedger};
use crate::terminal::TimingConstraints;

fn small_plan(terminals: u32, workers: u32, secs: f64) -> BenchmarkPlan {
    let workload = WorkloadParams { warehouses: 1, terminals_per_warehouse: terminals, timing: TimingConstraints::calibrated(), ..WorkloadParams::default() };
    BenchmarkPlan::single_run(11, workload, workers, DrivingMode::Duration { secs }, 0.0, LedgerConfig::default())
}

#[test]
fn sweep_grid_has_17_points() {
    let grid = sweep_grid();
    assert_eq!(grid.len(), 17);
    assert_eq!(grid.first().unwrap().terminals_per_warehouse, 10);
    assert_eq!(grid.last().unwrap().terminals_per_warehouse, 400);
}

#[test]
fn zero_terminals_give_empty_result() {
    let plan = small_plan(0, 1, 10.0);
    let (result, _) = run_execution_round(&plan, 1, WorldState::new(), local_workers(1)).unwrap();
    assert!(result.records.is_empty());
    assert_eq!(result.summary.submissions, 0);
}

#[test]
fn scripted_run_counts_every_submission() {
    let plan = small_plan(5, 2, 120.0);
    let prepared = prepare_round(&plan, 1).unwrap();
    let mut n = 0u64;
    let mut ledger = ScriptedLedger::new(SimDuration::from_millis(50), move |_| {
        n += 1;
        if n.is_multiple_of(3) {
            TxStatus::MvccConflict
        } else {
            TxStatus::Committed
        }
    });
    let mut workers = local_workers(2);
    let outcome = drive(&mut ledger, &mut workers, &prepared, DrivingMode::Duration { secs: 120.0 }).unwrap();
    let result = collect_result(&plan, &prepared, outcome).unwrap();
    assert!(!result.records.is_empty());
    assert_eq!(result.stats.submissions, result.records.len() as u64);
    assert!(result.records.iter().all(|r| r.submitted_at < SimTime::from_secs_f64(120.0)));
    assert!(result.records.iter().any(|r| r.tx_id.attempt > 0));
}

#[test]
fn tx_count_mode_stops_at_count() {
    let mut plan = small_plan(10, 1, 1.0);
    plan.rounds[1].mode = DrivingMode::TxCount { count: 7 };
    let prepared = prepare_round(&plan, 1).unwrap();
    let mut ledger = ScriptedLedger::new(SimDuration::from_millis(10), |_| TxStatus::Committed);
    let outcome = drive(&mut ledger, &mut local_workers(1), &prepared, DrivingMode::TxCount { count: 7 }).unwrap();
    let result = collect_result(&plan, &prepared, outcome).unwrap();
    assert_eq!(result.records.len(), 7);
}

#[test]
fn load_round_zero_warehouses_signals_at_once() {
    let mut plan = small_plan(0, 1, 1.0);
    plan.workload.warehouses = 0;
    let prepared = prepare_round(&plan, 0).unwrap();
    let out = run_load_round(&plan, &prepared).unwrap();
    assert_eq!(out.batches, 0);
    assert_eq!(out.signaled_at, SimTime::ZERO);
    assert!(out.state.is_empty());
}

#[test]
fn snapshot_roundtrip_and_tamper_check() {
    let dir = tempfile::tempdir().unwrap();
    let mut state = WorldState::new();
    state.apply("A\0x\0", Some(std::sync::Arc::from(&b"{\"v\":1}"[..])), crate::ledger::Version::new(1, 0));
    state.apply("B\0y\0", Some(std::sync::Arc::from(&b"[]"[..])), crate::ledger::Version::new(2, 3));
    state.set_height(3);
    let path = dir.path().join("s.ndjson");
    write_snapshot(&path, &state).unwrap();
    let back = read_snapshot(&path).unwrap();
    assert_eq!(back, state);
    assert_eq!(back.state_hash(), state.state_hash());
    let text = std::fs::read_to_string(&path).unwrap().replace("\"tx\":3", "\"tx\":4");
    std::fs::write(&path, text).unwrap();
    assert!(read_snapshot(&path).unwrap_err().to_string().contains("hash"));
    assert!(read_snapshot(&dir.path().join("missing")).is_err());
}

#[test]
fn remote_worker_matches_local() {
    let plan = small_plan(6, 2, 60.0);
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = std::thread::spawn(move || serve_worker(listener, Some(1)));
    let remote: Box<dyn WorkerLink> = Box::new(RemoteWorker::connect(addr, 1).unwrap());
    let workers: Vec<Box<dyn WorkerLink>> = vec![Box::new(LocalWorker::new()), remote];
    let (mixed, mixed_state) = run_execution_round(&plan, 1, WorldState::new(), workers).unwrap();
    let (local, local_state) = run_execution_round(&plan, 1, WorldState::new(), local_workers(2)).unwrap();
    assert_eq!(mixed.records, local.records);
    assert_eq!(mixed_state.state_hash(), local_state.state_hash());
    server.join().unwrap().unwrap();
}

#[test]
fn crashed_worker_aborts_round() {
    let plan = small_plan(4, 1, 30.0);
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    // Accept and immediately hang up.
    let server = std::thread::spawn(move || drop(listener.accept().unwrap()));
    let remote: Box<dyn WorkerLink> = Box::new(RemoteWorker::connect(addr, 0).unwrap());
    server.join().unwrap();
    let err = run_execution_round(&plan, 1, WorldState::new(), vec![remote]).unwrap_err();
    assert!(matches!(err, HarnessError::WorkerCrashed { worker: 0, .. }), "{err}");
}

#[test]
fn wall_clock_round_runs() {
    let mut plan = small_plan(5, 1, 20.0);
    plan.rounds[1].ledger.latency = LatencyModel::constant();
    let (result, _) = run_wall_clock_round(&plan, 1, WorldState::new(), 50.0).unwrap();
    assert_eq!(result.stats.submissions, result.records.len() as u64);
    assert!(result.samples.iter().any(|s| s.d != 0.0));
}
