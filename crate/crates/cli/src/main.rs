use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use tpcc_ledger::config::{ClockKind, Config, LatencyPreset, Overrides};
use tpcc_ledger::harness::{
    local_workers, prepare_round, read_snapshot, run_execution_round, run_load_round, run_sweep, run_wall_clock_round, serve_worker, sweep_grid,
    write_snapshot, BenchmarkPlan, ClockMode, ExecutionResult, RemoteWorker, SweepPoint, WorkerLink,
};
use tpcc_ledger::ledger::WorldState;
use tpcc_ledger::metrics::{self, read_csv, RunSummary, RunTag, Window};
use tpcc_ledger::multiplexer::PrecisionSample;
use tpcc_ledger::terminal::TimingPreset;
use tpcc_ledger::time::SimTime;

#[derive(Parser)]
#[command(name = "tpcc-ledger", version, about = "TPC-C benchmark on a simulated execute-order-validate ledger")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    warehouses: Option<u32>,
    #[arg(long, global = true)]
    terminals_per_warehouse: Option<u32>,
    #[arg(long, global = true)]
    workers: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    clock: Option<Clock>,
    /// Simulated seconds per real second in wall-clock mode.
    #[arg(long, global = true)]
    speedup: Option<f64>,
    #[arg(long, global = true)]
    block_time_ms: Option<u64>,
    #[arg(long, global = true, value_enum)]
    latency: Option<Latency>,
    #[arg(long, global = true, value_enum)]
    timing: Option<Timing>,
    #[arg(long, global = true)]
    duration_secs: Option<f64>,
    #[arg(long, global = true)]
    warmup_secs: Option<f64>,
    /// Remote worker address (repeatable); replaces in-process workers.
    #[arg(long = "worker-addr", global = true)]
    worker_addrs: Vec<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Clock {
    Virtual,
    Wall,
}

#[derive(Clone, Copy, ValueEnum)]
enum Latency {
    Constant,
    Calibrated,
    LoadScaling,
    Zero,
}

#[derive(Clone, Copy, ValueEnum)]
enum Timing {
    TpccStandard,
    Calibrated,
}

#[derive(Subcommand)]
enum Command {
    /// Populate the database and write a state snapshot.
    Load {
        /// Snapshot path; defaults to <out>/snapshot.ndjson.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Execute one timed round and write records and summaries.
    Run {
        /// Start from this snapshot instead of loading.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Run the terminal-count grid and write the error-profile table.
    Sweep {
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Terminals per warehouse, comma separated; defaults to the full grid.
        #[arg(long, value_delimiter = ',')]
        terminals: Vec<u32>,
    },
    /// Re-render summaries from a records dump.
    Report {
        /// A records.csv file written by `run`.
        records: PathBuf,
    },
    /// Serve execution rounds for a remote manager.
    Worker {
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        /// Exit after this many manager connections.
        #[arg(long)]
        max_connections: Option<usize>,
    },
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            warehouses: self.warehouses,
            terminals_per_warehouse: self.terminals_per_warehouse,
            workers: self.workers,
            seed: self.seed,
            clock: self.clock.map(|c| match c {
                Clock::Virtual => ClockKind::Virtual,
                Clock::Wall => ClockKind::Wall,
            }),
            speedup: self.speedup,
            duration_secs: self.duration_secs,
            warmup_secs: self.warmup_secs,
            timing: self.timing.map(|t| match t {
                Timing::TpccStandard => TimingPreset::TpccStandard,
                Timing::Calibrated => TimingPreset::Calibrated,
            }),
            out: self.out.clone(),
            worker_addrs: (!self.worker_addrs.is_empty()).then(|| self.worker_addrs.clone()),
            block_time_ms: self.block_time_ms,
            latency: self.latency.map(|l| match l {
                Latency::Constant => LatencyPreset::Constant,
                Latency::Calibrated => LatencyPreset::Calibrated,
                Latency::LoadScaling => LatencyPreset::LoadScaling,
                Latency::Zero => LatencyPreset::Zero,
            }),
        }
    }
}

/// What `report` needs besides the records to rebuild a summary.
#[derive(Serialize, Deserialize)]
struct RunManifest {
    tag: RunTag,
    window: Window,
    /// Final world-state hash; absent for sweep runs.
    state_hash: Option<String>,
}

const MANIFEST: &str = "run.json";
/// Precision samples, one JSON object per line.
const SAMPLES: &str = "precision_samples.ndjson";

fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute(cli) {
        let mut message = format!("error: {e}");
        for cause in e.chain().skip(1) {
            let cause = cause.to_string();
            if !message.contains(&cause) {
                message.push_str(": ");
                message.push_str(&cause);
            }
        }
        eprintln!("{message}");
        std::process::exit(1);
    }
}

fn execute(cli: Cli) -> Result<()> {
    let config = Config::resolve(cli.common.config.as_deref(), &cli.common.overrides())?;
    match cli.command {
        Command::Load { snapshot } => load(&config, snapshot),
        Command::Run { snapshot } => run(&config, snapshot.as_deref()),
        Command::Sweep { snapshot, terminals } => sweep(&config, snapshot.as_deref(), &terminals),
        Command::Report { records } => report(&config, &records),
        Command::Worker { listen, max_connections } => {
            let listener = TcpListener::bind(&listen).with_context(|| format!("binding {listen}"))?;
            eprintln!("worker listening on {}", listener.local_addr()?);
            serve_worker(listener, max_connections)?;
            Ok(())
        }
    }
}

fn load_state(plan: &BenchmarkPlan) -> Result<WorldState> {
    let prepared = prepare_round(plan, 0)?;
    let outcome = run_load_round(plan, &prepared)?;
    eprintln!(
        "loaded {} rows ({} excluding items) in {} batches, {} blocks, {:.1} simulated s",
        outcome.counts.total(),
        outcome.counts.non_item(),
        outcome.batches,
        outcome.blocks,
        outcome.signaled_at.as_secs_f64()
    );
    Ok(outcome.state)
}

fn initial_state(plan: &BenchmarkPlan, snapshot: Option<&Path>) -> Result<WorldState> {
    match snapshot {
        Some(path) => Ok(read_snapshot(path)?),
        None => load_state(plan),
    }
}

fn load(config: &Config, snapshot: Option<PathBuf>) -> Result<()> {
    let state = load_state(&config.plan())?;
    let path = snapshot.unwrap_or_else(|| config.out.join("snapshot.ndjson"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    write_snapshot(&path, &state)?;
    println!("{} entries, state hash {}", state.len(), state.state_hash());
    println!("snapshot: {}", path.display());
    Ok(())
}

fn workers_for(config: &Config) -> Result<Vec<Box<dyn WorkerLink>>> {
    if config.worker_addrs.is_empty() {
        return Ok(local_workers(config.workers));
    }
    config
        .worker_addrs
        .iter()
        .enumerate()
        .map(|(i, addr)| Ok(Box::new(RemoteWorker::connect(addr.as_str(), i)?) as Box<dyn WorkerLink>))
        .collect()
}

fn run(config: &Config, snapshot: Option<&Path>) -> Result<()> {
    let plan = config.plan();
    let state = initial_state(&plan, snapshot)?;
    let (result, final_state) = match config.clock_mode() {
        ClockMode::Virtual => run_execution_round(&plan, 1, state, workers_for(config)?)?,
        ClockMode::Wall { speedup } => {
            if !config.worker_addrs.is_empty() {
                bail!("remote workers are only supported with the virtual clock");
            }
            run_wall_clock_round(&plan, 1, state, speedup)?
        }
    };
    let state_hash = final_state.state_hash().to_string();
    let written = write_run(&config.out, &result, Some(state_hash.clone()))?;
    print_summary(&result.summary);
    println!("state hash {state_hash}");
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Exports one run with the manifest and samples `report` reads back.
fn write_run(dir: &Path, result: &ExecutionResult, state_hash: Option<String>) -> Result<Vec<PathBuf>> {
    let mut written = metrics::export(dir, &result.records, std::slice::from_ref(&result.summary))?;
    let manifest = RunManifest {
        tag: RunTag { label: result.label.clone(), warehouses: result.warehouses, terminals: result.terminals, workers: result.workers },
        window: result.window,
        state_hash,
    };
    let path = dir.join(MANIFEST);
    let json = serde_json::to_string_pretty(&manifest)? + "\n";
    fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    let path = dir.join(SAMPLES);
    write_samples(&path, &result.samples)?;
    written.push(path);
    Ok(written)
}

fn sweep(config: &Config, snapshot: Option<&Path>, terminals: &[u32]) -> Result<()> {
    let plan = config.plan();
    let state = initial_state(&plan, snapshot)?;
    let points: Vec<SweepPoint> = if terminals.is_empty() {
        sweep_grid()
    } else {
        terminals.iter().map(|&n| SweepPoint { series: "custom".into(), terminals_per_warehouse: n }).collect()
    };
    let result = run_sweep(&plan, &state, &points, config.clock_mode())?;
    for run in &result.runs {
        write_run(&config.out.join(&run.label), run, None)?;
        print_summary(&run.summary);
    }
    metrics::export_summaries(&config.out, &result.summaries())?;
    print!("{}", metrics::render_error_profile(&result.error_profile));
    println!("wrote {}", config.out.display());
    Ok(())
}

fn report(config: &Config, records_path: &Path) -> Result<()> {
    let records = read_csv(records_path)?;
    let manifest_path = records_path.with_file_name(MANIFEST);
    let (tag, window) = if manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path).with_context(|| format!("reading {}", manifest_path.display()))?;
        let m: RunManifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", manifest_path.display()))?;
        (m.tag, m.window)
    } else {
        // Without a manifest, measure from the warmup to just past the last submission.
        let last = records.iter().map(|r| r.submitted_at).max().context("records file is empty")?;
        let start = SimTime::from_secs_f64(config.warmup_secs);
        let terminals = records.iter().map(|r| r.tx_id.client).collect::<std::collections::BTreeSet<_>>().len() as u32;
        let tag = RunTag { label: "report".into(), warehouses: config.warehouses, terminals, workers: config.worker_count() };
        (tag, Window::new(start, SimTime::from_micros(last.as_micros() + 1)))
    };
    let samples = read_samples(&records_path.with_file_name(SAMPLES))?;
    let summary = RunSummary::compute(tag, &records, &samples, window)?;
    let written = metrics::export_summaries(&config.out, std::slice::from_ref(&summary))?;
    print_summary(&summary);
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn write_samples(path: &Path, samples: &[PrecisionSample]) -> Result<()> {
    let mut out = String::new();
    for s in samples {
        out.push_str(&serde_json::to_string(s)?);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Samples next to a records dump, or none if the file is absent.
fn read_samples(path: &Path) -> Result<Vec<PrecisionSample>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| serde_json::from_str(line).with_context(|| format!("{}: line {}", path.display(), i + 1)))
        .collect()
}

fn print_summary(s: &RunSummary) {
    let e = s.error_profile();
    println!(
        "{}: {} terminals, {:.2} req/s, throughput {:.2}/s, goodput {:.2}/s, tpmC {:.1}, committed {:.3}, mvcc {:.3}, timeouts {:.3}/{:.3}",
        s.label, s.terminals, s.request_rate, s.throughput, s.goodput, s.tpmc, e.committed, e.mvcc_conflict, e.endorsement_timeout, e.commit_timeout
    );
}
