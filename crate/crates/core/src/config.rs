//! Run configuration: a TOML file, command-line overrides, and conversion
//! into a [`BenchmarkPlan`].
//!
//! ```toml
//! warehouses = 1
//! terminals_per_warehouse = 10
//! workers = 1
//! seed = 42
//! clock = "virtual"          # or "wall"
//! speedup = 1.0              # wall clock only
//! duration_secs = 600
//! warmup_secs = 30
//! timing = "calibrated"     # or "tpcc-standard"
//! out = "out"
//! worker_addrs = []          # remote workers, host:port
//!
//! [ledger]
//! block_time_ms = 100
//! max_tx = 500
//! max_bytes = 2097152
//! latency = "calibrated"     # constant | calibrated | load-scaling | zero
//! endorsement_timeout_secs = 1.0
//! commit_timeout_secs = 2.0
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{BenchmarkPlan, ClockMode, DrivingMode, WorkloadParams};
use crate::ledger::{BlockConfig, Contention, LatencyModel, LedgerConfig};
use crate::terminal::{TimingConstraints, TimingPreset};
use crate::time::SimDuration;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClockKind {
    #[default]
    Virtual,
    Wall,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatencyPreset {
    Constant,
    #[default]
    Calibrated,
    /// Calibrated service demands, each multiplied by the number of
    /// endorsements executing on the peer.
    LoadScaling,
    Zero,
}

impl LatencyPreset {
    pub fn ledger(self) -> LedgerConfig {
        match self {
            LatencyPreset::Constant => LedgerConfig { latency: LatencyModel::constant(), ..LedgerConfig::default() },
            LatencyPreset::Calibrated => LedgerConfig::calibrated(),
            LatencyPreset::LoadScaling => {
                let mut c = LedgerConfig::calibrated();
                c.latency.contention = Contention::LoadScaling;
                c
            }
            LatencyPreset::Zero => LedgerConfig { latency: LatencyModel::zero(), ..LedgerConfig::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedgerSection {
    pub block_time_ms: u64,
    pub max_tx: usize,
    pub max_bytes: u64,
    pub latency: LatencyPreset,
    /// Defaults to the latency preset's deadline.
    pub endorsement_timeout_secs: Option<f64>,
    pub commit_timeout_secs: Option<f64>,
}

impl Default for LedgerSection {
    fn default() -> Self {
        let block = BlockConfig::default();
        LedgerSection {
            block_time_ms: block.block_time.as_micros() / 1000,
            max_tx: block.max_tx,
            max_bytes: block.max_bytes,
            latency: LatencyPreset::default(),
            endorsement_timeout_secs: None,
            commit_timeout_secs: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub warehouses: u32,
    #[serde(default = "defaults::terminals_per_warehouse")]
    pub terminals_per_warehouse: u32,
    #[serde(default = "defaults::workers")]
    pub workers: u32,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default)]
    pub clock: ClockKind,
    #[serde(default = "defaults::speedup")]
    pub speedup: f64,
    #[serde(default = "defaults::duration_secs")]
    pub duration_secs: f64,
    #[serde(default = "defaults::warmup_secs")]
    pub warmup_secs: f64,
    #[serde(default = "defaults::timing")]
    pub timing: TimingPreset,
    #[serde(default = "defaults::out")]
    pub out: PathBuf,
    #[serde(default)]
    pub worker_addrs: Vec<String>,
    #[serde(default)]
    pub ledger: LedgerSection,
}

mod defaults {
    use super::*;
    pub fn terminals_per_warehouse() -> u32 {
        10
    }
    pub fn workers() -> u32 {
        1
    }
    pub fn seed() -> u64 {
        42
    }
    pub fn speedup() -> f64 {
        1.0
    }
    pub fn duration_secs() -> f64 {
        600.0
    }
    pub fn warmup_secs() -> f64 {
        30.0
    }
    pub fn timing() -> TimingPreset {
        TimingPreset::Calibrated
    }
    pub fn out() -> PathBuf {
        PathBuf::from("out")
    }
}

impl Default for Config {
    fn default() -> Self {
        Config {
            warehouses: 1,
            terminals_per_warehouse: defaults::terminals_per_warehouse(),
            workers: defaults::workers(),
            seed: defaults::seed(),
            clock: ClockKind::default(),
            speedup: defaults::speedup(),
            duration_secs: defaults::duration_secs(),
            warmup_secs: defaults::warmup_secs(),
            timing: defaults::timing(),
            out: defaults::out(),
            worker_addrs: Vec::new(),
            ledger: LedgerSection::default(),
        }
    }
}

/// Values given on the command line; each replaces the file value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub warehouses: Option<u32>,
    pub terminals_per_warehouse: Option<u32>,
    pub workers: Option<u32>,
    pub seed: Option<u64>,
    pub clock: Option<ClockKind>,
    pub speedup: Option<f64>,
    pub duration_secs: Option<f64>,
    pub warmup_secs: Option<f64>,
    pub timing: Option<TimingPreset>,
    pub out: Option<PathBuf>,
    pub worker_addrs: Option<Vec<String>>,
    pub block_time_ms: Option<u64>,
    pub latency: Option<LatencyPreset>,
}

impl Config {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config = Self::parse(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Parses without validating, so that overrides can still fix values.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// The file at `path` if given, otherwise the defaults, with `overrides`
    /// applied and the result validated.
    pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = &o.$field { self.$field = v.clone(); })* };
        }
        set!(warehouses, terminals_per_warehouse, workers, seed, clock, speedup, duration_secs, warmup_secs, timing, out, worker_addrs);
        if let Some(v) = o.block_time_ms {
            self.ledger.block_time_ms = v;
        }
        if let Some(v) = o.latency {
            self.ledger.latency = v;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn invalid(key: &'static str, message: impl Into<String>) -> Result<(), ConfigError> {
            Err(ConfigError::Invalid { key, message: message.into() })
        }
        if self.workers == 0 && self.worker_addrs.is_empty() {
            return invalid("workers", "at least one worker is required");
        }
        if !(self.speedup.is_finite() && self.speedup > 0.0) {
            return invalid("speedup", "must be positive");
        }
        if !(self.duration_secs.is_finite() && self.duration_secs > 0.0) {
            return invalid("duration_secs", "must be positive");
        }
        if !(self.warmup_secs.is_finite() && self.warmup_secs >= 0.0 && self.warmup_secs < self.duration_secs) {
            return invalid("warmup_secs", "must be non-negative and shorter than the run");
        }
        if self.ledger.block_time_ms == 0 {
            return invalid("block_time_ms", "must be positive");
        }
        if self.ledger.max_tx == 0 {
            return invalid("max_tx", "must be positive");
        }
        if self.ledger.max_bytes == 0 {
            return invalid("max_bytes", "must be positive");
        }
        for (key, v) in [("endorsement_timeout_secs", self.ledger.endorsement_timeout_secs), ("commit_timeout_secs", self.ledger.commit_timeout_secs)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return invalid(key, "must be positive");
                }
            }
        }
        Ok(())
    }

    /// Number of execution workers; remote addresses, when given, replace
    /// `workers`.
    pub fn worker_count(&self) -> u32 {
        if self.worker_addrs.is_empty() {
            self.workers
        } else {
            self.worker_addrs.len() as u32
        }
    }

    pub fn ledger_config(&self) -> LedgerConfig {
        let mut ledger = self.ledger.latency.ledger();
        ledger.block = BlockConfig { max_tx: self.ledger.max_tx, max_bytes: self.ledger.max_bytes, block_time: SimDuration::from_millis(self.ledger.block_time_ms) };
        if let Some(v) = self.ledger.endorsement_timeout_secs {
            ledger.endorsement_timeout = SimDuration::from_secs_f64(v);
        }
        if let Some(v) = self.ledger.commit_timeout_secs {
            ledger.commit_timeout = SimDuration::from_secs_f64(v);
        }
        ledger
    }

    pub fn workload(&self) -> WorkloadParams {
        WorkloadParams {
            warehouses: self.warehouses,
            terminals_per_warehouse: self.terminals_per_warehouse,
            timing: TimingConstraints::preset(self.timing),
            ..WorkloadParams::default()
        }
    }

    pub fn clock_mode(&self) -> ClockMode {
        match self.clock {
            ClockKind::Virtual => ClockMode::Virtual,
            ClockKind::Wall => ClockMode::Wall { speedup: self.speedup },
        }
    }

    /// A load round and one timed execution round.
    pub fn plan(&self) -> BenchmarkPlan {
        BenchmarkPlan::single_run(
            self.seed,
            self.workload(),
            self.worker_count(),
            DrivingMode::Duration { secs: self.duration_secs },
            self.warmup_secs,
            self.ledger_config(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_takes_defaults() {
        let c = Config::from_toml_str("warehouses = 1\n").unwrap();
        assert_eq!(c, Config::default());
        let plan = c.plan();
        assert_eq!(plan.workload.terminal_count(), 10);
        assert_eq!(plan.rounds[1].ledger.block.block_time, SimDuration::from_millis(100));
        assert_eq!(plan.rounds[1].ledger, LedgerConfig::calibrated());
    }

    #[test]
    fn missing_warehouses_is_named() {
        let err = Config::from_toml_str("terminals_per_warehouse = 10\n").unwrap_err();
        assert!(err.to_string().contains("warehouses"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = Config::from_toml_str("warehouses = 1\nterminal = 3\n").unwrap_err();
        assert!(err.to_string().contains("terminal"), "{err}");
    }

    #[test]
    fn invalid_value_is_named() {
        let err = Config::from_toml_str("warehouses = 1\n[ledger]\nblock_time_ms = 0\n").unwrap_err();
        assert!(err.to_string().contains("block_time_ms"), "{err}");
    }

    #[test]
    fn full_file_round_trips() {
        let text = r#"
warehouses = 2
terminals_per_warehouse = 30
workers = 3
seed = 7
clock = "wall"
speedup = 20.0
duration_secs = 120
warmup_secs = 10
timing = "tpcc-standard"
out = "results"

[ledger]
block_time_ms = 250
max_tx = 100
max_bytes = 4096
latency = "constant"
endorsement_timeout_secs = 5
commit_timeout_secs = 9
"#;
        let c = Config::from_toml_str(text).unwrap();
        assert_eq!(c.clock_mode(), ClockMode::Wall { speedup: 20.0 });
        let l = c.ledger_config();
        assert_eq!(l.block.block_time, SimDuration::from_millis(250));
        assert_eq!(l.block.max_tx, 100);
        assert_eq!(l.latency, LatencyModel::constant());
        assert_eq!(l.endorsement_timeout, SimDuration::from_secs(5));
        assert_eq!(l.commit_timeout, SimDuration::from_secs(9));
        assert_eq!(c.workload().timing, TimingConstraints::tpcc_standard());
        let back = Config::from_toml_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn overrides_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "warehouses = 2\nseed = 1\n[ledger]\nblock_time_ms = 300\n").unwrap();
        let o = Overrides { seed: Some(9), block_time_ms: Some(50), clock: Some(ClockKind::Wall), ..Overrides::default() };
        let c = Config::resolve(Some(&path), &o).unwrap();
        assert_eq!((c.warehouses, c.seed, c.ledger.block_time_ms, c.clock), (2, 9, 50, ClockKind::Wall));
    }

    #[test]
    fn missing_file_is_an_error() {
        let err = Config::resolve(Some(Path::new("/nonexistent/c.toml")), &Overrides::default()).unwrap_err();
        assert!(matches!(err, ConfigError::Io { .. }));
    }

    #[test]
    fn remote_workers_set_worker_count() {
        let c = Config::from_toml_str("warehouses = 1\nworker_addrs = [\"a:1\", \"b:2\"]\n").unwrap();
        assert_eq!(c.worker_count(), 2);
    }
}
