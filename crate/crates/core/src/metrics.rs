//! Per-transaction records, run summaries and report files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::ProfileType;
use crate::ledger::{AccessStats, TxId, TxStatus};
use crate::multiplexer::{precision_report, PrecisionReport, PrecisionSample};
use crate::stats::FiveNumber;
use crate::time::SimTime;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("measurement window is empty ({start} .. {end})")]
    EmptyWindow { start: SimTime, end: SimTime },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// One submission (first attempt or resubmission) and its fate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub tx_id: TxId,
    pub profile: ProfileType,
    pub status: TxStatus,
    pub created_at: SimTime,
    pub submitted_at: SimTime,
    pub endorsed_at: Option<SimTime>,
    pub ordered_at: Option<SimTime>,
    pub finished_at: SimTime,
    pub block_no: Option<u64>,
    pub stats: AccessStats,
}

impl MetricsRecord {
    pub fn terminal_id(&self) -> u32 {
        self.tx_id.client
    }

    /// Business request identity shared by all attempts.
    pub fn request_id(&self) -> (u32, u64) {
        (self.tx_id.client, self.tx_id.seq)
    }

    pub fn is_retry(&self) -> bool {
        self.tx_id.attempt > 0
    }

    pub fn latency_secs(&self) -> f64 {
        self.finished_at.signed_secs_since(self.submitted_at)
    }

    fn sort_key(&self) -> (SimTime, TxId) {
        (self.submitted_at, self.tx_id)
    }
}

/// Column order of the CSV export.
pub const CSV_COLUMNS: [&str; 16] = [
    "terminal_id",
    "seq",
    "attempt",
    "profile",
    "status",
    "created_us",
    "submitted_us",
    "endorsed_us",
    "ordered_us",
    "finished_us",
    "block_no",
    "read_count",
    "write_count",
    "range_read_count",
    "bytes_read",
    "bytes_written",
];

#[derive(Serialize, Deserialize)]
struct CsvRow {
    terminal_id: u32,
    seq: u64,
    attempt: u32,
    profile: String,
    status: String,
    created_us: u64,
    submitted_us: u64,
    endorsed_us: Option<u64>,
    ordered_us: Option<u64>,
    finished_us: u64,
    block_no: Option<u64>,
    read_count: u64,
    write_count: u64,
    range_read_count: u64,
    bytes_read: u64,
    bytes_written: u64,
}

impl From<&MetricsRecord> for CsvRow {
    fn from(r: &MetricsRecord) -> Self {
        CsvRow {
            terminal_id: r.tx_id.client,
            seq: r.tx_id.seq,
            attempt: r.tx_id.attempt,
            profile: r.profile.to_string(),
            status: r.status.as_str().to_string(),
            created_us: r.created_at.as_micros(),
            submitted_us: r.submitted_at.as_micros(),
            endorsed_us: r.endorsed_at.map(SimTime::as_micros),
            ordered_us: r.ordered_at.map(SimTime::as_micros),
            finished_us: r.finished_at.as_micros(),
            block_no: r.block_no,
            read_count: r.stats.read_count,
            write_count: r.stats.write_count,
            range_read_count: r.stats.range_read_count,
            bytes_read: r.stats.bytes_read,
            bytes_written: r.stats.bytes_written,
        }
    }
}

impl TryFrom<CsvRow> for MetricsRecord {
    type Error = String;

    fn try_from(r: CsvRow) -> Result<Self, String> {
        Ok(MetricsRecord {
            tx_id: TxId::new(r.terminal_id, r.seq, r.attempt),
            profile: r.profile.parse()?,
            status: r.status.parse()?,
            created_at: SimTime::from_micros(r.created_us),
            submitted_at: SimTime::from_micros(r.submitted_us),
            endorsed_at: r.endorsed_us.map(SimTime::from_micros),
            ordered_at: r.ordered_us.map(SimTime::from_micros),
            finished_at: SimTime::from_micros(r.finished_us),
            block_no: r.block_no,
            stats: AccessStats {
                read_count: r.read_count,
                write_count: r.write_count,
                range_read_count: r.range_read_count,
                bytes_read: r.bytes_read,
                bytes_written: r.bytes_written,
            },
        })
    }
}

/// Sorts records into export order: submission time, then transaction id.
pub fn sort_records(records: &mut [MetricsRecord]) {
    records.sort_by_key(MetricsRecord::sort_key);
}

pub fn write_csv<W: io::Write>(out: W, records: &[MetricsRecord]) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    let mut sorted: Vec<&MetricsRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.sort_key());
    for r in sorted {
        w.serialize(CsvRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<MetricsRecord>, MetricsError> {
    let mut reader = csv::Reader::from_path(path).map_err(|source| MetricsError::Csv { path: path.into(), source })?;
    let headers = reader.headers().map_err(|source| MetricsError::Csv { path: path.into(), source })?;
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(MetricsError::Parse { path: path.into(), message: "unexpected header".into() });
    }
    reader
        .deserialize::<CsvRow>()
        .map(|row| {
            let row = row.map_err(|source| MetricsError::Csv { path: path.into(), source })?;
            MetricsRecord::try_from(row).map_err(|message| MetricsError::Parse { path: path.into(), message })
        })
        .collect()
}

/// Half-open measurement interval over submission times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: SimTime,
    pub end: SimTime,
}

impl Window {
    pub fn new(start: SimTime, end: SimTime) -> Self {
        Window { start, end }
    }

    pub fn contains(&self, t: SimTime) -> bool {
        self.start <= t && t < self.end
    }

    pub fn secs(&self) -> f64 {
        self.end.signed_secs_since(self.start)
    }

    fn check(&self) -> Result<f64, MetricsError> {
        let secs = self.secs();
        if secs > 0.0 {
            Ok(secs)
        } else {
            Err(MetricsError::EmptyWindow { start: self.start, end: self.end })
        }
    }
}

/// Committed New Order business requests per minute, each counted once
/// however many attempts it took.
pub fn compute_tpmc(records: &[MetricsRecord], window: Window) -> Result<f64, MetricsError> {
    let secs = window.check()?;
    let committed: BTreeSet<(u32, u64)> = records
        .iter()
        .filter(|r| r.profile == ProfileType::NewOrder && r.status == TxStatus::Committed && window.contains(r.submitted_at))
        .map(MetricsRecord::request_id)
        .collect();
    Ok(committed.len() as f64 * 60.0 / secs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Share {
    pub name: String,
    pub count: u64,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileLatency {
    pub profile: ProfileType,
    /// Submission to commit, seconds, over committed transactions.
    pub latency: Option<FiveNumber>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub warehouses: u32,
    pub terminals: u32,
    pub workers: u32,
    pub window_secs: f64,
    pub submissions: u64,
    pub business_requests: u64,
    pub resubmissions: u64,
    /// Submissions per second, resubmissions included.
    pub throughput: f64,
    /// Business requests per second.
    pub request_rate: f64,
    /// Committed business requests per second.
    pub goodput: f64,
    pub tpmc: f64,
    /// Business requests by profile.
    pub profiles: Vec<Share>,
    /// Submissions by final status.
    pub statuses: Vec<Share>,
    pub latency: Vec<ProfileLatency>,
    pub precision: Option<PrecisionReport>,
}

/// Identifies the run a summary belongs to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunTag {
    pub label: String,
    pub warehouses: u32,
    pub terminals: u32,
    pub workers: u32,
}

impl RunSummary {
    /// Summarizes the submissions made inside `window`.
    pub fn compute(tag: RunTag, records: &[MetricsRecord], samples: &[PrecisionSample], window: Window) -> Result<Self, MetricsError> {
        let secs = window.check()?;
        let in_window: Vec<&MetricsRecord> = records.iter().filter(|r| window.contains(r.submitted_at)).collect();
        let submissions = in_window.len() as u64;
        let business: Vec<&&MetricsRecord> = in_window.iter().filter(|r| !r.is_retry()).collect();
        let committed: BTreeSet<(u32, u64)> =
            in_window.iter().filter(|r| r.status == TxStatus::Committed).map(|r| r.request_id()).collect();

        let share = |name: String, count: u64, total: u64| Share { name, count, fraction: if total == 0 { 0.0 } else { count as f64 / total as f64 } };
        let profiles = ProfileType::ALL
            .iter()
            .map(|&p| share(p.to_string(), business.iter().filter(|r| r.profile == p).count() as u64, business.len() as u64))
            .collect();
        let statuses = TxStatus::ALL
            .iter()
            .map(|&s| share(s.as_str().to_string(), in_window.iter().filter(|r| r.status == s).count() as u64, submissions))
            .collect();
        let latency = ProfileType::ALL
            .iter()
            .map(|&p| ProfileLatency {
                profile: p,
                latency: FiveNumber::of(in_window.iter().filter(|r| r.profile == p && r.status == TxStatus::Committed).map(|r| r.latency_secs())).ok(),
            })
            .collect();
        let in_window_samples: Vec<PrecisionSample> = samples.iter().filter(|s| window.contains(s.t1)).copied().collect();

        Ok(RunSummary {
            label: tag.label,
            warehouses: tag.warehouses,
            terminals: tag.terminals,
            workers: tag.workers,
            window_secs: secs,
            submissions,
            business_requests: business.len() as u64,
            resubmissions: submissions - business.len() as u64,
            throughput: submissions as f64 / secs,
            request_rate: business.len() as f64 / secs,
            goodput: committed.len() as f64 / secs,
            tpmc: compute_tpmc(records, window)?,
            profiles,
            statuses,
            latency,
            precision: precision_report(&in_window_samples).ok(),
        })
    }

    pub fn status_fraction(&self, status: TxStatus) -> f64 {
        self.statuses.iter().find(|s| s.name == status.as_str()).map_or(0.0, |s| s.fraction)
    }

    pub fn profile_fraction(&self, profile: ProfileType) -> f64 {
        let name = profile.to_string();
        self.profiles.iter().find(|s| s.name == name).map_or(0.0, |s| s.fraction)
    }

    /// Error profile of this run.
    pub fn error_profile(&self) -> ErrorProfile {
        let f = |s| self.status_fraction(s);
        let mvcc_conflict = f(TxStatus::MvccConflict) + f(TxStatus::Abandoned);
        let committed = f(TxStatus::Committed);
        let endorsement_timeout = f(TxStatus::EndorsementTimeout);
        let commit_timeout = f(TxStatus::CommitTimeout);
        let known = committed + mvcc_conflict + endorsement_timeout + commit_timeout;
        ErrorProfile {
            terminals: self.terminals,
            committed,
            mvcc_conflict,
            endorsement_timeout,
            commit_timeout,
            other: if self.submissions == 0 { 0.0 } else { (1.0 - known).max(0.0) },
        }
    }
}

/// Status fractions of one configuration. `mvcc_conflict` includes
/// submissions abandoned after their last conflicting retry; `other` holds
/// business rollbacks, failed endorsements and rejections.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorProfile {
    pub terminals: u32,
    pub committed: f64,
    pub mvcc_conflict: f64,
    pub endorsement_timeout: f64,
    pub commit_timeout: f64,
    pub other: f64,
}

pub fn error_profile(summaries: &[RunSummary]) -> Vec<ErrorProfile> {
    let mut rows: Vec<ErrorProfile> = summaries.iter().map(RunSummary::error_profile).collect();
    rows.sort_by_key(|r| r.terminals);
    rows
}

pub fn render_markdown(summaries: &[RunSummary]) -> String {
    let mut out = String::from("# Run summary\n\n");
    out.push_str("| label | W | terminals | workers | window s | submissions | retries | req/s | throughput/s | goodput/s | tpmC |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|---|---|\n");
    for s in summaries {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {:.1} | {} | {} | {:.3} | {:.3} | {:.3} | {:.2} |",
            s.label, s.warehouses, s.terminals, s.workers, s.window_secs, s.submissions, s.resubmissions, s.request_rate, s.throughput, s.goodput, s.tpmc
        );
    }

    out.push_str("\n## Status fractions\n\n| label |");
    for st in TxStatus::ALL {
        let _ = write!(out, " {} |", st.as_str());
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(TxStatus::ALL.len()));
    out.push('\n');
    for s in summaries {
        let _ = write!(out, "| {} |", s.label);
        for st in &s.statuses {
            let _ = write!(out, " {:.4} |", st.fraction);
        }
        out.push('\n');
    }

    out.push_str("\n## Profile mix\n\n| label |");
    for p in ProfileType::ALL {
        let _ = write!(out, " {p} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(ProfileType::ALL.len()));
    out.push('\n');
    for s in summaries {
        let _ = write!(out, "| {} |", s.label);
        for p in &s.profiles {
            let _ = write!(out, " {:.4} |", p.fraction);
        }
        out.push('\n');
    }

    out.push_str("\n## Latency of committed transactions (s)\n\n| label | profile | min | q1 | median | q3 | max |\n|---|---|---|---|---|---|---|\n");
    for s in summaries {
        for l in &s.latency {
            if let Some(f) = l.latency {
                let _ = writeln!(out, "| {} | {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} |", s.label, l.profile, f.min, f.q1, f.median, f.q3, f.max);
            }
        }
    }

    if summaries.iter().any(|s| s.precision.is_some()) {
        out.push_str("\n## Scheduling precision d (s)\n\n| label | samples | min | q1 | median | q3 | max | violations |\n|---|---|---|---|---|---|---|---|\n");
        for s in summaries {
            if let Some(p) = s.precision {
                let f = p.summary;
                let _ = writeln!(out, "| {} | {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {} |", s.label, p.samples, f.min, f.q1, f.median, f.q3, f.max, p.violations);
            }
        }
    }
    out
}

pub fn render_error_profile(rows: &[ErrorProfile]) -> String {
    let mut out = String::from("# Error profile\n\n| terminals | committed | mvcc-conflict | endorsement-timeout | commit-timeout | other |\n|---|---|---|---|---|---|\n");
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} |",
            r.terminals, r.committed, r.mvcc_conflict, r.endorsement_timeout, r.commit_timeout, r.other
        );
    }
    out
}

/// Request rate against terminal count.
pub fn rate_dat(summaries: &[RunSummary]) -> String {
    let mut out = String::from("# terminals request_rate throughput goodput\n");
    for s in summaries {
        let _ = writeln!(out, "{} {:.6} {:.6} {:.6}", s.terminals, s.request_rate, s.throughput, s.goodput);
    }
    out
}

/// Box-plot columns of scheduling precision per terminal count.
pub fn precision_dat(summaries: &[RunSummary]) -> String {
    let mut out = String::from("# terminals min q1 median q3 max violations\n");
    for s in summaries {
        if let Some(p) = s.precision {
            let f = p.summary;
            let _ = writeln!(out, "{} {:.6} {:.6} {:.6} {:.6} {:.6} {}", s.terminals, f.min, f.q1, f.median, f.q3, f.max, p.violations);
        }
    }
    out
}

pub fn error_profile_dat(rows: &[ErrorProfile]) -> String {
    let mut out = String::from("# terminals committed mvcc_conflict endorsement_timeout commit_timeout other\n");
    for r in rows {
        let _ = writeln!(out, "{} {:.6} {:.6} {:.6} {:.6} {:.6}", r.terminals, r.committed, r.mvcc_conflict, r.endorsement_timeout, r.commit_timeout, r.other);
    }
    out
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), MetricsError> {
    fs::write(path, contents).map_err(|source| MetricsError::Io { path: path.into(), source })
}

/// Writes `records.csv`, `summary.md`, `summary.json` and the data files
/// into `dir`. Returns the paths written.
pub fn export(dir: &Path, records: &[MetricsRecord], summaries: &[RunSummary]) -> Result<Vec<PathBuf>, MetricsError> {
    fs::create_dir_all(dir).map_err(|source| MetricsError::Io { path: dir.into(), source })?;
    let mut written = Vec::new();

    let csv_path = dir.join("records.csv");
    let mut csv_bytes = Vec::new();
    write_csv(&mut csv_bytes, records).map_err(|source| MetricsError::Csv { path: csv_path.clone(), source })?;
    write_file(&csv_path, &csv_bytes)?;
    written.push(csv_path);
    written.extend(export_summaries(dir, summaries)?);
    Ok(written)
}

/// Writes every export file except `records.csv`.
pub fn export_summaries(dir: &Path, summaries: &[RunSummary]) -> Result<Vec<PathBuf>, MetricsError> {
    fs::create_dir_all(dir).map_err(|source| MetricsError::Io { path: dir.into(), source })?;
    let mut written = Vec::new();
    let json = serde_json::to_string_pretty(summaries).expect("summaries serialize");
    let rows = error_profile(summaries);
    let files: [(&str, String); 6] = [
        ("summary.md", render_markdown(summaries)),
        ("summary.json", json + "\n"),
        ("rate.dat", rate_dat(summaries)),
        ("precision.dat", precision_dat(summaries)),
        ("error_profile.dat", error_profile_dat(&rows)),
        ("error_profile.md", render_error_profile(&rows)),
    ];
    for (name, contents) in files {
        let path = dir.join(name);
        write_file(&path, contents.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// Summaries grouped by terminal count, in ascending order.
pub fn by_terminals(summaries: &[RunSummary]) -> BTreeMap<u32, Vec<&RunSummary>> {
    let mut map: BTreeMap<u32, Vec<&RunSummary>> = BTreeMap::new();
    for s in summaries {
        map.entry(s.terminals).or_default().push(s);
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(terminal: u32, seq: u64, attempt: u32, profile: ProfileType, status: TxStatus, at: f64) -> MetricsRecord {
        let t = SimTime::from_secs_f64(at);
        MetricsRecord {
            tx_id: TxId::new(terminal, seq, attempt),
            profile,
            status,
            created_at: t,
            submitted_at: t,
            endorsed_at: Some(t),
            ordered_at: None,
            finished_at: SimTime::from_secs_f64(at + 0.25),
            block_no: Some(3),
            stats: AccessStats { read_count: 4, ..AccessStats::default() },
        }
    }

    fn window(secs: f64) -> Window {
        Window::new(SimTime::ZERO, SimTime::from_secs_f64(secs))
    }

    fn tag(terminals: u32) -> RunTag {
        RunTag { label: format!("t{terminals}"), warehouses: 1, terminals, workers: 1 }
    }

    #[test]
    fn tpmc_counts_committed_new_orders_once() {
        let mut records: Vec<MetricsRecord> = (0..27).map(|i| record(1, i, 0, ProfileType::NewOrder, TxStatus::Committed, i as f64)).collect();
        assert_eq!(compute_tpmc(&records, window(60.0)).unwrap(), 27.0);
        // A conflicted attempt and its committed retry count once.
        records.push(record(2, 0, 0, ProfileType::NewOrder, TxStatus::MvccConflict, 1.0));
        records.push(record(2, 0, 1, ProfileType::NewOrder, TxStatus::Committed, 2.0));
        records.push(record(3, 0, 0, ProfileType::Payment, TxStatus::Committed, 2.0));
        records.push(record(4, 0, 0, ProfileType::NewOrder, TxStatus::BusinessRollback, 2.0));
        assert_eq!(compute_tpmc(&records, window(60.0)).unwrap(), 28.0);
        assert!(matches!(compute_tpmc(&records, window(0.0)), Err(MetricsError::EmptyWindow { .. })));
    }

    #[test]
    fn all_invalidated_gives_zero() {
        let records: Vec<MetricsRecord> = (0..5).map(|i| record(1, i, 0, ProfileType::NewOrder, TxStatus::MvccConflict, 1.0)).collect();
        assert_eq!(compute_tpmc(&records, window(60.0)).unwrap(), 0.0);
    }

    #[test]
    fn summary_counts() {
        let records = vec![
            record(1, 0, 0, ProfileType::Payment, TxStatus::MvccConflict, 1.0),
            record(1, 0, 1, ProfileType::Payment, TxStatus::Committed, 2.0),
            record(2, 0, 0, ProfileType::NewOrder, TxStatus::Committed, 3.0),
            record(3, 0, 0, ProfileType::Delivery, TxStatus::CommitTimeout, 4.0),
            record(3, 1, 0, ProfileType::Delivery, TxStatus::Committed, 20.0),
        ];
        let s = RunSummary::compute(tag(3), &records, &[], window(10.0)).unwrap();
        assert_eq!((s.submissions, s.business_requests, s.resubmissions), (4, 3, 1));
        assert_eq!(s.goodput, 0.2);
        assert_eq!(s.status_fraction(TxStatus::Committed), 0.5);
        assert!((s.profile_fraction(ProfileType::Payment) - 1.0 / 3.0).abs() < 1e-12);
        let e = s.error_profile();
        assert_eq!((e.committed, e.mvcc_conflict, e.commit_timeout), (0.5, 0.25, 0.25));
        assert!(s.precision.is_none());
        assert!(s.goodput <= s.throughput);
    }

    #[test]
    fn empty_run_is_header_only() {
        let mut out = Vec::new();
        write_csv(&mut out, &[]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{}\n", CSV_COLUMNS.join(",")));
    }

    #[test]
    fn export_roundtrip_and_repeatable() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![
            record(2, 0, 0, ProfileType::NewOrder, TxStatus::Committed, 3.0),
            record(1, 0, 0, ProfileType::Payment, TxStatus::MvccConflict, 1.0),
        ];
        let summary = RunSummary::compute(tag(2), &records, &[], window(10.0)).unwrap();
        export(dir.path(), &records, std::slice::from_ref(&summary)).unwrap();
        let first: Vec<Vec<u8>> = ["records.csv", "summary.md", "summary.json"].iter().map(|f| fs::read(dir.path().join(f)).unwrap()).collect();
        export(dir.path(), &records, &[summary]).unwrap();
        let second: Vec<Vec<u8>> = ["records.csv", "summary.md", "summary.json"].iter().map(|f| fs::read(dir.path().join(f)).unwrap()).collect();
        assert_eq!(first, second);
        let mut back = read_csv(&dir.path().join("records.csv")).unwrap();
        let mut expected = records.clone();
        sort_records(&mut expected);
        sort_records(&mut back);
        assert_eq!(back, expected);
    }

    #[test]
    fn export_reports_path_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let err = export(&blocker.join("sub"), &[], &[]).unwrap_err();
        assert!(err.to_string().contains("file"));
    }

    fn arb_status() -> impl Strategy<Value = TxStatus> {
        prop::sample::select(TxStatus::ALL.to_vec())
    }

    fn arb_profile() -> impl Strategy<Value = ProfileType> {
        prop::sample::select(ProfileType::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn fractions_sum_to_one(entries in prop::collection::vec((1u32..5, 0u64..20, 0u32..3, arb_profile(), arb_status(), 0.0f64..100.0), 1..200)) {
            let records: Vec<MetricsRecord> = entries.iter().map(|&(t, s, a, p, st, at)| record(t, s, a, p, st, at)).collect();
            let s = RunSummary::compute(tag(4), &records, &[], window(100.0)).unwrap();
            let total: f64 = s.statuses.iter().map(|x| x.fraction).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            let e = s.error_profile();
            prop_assert!((e.committed + e.mvcc_conflict + e.endorsement_timeout + e.commit_timeout + e.other - 1.0).abs() < 1e-9);
            prop_assert!(s.goodput <= s.throughput + 1e-12);
            let mut csv = Vec::new();
            write_csv(&mut csv, &records).unwrap();
            prop_assert_eq!(csv.iter().filter(|&&b| b == b'\n').count(), records.len() + 1);
        }
    }
}
