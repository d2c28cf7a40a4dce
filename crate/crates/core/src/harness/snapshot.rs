use std::borrow::Cow;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::ledger::{Version, WorldState};

const FORMAT: &str = "tpcc-ledger-snapshot/1";

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    height: u64,
    entries: usize,
    state_hash: String,
}

#[derive(Serialize, Deserialize)]
struct Entry<'a> {
    #[serde(borrow)]
    key: Cow<'a, str>,
    #[serde(borrow)]
    value: Cow<'a, str>,
    block: u64,
    tx: u32,
}

/// Writes `state` as newline-delimited JSON: a header line followed by one
/// line per key in key order.
pub fn write_snapshot(path: &Path, state: &WorldState) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io { path: path.into(), source };
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    let header = Header { format: FORMAT.into(), height: state.height(), entries: state.len(), state_hash: state.state_hash().to_string() };
    serde_json::to_writer(&mut out, &header).map_err(|e| io(e.into()))?;
    out.write_all(b"\n").map_err(io)?;
    for (key, entry) in state.iter() {
        let value = std::str::from_utf8(&entry.value)
            .map_err(|_| HarnessError::Snapshot { path: path.into(), message: format!("value of {key:?} is not UTF-8") })?;
        let line = Entry { key: Cow::Borrowed(key), value: Cow::Borrowed(value), block: entry.version.block_no, tx: entry.version.tx_index };
        serde_json::to_writer(&mut out, &line).map_err(|e| io(e.into()))?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads a snapshot and checks its entry count and state hash.
pub fn read_snapshot(path: &Path) -> Result<WorldState, HarnessError> {
    let bad = |message: String| HarnessError::Snapshot { path: path.into(), message };
    let file = File::open(path).map_err(|source| HarnessError::Io { path: path.into(), source })?;
    let mut lines = BufReader::new(file).lines();
    let first = lines.next().ok_or_else(|| bad("empty file".into()))?.map_err(|source| HarnessError::Io { path: path.into(), source })?;
    let header: Header = serde_json::from_str(&first).map_err(|e| bad(format!("header: {e}")))?;
    if header.format != FORMAT {
        return Err(bad(format!("unsupported format {:?}", header.format)));
    }
    let mut state = WorldState::new();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|source| HarnessError::Io { path: path.into(), source })?;
        let entry: Entry = serde_json::from_str(&line).map_err(|e| bad(format!("line {}: {e}", n + 2)))?;
        state.apply(&entry.key, Some(Arc::from(entry.value.as_bytes())), Version::new(entry.block, entry.tx));
    }
    state.set_height(header.height);
    if state.len() != header.entries {
        return Err(bad(format!("expected {} entries, found {}", header.entries, state.len())));
    }
    if state.state_hash().to_string() != header.state_hash {
        return Err(bad("state hash mismatch".into()));
    }
    Ok(state)
}
