//! Multi-process workers: newline-delimited JSON messages
//! `{"type": ..., "round": ..., "payload": ...}` over a TCP connection.
//!
//! Manager to worker: `prepare {prepared, index}`, `start {now}`,
//! `step {now, outcomes, limit}`, `finish {}`, `shutdown {}`.
//! Worker to manager: `prepared {digest}`, `started {next_due}`,
//! `progress {proposals, next_due}`, `metrics {WorkerReport}`,
//! `error {message}`.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::plan::PreparedState;
use super::worker::{LocalWorker, StepReply, WorkerLink, WorkerReport};
use super::HarnessError;
use crate::ledger::TxOutcome;
use crate::time::SimTime;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(rename = "type")]
    pub kind: String,
    pub round: usize,
    pub payload: Value,
}

#[derive(Serialize, Deserialize)]
struct PreparePayload {
    prepared: PreparedState,
    index: usize,
}

#[derive(Serialize, Deserialize)]
struct StepPayload {
    now: SimTime,
    outcomes: Vec<TxOutcome>,
    limit: u64,
}

fn write_envelope(stream: &mut TcpStream, envelope: &Envelope) -> std::io::Result<()> {
    let mut line = serde_json::to_vec(envelope)?;
    line.push(b'\n');
    stream.write_all(&line)
}

/// Reads one envelope; `Ok(None)` on end of stream.
fn read_envelope(reader: &mut BufReader<TcpStream>) -> std::io::Result<Option<Envelope>> {
    let mut line = String::new();
    if reader.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    serde_json::from_str(&line).map(Some).map_err(Into::into)
}

/// Manager-side proxy of a worker process.
pub struct RemoteWorker {
    index: usize,
    round: usize,
    writer: TcpStream,
    reader: BufReader<TcpStream>,
}

impl RemoteWorker {
    pub fn connect(addr: impl ToSocketAddrs, index: usize) -> Result<Self, HarnessError> {
        let writer = TcpStream::connect(addr).map_err(|e| HarnessError::WorkerCrashed { worker: index, reason: e.to_string() })?;
        writer.set_nodelay(true).ok();
        let reader = BufReader::new(writer.try_clone().map_err(|e| HarnessError::WorkerCrashed { worker: index, reason: e.to_string() })?);
        Ok(RemoteWorker { index, round: 0, writer, reader })
    }

    fn crashed(&self, reason: impl ToString) -> HarnessError {
        HarnessError::WorkerCrashed { worker: self.index, reason: reason.to_string() }
    }

    fn call<T: DeserializeOwned>(&mut self, kind: &str, payload: Value, reply: &str) -> Result<T, HarnessError> {
        let envelope = Envelope { kind: kind.into(), round: self.round, payload };
        write_envelope(&mut self.writer, &envelope).map_err(|e| self.crashed(e))?;
        let answer = read_envelope(&mut self.reader).map_err(|e| self.crashed(e))?.ok_or_else(|| self.crashed("connection closed"))?;
        if answer.kind == "error" {
            return Err(HarnessError::Protocol(format!("worker {}: {}", self.index, answer.payload)));
        }
        if answer.kind != reply || answer.round != self.round {
            return Err(HarnessError::Protocol(format!("worker {}: expected {reply} for round {}, got {} for round {}", self.index, self.round, answer.kind, answer.round)));
        }
        serde_json::from_value(answer.payload).map_err(|e| HarnessError::Protocol(format!("worker {}: {e}", self.index)))
    }

    /// Asks the worker process to exit.
    pub fn shutdown(mut self) -> Result<(), HarnessError> {
        let envelope = Envelope { kind: "shutdown".into(), round: self.round, payload: json!({}) };
        write_envelope(&mut self.writer, &envelope).map_err(|e| self.crashed(e))
    }
}

impl WorkerLink for RemoteWorker {
    fn prepare(&mut self, prepared: &PreparedState, index: usize) -> Result<String, HarnessError> {
        self.round = prepared.round;
        let payload = serde_json::to_value(PreparePayload { prepared: prepared.clone(), index }).expect("serializable");
        let v: Value = self.call("prepare", payload, "prepared")?;
        v.get("digest").and_then(Value::as_str).map(str::to_string).ok_or_else(|| HarnessError::Protocol("prepared reply without digest".into()))
    }

    fn start(&mut self, now: SimTime) -> Result<Option<SimTime>, HarnessError> {
        let v: Value = self.call("start", json!({ "now": now }), "started")?;
        serde_json::from_value(v.get("next_due").cloned().unwrap_or(Value::Null)).map_err(|e| HarnessError::Protocol(e.to_string()))
    }

    fn step(&mut self, now: SimTime, outcomes: Vec<TxOutcome>, limit: u64) -> Result<StepReply, HarnessError> {
        let payload = serde_json::to_value(StepPayload { now, outcomes, limit }).expect("serializable");
        self.call("step", payload, "progress")
    }

    fn finish(&mut self) -> Result<WorkerReport, HarnessError> {
        self.call("finish", json!({}), "metrics")
    }
}

/// Serves one manager connection until `shutdown` or end of stream.
pub fn serve_connection(stream: TcpStream) -> std::io::Result<()> {
    stream.set_nodelay(true).ok();
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let mut worker = LocalWorker::new();
    while let Some(envelope) = read_envelope(&mut reader)? {
        let round = envelope.round;
        let result: Result<(&str, Value), HarnessError> = match envelope.kind.as_str() {
            "shutdown" => return Ok(()),
            "prepare" => decode::<PreparePayload>(envelope.payload)
                .and_then(|p| worker.prepare(&p.prepared, p.index))
                .map(|digest| ("prepared", json!({ "digest": digest }))),
            "start" => decode::<Value>(envelope.payload)
                .and_then(|v| decode::<SimTime>(v.get("now").cloned().unwrap_or(Value::Null)))
                .and_then(|now| worker.start(now))
                .map(|next_due| ("started", json!({ "next_due": next_due }))),
            "step" => decode::<StepPayload>(envelope.payload)
                .and_then(|p| worker.step(p.now, p.outcomes, p.limit))
                .map(|reply| ("progress", serde_json::to_value(reply).expect("serializable"))),
            "finish" => worker.finish().map(|report| ("metrics", serde_json::to_value(report).expect("serializable"))),
            other => Err(HarnessError::Protocol(format!("unknown message type {other:?}"))),
        };
        let reply = match result {
            Ok((kind, payload)) => Envelope { kind: kind.into(), round, payload },
            Err(e) => Envelope { kind: "error".into(), round, payload: json!({ "message": e.to_string() }) },
        };
        write_envelope(&mut writer, &reply)?;
    }
    Ok(())
}

fn decode<T: DeserializeOwned>(v: Value) -> Result<T, HarnessError> {
    serde_json::from_value(v).map_err(|e| HarnessError::Protocol(e.to_string()))
}

/// Accepts manager connections one after another and serves each.
pub fn serve_worker(listener: TcpListener, max_connections: Option<usize>) -> std::io::Result<()> {
    for (n, stream) in listener.incoming().enumerate() {
        serve_connection(stream?)?;
        if max_connections.is_some_and(|m| n + 1 >= m) {
            break;
        }
    }
    Ok(())
}
