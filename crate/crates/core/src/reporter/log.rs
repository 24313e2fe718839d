//! Append-only workflow log, one JSON event per line.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const LOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    pub schema_version: u32,
    pub seq: u64,
    pub stage: String,
    /// RFC 3339 wall-clock time; the only nondeterministic field.
    pub timestamp: String,
    /// rules, llm, llm_fallback, or system for bookkeeping events.
    pub provenance: String,
    pub payload: Value,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkflowLog {
    events: Vec<LogEvent>,
}

impl WorkflowLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[LogEvent] {
        &self.events
    }

    pub fn last_seq(&self) -> Option<u64> {
        self.events.last().map(|e| e.seq)
    }

    /// Append with an explicit sequence number, which must exceed the last.
    pub fn log_event(&mut self, stage: &str, provenance: &str, payload: Value, seq: u64) -> Result<&LogEvent> {
        if let Some(last) = self.last_seq() {
            if seq <= last {
                return Err(Error::SequenceRegression { last, got: seq });
            }
        }
        self.events.push(LogEvent {
            schema_version: LOG_SCHEMA_VERSION,
            seq,
            stage: stage.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Micros, true),
            provenance: provenance.to_string(),
            payload,
        });
        Ok(self.events.last().expect("just pushed"))
    }

    /// Append with the next sequence number.
    pub fn append(&mut self, stage: &str, provenance: &str, payload: Value) -> u64 {
        let seq = self.last_seq().map_or(0, |s| s + 1);
        self.log_event(stage, provenance, payload, seq)
            .expect("next sequence number is always fresh");
        seq
    }

    /// Events of one stage, in order.
    pub fn stage(&self, stage: &str) -> impl Iterator<Item = &LogEvent> {
        let stage = stage.to_string();
        self.events.iter().filter(move |e| e.stage == stage)
    }

    /// The single event of `stage`; an error when absent or repeated.
    pub fn only(&self, stage: &str) -> Result<&LogEvent> {
        let mut it = self.stage(stage);
        match (it.next(), it.next()) {
            (Some(e), None) => Ok(e),
            (None, _) => Err(Error::Report(format!("log has no `{stage}` event"))),
            _ => Err(Error::Report(format!("log has more than one `{stage}` event"))),
        }
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("log events serialize"));
            out.push('\n');
        }
        out
    }

    /// Parse and re-check monotone sequence numbers and schema version.
    pub fn from_ndjson(text: &str) -> Result<Self> {
        let mut log = Self::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let e: LogEvent = serde_json::from_str(line).map_err(|err| Error::Csv {
                row: i + 1,
                message: format!("bad log line: {err}"),
            })?;
            if e.schema_version != LOG_SCHEMA_VERSION {
                return Err(Error::Report(format!(
                    "log schema version {} is not supported",
                    e.schema_version
                )));
            }
            if let Some(last) = log.last_seq() {
                if e.seq <= last {
                    return Err(Error::SequenceRegression { last, got: e.seq });
                }
            }
            log.events.push(e);
        }
        Ok(log)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_ndjson(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_ndjson())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sequence_must_increase() {
        let mut log = WorkflowLog::new();
        log.log_event("diagnose", "rules", json!({}), 3).unwrap();
        assert!(matches!(
            log.log_event("profile", "rules", json!({}), 3),
            Err(Error::SequenceRegression { last: 3, got: 3 })
        ));
        assert_eq!(log.append("profile", "rules", json!({"a": 1})), 4);
        let back = WorkflowLog::from_ndjson(&log.to_ndjson()).unwrap();
        assert_eq!(back, log);
        let swapped: String = log.to_ndjson().lines().rev().map(|l| format!("{l}\n")).collect();
        assert!(WorkflowLog::from_ndjson(&swapped).is_err());
    }
}
