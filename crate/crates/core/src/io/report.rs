//! Machine-readable reports shared by the library and the CLI.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Outcome of a command: the command echo, a status, and a structured
/// payload. Machine serialization is deterministic (sorted keys, timing
/// excluded); the text rendering carries the timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub status: String,
    pub payload: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

impl Report {
    pub fn ok(command: impl Into<String>, payload: Value) -> Report {
        Report {
            command: command.into(),
            status: "ok".into(),
            payload,
            timing_ms: None,
        }
    }

    pub fn failure(command: impl Into<String>, payload: Value) -> Report {
        Report {
            command: command.into(),
            status: "failure".into(),
            payload,
            timing_ms: None,
        }
    }

    /// Deterministic machine form: timing stripped, keys sorted (serde_json
    /// maps are ordered), trailing newline.
    pub fn to_machine_bytes(&self) -> Vec<u8> {
        let stripped = Report {
            timing_ms: None,
            ..self.clone()
        };
        let mut out = serde_json::to_vec_pretty(&stripped).expect("report serializes");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Report> {
        serde_json::from_slice(bytes).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Human-readable rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command: {}\nstatus: {}\n", self.command, self.status));
        render_value(&self.payload, 0, &mut out);
        if let Some(ms) = self.timing_ms {
            out.push_str(&format!("elapsed: {} ms\n", ms));
        }
        out
    }
}

fn render_value(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                match val {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render_value(val, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}{k}: {}\n", scalar(val))),
                }
            }
        }
        Value::Array(items) => {
            for val in items {
                match val {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}-\n"));
                        render_value(val, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}- {}\n", scalar(val))),
                }
            }
        }
        _ => out.push_str(&format!("{pad}{}\n", scalar(v))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
