//! Line-delimited JSON request/response service around one vessel session.
//!
//! Every connection first receives a banner line (see [`Banner`]). Requests
//! are `{"id": <any>, "method": "<name>", "params": {...}}`, one per line;
//! responses echo `id` and carry either `result` or `error`.

mod client;
mod server;
mod session;

pub use client::{Client, ClientError};
pub use server::{serve, ServerHandle};
pub use session::{Session, SessionConfig, Snapshot};

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const PROTOCOL_NAME: &str = "keelson-rpc";
pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// The simulation advances only on `sim_step` / `env_step`.
    Lockstep,
    /// The simulation advances on a wall-clock timer.
    Realtime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Banner {
    pub protocol: String,
    pub version: u32,
    pub mode: Mode,
    pub dt: f64,
    pub n_beams: usize,
    pub observation_len: usize,
    pub action_low: [f64; 2],
    pub action_high: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    #[serde(default)]
    pub id: Value,
    pub method: String,
    #[serde(default)]
    pub params: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCode {
    ParseError,
    InvalidRequest,
    UnknownMethod,
    InvalidParams,
    ModeError,
    EpisodeError,
    SimulationError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpcError {
    pub code: ErrorCode,
    pub message: String,
}

impl RpcError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl std::fmt::Display for RpcError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}: {}", self.code, self.message)
    }
}

impl std::error::Error for RpcError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: Value,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<RpcError>,
}

impl Response {
    pub fn from_result(id: Value, r: Result<Value, RpcError>) -> Self {
        match r {
            Ok(v) => Self { id, ok: true, result: Some(v), error: None },
            Err(e) => Self { id, ok: false, result: None, error: Some(e) },
        }
    }
}

/// Parses one request line; failures become an error response with a null id
/// unless the id could still be recovered.
pub fn parse_request(line: &str) -> Result<Request, Response> {
    let value: Value = serde_json::from_str(line).map_err(|e| {
        Response::from_result(Value::Null, Err(RpcError::new(ErrorCode::ParseError, e.to_string())))
    })?;
    let id = value.get("id").cloned().unwrap_or(Value::Null);
    serde_json::from_value(value)
        .map_err(|e| Response::from_result(id, Err(RpcError::new(ErrorCode::InvalidRequest, e.to_string()))))
}
