use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};

use serde_json::{json, Value};
use thiserror::Error;

use super::{Banner, Response, RpcError};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed message from server: {0}")]
    Protocol(String),
    #[error("server error: {0}")]
    Rpc(RpcError),
    #[error("connection closed by server")]
    Closed,
}

/// Minimal blocking client for the line protocol.
pub struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    banner: Banner,
    next_id: u64,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, ClientError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let writer = stream.try_clone()?;
        let mut reader = BufReader::new(stream);
        let line = read_line(&mut reader)?;
        let banner = serde_json::from_str(&line).map_err(|e| ClientError::Protocol(e.to_string()))?;
        Ok(Self { reader, writer, banner, next_id: 0 })
    }

    pub fn banner(&self) -> &Banner {
        &self.banner
    }

    /// Sends a raw line and returns the raw response.
    pub fn send_line(&mut self, line: &str) -> Result<Response, ClientError> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        let reply = read_line(&mut self.reader)?;
        serde_json::from_str(&reply).map_err(|e| ClientError::Protocol(e.to_string()))
    }

    pub fn call(&mut self, method: &str, params: Value) -> Result<Value, ClientError> {
        self.next_id += 1;
        let id = self.next_id;
        let req = json!({ "id": id, "method": method, "params": params });
        let resp = self.send_line(&req.to_string())?;
        if resp.id != json!(id) {
            return Err(ClientError::Protocol(format!("response id {} does not match {id}", resp.id)));
        }
        match (resp.ok, resp.result, resp.error) {
            (true, Some(v), None) => Ok(v),
            (false, None, Some(e)) => Err(ClientError::Rpc(e)),
            _ => Err(ClientError::Protocol("response must carry exactly one of result/error".into())),
        }
    }
}

fn read_line(reader: &mut BufReader<TcpStream>) -> Result<String, ClientError> {
    let mut line = String::new();
    if reader.read_line(&mut line)? == 0 {
        return Err(ClientError::Closed);
    }
    Ok(line)
}
