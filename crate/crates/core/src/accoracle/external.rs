use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_range, AccuracyOracle, OracleError};
use crate::netgraph::NetworkGraph;
use crate::policy::QuantPolicy;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleRequest {
    pub protocol: u32,
    pub network_name: String,
    pub layers: Vec<LayerPrecision>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerPrecision {
    pub name: String,
    pub w_bits: u32,
    pub a_bits: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResponse {
    #[serde(default)]
    pub protocol: Option<u32>,
    #[serde(default)]
    pub accuracy: Option<f64>,
    #[serde(default)]
    pub error: Option<String>,
}

impl OracleRequest {
    pub fn new(net: &NetworkGraph, policy: &QuantPolicy) -> Self {
        Self {
            protocol: PROTOCOL_VERSION,
            network_name: net.name.clone(),
            layers: net
                .layers
                .iter()
                .zip(&policy.bits)
                .map(|(l, b)| LayerPrecision { name: l.name.clone(), w_bits: b.w_bits, a_bits: b.a_bits })
                .collect(),
        }
    }

    pub fn policy(&self) -> QuantPolicy {
        QuantPolicy { bits: self.layers.iter().map(|l| crate::policy::LayerBits::new(l.w_bits, l.a_bits)).collect() }
    }
}

impl OracleResponse {
    pub fn parse(line: &str) -> Result<f64, OracleError> {
        let resp: OracleResponse =
            serde_json::from_str(line).map_err(|e| OracleError::Malformed(format!("{e}: {line:?}")))?;
        if let Some(v) = resp.protocol {
            if v != PROTOCOL_VERSION {
                return Err(OracleError::Malformed(format!("protocol {v}, expected {PROTOCOL_VERSION}")));
            }
        }
        if let Some(err) = resp.error {
            return Err(OracleError::Other(format!("oracle reported: {err}")));
        }
        let acc = resp.accuracy.ok_or_else(|| OracleError::Malformed("missing `accuracy`".into()))?;
        check_range(acc)
    }
}

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Running {
    fn spawn(command: &str) -> Result<Self, OracleError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self { child, stdin, lines: rx })
    }

    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Oracle backed by a long-lived child process (`sh -c <command>`), one
/// request in flight at a time. Any failure kills the child; the next request
/// starts a fresh one.
pub struct ExternalOracle {
    command: String,
    timeout: Duration,
    running: Option<Running>,
}

impl ExternalOracle {
    pub fn new(command: impl Into<String>, timeout: Duration) -> Self {
        Self { command: command.into(), timeout, running: None }
    }

    fn exchange(&mut self, request: &str) -> Result<f64, OracleError> {
        if self.running.is_none() {
            self.running = Some(Running::spawn(&self.command)?);
        }
        let running = self.running.as_mut().expect("spawned");
        running.stdin.write_all(request.as_bytes())?;
        running.stdin.write_all(b"\n")?;
        running.stdin.flush()?;
        match running.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => OracleResponse::parse(&line),
            Ok(Err(e)) => Err(e.into()),
            Err(RecvTimeoutError::Timeout) => Err(OracleError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                Err(OracleError::Malformed("oracle closed its output without answering".into()))
            }
        }
    }
}

impl AccuracyOracle for ExternalOracle {
    fn evaluate(&mut self, net: &NetworkGraph, policy: &QuantPolicy) -> Result<f64, OracleError> {
        let request = serde_json::to_string(&OracleRequest::new(net, policy)).expect("request serializes");
        let result = self.exchange(&request);
        if result.is_err() {
            if let Some(r) = self.running.take() {
                r.kill();
            }
        }
        result
    }
}

impl Drop for ExternalOracle {
    fn drop(&mut self) {
        if let Some(r) = self.running.take() {
            r.kill();
        }
    }
}
