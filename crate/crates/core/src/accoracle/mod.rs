//! Accuracy oracles: map a quantization policy to a task accuracy in `[0, 1]`.
//!
//! [`ProxyOracle`] is a synthetic, deterministic stand-in for demos and tests.
//! [`ExternalOracle`] talks to a child process that hosts a real model, using
//! the line-delimited JSON protocol described in `docs/oracle-protocol.md`.

mod external;
mod proxy;

pub use external::{ExternalOracle, OracleRequest, OracleResponse, PROTOCOL_VERSION};
pub use proxy::ProxyOracle;

use thiserror::Error;

use crate::netgraph::NetworkGraph;
use crate::policy::QuantPolicy;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle not configured: {0}")]
    NotConfigured(String),
    #[error("oracle process: {0}")]
    Process(#[from] std::io::Error),
    #[error("oracle timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("malformed oracle response: {0}")]
    Malformed(String),
    #[error("oracle accuracy {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("{0}")]
    Other(String),
}

pub trait AccuracyOracle {
    fn evaluate(&mut self, net: &NetworkGraph, policy: &QuantPolicy) -> Result<f64, OracleError>;
}

impl<F> AccuracyOracle for F
where
    F: FnMut(&NetworkGraph, &QuantPolicy) -> Result<f64, OracleError>,
{
    fn evaluate(&mut self, net: &NetworkGraph, policy: &QuantPolicy) -> Result<f64, OracleError> {
        self(net, policy)
    }
}

pub(crate) fn check_range(acc: f64) -> Result<f64, OracleError> {
    if (0.0..=1.0).contains(&acc) {
        Ok(acc)
    } else {
        Err(OracleError::OutOfRange(acc))
    }
}

/// Builds an oracle from a CLI-style descriptor: `proxy` or `external:<command>`.
pub fn oracle_from_descriptor(
    source: &str,
    net: &NetworkGraph,
    timeout: std::time::Duration,
) -> Result<Box<dyn AccuracyOracle>, OracleError> {
    if source == "proxy" {
        return Ok(Box::new(ProxyOracle::new(net.len())));
    }
    match source.strip_prefix("external:") {
        Some(cmd) if !cmd.trim().is_empty() => Ok(Box::new(ExternalOracle::new(cmd.trim(), timeout))),
        Some(_) => Err(OracleError::NotConfigured("external oracle needs a command".into())),
        None => {
            Err(OracleError::NotConfigured(format!("unknown oracle `{source}` (expected `proxy` or `external:<cmd>`)")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::builtin_benchmark;
    use std::time::Duration;

    #[test]
    fn descriptor_parsing() {
        let net = builtin_benchmark("mlp_mnist").unwrap();
        assert!(oracle_from_descriptor("proxy", &net, Duration::from_secs(1)).is_ok());
        assert!(matches!(
            oracle_from_descriptor("external:", &net, Duration::from_secs(1)),
            Err(OracleError::NotConfigured(_))
        ));
        assert!(matches!(
            oracle_from_descriptor("oracle", &net, Duration::from_secs(1)),
            Err(OracleError::NotConfigured(_))
        ));
    }

    #[test]
    fn closures_are_oracles() {
        let net = builtin_benchmark("mlp_mnist").unwrap();
        let mut f = |_: &NetworkGraph, _: &QuantPolicy| Ok(0.5);
        let p = QuantPolicy::uniform(net.len(), 8);
        assert_eq!(f.evaluate(&net, &p).unwrap(), 0.5);
    }
}
