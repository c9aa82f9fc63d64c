//! Per-layer weight/activation precision assignments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgraph::NetworkGraph;

/// Weight and activation bitwidth of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerBits {
    pub w_bits: u32,
    pub a_bits: u32,
}

impl LayerBits {
    pub fn new(w_bits: u32, a_bits: u32) -> Self {
        Self { w_bits, a_bits }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuantPolicy {
    pub bits: Vec<LayerBits>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyDoc {
    layers: Vec<PolicyEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyEntry {
    name: String,
    w_bits: u32,
    a_bits: u32,
}

impl QuantPolicy {
    pub fn uniform(num_layers: usize, bits: u32) -> Self {
        Self { bits: vec![LayerBits::new(bits, bits); num_layers] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Checks coverage of `net` and that every bitwidth lies in `[b_min, b_max]`.
    pub fn validate(&self, net: &NetworkGraph, b_min: u32, b_max: u32) -> Result<()> {
        if self.bits.len() != net.layers.len() {
            return Err(Error::Policy(format!(
                "policy has {} entries but network `{}` has {} layers",
                self.bits.len(),
                net.name,
                net.layers.len()
            )));
        }
        for (layer, b) in net.layers.iter().zip(&self.bits) {
            for (what, v) in [("w_bits", b.w_bits), ("a_bits", b.a_bits)] {
                if v < b_min || v > b_max {
                    return Err(Error::Policy(format!(
                        "layer `{}`: {what}={v} outside [{b_min}, {b_max}]",
                        layer.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parses either `uniform:<bits>` or a JSON document
    /// `{"layers": [{"name", "w_bits", "a_bits"}, ...]}` whose names must match `net`.
    pub fn parse(text: &str, net: &NetworkGraph) -> Result<Self> {
        if let Some(b) = text.trim().strip_prefix("uniform:") {
            let bits: u32 = b.trim().parse().map_err(|_| Error::Policy(format!("bad uniform bitwidth `{b}`")))?;
            if bits == 0 {
                return Err(Error::Policy("bitwidth must be positive".into()));
            }
            return Ok(Self::uniform(net.layers.len(), bits));
        }
        let doc: PolicyDoc = serde_json::from_str(text).map_err(|e| Error::Policy(format!("policy document: {e}")))?;
        if doc.layers.len() != net.layers.len() {
            return Err(Error::Policy(format!(
                "policy has {} layers, network has {}",
                doc.layers.len(),
                net.layers.len()
            )));
        }
        let mut bits = Vec::with_capacity(doc.layers.len());
        for (entry, layer) in doc.layers.iter().zip(&net.layers) {
            if entry.name != layer.name {
                return Err(Error::Policy(format!(
                    "policy layer `{}` does not match network layer `{}`",
                    entry.name, layer.name
                )));
            }
            if entry.w_bits == 0 || entry.a_bits == 0 {
                return Err(Error::Policy(format!("layer `{}`: bitwidths must be positive", entry.name)));
            }
            bits.push(LayerBits::new(entry.w_bits, entry.a_bits));
        }
        Ok(Self { bits })
    }

    pub fn to_json(&self, net: &NetworkGraph) -> String {
        let layers: Vec<PolicyEntry> = net
            .layers
            .iter()
            .zip(&self.bits)
            .map(|(l, b)| PolicyEntry { name: l.name.clone(), w_bits: b.w_bits, a_bits: b.a_bits })
            .collect();
        serde_json::json!({ "layers": layers }).to_string()
    }
}
