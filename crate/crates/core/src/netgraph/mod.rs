//! Workload description: ordered weight-bearing layers and convolution lowering.
//!
//! Only layers that occupy crossbars are represented. Pooling, normalization and
//! activation functions have no tile cost and are folded into the digital
//! post-processing term of the cost model.

mod benchmarks;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use benchmarks::{builtin_benchmark, BENCHMARK_NAMES};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("network document: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("layer `{layer}`: field `{field}` {reason}")]
    Invalid { layer: String, field: &'static str, reason: String },
    #[error("network `{0}` has no layers")]
    Empty(String),
    #[error("duplicate layer name `{0}`")]
    DuplicateName(String),
    #[error("unknown benchmark `{name}`; available: {}", BENCHMARK_NAMES.join(", "))]
    UnknownBenchmark { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Fc,
}

/// Shape of one weight-bearing layer.
///
/// `out_width` is the spatial output size `W` (outputs are `W x W`). Fully
/// connected layers use `kernel = 1` and `out_width = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerDesc {
    pub name: String,
    pub kind: LayerKind,
    pub kernel: u32,
    pub in_channels: u32,
    pub out_channels: u32,
    pub out_width: u32,
    /// Input spatial width, when known. Used to derive and check `out_width`.
    pub in_width: Option<u32>,
    pub stride: u32,
    pub padding: u32,
}

/// A convolution or matrix multiply expressed as `num_vectors` products of a
/// `1 x rows` input vector with a `rows x cols` weight matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LoweredMatrix {
    pub rows: u64,
    pub cols: u64,
    pub num_vectors: u64,
}

impl LayerDesc {
    pub fn fc(name: impl Into<String>, in_features: u32, out_features: u32) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::Fc,
            kernel: 1,
            in_channels: in_features,
            out_channels: out_features,
            out_width: 1,
            in_width: None,
            stride: 1,
            padding: 0,
        }
    }

    /// Convolution whose output width is derived from the input geometry.
    pub fn conv(
        name: impl Into<String>,
        kernel: u32,
        in_channels: u32,
        out_channels: u32,
        in_width: u32,
        stride: u32,
        padding: u32,
    ) -> Self {
        let out_width = conv_out_width(in_width, kernel, stride, padding).unwrap_or(0);
        Self {
            name: name.into(),
            kind: LayerKind::Conv,
            kernel,
            in_channels,
            out_channels,
            out_width,
            in_width: Some(in_width),
            stride,
            padding,
        }
    }

    /// Number of weights, `K^2 * C * N`.
    pub fn weight_count(&self) -> u64 {
        let k = u64::from(self.kernel);
        k * k * u64::from(self.in_channels) * u64::from(self.out_channels)
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let bad =
            |field, reason: &str| NetError::Invalid { layer: self.name.clone(), field, reason: reason.to_string() };
        if self.name.is_empty() {
            return Err(bad("name", "must not be empty"));
        }
        for (field, v) in [
            ("k", self.kernel),
            ("c", self.in_channels),
            ("n", self.out_channels),
            ("w", self.out_width),
            ("stride", self.stride),
        ] {
            if v == 0 {
                return Err(bad(field, "must be positive"));
            }
        }
        match self.kind {
            LayerKind::Fc => {
                if self.kernel != 1 {
                    return Err(bad("k", "must be 1 for fc layers"));
                }
                if self.out_width != 1 {
                    return Err(bad("w", "must be 1 for fc layers"));
                }
            }
            LayerKind::Conv => {
                if let Some(i) = self.in_width {
                    match conv_out_width(i, self.kernel, self.stride, self.padding) {
                        Some(w) if w == self.out_width => {}
                        Some(w) => {
                            return Err(bad(
                                "w",
                                &format!(
                                    "is {} but in_width={i}, stride={}, padding={} give {w}",
                                    self.out_width, self.stride, self.padding
                                ),
                            ))
                        }
                        None => return Err(bad("in_width", "too small for the kernel")),
                    }
                }
            }
        }
        Ok(())
    }
}

/// `floor((I + 2p - K) / s) + 1`, or `None` when the kernel does not fit.
pub fn conv_out_width(in_width: u32, kernel: u32, stride: u32, padding: u32) -> Option<u32> {
    let span = (in_width + 2 * padding).checked_sub(kernel)?;
    if stride == 0 {
        return None;
    }
    Some(span / stride + 1)
}

/// Lowers the layer's weight tensor to a `K^2 C x N` matrix applied to `W^2` vectors.
pub fn lower_layer(layer: &LayerDesc) -> LoweredMatrix {
    let k = u64::from(layer.kernel);
    let w = u64::from(layer.out_width);
    LoweredMatrix {
        rows: k * k * u64::from(layer.in_channels),
        cols: u64::from(layer.out_channels),
        num_vectors: w * w,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    pub name: String,
    pub layers: Vec<LayerDesc>,
}

impl NetworkGraph {
    /// Builds and validates a network: non-empty, unique names, valid layers.
    pub fn new(name: impl Into<String>, layers: Vec<LayerDesc>) -> Result<Self, NetError> {
        let name = name.into();
        if layers.is_empty() {
            return Err(NetError::Empty(name));
        }
        let mut seen = HashSet::new();
        for layer in &layers {
            layer.validate()?;
            if !seen.insert(layer.name.as_str()) {
                return Err(NetError::DuplicateName(layer.name.clone()));
            }
        }
        Ok(Self { name, layers })
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn lowered(&self) -> Vec<LoweredMatrix> {
        self.layers.iter().map(lower_layer).collect()
    }

    /// Serializes to the network document format accepted by [`parse_network`].
    pub fn to_json(&self) -> String {
        let doc = NetworkDoc { name: self.name.clone(), layers: self.layers.iter().map(LayerRecord::from).collect() };
        serde_json::to_string_pretty(&doc).expect("network serializes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    name: String,
    layers: Vec<LayerRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    name: String,
    kind: LayerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    c: u32,
    n: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    in_width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stride: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    padding: Option<u32>,
}

impl From<&LayerDesc> for LayerRecord {
    fn from(l: &LayerDesc) -> Self {
        let conv = l.kind == LayerKind::Conv;
        Self {
            name: l.name.clone(),
            kind: l.kind,
            k: conv.then_some(l.kernel),
            c: l.in_channels,
            n: l.out_channels,
            w: conv.then_some(l.out_width),
            in_width: l.in_width,
            stride: (conv && l.stride != 1).then_some(l.stride),
            padding: (conv && l.padding != 0).then_some(l.padding),
        }
    }
}

impl LayerRecord {
    fn into_layer(self) -> Result<LayerDesc, NetError> {
        let invalid =
            |field, reason: &str| NetError::Invalid { layer: self.name.clone(), field, reason: reason.to_string() };
        let stride = self.stride.unwrap_or(1);
        let padding = self.padding.unwrap_or(0);
        let layer = match self.kind {
            LayerKind::Fc => LayerDesc {
                name: self.name.clone(),
                kind: LayerKind::Fc,
                kernel: self.k.unwrap_or(1),
                in_channels: self.c,
                out_channels: self.n,
                out_width: self.w.unwrap_or(1),
                in_width: self.in_width,
                stride,
                padding,
            },
            LayerKind::Conv => {
                let kernel = self.k.ok_or_else(|| invalid("k", "is required for conv layers"))?;
                if kernel == 0 {
                    return Err(invalid("k", "must be positive"));
                }
                if stride == 0 {
                    return Err(invalid("stride", "must be positive"));
                }
                let out_width = match (self.w, self.in_width) {
                    (Some(w), _) => w,
                    (None, Some(i)) => conv_out_width(i, kernel, stride, padding)
                        .ok_or_else(|| invalid("in_width", "too small for the kernel"))?,
                    (None, None) => return Err(invalid("w", "is required when `in_width` is absent")),
                };
                LayerDesc {
                    name: self.name.clone(),
                    kind: LayerKind::Conv,
                    kernel,
                    in_channels: self.c,
                    out_channels: self.n,
                    out_width,
                    in_width: self.in_width,
                    stride,
                    padding,
                }
            }
        };
        Ok(layer)
    }
}

/// Parses a JSON network document (see `schemas/network.schema.json`).
pub fn parse_network(text: &str) -> Result<NetworkGraph, NetError> {
    let doc: NetworkDoc = serde_json::from_str(text)?;
    let layers = doc.layers.into_iter().map(LayerRecord::into_layer).collect::<Result<Vec<_>, _>>()?;
    NetworkGraph::new(doc.name, layers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_conv_layer_round_trips() {
        let text = r#"{"name":"one","layers":[{"name":"c","kind":"conv","k":3,"c":64,"n":64,"w":56}]}"#;
        let net = parse_network(text).unwrap();
        assert_eq!(net.layers.len(), 1);
        let l = &net.layers[0];
        assert_eq!((l.kernel, l.in_channels, l.out_channels, l.out_width), (3, 64, 64, 56));
        assert_eq!(parse_network(&net.to_json()).unwrap(), net);
    }

    #[test]
    fn fc_layer_follows_convention() {
        let text = r#"{"name":"m","layers":[{"name":"fc","kind":"fc","c":512,"n":1000}]}"#;
        let l = &parse_network(text).unwrap().layers[0];
        assert_eq!(l.kind, LayerKind::Fc);
        assert_eq!((l.kernel, l.in_channels, l.out_channels, l.out_width), (1, 512, 1000, 1));
    }

    #[test]
    fn zero_channels_rejected() {
        let text = r#"{"name":"m","layers":[{"name":"bad","kind":"conv","k":3,"c":0,"n":8,"w":4}]}"#;
        match parse_network(text) {
            Err(NetError::Invalid { field, .. }) => assert_eq!(field, "c"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn width_derived_from_geometry() {
        let text = r#"{"name":"m","layers":[
            {"name":"c1","kind":"conv","k":7,"c":3,"n":64,"in_width":224,"stride":2,"padding":3}]}"#;
        assert_eq!(parse_network(text).unwrap().layers[0].out_width, 112);
    }

    #[test]
    fn inconsistent_width_rejected() {
        let text = r#"{"name":"m","layers":[
            {"name":"c1","kind":"conv","k":3,"c":3,"n":8,"w":10,"in_width":8,"padding":1}]}"#;
        assert!(matches!(parse_network(text), Err(NetError::Invalid { field: "w", .. })));
    }

    #[test]
    fn schema_errors_name_the_field() {
        let missing = r#"{"name":"m","layers":[{"name":"x","kind":"fc","c":4}]}"#;
        let err = parse_network(missing).unwrap_err().to_string();
        assert!(err.contains("`n`"), "{err}");
        let unknown = r#"{"name":"m","layers":[{"name":"x","kind":"fc","c":4,"n":4,"bias":true}]}"#;
        let err = parse_network(unknown).unwrap_err().to_string();
        assert!(err.contains("bias"), "{err}");
        let no_w = r#"{"name":"m","layers":[{"name":"x","kind":"conv","k":3,"c":4,"n":4}]}"#;
        assert!(matches!(parse_network(no_w), Err(NetError::Invalid { field: "w", .. })));
    }

    #[test]
    fn empty_and_duplicate_networks_rejected() {
        assert!(matches!(parse_network(""), Err(NetError::Syntax(_))));
        assert!(matches!(parse_network(r#"{"name":"e","layers":[]}"#), Err(NetError::Empty(_))));
        let dup =
            r#"{"name":"d","layers":[{"name":"x","kind":"fc","c":4,"n":4},{"name":"x","kind":"fc","c":4,"n":4}]}"#;
        assert!(matches!(parse_network(dup), Err(NetError::DuplicateName(_))));
    }

    #[test]
    fn lowering_examples() {
        let conv1 = LayerDesc::conv("conv1", 7, 3, 64, 224, 2, 3);
        assert_eq!(lower_layer(&conv1), LoweredMatrix { rows: 147, cols: 64, num_vectors: 12544 });
        let fc = LayerDesc::fc("fc", 512, 1000);
        assert_eq!(lower_layer(&fc), LoweredMatrix { rows: 512, cols: 1000, num_vectors: 1 });
        let unit = LayerDesc::fc("u", 1, 1);
        assert_eq!(lower_layer(&unit), LoweredMatrix { rows: 1, cols: 1, num_vectors: 1 });
    }
}
