//! Analytical cost model of a spatial IMC accelerator.
//!
//! Every weight-bearing layer is pinned to its own set of crossbar tiles. A
//! layer's latency is the sum of four terms (input transfer, output transfer,
//! bit-streamed VMM and digital post-processing), all counted in whole clock
//! cycles. Network latency is the sum over layers; throughput is the inverse of
//! the slowest layer. Replicating a layer `r` times divides its latency by `r`.

mod config;
mod cost;

pub use config::{HwConfig, RowGrouping};
pub use cost::{
    energy_estimate, layer_cost, network_cost, replication_instance, tile_count, total_tiles, vmm_cycles, vmm_latency,
    EnergyBreakdown, LayerCost, NetworkCost,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HwError {
    #[error("hardware config: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("hardware config: `{field}` {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("plan needs {required} tiles but the chip has {available}")]
    Infeasible { required: u64, available: u64 },
    #[error("{0}")]
    Mismatch(String),
}
