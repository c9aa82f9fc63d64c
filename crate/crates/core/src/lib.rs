//! Design-space optimization for spatial in-memory-computing (IMC) DNN accelerators.
//!
//! The crate is organised around the flow of one design evaluation:
//!
//! 1. [`netgraph`] describes a workload as an ordered list of weight-bearing layers
//!    and lowers each layer to the matrix it occupies on the crossbars.
//! 2. [`hwmodel`] turns a layer plus a weight/activation precision into tile
//!    counts, latencies and energy on a configurable accelerator.
//! 3. [`replicate`] spends spare tiles on extra copies of slow layers, minimizing
//!    either total latency or the bottleneck layer latency.
//! 4. [`mpsearch`] searches per-layer precisions with an actor-critic agent under a
//!    tightening performance budget, scoring candidates with an
//!    [`accoracle`] accuracy oracle.
//!
//! [`cli`] wires all of this into the `imc-dse` command-line tool.

pub mod accoracle;
pub mod cli;
pub mod error;
pub mod hwmodel;
pub mod mpsearch;
pub mod netgraph;
pub mod policy;
pub mod replicate;

pub use error::{Error, Result};
pub use hwmodel::{HwConfig, LayerCost, NetworkCost};
pub use netgraph::{LayerDesc, LayerKind, LoweredMatrix, NetworkGraph};
pub use policy::{LayerBits, QuantPolicy};
pub use replicate::{Objective, ReplicationInstance, ReplicationPlan};
