use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::{HwConfig, HwError, RowGrouping};
use crate::netgraph::{lower_layer, LayerDesc, LoweredMatrix, NetworkGraph};
use crate::policy::QuantPolicy;
use crate::replicate::{ReplicationInstance, ReplicationPlan};

fn div_ceil(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Tiles needed for one copy of the matrix with `w_bits`-bit weights:
/// `ceil(rows/X) * ceil(cols/X) * ceil(w_bits/device_bits)`.
pub fn tile_count(lm: &LoweredMatrix, w_bits: u32, cfg: &HwConfig) -> u64 {
    let x = u64::from(cfg.xbar_size);
    div_ceil(lm.rows, x) * div_ceil(lm.cols, x) * div_ceil(w_bits.into(), cfg.device_bits.into())
}

/// Bit-streamed VMM latency in cycles:
/// `num_vectors * t_tile * ceil(X/n_adc) * a_bits * row_groups`.
pub fn vmm_cycles(lm: &LoweredMatrix, a_bits: u32, cfg: &HwConfig) -> u64 {
    let x = u64::from(cfg.xbar_size);
    let row_groups = match cfg.row_grouping {
        RowGrouping::Physical => div_ceil(lm.rows.min(x), cfg.row_parallelism.into()),
        RowGrouping::Literal => 1,
    };
    lm.num_vectors
        * u64::from(cfg.t_tile_cycles)
        * div_ceil(x, cfg.n_adc_per_tile.into())
        * u64::from(a_bits)
        * row_groups
}

pub fn vmm_latency(lm: &LoweredMatrix, a_bits: u32, cfg: &HwConfig) -> f64 {
    vmm_cycles(lm, a_bits, cfg) as f64 / cfg.clock_hz
}

/// Cost of one copy of a layer, in whole cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerCost {
    pub tiles: u64,
    pub tile_in_cycles: u64,
    pub tile_out_cycles: u64,
    pub vmm_cycles: u64,
    pub digital_cycles: u64,
    /// Bits moved over the tile buses (inbound + outbound).
    pub bits_moved: u64,
}

impl LayerCost {
    pub fn total_cycles(&self) -> u64 {
        self.tile_in_cycles + self.tile_out_cycles + self.vmm_cycles + self.digital_cycles
    }

    /// `[tile_in, tile_out, vmm, digital, total]` in seconds.
    pub fn seconds(&self, cfg: &HwConfig) -> [f64; 5] {
        let s = |c: u64| c as f64 / cfg.clock_hz;
        [
            s(self.tile_in_cycles),
            s(self.tile_out_cycles),
            s(self.vmm_cycles),
            s(self.digital_cycles),
            s(self.total_cycles()),
        ]
    }
}

/// Cycles to push `work` units through a resource of `full_rate` units/cycle
/// that a bus group of `group` tiles shares in proportion to tile ownership.
fn shared_cycles(work: u64, full_rate: u64, tiles: u64, group: u64) -> u64 {
    let owned = tiles.min(group);
    // work / (full_rate * owned / group), rounded up to whole cycles
    let num = u128::from(work) * u128::from(group);
    let den = u128::from(full_rate) * u128::from(owned);
    num.div_ceil(den) as u64
}

pub fn layer_cost(layer: &LayerDesc, w_bits: u32, a_bits: u32, cfg: &HwConfig) -> LayerCost {
    let lm = lower_layer(layer);
    let tiles = tile_count(&lm, w_bits, cfg);
    let bits_in = lm.num_vectors * lm.rows * u64::from(a_bits);
    let bits_out = lm.num_vectors * lm.cols * u64::from(cfg.output_bits);
    let vmm = vmm_cycles(&lm, a_bits, cfg);
    let (tile_in, tile_out, digital) = if cfg.ideal_transport {
        (0, 0, 0)
    } else {
        let group = u64::from(cfg.tiles_per_bus_group);
        (
            shared_cycles(bits_in, cfg.bus_in_bits(), tiles, group),
            shared_cycles(bits_out, cfg.bus_out_bits(), tiles, group),
            shared_cycles(lm.num_vectors * lm.cols, cfg.lanes_per_vm.into(), tiles, group),
        )
    };
    LayerCost {
        tiles,
        tile_in_cycles: tile_in,
        tile_out_cycles: tile_out,
        vmm_cycles: vmm,
        digital_cycles: digital,
        bits_moved: bits_in + bits_out,
    }
}

fn per_layer_costs(net: &NetworkGraph, policy: &QuantPolicy, cfg: &HwConfig) -> Result<Vec<LayerCost>, HwError> {
    if policy.len() != net.layers.len() {
        return Err(HwError::Mismatch(format!(
            "policy covers {} layers, network `{}` has {}",
            policy.len(),
            net.name,
            net.layers.len()
        )));
    }
    Ok(net.layers.iter().zip(&policy.bits).map(|(l, b)| layer_cost(l, b.w_bits, b.a_bits, cfg)).collect())
}

/// Tiles of one copy of every layer.
pub fn total_tiles(net: &NetworkGraph, policy: &QuantPolicy, cfg: &HwConfig) -> Result<u64, HwError> {
    Ok(per_layer_costs(net, policy, cfg)?.iter().map(|c| c.tiles).sum())
}

/// Replication problem for `policy`: per-layer base latency in cycles and
/// per-copy tile footprint, under a budget of `n_tiles`.
pub fn replication_instance(
    net: &NetworkGraph,
    policy: &QuantPolicy,
    cfg: &HwConfig,
    n_tiles: u64,
) -> Result<ReplicationInstance, crate::Error> {
    let costs = per_layer_costs(net, policy, cfg)?;
    let c = costs.iter().map(|c| c.total_cycles() as f64).collect();
    let s = costs.iter().map(|c| c.tiles).collect();
    Ok(ReplicationInstance::new(c, s, n_tiles)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub tile_j: f64,
    pub mem_access_j: f64,
    pub sram_leak_j: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.tile_j + self.mem_access_j + self.sram_leak_j
    }
}

/// Whole-network cost under a policy and replication factors.
///
/// Latencies are exact rationals in cycles: layer `l` contributes
/// `total_cycles_l / r_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCost {
    pub per_layer: Vec<LayerCost>,
    pub replication: Vec<u64>,
    pub latency_cycles: BigRational,
    pub bottleneck_layer: usize,
    pub bottleneck_cycles: BigRational,
    /// Inferences per cycle, `1 / bottleneck_cycles`.
    pub throughput_per_cycle: BigRational,
    pub tiles_used: u64,
    pub energy: EnergyBreakdown,
    pub clock_hz: f64,
}

impl NetworkCost {
    pub fn layer_contribution(&self, l: usize) -> BigRational {
        BigRational::new(BigInt::from(self.per_layer[l].total_cycles()), BigInt::from(self.replication[l]))
    }

    pub fn latency_s(&self) -> f64 {
        self.latency_cycles.to_f64().unwrap_or(f64::INFINITY) / self.clock_hz
    }

    pub fn bottleneck_s(&self) -> f64 {
        self.bottleneck_cycles.to_f64().unwrap_or(f64::INFINITY) / self.clock_hz
    }

    pub fn throughput_per_s(&self) -> f64 {
        self.throughput_per_cycle.to_f64().unwrap_or(0.0) * self.clock_hz
    }

    pub fn energy_j(&self) -> f64 {
        self.energy.total()
    }
}

pub fn network_cost(
    net: &NetworkGraph,
    policy: &QuantPolicy,
    plan: Option<&ReplicationPlan>,
    cfg: &HwConfig,
) -> Result<NetworkCost, HwError> {
    let per_layer = per_layer_costs(net, policy, cfg)?;
    let replication = match plan {
        Some(p) => {
            if p.r.len() != per_layer.len() {
                return Err(HwError::Mismatch(format!(
                    "plan covers {} layers, network has {}",
                    p.r.len(),
                    per_layer.len()
                )));
            }
            if p.r.contains(&0) {
                return Err(HwError::Mismatch("replication factors must be at least 1".into()));
            }
            p.r.clone()
        }
        None => vec![1; per_layer.len()],
    };
    let tiles_used: u64 = per_layer.iter().zip(&replication).map(|(c, r)| c.tiles * r).sum();
    if plan.is_some() && tiles_used > cfg.n_tiles_total {
        return Err(HwError::Infeasible { required: tiles_used, available: cfg.n_tiles_total });
    }

    let mut latency = BigRational::zero();
    let mut bottleneck = 0;
    let mut worst = BigRational::zero();
    for (l, (cost, &r)) in per_layer.iter().zip(&replication).enumerate() {
        let contrib = BigRational::new(BigInt::from(cost.total_cycles()), BigInt::from(r));
        if contrib > worst {
            worst = contrib.clone();
            bottleneck = l;
        }
        latency += contrib;
    }
    let throughput = if worst.is_zero() { BigRational::zero() } else { worst.recip() };

    let mut out = NetworkCost {
        per_layer,
        replication,
        latency_cycles: latency,
        bottleneck_layer: bottleneck,
        bottleneck_cycles: worst,
        throughput_per_cycle: throughput,
        tiles_used,
        energy: EnergyBreakdown { tile_j: 0.0, mem_access_j: 0.0, sram_leak_j: 0.0 },
        clock_hz: cfg.clock_hz,
    };
    out.energy = energy_of(&out, cfg);
    Ok(out)
}

/// Tile energy (active tiles x power x VMM time), vector-module memory traffic,
/// and SRAM leakage over the network latency.
fn energy_of(cost: &NetworkCost, cfg: &HwConfig) -> EnergyBreakdown {
    let mut tile_j = 0.0;
    let mut bits = 0u64;
    for (c, &r) in cost.per_layer.iter().zip(&cost.replication) {
        let active = (c.tiles * r) as f64;
        let t_vmm = c.vmm_cycles as f64 / (r as f64 * cfg.clock_hz);
        tile_j += active * cfg.avg_tile_power_w * t_vmm;
        bits += c.bits_moved;
    }
    EnergyBreakdown {
        tile_j,
        mem_access_j: cfg.e_mem_access_j_per_bit * bits as f64,
        sram_leak_j: cfg.p_sram_leak_w * cost.latency_s(),
    }
}

pub fn energy_estimate(
    net: &NetworkGraph,
    policy: &QuantPolicy,
    plan: Option<&ReplicationPlan>,
    cfg: &HwConfig,
) -> Result<EnergyBreakdown, HwError> {
    Ok(network_cost(net, policy, plan, cfg)?.energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::builtin_benchmark;

    fn lm(rows: u64, cols: u64, num_vectors: u64) -> LoweredMatrix {
        LoweredMatrix { rows, cols, num_vectors }
    }

    #[test]
    fn tile_count_examples() {
        let cfg = HwConfig::default();
        assert_eq!(tile_count(&lm(147, 64, 12544), 8, &cfg), 8);
        assert_eq!(tile_count(&lm(576, 64, 3136), 8, &cfg), 24);
        assert_eq!(tile_count(&lm(256, 256, 1), 1, &cfg), 1);
        let mut two_bit = cfg.clone();
        two_bit.device_bits = 2;
        assert_eq!(tile_count(&lm(256, 256, 1), 2, &two_bit), 1);
        assert_eq!(tile_count(&lm(256, 256, 1), 3, &two_bit), 2);
    }

    #[test]
    fn vmm_literal_example() {
        let cfg = HwConfig::default().literal();
        assert_eq!(vmm_cycles(&lm(147, 64, 12544), 8, &cfg), 3_211_264);
        let mut unit = cfg.clone();
        unit.n_adc_per_tile = unit.xbar_size;
        unit.t_tile_cycles = 3;
        assert_eq!(vmm_cycles(&lm(147, 64, 1), 1, &unit), 3);
    }

    #[test]
    fn vmm_physical_row_groups() {
        let cfg = HwConfig::default();
        // ceil(147 / 9) = 17 row groups
        assert_eq!(vmm_cycles(&lm(147, 64, 12544), 8, &cfg), 3_211_264 * 17);
        // rows beyond one crossbar run on parallel tiles: min(576, 256) -> 29 groups
        assert_eq!(vmm_cycles(&lm(576, 64, 1), 1, &cfg), 32 * 29);
    }

    #[test]
    fn layer_total_is_sum_of_terms() {
        let net = builtin_benchmark("resnet18").unwrap();
        let cfg = HwConfig::default();
        for l in &net.layers {
            let c = layer_cost(l, 6, 5, &cfg);
            assert_eq!(c.total_cycles(), c.tile_in_cycles + c.tile_out_cycles + c.vmm_cycles + c.digital_cycles);
            let s = c.seconds(&cfg);
            assert!((s[0] + s[1] + s[2] + s[3] - s[4]).abs() <= 1e-12 * s[4]);
        }
    }

    #[test]
    fn ideal_transport_leaves_only_vmm() {
        let net = builtin_benchmark("resnet18").unwrap();
        let cfg = HwConfig { ideal_transport: true, ..HwConfig::default() };
        for l in &net.layers {
            let c = layer_cost(l, 8, 8, &cfg);
            assert_eq!(c.total_cycles(), c.vmm_cycles);
        }
    }

    #[test]
    fn fc_vmm_far_below_conv1() {
        let cfg = HwConfig::default();
        let conv1 = layer_cost(&LayerDesc::conv("c", 7, 3, 64, 224, 2, 3), 8, 8, &cfg);
        let fc = layer_cost(&LayerDesc::fc("f", 512, 1000), 8, 8, &cfg);
        assert!(fc.vmm_cycles * 1000 < conv1.vmm_cycles);
    }

    #[test]
    fn bus_share_grows_with_tiles_until_full_bus() {
        // 1000 bits over a 64-bit bus owned 8/144 -> ceil(1000*144/(64*8))
        assert_eq!(shared_cycles(1000, 64, 8, 144), 282);
        assert_eq!(shared_cycles(1000, 64, 144, 144), 16);
        assert_eq!(shared_cycles(1000, 64, 500, 144), 16);
    }

    #[test]
    fn network_cost_replication_and_bottleneck() {
        let net = builtin_benchmark("resnet18").unwrap();
        let cfg = HwConfig::default();
        let policy = QuantPolicy::uniform(net.len(), 8);
        let base = network_cost(&net, &policy, None, &cfg).unwrap();
        assert_eq!(base.tiles_used, 1608);
        assert_eq!(base.bottleneck_layer, 0);
        assert_eq!(&base.throughput_per_cycle * &base.bottleneck_cycles, BigRational::from_integer(1.into()));

        let ones = ReplicationPlan { r: vec![1; net.len()], objective_value: 0.0, tiles_used: 1608 };
        let same = network_cost(&net, &policy, Some(&ones), &cfg).unwrap();
        assert_eq!(same.latency_cycles, base.latency_cycles);

        let mut r = vec![1; net.len()];
        r[3] = 2;
        let plan = ReplicationPlan { r, objective_value: 0.0, tiles_used: 0 };
        let halved = network_cost(&net, &policy, Some(&plan), &cfg).unwrap();
        let two = BigRational::from_integer(2.into());
        assert_eq!(halved.layer_contribution(3) * &two, base.layer_contribution(3));
        assert_eq!(&base.latency_cycles - &halved.latency_cycles, base.layer_contribution(3) / two);

        let huge = ReplicationPlan { r: vec![1000; net.len()], objective_value: 0.0, tiles_used: 0 };
        assert!(matches!(network_cost(&net, &policy, Some(&huge), &cfg), Err(HwError::Infeasible { .. })));
    }

    #[test]
    fn energy_components() {
        let net = builtin_benchmark("resnet18").unwrap();
        let policy = QuantPolicy::uniform(net.len(), 8);
        let cfg = HwConfig::default();
        let e = energy_estimate(&net, &policy, None, &cfg).unwrap();
        assert!(e.tile_j > 0.0 && e.mem_access_j > 0.0 && e.sram_leak_j > 0.0);

        let doubled = HwConfig { avg_tile_power_w: 2.0 * cfg.avg_tile_power_w, ..cfg.clone() };
        let e2 = energy_estimate(&net, &policy, None, &doubled).unwrap();
        assert_eq!(e2.tile_j, 2.0 * e.tile_j);
        assert_eq!(e2.mem_access_j, e.mem_access_j);
        assert_eq!(e2.sram_leak_j, e.sram_leak_j);

        let zero = HwConfig { avg_tile_power_w: 0.0, e_mem_access_j_per_bit: 0.0, p_sram_leak_w: 0.0, ..cfg };
        assert_eq!(energy_estimate(&net, &policy, None, &zero).unwrap().total(), 0.0);
    }
}
