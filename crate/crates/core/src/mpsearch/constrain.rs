use rayon::prelude::*;

use crate::hwmodel::{layer_cost, HwConfig, LayerCost};
use crate::netgraph::NetworkGraph;
use crate::policy::{LayerBits, QuantPolicy};
use crate::replicate::{
    self, bottleneck_objective, latency_objective, Objective, ReplicationInstance, ReplicationPlan,
};

/// Cost tables and replication setting shared by every policy evaluation of
/// one search.
#[derive(Debug, Clone)]
pub struct DesignSpace<'a> {
    pub net: &'a NetworkGraph,
    pub cfg: &'a HwConfig,
    pub objective: Objective,
    pub n_tiles: u64,
    pub replicate: bool,
    pub b_min: u32,
    pub b_max: u32,
    span: usize,
    table: Vec<LayerCost>,
}

impl<'a> DesignSpace<'a> {
    pub fn new(
        net: &'a NetworkGraph,
        cfg: &'a HwConfig,
        objective: Objective,
        n_tiles: u64,
        replicate: bool,
        b_min: u32,
        b_max: u32,
    ) -> Self {
        assert!(b_min >= 1 && b_min <= b_max);
        let span = (b_max - b_min + 1) as usize;
        let mut table = Vec::with_capacity(net.len() * span * span);
        for layer in &net.layers {
            for w in b_min..=b_max {
                for a in b_min..=b_max {
                    table.push(layer_cost(layer, w, a, cfg));
                }
            }
        }
        Self { net, cfg, objective, n_tiles, replicate, b_min, b_max, span, table }
    }

    pub fn cost(&self, l: usize, bits: LayerBits) -> &LayerCost {
        let w = (bits.w_bits - self.b_min) as usize;
        let a = (bits.a_bits - self.b_min) as usize;
        &self.table[(l * self.span + w) * self.span + a]
    }

    pub fn instance(&self, policy: &QuantPolicy) -> ReplicationInstance {
        let (c, s) = policy
            .bits
            .iter()
            .enumerate()
            .map(|(l, &b)| {
                let cost = self.cost(l, b);
                (cost.total_cycles() as f64, cost.tiles)
            })
            .unzip();
        ReplicationInstance::new(c, s, self.n_tiles).expect("layer costs are positive")
    }

    /// Post-replication metric in cycles with its plan, or `None` when one copy
    /// of every layer does not fit the tile budget.
    pub fn evaluate(&self, policy: &QuantPolicy) -> Option<(f64, ReplicationPlan)> {
        let inst = self.instance(policy);
        if inst.base_tiles() > self.n_tiles {
            return None;
        }
        let plan = if self.replicate {
            replicate::optimize(&inst, self.objective).ok()?
        } else {
            ReplicationPlan::unreplicated(&inst, self.objective)
        };
        Some((plan.objective_value, plan))
    }

    pub fn tiles(&self, policy: &QuantPolicy) -> u64 {
        policy.bits.iter().enumerate().map(|(l, &b)| self.cost(l, b).tiles).sum()
    }

    /// Total and bottleneck latency of a plan, in cycles.
    pub fn latency_and_bottleneck(&self, policy: &QuantPolicy, plan: &ReplicationPlan) -> (f64, f64) {
        let inst = self.instance(policy);
        (latency_objective(&inst.c, &plan.r), bottleneck_objective(&inst.c, &plan.r))
    }
}

/// Outcome of pushing a policy under a performance budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Constrained {
    pub policy: QuantPolicy,
    /// `None` when even the final policy does not fit the tile budget.
    pub plan: Option<ReplicationPlan>,
    /// Post-replication metric in seconds.
    pub metric_s: Option<f64>,
    /// The budget could not be met with every bitwidth at its minimum.
    pub budget_miss: bool,
    pub decrements: usize,
}

/// Lowers bitwidths one at a time until the post-replication metric is within
/// `budget_s` (seconds).
///
/// Each step tries every single-bit decrement and keeps the one with the best
/// resulting metric; ties go to the earlier layer, weights before activations.
/// While the policy does not fit the tile budget at all, feasible candidates
/// win, then the largest tile saving. Never raises a bitwidth and stops after
/// at most `2 * L * (b_max - b_min)` steps.
pub fn constrain_policy(space: &DesignSpace<'_>, policy: &QuantPolicy, budget_s: f64) -> Constrained {
    let clock = space.cfg.clock_hz;
    let mut current = policy.clone();
    let mut eval = space.evaluate(&current);
    let mut decrements = 0;
    loop {
        if let Some((m, _)) = &eval {
            if m / clock <= budget_s {
                break;
            }
        }
        let mut candidates: Vec<QuantPolicy> = (0..current.len())
            .flat_map(|l| [(l, true), (l, false)])
            .filter_map(|(l, weight)| {
                let b = current.bits[l];
                let v = if weight { b.w_bits } else { b.a_bits };
                (v > space.b_min).then(|| {
                    let mut p = current.clone();
                    if weight {
                        p.bits[l].w_bits -= 1;
                    } else {
                        p.bits[l].a_bits -= 1;
                    }
                    p
                })
            })
            .collect();
        if candidates.is_empty() {
            let metric_s = eval.as_ref().map(|(m, _)| m / clock);
            return Constrained {
                policy: current,
                plan: eval.map(|(_, p)| p),
                metric_s,
                budget_miss: true,
                decrements,
            };
        }
        let scored: Vec<Option<(f64, ReplicationPlan)>> = candidates.par_iter().map(|p| space.evaluate(p)).collect();

        let mut pick = 0;
        for k in 1..candidates.len() {
            let better = match (&scored[k], &scored[pick]) {
                (Some((m, _)), Some((best, _))) => m < best,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => space.tiles(&candidates[k]) < space.tiles(&candidates[pick]),
            };
            if better {
                pick = k;
            }
        }
        current = candidates.swap_remove(pick);
        eval = scored.into_iter().nth(pick).expect("scored every candidate");
        decrements += 1;
    }
    let (m, plan) = eval.expect("loop exits only when evaluated");
    Constrained { policy: current, plan: Some(plan), metric_s: Some(m / clock), budget_miss: false, decrements }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hwmodel::network_cost;
    use crate::netgraph::builtin_benchmark;

    #[test]
    fn within_budget_is_unchanged() {
        let net = builtin_benchmark("mlp_mnist").unwrap();
        let cfg = HwConfig::default();
        let space = DesignSpace::new(&net, &cfg, Objective::Latency, 3232, true, 2, 8);
        let p = QuantPolicy::uniform(net.len(), 8);
        let out = constrain_policy(&space, &p, f64::INFINITY);
        assert_eq!(out.policy, p);
        assert_eq!(out.decrements, 0);
        assert!(!out.budget_miss);
    }

    #[test]
    fn impossible_budget_exhausts_to_minimum() {
        let net = builtin_benchmark("mlp_mnist").unwrap();
        let cfg = HwConfig::default();
        let space = DesignSpace::new(&net, &cfg, Objective::Throughput, 3232, true, 2, 8);
        let p = QuantPolicy::uniform(net.len(), 8);
        let out = constrain_policy(&space, &p, f64::MIN_POSITIVE);
        assert!(out.budget_miss);
        assert_eq!(out.policy, QuantPolicy::uniform(net.len(), 2));
        assert_eq!(out.decrements, 2 * net.len() * 6);
    }

    #[test]
    fn shrinks_oversized_policy_into_tile_budget() {
        let net = builtin_benchmark("resnet18").unwrap();
        let cfg = HwConfig::default();
        let space = DesignSpace::new(&net, &cfg, Objective::Latency, 1000, true, 2, 8);
        let p = QuantPolicy::uniform(net.len(), 8);
        assert!(space.evaluate(&p).is_none());
        let out = constrain_policy(&space, &p, f64::INFINITY);
        assert!(!out.budget_miss);
        assert!(out.plan.unwrap().tiles_used <= 1000);
        assert!(space.tiles(&out.policy) <= 1000);
    }

    #[test]
    fn resnet18_meets_lenient_budget() {
        let net = builtin_benchmark("resnet18").unwrap();
        let cfg = HwConfig::default();
        let base = QuantPolicy::uniform(net.len(), 8);
        let baseline = network_cost(&net, &base, None, &cfg).unwrap();
        let space = DesignSpace::new(&net, &cfg, Objective::Latency, baseline.tiles_used, true, 2, 8);
        let budget = 0.35 * baseline.latency_s();
        let out = constrain_policy(&space, &base, budget);
        assert!(!out.budget_miss);
        assert!(out.metric_s.unwrap() <= budget);
        for (new, old) in out.policy.bits.iter().zip(&base.bits) {
            assert!(new.w_bits <= old.w_bits && new.a_bits <= old.a_bits);
        }
        // the plan's metric agrees with the exact cost model
        let plan = out.plan.unwrap();
        let exact = network_cost(&net, &out.policy, Some(&plan), &cfg).unwrap();
        assert!((exact.latency_s() - out.metric_s.unwrap()).abs() <= 1e-9 * exact.latency_s());
    }
}
