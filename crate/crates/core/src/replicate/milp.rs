//! Replication as a 0-1 integer program.
//!
//! Each layer `l` picks exactly one candidate factor `v in 1..=r_max(l)` through
//! binary indicators `x[l,v]`, which makes every `1/r_l` term a constant:
//!
//! ```text
//! latency:     min  sum_{l,v} (c_l / v) x[l,v]
//! throughput:  min  M   s.t.  sum_v (c_l / v) x[l,v] <= M   for every l
//! both:        sum_v x[l,v] = 1,   sum_{l,v} v s_l x[l,v] <= n_tiles
//! ```
//!
//! Solved by depth-first branch and bound over the LP relaxation. Branching on
//! `x[l,v]` either fixes layer `l` to `v` or removes `v` from its candidates.

use super::simplex::{LinearProgram, LpOutcome, Row, Sense};
use super::{Objective, ReplicateError, ReplicationInstance, ReplicationPlan};

/// Default cap on explored branch-and-bound nodes.
pub const MILP_NODE_LIMIT: usize = 200_000;
const PIVOT_LIMIT: usize = 100_000;
const INT_TOL: f64 = 1e-7;

pub fn optimize_milp(inst: &ReplicationInstance, objective: Objective) -> Result<ReplicationPlan, ReplicateError> {
    optimize_milp_with_limit(inst, objective, MILP_NODE_LIMIT)
}

pub fn optimize_milp_with_limit(
    inst: &ReplicationInstance,
    objective: Objective,
    node_limit: usize,
) -> Result<ReplicationPlan, ReplicateError> {
    inst.slack()?;
    let n = inst.len();
    // scale latencies to at most 1 for the LP; plans are re-scored on the originals
    let scale = inst.c.iter().cloned().fold(0.0, f64::max);
    let c: Vec<f64> = inst.c.iter().map(|v| v / scale).collect();

    let root: Vec<Vec<u64>> = (0..n).map(|l| inst.r_max(l).map(|m| (1..=m).collect())).collect::<Result<_, _>>()?;
    let mut stack = vec![root];
    let mut best: Option<ReplicationPlan> = None;
    let mut nodes = 0;

    while let Some(allowed) = stack.pop() {
        if nodes >= node_limit {
            return Err(ReplicateError::IterationLimit { limit: node_limit, best });
        }
        nodes += 1;

        let (lp, vars) = relaxation(inst, &c, &allowed, objective);
        let (x, bound) = match lp.solve(PIVOT_LIMIT) {
            LpOutcome::Optimal { x, value } => (x, value * scale),
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => unreachable!("objective is bounded below by zero"),
            LpOutcome::PivotLimit => return Err(ReplicateError::IterationLimit { limit: node_limit, best }),
        };
        if let Some(b) = &best {
            if bound >= b.objective_value * (1.0 - 1e-12) {
                continue;
            }
        }

        let mut r = vec![0u64; n];
        let mut branch: Option<(usize, f64)> = None;
        for (k, &(l, v)) in vars.iter().enumerate() {
            let xv = x[k];
            if xv >= 1.0 - INT_TOL {
                r[l] = v;
            } else if xv > INT_TOL {
                let dist = (xv - 0.5).abs();
                if branch.is_none_or(|(_, d)| dist < d) {
                    branch = Some((k, dist));
                }
            }
        }

        match branch {
            None => {
                debug_assert!(r.iter().all(|&v| v >= 1));
                let plan = inst.plan(objective, r);
                if plan.tiles_used <= inst.n_tiles
                    && best.as_ref().is_none_or(|b| plan.objective_value < b.objective_value)
                {
                    best = Some(plan);
                }
            }
            Some((k, _)) => {
                let (l, v) = vars[k];
                let mut without = allowed.clone();
                without[l].retain(|&u| u != v);
                if !without[l].is_empty() {
                    stack.push(without);
                }
                let mut fixed = allowed;
                fixed[l] = vec![v];
                stack.push(fixed);
            }
        }
    }
    Ok(best.expect("the all-ones assignment is feasible"))
}

/// LP relaxation restricted to the allowed candidates. Returns the program and
/// the `(layer, factor)` of each indicator column.
fn relaxation(
    inst: &ReplicationInstance,
    c: &[f64],
    allowed: &[Vec<u64>],
    objective: Objective,
) -> (LinearProgram, Vec<(usize, u64)>) {
    let vars: Vec<(usize, u64)> =
        allowed.iter().enumerate().flat_map(|(l, vs)| vs.iter().map(move |&v| (l, v))).collect();
    let n = inst.len();
    let with_m = objective == Objective::Throughput;
    let cols = vars.len() + usize::from(with_m);

    let mut cost = vec![0.0; cols];
    match objective {
        Objective::Latency => {
            for (k, &(l, v)) in vars.iter().enumerate() {
                cost[k] = c[l] / v as f64;
            }
        }
        Objective::Throughput => cost[cols - 1] = 1.0,
    }

    let mut rows = Vec::with_capacity(2 * n + 1);
    for layer in 0..n {
        let mut coef = vec![0.0; cols];
        for (k, &(l, _)) in vars.iter().enumerate() {
            if l == layer {
                coef[k] = 1.0;
            }
        }
        rows.push(Row { coef, sense: Sense::Eq, rhs: 1.0 });
    }
    let mut tiles = vec![0.0; cols];
    for (k, &(l, v)) in vars.iter().enumerate() {
        tiles[k] = (v * inst.s[l]) as f64;
    }
    rows.push(Row { coef: tiles, sense: Sense::Le, rhs: inst.n_tiles as f64 });
    if with_m {
        for layer in 0..n {
            let mut coef = vec![0.0; cols];
            for (k, &(l, v)) in vars.iter().enumerate() {
                if l == layer {
                    coef[k] = c[l] / v as f64;
                }
            }
            coef[cols - 1] = -1.0;
            rows.push(Row { coef, sense: Sense::Le, rhs: 0.0 });
        }
    }
    (LinearProgram { cost, rows }, vars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replicate::{optimize_latency, optimize_throughput};

    #[test]
    fn two_layer_example_matches_combinatorial() {
        let i = ReplicationInstance::new(vec![100.0, 10.0], vec![1, 1], 4).unwrap();
        let p = optimize_milp(&i, Objective::Latency).unwrap();
        assert_eq!(p.r, vec![3, 1]);
        assert!((p.objective_value - optimize_latency(&i).unwrap().objective_value).abs() < 1e-9);
        let t = optimize_milp(&i, Objective::Throughput).unwrap();
        assert_eq!(t.objective_value, optimize_throughput(&i).unwrap().objective_value);
    }

    #[test]
    fn forced_solution_without_slack() {
        let i = ReplicationInstance::new(vec![4.0, 8.0, 2.0], vec![2, 1, 3], 6).unwrap();
        for obj in [Objective::Latency, Objective::Throughput] {
            assert_eq!(optimize_milp(&i, obj).unwrap().r, vec![1, 1, 1]);
        }
    }

    #[test]
    fn uneven_footprints() {
        let i = ReplicationInstance::new(vec![90.0, 100.0], vec![3, 5], 13).unwrap();
        assert_eq!(optimize_milp(&i, Objective::Latency).unwrap().r, vec![1, 2]);
    }

    #[test]
    fn node_limit_reports_incumbent() {
        let i = ReplicationInstance::new(vec![97.0, 61.0, 33.0, 12.0, 5.0], vec![3, 2, 5, 1, 4], 30).unwrap();
        match optimize_milp_with_limit(&i, Objective::Throughput, 1) {
            Err(ReplicateError::IterationLimit { limit: 1, .. }) => {}
            Ok(p) => assert!(p.tiles_used <= 30),
            Err(e) => panic!("unexpected {e}"),
        }
    }
}
