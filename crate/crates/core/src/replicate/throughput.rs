use super::{Objective, ReplicateError, ReplicationInstance, ReplicationPlan};

/// Smallest `r >= 1` with `c / r <= m`.
fn min_copies(c: f64, m: f64) -> u64 {
    let mut r = (c / m).ceil().max(1.0) as u64;
    // (c / m).ceil() can be off by one either way; settle it against the exact test
    while r > 1 && c / (r - 1) as f64 <= m {
        r -= 1;
    }
    while c / r as f64 > m {
        r += 1;
    }
    r
}

/// Fewest copies per layer that bring every layer latency to at most `m`,
/// or `None` if they do not fit in the budget.
pub fn min_feasible_replication(inst: &ReplicationInstance, m: f64) -> Option<Vec<u64>> {
    let mut used = 0u64;
    let mut r = Vec::with_capacity(inst.len());
    for (&c, &s) in inst.c.iter().zip(&inst.s) {
        let k = min_copies(c, m);
        used = used.checked_add(k.checked_mul(s)?)?;
        if used > inst.n_tiles {
            return None;
        }
        r.push(k);
    }
    Some(r)
}

/// Exact minimizer of `max(c_l / r_l)` under the tile budget.
///
/// The optimum is one of the finitely many values `c_l / v` with
/// `1 <= v <= r_max(l)`, so a binary search over that sorted set with the
/// feasibility test [`min_feasible_replication`] terminates exactly.
pub fn optimize_throughput(inst: &ReplicationInstance) -> Result<ReplicationPlan, ReplicateError> {
    inst.slack()?;
    let mut candidates = Vec::new();
    for l in 0..inst.len() {
        let c = inst.c[l];
        candidates.extend((1..=inst.r_max(l)?).map(|v| c / v as f64));
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // the largest candidate (max c_l, all single copies) is always feasible
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if min_feasible_replication(inst, candidates[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let r = min_feasible_replication(inst, candidates[lo]).expect("upper end is feasible");
    let plan = inst.plan(Objective::Throughput, r);
    debug_assert_eq!(plan.objective_value, candidates[lo]);
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(c: &[f64], s: &[u64], n: u64) -> ReplicationInstance {
        ReplicationInstance::new(c.to_vec(), s.to_vec(), n).unwrap()
    }

    #[test]
    fn two_layer_example() {
        let p = optimize_throughput(&inst(&[100.0, 10.0], &[1, 1], 4)).unwrap();
        assert_eq!(p.r, vec![3, 1]);
        assert_eq!(p.objective_value, 100.0 / 3.0);
    }

    #[test]
    fn no_slack_gives_max_latency() {
        let p = optimize_throughput(&inst(&[5.0, 9.0, 7.0], &[2, 3, 4], 9)).unwrap();
        assert_eq!(p.objective_value, 9.0);
        assert_eq!(p.r, vec![1, 1, 1]);
    }

    #[test]
    fn identical_layers_split_evenly() {
        let p = optimize_throughput(&inst(&[40.0, 40.0], &[3, 3], 2 * 4 * 3)).unwrap();
        assert_eq!(p.r[0], p.r[1]);
        assert_eq!(p.r, vec![4, 4]);
    }

    #[test]
    fn optimum_is_tight() {
        let i = inst(&[37.0, 11.0, 23.0], &[2, 1, 3], 20);
        let p = optimize_throughput(&i).unwrap();
        assert!(min_feasible_replication(&i, p.objective_value).is_some());
        assert!(min_feasible_replication(&i, p.objective_value * (1.0 - 1e-6)).is_none());
    }

    #[test]
    fn min_copies_is_exact() {
        assert_eq!(min_copies(100.0, 100.0 / 3.0), 3);
        assert_eq!(min_copies(10.0, 100.0 / 3.0), 1);
        assert_eq!(min_copies(0.3, 0.1), 3);
        assert_eq!(min_copies(1.0, 0.1), 10);
    }
}
