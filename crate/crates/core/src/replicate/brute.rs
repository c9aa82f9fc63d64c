use super::{Objective, ReplicateError, ReplicationInstance, ReplicationPlan};

/// Largest search space (product of per-layer `r_max`) brute force accepts.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

/// Exhaustive enumeration of every feasible replication vector. Test oracle.
///
/// Ties keep the lexicographically first vector.
pub fn brute_force(inst: &ReplicationInstance, objective: Objective) -> Result<ReplicationPlan, ReplicateError> {
    inst.slack()?;
    let mut size: u128 = 1;
    for l in 0..inst.len() {
        size = size.saturating_mul(inst.r_max(l)? as u128);
    }
    if size > BRUTE_FORCE_LIMIT {
        return Err(ReplicateError::SearchSpaceTooLarge { size, limit: BRUTE_FORCE_LIMIT });
    }

    let mut r = vec![1u64; inst.len()];
    let mut best: Option<(f64, Vec<u64>)> = None;
    enumerate(inst, objective, 0, 0, &mut r, &mut best);
    let (_, r) = best.expect("all-ones vector is feasible");
    Ok(inst.plan(objective, r))
}

fn enumerate(
    inst: &ReplicationInstance,
    objective: Objective,
    l: usize,
    used: u64,
    r: &mut Vec<u64>,
    best: &mut Option<(f64, Vec<u64>)>,
) {
    if l == inst.len() {
        let v = inst.evaluate(objective, r);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            *best = Some((v, r.clone()));
        }
        return;
    }
    // reserve one copy of every later layer
    let later: u64 = inst.s[l + 1..].iter().sum();
    let mut k = 1;
    while used + k * inst.s[l] + later <= inst.n_tiles {
        r[l] = k;
        enumerate(inst, objective, l + 1, used + k * inst.s[l], r, best);
        k += 1;
    }
    r[l] = 1;
}
