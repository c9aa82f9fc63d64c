use super::{Objective, ReplicateError, ReplicationInstance, ReplicationPlan};

/// Exact minimizer of `sum(c_l / r_l)` under the tile budget.
///
/// Dynamic program over the spare tiles (budget minus one copy of each layer):
/// `best[b]` is the lowest latency of the layers seen so far using at most `b`
/// spare tiles. Each layer tries every number of extra copies that fits. Runs in
/// `O(slack^2 * sum(1/s_l))`. Ties keep the smaller replication factor.
pub fn optimize_latency(inst: &ReplicationInstance) -> Result<ReplicationPlan, ReplicateError> {
    let slack = inst.slack()? as usize;
    let width = slack + 1;
    let n = inst.len();

    let mut best = vec![0.0f64; width];
    let mut next = vec![0.0f64; width];
    // extra copies chosen for layer l at budget b
    let mut choice = vec![0u32; n * width];

    for l in 0..n {
        let c = inst.c[l];
        let s = inst.s[l] as usize;
        let row = &mut choice[l * width..(l + 1) * width];
        for b in 0..width {
            let mut top = c + best[b];
            let mut arg = 0u32;
            let mut k = 1usize;
            while k * s <= b {
                let v = c / (k + 1) as f64 + best[b - k * s];
                if v < top {
                    top = v;
                    arg = k as u32;
                }
                k += 1;
            }
            next[b] = top;
            row[b] = arg;
        }
        std::mem::swap(&mut best, &mut next);
    }

    let mut r = vec![1u64; n];
    let mut b = slack;
    for l in (0..n).rev() {
        let k = choice[l * width + b] as usize;
        r[l] += k as u64;
        b -= k * inst.s[l] as usize;
    }
    Ok(inst.plan(Objective::Latency, r))
}
