//! Dense-tableau two-phase primal simplex with Bland's rule.
//!
//! Minimizes `cost . x` subject to linear rows and `x >= 0`. Sized for the
//! small LP relaxations solved during branch and bound.

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub coef: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LinearProgram {
    pub cost: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
    PivotLimit,
}

struct Tableau {
    /// `m` rows of `cols + 1` entries; the last entry is the right-hand side.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

enum Step {
    Optimal,
    Unbounded,
    PivotLimit,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.a[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c];
        for v in self.a[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis.iter().enumerate().map(|(i, &b)| cost[b] * self.rhs(i)).sum()
    }

    /// Bland's rule: lowest-index improving column enters; ratio ties leave by
    /// lowest basic variable index.
    fn optimize(&mut self, cost: &[f64], enterable: usize, pivots: &mut usize, limit: usize) -> Step {
        let m = self.a.len();
        loop {
            let mut entering = None;
            for j in 0..enterable {
                if self.basis.contains(&j) {
                    continue;
                }
                let reduced = cost[j] - (0..m).map(|i| cost[self.basis[i]] * self.a[i][j]).sum::<f64>();
                if reduced < -EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else { return Step::Optimal };

            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..m {
                let aij = self.a[i][j];
                if aij > EPS {
                    let ratio = self.rhs(i) / aij;
                    let better = match leaving {
                        None => true,
                        Some((k, best)) => ratio < best - EPS || (ratio <= best + EPS && self.basis[i] < self.basis[k]),
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((i, _)) = leaving else { return Step::Unbounded };
            if *pivots >= limit {
                return Step::PivotLimit;
            }
            *pivots += 1;
            self.pivot(i, j);
        }
    }
}

impl LinearProgram {
    pub fn solve(&self, pivot_limit: usize) -> LpOutcome {
        let n = self.cost.len();
        let m = self.rows.len();

        // normalize to non-negative right-hand sides
        let rows: Vec<Row> = self
            .rows
            .iter()
            .map(|r| {
                if r.rhs < 0.0 {
                    Row {
                        coef: r.coef.iter().map(|v| -v).collect(),
                        sense: match r.sense {
                            Sense::Le => Sense::Ge,
                            Sense::Ge => Sense::Le,
                            Sense::Eq => Sense::Eq,
                        },
                        rhs: -r.rhs,
                    }
                } else {
                    r.clone()
                }
            })
            .collect();

        let n_slack = rows.iter().filter(|r| r.sense != Sense::Eq).count();
        let n_art = rows.iter().filter(|r| r.sense != Sense::Le).count();
        let cols = n + n_slack + n_art;
        let art_start = n + n_slack;

        let mut a = vec![vec![0.0; cols + 1]; m];
        let mut basis = vec![0; m];
        let (mut next_slack, mut next_art) = (n, art_start);
        for (i, row) in rows.iter().enumerate() {
            a[i][..n].copy_from_slice(&row.coef);
            a[i][cols] = row.rhs;
            match row.sense {
                Sense::Le => {
                    a[i][next_slack] = 1.0;
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                Sense::Ge => {
                    a[i][next_slack] = -1.0;
                    next_slack += 1;
                    a[i][next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
                Sense::Eq => {
                    a[i][next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
            }
        }
        let mut t = Tableau { a, basis, cols };
        let mut pivots = 0;

        if n_art > 0 {
            let mut phase1 = vec![0.0; cols];
            phase1[art_start..].iter_mut().for_each(|c| *c = 1.0);
            match t.optimize(&phase1, cols, &mut pivots, pivot_limit) {
                Step::Optimal => {}
                Step::PivotLimit => return LpOutcome::PivotLimit,
                Step::Unbounded => unreachable!("phase one is bounded below by zero"),
            }
            let scale = 1.0 + rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
            if t.objective(&phase1) > EPS * scale {
                return LpOutcome::Infeasible;
            }
            // drive zero-valued artificials out of the basis where possible
            for i in 0..m {
                if t.basis[i] >= art_start {
                    if let Some(j) = (0..art_start).find(|&j| t.a[i][j].abs() > EPS) {
                        t.pivot(i, j);
                    }
                }
            }
        }

        let mut phase2 = vec![0.0; cols];
        phase2[..n].copy_from_slice(&self.cost);
        match t.optimize(&phase2, art_start, &mut pivots, pivot_limit) {
            Step::Optimal => {}
            Step::Unbounded => return LpOutcome::Unbounded,
            Step::PivotLimit => return LpOutcome::PivotLimit,
        }
        let mut x = vec![0.0; n];
        for (i, &b) in t.basis.iter().enumerate() {
            if b < n {
                x[b] = t.rhs(i);
            }
        }
        let value = self.cost.iter().zip(&x).map(|(c, x)| c * x).sum();
        LpOutcome::Optimal { x, value }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coef: &[f64], sense: Sense, rhs: f64) -> Row {
        Row { coef: coef.to_vec(), sense, rhs }
    }

    fn optimal(lp: &LinearProgram) -> (Vec<f64>, f64) {
        match lp.solve(10_000) {
            LpOutcome::Optimal { x, value } => (x, value),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_max_problem() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
        let lp = LinearProgram {
            cost: vec![-3.0, -5.0],
            rows: vec![
                row(&[1.0, 0.0], Sense::Le, 4.0),
                row(&[0.0, 2.0], Sense::Le, 12.0),
                row(&[3.0, 2.0], Sense::Le, 18.0),
            ],
        };
        let (x, v) = optimal(&lp);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
        assert!((v + 36.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + 2y st x + y = 3, x >= 1, y >= 0.5  ->  x = 2.5, y = 0.5
        let lp = LinearProgram {
            cost: vec![1.0, 2.0],
            rows: vec![
                row(&[1.0, 1.0], Sense::Eq, 3.0),
                row(&[1.0, 0.0], Sense::Ge, 1.0),
                row(&[0.0, 1.0], Sense::Ge, 0.5),
            ],
        };
        let (x, v) = optimal(&lp);
        assert!((x[0] - 2.5).abs() < 1e-9 && (x[1] - 0.5).abs() < 1e-9);
        assert!((v - 3.5).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_is_normalized() {
        // min x st -x <= -2
        let lp = LinearProgram { cost: vec![1.0], rows: vec![row(&[-1.0], Sense::Le, -2.0)] };
        let (x, _) = optimal(&lp);
        assert!((x[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp =
            LinearProgram { cost: vec![1.0], rows: vec![row(&[1.0], Sense::Le, 1.0), row(&[1.0], Sense::Ge, 2.0)] };
        assert_eq!(lp.solve(1000), LpOutcome::Infeasible);
        let lp = LinearProgram { cost: vec![-1.0], rows: vec![row(&[1.0], Sense::Ge, 1.0)] };
        assert_eq!(lp.solve(1000), LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // classic cycling example for the largest-coefficient rule
        let lp = LinearProgram {
            cost: vec![-0.75, 150.0, -0.02, 6.0],
            rows: vec![
                row(&[0.25, -60.0, -0.04, 9.0], Sense::Le, 0.0),
                row(&[0.5, -90.0, -0.02, 3.0], Sense::Le, 0.0),
                row(&[0.0, 0.0, 1.0, 0.0], Sense::Le, 1.0),
            ],
        };
        let (_, v) = optimal(&lp);
        assert!((v + 0.05).abs() < 1e-9, "{v}");
    }
}
