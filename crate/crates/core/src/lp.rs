//! Dense two-phase simplex for small standard-form programs
//!
//! ```text
//! minimize cᵀx  subject to  A x = b,  x ≥ 0
//! ```
//!
//! Pricing is Dantzig's rule, falling back to Bland's smallest-index rule
//! after a run of degenerate pivots; ratio-test ties always go to the
//! smallest basic index. Dual values are recovered from the final basis
//! inverse, which the tableau carries in its artificial columns.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;
const MAX_ITER: usize = 50_000;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Constraint rows, each of length `n`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One per constraint row: the sensitivity of the optimum to `b`.
    pub duals: Vec<f64>,
    /// Basic column per row; `None` where a redundant row kept its artificial.
    pub basis: Vec<Option<usize>>,
}

struct Tableau {
    m: usize,
    n: usize,
    /// m rows of n + m + 1 entries: structural, artificial, rhs.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.n + self.m
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.t[r].len();
        let p = self.t[r][col];
        for k in 0..w {
            self.t[r][k] /= p;
        }
        let prow = self.t[r].clone();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i][col];
            if f != 0.0 {
                let row = &mut self.t[i];
                for k in 0..w {
                    row[k] -= f * prow[k];
                }
                row[col] = 0.0;
            }
        }
        self.basis[r] = col;
    }

    fn reduced_costs(&self, cost: &[f64], ncols: usize) -> Vec<f64> {
        let mut r: Vec<f64> = cost[..ncols].to_vec();
        for (i, row) in self.t.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..ncols {
                    r[j] -= cb * row[j];
                }
            }
        }
        r
    }

    /// Runs simplex iterations over columns `< ncols`.
    fn optimize(&mut self, cost: &[f64], ncols: usize) -> Result<()> {
        let rhs = self.rhs();
        let mut degenerate = 0usize;
        for _ in 0..MAX_ITER {
            let r = self.reduced_costs(cost, ncols);
            let bland = degenerate >= DEGENERATE_RUN;
            let entering = if bland {
                (0..ncols).find(|&j| r[j] < -COST_TOL)
            } else {
                (0..ncols)
                    .filter(|&j| r[j] < -COST_TOL)
                    .min_by(|&a, &b| r[a].total_cmp(&r[b]))
            };
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.t[i][col];
                if a > PIVOT_TOL {
                    let ratio = self.t[i][rhs].max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - 1e-14
                                || (ratio <= best + 1e-14 && self.basis[i] < self.basis[k])
                            {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((row, ratio)) = leave else {
                return Err(Error::Consistency("linear program is unbounded".into()));
            };
            degenerate = if ratio <= 1e-14 { degenerate + 1 } else { 0 };
            self.pivot(row, col);
        }
        Err(Error::Consistency("simplex iteration limit reached".into()))
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    let m = lp.a.len();
    let n = lp.c.len();
    if lp.b.len() != m || lp.a.iter().any(|r| r.len() != n) {
        return Err(Error::Usage("linear program dimensions disagree".into()));
    }
    let mut sign = vec![1.0; m];
    let mut t = vec![vec![0.0; n + m + 1]; m];
    for i in 0..m {
        if lp.b[i] < 0.0 {
            sign[i] = -1.0;
        }
        for j in 0..n {
            t[i][j] = sign[i] * lp.a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][n + m] = sign[i] * lp.b[i];
    }
    let mut tab = Tableau {
        m,
        n,
        t,
        basis: (n..n + m).collect(),
    };

    let mut phase1 = vec![0.0; n + m];
    phase1[n..].iter_mut().for_each(|c| *c = 1.0);
    tab.optimize(&phase1, n + m)?;
    let infeas: f64 = (0..m)
        .filter(|&i| tab.basis[i] >= n)
        .map(|i| tab.t[i][n + m])
        .sum();
    let scale = 1.0 + lp.b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if infeas > FEAS_TOL * scale {
        return Err(Error::Consistency(format!(
            "linear program is infeasible (phase-one residual {infeas:e})"
        )));
    }
    // Drive remaining artificials out where the row is not redundant.
    for i in 0..m {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| tab.t[i][j].abs() > 1e-9) {
                tab.pivot(i, j);
            }
        }
    }

    let mut phase2 = lp.c.clone();
    phase2.extend(std::iter::repeat_n(0.0, m));
    tab.optimize(&phase2, n)?;

    let mut x = vec![0.0; n];
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.t[i][n + m].max(0.0);
        }
    }
    let objective = lp.c.iter().zip(&x).map(|(c, v)| c * v).sum();
    // yᵀ = c_Bᵀ B⁻¹, with B⁻¹ sitting in the artificial block.
    let duals = (0..m)
        .map(|k| {
            let y: f64 = (0..m).map(|i| phase2[tab.basis[i]] * tab.t[i][n + k]).sum();
            y * sign[k]
        })
        .collect();
    let basis = tab.basis.iter().map(|&j| (j < n).then_some(j)).collect();
    Ok(LpSolution {
        x,
        objective,
        duals,
        basis,
    })
}
