//! Dense two-phase tableau simplex for small linear programs.
//!
//! Solves `maximize c.x  s.t.  A x <= b, x >= 0`. Pivoting follows Bland's
//! rule (lowest-index entering column, lowest-index leaving basic variable
//! among ratio ties), so the method terminates without cycling.

use crate::error::{Error, Result};

/// Reduced costs and ratios within this band count as zero.
pub const FEASIBILITY_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        objective: f64,
        iterations: usize,
    },
    Infeasible {
        iterations: usize,
    },
    Unbounded {
        iterations: usize,
    },
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    iterations: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs_col(&self) -> usize {
        self.rows[0].len() - 1
    }

    fn pivot(&mut self, r: usize, j: usize, obj: &mut [f64]) {
        let p = self.rows[r][j];
        for a in self.rows[r].iter_mut() {
            *a /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for (a, b) in row.iter_mut().zip(&pivot_row) {
                    *a -= f * b;
                }
                row[j] = 0.0;
            }
        }
        let f = obj[j];
        if f != 0.0 {
            for (a, b) in obj.iter_mut().zip(&pivot_row) {
                *a -= f * b;
            }
            obj[j] = 0.0;
        }
        self.basis[r] = j;
        self.iterations += 1;
    }

    /// Maximizes `cost` over the current basic feasible solution; `allowed`
    /// masks columns that may enter.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<Phase> {
        let rhs = self.rhs_col();
        // obj[j] = c_B B^-1 A_j - c_j; the last entry holds the objective value.
        let mut obj = vec![0.0; rhs + 1];
        for (j, o) in obj.iter_mut().enumerate() {
            let cj = if j < rhs { cost[j] } else { 0.0 };
            *o = self
                .rows
                .iter()
                .zip(&self.basis)
                .map(|(row, &b)| cost[b] * row[j])
                .sum::<f64>()
                - cj;
        }
        loop {
            if self.iterations > MAX_PIVOTS {
                return Err(Error::Internal("simplex pivot limit exceeded".into()));
            }
            let Some(j) = (0..rhs).find(|&j| allowed[j] && obj[j] < -FEASIBILITY_TOL) else {
                return Ok(Phase::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if row[j] > PIVOT_TOL {
                    let ratio = row[rhs] / row[j];
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - PIVOT_TOL
                                || (ratio <= lratio + PIVOT_TOL && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(Phase::Unbounded);
            };
            self.pivot(r, j, &mut obj);
        }
    }
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, constraints: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        if constraints.len() != rhs.len() {
            return Err(Error::DimensionMismatch {
                expected: constraints.len(),
                found: rhs.len(),
            });
        }
        for row in &constraints {
            if row.len() != objective.len() {
                return Err(Error::DimensionMismatch {
                    expected: objective.len(),
                    found: row.len(),
                });
            }
        }
        Ok(Self {
            objective,
            constraints,
            rhs,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        let n = self.num_vars();
        let m = self.constraints.len();
        let artificial_rows: Vec<usize> = (0..m).filter(|&r| self.rhs[r] < 0.0).collect();
        let k = artificial_rows.len();
        let width = n + m + k;
        let mut rows = vec![vec![0.0; width + 1]; m];
        let mut basis = vec![0; m];
        let mut next_art = n + m;
        for r in 0..m {
            let sign = if self.rhs[r] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                rows[r][j] = sign * self.constraints[r][j];
            }
            rows[r][n + r] = sign;
            rows[r][width] = sign * self.rhs[r];
            if sign < 0.0 {
                rows[r][next_art] = 1.0;
                basis[r] = next_art;
                next_art += 1;
            } else {
                basis[r] = n + r;
            }
        }
        let mut t = Tableau {
            rows,
            basis,
            iterations: 0,
        };

        if k > 0 {
            let mut cost = vec![0.0; width];
            for c in cost.iter_mut().skip(n + m) {
                *c = -1.0;
            }
            let allowed = vec![true; width];
            t.optimize(&cost, &allowed)?;
            let infeasibility: f64 = t
                .rows
                .iter()
                .zip(&t.basis)
                .filter(|(_, &b)| b >= n + m)
                .map(|(row, _)| row[width])
                .sum();
            if infeasibility > FEASIBILITY_TOL {
                return Ok(LpOutcome::Infeasible {
                    iterations: t.iterations,
                });
            }
            // Drive zero-level artificials out of the basis where possible.
            let mut dummy = vec![0.0; width + 1];
            for r in 0..m {
                if t.basis[r] >= n + m {
                    if let Some(j) = (0..n + m).find(|&j| t.rows[r][j].abs() > 1e-9) {
                        t.pivot(r, j, &mut dummy);
                    }
                }
            }
        }

        let mut cost = vec![0.0; width];
        cost[..n].copy_from_slice(&self.objective);
        let allowed: Vec<bool> = (0..width).map(|j| j < n + m).collect();
        match t.optimize(&cost, &allowed)? {
            Phase::Unbounded => Ok(LpOutcome::Unbounded {
                iterations: t.iterations,
            }),
            Phase::Optimal => {
                let mut x = vec![0.0; n];
                for (row, &b) in t.rows.iter().zip(&t.basis) {
                    if b < n {
                        x[b] = row[width].max(0.0);
                    }
                }
                let objective = x.iter().zip(&self.objective).map(|(a, c)| a * c).sum();
                Ok(LpOutcome::Optimal {
                    x,
                    objective,
                    iterations: t.iterations,
                })
            }
        }
    }
}
