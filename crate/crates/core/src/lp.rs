//! Dense tableau simplex for `maximize c.x  s.t.  A x <= b, x >= 0` with
//! `b >= 0`, so the all-slack basis is feasible and no phase one is needed.
//!
//! The tableau is kept in condensed (Tucker) form: one row per constraint and
//! one column per nonbasic variable, so a pivot touches `m * n` entries rather
//! than `m * (m + n)`. Dual prices are read from the objective row at the
//! columns occupied by slack variables.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub objective: f64,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
}

/// Variables `0..n` are structural, `n..n+m` are the slacks of each row.
pub(crate) struct Tableau {
    m: usize,
    n: usize,
    // (m + 1) x (n + 1), row-major; last row is the objective, last column the rhs.
    t: Vec<f64>,
    row_label: Vec<usize>,
    col_label: Vec<usize>,
}

impl Tableau {
    pub fn new(n_vars: usize, n_rows: usize) -> Self {
        let width = n_vars + 1;
        Self {
            m: n_rows,
            n: n_vars,
            t: vec![0.0; (n_rows + 1) * width],
            row_label: (n_vars..n_vars + n_rows).collect(),
            col_label: (0..n_vars).collect(),
        }
    }

    #[inline]
    fn width(&self) -> usize {
        self.n + 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, var: usize, value: f64) {
        let w = self.width();
        self.t[row * w + var] = value;
    }

    pub fn set_rhs(&mut self, row: usize, value: f64) {
        let w = self.width();
        self.t[row * w + self.n] = value;
    }

    pub fn set_cost(&mut self, var: usize, value: f64) {
        let w = self.width();
        // objective row stores -c
        self.t[self.m * w + var] = -value;
    }

    pub fn solve(mut self) -> Result<LpSolution> {
        let (m, n, w) = (self.m, self.n, self.width());
        for i in 0..m {
            if self.t[i * w + n] < 0.0 {
                return Err(Error::Solver(format!(
                    "row {i} has negative right-hand side"
                )));
            }
        }
        let max_pivots = 50 * (m + n) + 1000;
        let degenerate_limit = 2 * (m + n) + 50;
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut pivots = 0usize;
        let mut col_buf = vec![0.0; m + 1];

        loop {
            let obj = &self.t[m * w..m * w + n];
            let entering = if bland {
                (0..n)
                    .filter(|&j| obj[j] < -COST_TOL)
                    .min_by_key(|&j| self.col_label[j])
            } else {
                let mut best = None;
                let mut best_val = -COST_TOL;
                for (j, &d) in obj.iter().enumerate() {
                    if d < best_val {
                        best_val = d;
                        best = Some(j);
                    }
                }
                best
            };
            let Some(q) = entering else { break };

            let mut leaving: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..m {
                let a = self.t[i * w + q];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.t[i * w + n] / a;
                let better = match leaving {
                    None => true,
                    Some(r) => {
                        if ratio < best_ratio - 1e-12 {
                            true
                        } else if ratio <= best_ratio + 1e-12 {
                            if bland {
                                self.row_label[i] < self.row_label[r]
                            } else {
                                a > self.t[r * w + q]
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best_ratio = ratio;
                    leaving = Some(i);
                }
            }
            let Some(r) = leaving else {
                return Err(Error::Solver("objective is unbounded".into()));
            };

            if best_ratio <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > degenerate_limit {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }

            self.pivot(r, q, &mut col_buf);
            pivots += 1;
            if pivots > max_pivots {
                return Err(Error::Solver(format!(
                    "no convergence after {pivots} pivots ({m} rows, {n} columns)"
                )));
            }
        }

        let mut primal = vec![0.0; n];
        let mut dual = vec![0.0; m];
        for i in 0..m {
            let label = self.row_label[i];
            if label < n {
                primal[label] = self.t[i * w + n];
            }
        }
        for j in 0..n {
            let label = self.col_label[j];
            if label >= n {
                dual[label - n] = self.t[m * w + j];
            }
        }
        Ok(LpSolution {
            objective: self.t[m * w + n],
            primal,
            dual,
        })
    }

    fn pivot(&mut self, r: usize, q: usize, col_buf: &mut [f64]) {
        let w = self.width();
        let rows = self.m + 1;
        let p = self.t[r * w + q];
        let inv = 1.0 / p;
        for (i, c) in col_buf.iter_mut().enumerate().take(rows) {
            *c = self.t[i * w + q];
        }
        // pivot row
        {
            let row = &mut self.t[r * w..(r + 1) * w];
            for x in row.iter_mut() {
                *x *= inv;
            }
            row[q] = inv;
        }
        let (head, tail) = self.t.split_at_mut(r * w);
        let (pivot_row, rest) = tail.split_at_mut(w);
        let update = |i: usize, row: &mut [f64]| {
            let f = col_buf[i];
            if f == 0.0 {
                return;
            }
            for (x, &pr) in row.iter_mut().zip(pivot_row.iter()) {
                *x -= f * pr;
            }
            row[q] = -f * inv;
        };
        for (i, row) in head.chunks_exact_mut(w).enumerate() {
            update(i, row);
        }
        for (k, row) in rest.chunks_exact_mut(w).enumerate() {
            update(r + 1 + k, row);
        }
        std::mem::swap(&mut self.row_label[r], &mut self.col_label[q]);
    }
}
