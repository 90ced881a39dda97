//! Dense two-phase tableau simplex for `max c·x` subject to equality rows,
//! `≤` rows with nonnegative right-hand sides, and `x ≥ 0`.
//!
//! Pricing is Dantzig's rule, falling back to Bland's rule while pivots
//! stay degenerate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-7;
const COST_TOL: f64 = 1e-10;
const FEASIBILITY_TOL: f64 = 1e-8;
const DEGENERATE_STREAK: usize = 50;
const REFACTOR_EVERY: usize = 1000;

#[derive(Debug, Clone, Default)]
pub(crate) struct LinearProgram {
    n: usize,
    objective: Vec<f64>,
    eq: Vec<(Vec<f64>, f64)>,
    le: Vec<(Vec<f64>, f64)>,
}

impl LinearProgram {
    pub(crate) fn new(objective: Vec<f64>) -> Self {
        Self {
            n: objective.len(),
            objective,
            ..Self::default()
        }
    }

    /// `row · x = rhs`, with `rhs ≥ 0`.
    pub(crate) fn equal(&mut self, row: Vec<f64>, rhs: f64) {
        debug_assert_eq!(row.len(), self.n);
        debug_assert!(rhs >= 0.0);
        self.eq.push((row, rhs));
    }

    /// `row · x ≤ rhs`, with `rhs ≥ 0`.
    pub(crate) fn at_most(&mut self, row: Vec<f64>, rhs: f64) {
        debug_assert_eq!(row.len(), self.n);
        debug_assert!(rhs >= 0.0);
        self.le.push((row, rhs));
    }

    /// Optimal value and point.
    pub(crate) fn maximize(&self) -> Result<(f64, Vec<f64>)> {
        let mut t = Tableau::build(self);
        t.phase_one()?;
        t.phase_two(&self.objective)?;
        let x = t.solution(self.n);
        let value = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok((value, x))
    }
}

struct Tableau {
    m: usize,
    /// structural + slack + artificial columns
    cols: usize,
    width: usize,
    artificial_start: usize,
    /// `(m + 1) × (cols + 1)`, last row reduced costs, last column rhs
    a: Vec<f64>,
    basis: Vec<usize>,
    /// constraint rows as built, for refactorization
    original: Vec<f64>,
    costs: Vec<f64>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.n;
        let n_le = lp.le.len();
        let n_eq = lp.eq.len();
        let m = n_le + n_eq;
        let artificial_start = n + n_le;
        let cols = artificial_start + n_eq;
        let width = cols + 1;
        let mut a = vec![0.0; (m + 1) * width];
        let mut basis = Vec::with_capacity(m);
        for (i, (row, rhs)) in lp.le.iter().enumerate() {
            a[i * width..i * width + n].copy_from_slice(row);
            a[i * width + n + i] = 1.0;
            a[i * width + cols] = *rhs;
            basis.push(n + i);
        }
        for (k, (row, rhs)) in lp.eq.iter().enumerate() {
            let i = n_le + k;
            a[i * width..i * width + n].copy_from_slice(row);
            a[i * width + artificial_start + k] = 1.0;
            a[i * width + cols] = *rhs;
            basis.push(artificial_start + k);
        }
        Self {
            m,
            cols,
            width,
            artificial_start,
            original: a[..m * width].to_vec(),
            a,
            basis,
            costs: vec![0.0; cols],
        }
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    /// Sets the column costs and rebuilds the reduced-cost row.
    fn set_costs(&mut self, cost: impl Fn(usize) -> f64) {
        self.costs = (0..self.cols).map(cost).collect();
        self.price();
    }

    fn price(&mut self) {
        let w = self.width;
        let obj = self.m * w;
        for j in 0..w {
            self.a[obj + j] = if j < self.cols { -self.costs[j] } else { 0.0 };
        }
        for i in 0..self.m {
            let cb = self.costs[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    self.a[obj + j] += cb * self.a[i * w + j];
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let inv = 1.0 / self.a[r * w + c];
        for j in 0..w {
            self.a[r * w + j] *= inv;
        }
        self.a[r * w + c] = 1.0;
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[c];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
                row[c] = 0.0;
            }
        };
        before.chunks_exact_mut(w).for_each(eliminate);
        after.chunks_exact_mut(w).for_each(eliminate);
        self.basis[r] = c;
    }

    /// Recomputes the tableau as `B⁻¹·rows` for the current basis, dropping
    /// the rounding accumulated over the pivots.
    fn refactor(&mut self) -> Result<()> {
        let (m, w) = (self.m, self.width);
        let original = DMatrix::from_row_slice(m, w, &self.original);
        let basis = DMatrix::from_fn(m, m, |i, k| original[(i, self.basis[k])]);
        let rows = basis
            .lu()
            .solve(&original)
            .ok_or_else(|| Error::Numerical("singular simplex basis".into()))?;
        for i in 0..m {
            for j in 0..w {
                self.a[i * w + j] = rows[(i, j)];
            }
        }
        for (k, &b) in self.basis.iter().enumerate() {
            for i in 0..m {
                self.a[i * w + b] = if i == k { 1.0 } else { 0.0 };
            }
        }
        self.price();
        Ok(())
    }

    /// Checks optimality of the current basis against the original rows
    /// and, if it holds, replaces the basic values by freshly solved ones.
    fn verify(&mut self, allowed: usize) -> bool {
        let (m, w) = (self.m, self.width);
        let basis = DMatrix::from_fn(m, m, |i, k| self.original[i * w + self.basis[k]]);
        let rhs = DVector::from_fn(m, |i, _| self.original[i * w + self.cols]);
        let cb = DVector::from_fn(m, |k, _| self.costs[self.basis[k]]);
        let Some(xb) = basis.clone().lu().solve(&rhs) else {
            return false;
        };
        let Some(y) = basis.transpose().lu().solve(&cb) else {
            return false;
        };
        if xb.iter().any(|&v| v < -FEASIBILITY_TOL) {
            return false;
        }
        let optimal = (0..allowed).all(|j| {
            let ya: f64 = (0..m).map(|i| y[i] * self.original[i * w + j]).sum();
            self.costs[j] - ya <= COST_TOL
        });
        if optimal {
            for i in 0..m {
                self.a[i * w + self.cols] = xb[i];
            }
        }
        optimal
    }

    fn run(&mut self, allowed: usize) -> Result<()> {
        let cap = 50 * (self.m + self.cols);
        let mut degenerate = 0;
        let mut since_refactor = 0;
        let mut fresh = false;
        for _ in 0..cap {
            if since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
                since_refactor = 0;
                fresh = true;
            }
            let obj = self.m * self.width;
            let bland = degenerate >= DEGENERATE_STREAK;
            let mut enter = None;
            let mut best = -COST_TOL;
            for j in 0..allowed {
                let d = self.a[obj + j];
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(c) = enter else {
                if fresh || self.verify(allowed) {
                    return Ok(());
                }
                // confirm optimality on a clean tableau
                self.refactor()?;
                since_refactor = 0;
                fresh = true;
                continue;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let v = self.at(i, c);
                if v > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / v;
                    // ties go to the larger pivot, or the lower index under Bland
                    let better = match leave {
                        None => true,
                        Some((l, lr)) => {
                            ratio < lr - 1e-12
                                || (ratio <= lr + 1e-12
                                    && if bland {
                                        self.basis[i] < self.basis[l]
                                    } else {
                                        v > self.at(l, c)
                                    })
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                if fresh {
                    return Err(Error::Numerical("linear program is unbounded".into()));
                }
                self.refactor()?;
                since_refactor = 0;
                fresh = true;
                continue;
            };
            degenerate = if ratio <= 1e-12 { degenerate + 1 } else { 0 };
            self.pivot(r, c);
            since_refactor += 1;
            fresh = false;
        }
        Err(Error::Numerical("simplex iteration cap reached".into()))
    }

    /// Pivots basic artificials out of rows with right-hand side at most
    /// `level`, keeping every other basic value unchanged up to `level`.
    fn expel_artificials(&mut self, level: f64) {
        let start = self.artificial_start;
        for r in 0..self.m {
            if self.basis[r] >= start && self.rhs(r).abs() <= level {
                let c =
                    (0..start).max_by(|&x, &y| self.at(r, x).abs().total_cmp(&self.at(r, y).abs()));
                if let Some(c) = c.filter(|&c| self.at(r, c).abs() > 1e-7) {
                    self.pivot(r, c);
                }
            }
        }
    }

    fn phase_one(&mut self) -> Result<()> {
        let start = self.artificial_start;
        // homogeneous equality rows need no artificial: degenerate pivots
        // give a feasible starting basis
        self.expel_artificials(0.0);
        self.set_costs(|j| if j >= start { -1.0 } else { 0.0 });
        self.run(self.cols)?;
        let infeasibility = -self.at(self.m, self.cols);
        if infeasibility > FEASIBILITY_TOL {
            return Err(Error::Numerical(format!(
                "linear program is infeasible (residual {infeasibility:.3e})"
            )));
        }
        self.expel_artificials(f64::INFINITY);
        Ok(())
    }

    fn phase_two(&mut self, objective: &[f64]) -> Result<()> {
        self.set_costs(|j| objective.get(j).copied().unwrap_or(0.0));
        self.run(self.artificial_start)
    }

    fn solution(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rhs(r).max(0.0);
            }
        }
        x
    }
}
