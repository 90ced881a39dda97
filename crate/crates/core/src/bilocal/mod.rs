//! Bilocal hidden-variable models for the line network and a see-saw
//! optimizer for `B` under the constraint that every correlator in the
//! `Z` list stays within `[−Z_cap, Z_cap]`.
//!
//! Alice's and Charlie's local variables index deterministic strategies:
//! strategy `λ` answers input `k` with `−1` when bit `k − 1` of `λ mod 8`
//! is set. Bob answers stochastically from both variables.
//!
//! The optimizer alternates two linear programs. With `q2` fixed, the
//! products `W[λ1][λ2][b] = q1(λ1) respB(b|λ1,λ2)` and `q1` are optimized
//! jointly; the objective and every correlator are linear in them. The
//! mirror program fixes `q1`. Each program contains the previous iterate,
//! so `B` never decreases.

mod simplex;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{Error, Result};

use self::simplex::LinearProgram;
use crate::swapnet::{table_event, CorrelatorTable, TABLE_LEN};
use crate::tolerances;
use crate::witnesses::{bilocal_weights, correction, z_list};

/// Absorbs the solver's rounding in the fixed side's distribution, which
/// would otherwise make `Z_cap = 0` programs infeasible.
const LP_SLACK: f64 = 1e-9;

/// Number of distinct deterministic single-party strategies.
pub const STRATEGIES: usize = 8;

/// Answer of deterministic strategy `lambda` to input `k ∈ 1..=3`.
pub fn strategy_output(lambda: usize, k: usize) -> i8 {
    if ((lambda % STRATEGIES) >> (k - 1)) & 1 == 0 {
        1
    } else {
        -1
    }
}

/// The strategy answering every input with the opposite sign.
fn antipode(lambda: usize) -> usize {
    lambda - lambda % STRATEGIES + (STRATEGIES - 1 - lambda % STRATEGIES)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BilocalModel {
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    /// `respA[λ1][x − 1]`.
    pub resp_a: Vec<[i8; 3]>,
    /// `respC[λ2][z − 1]`.
    pub resp_c: Vec<[i8; 3]>,
    /// `respB[λ1][λ2][b]`.
    pub resp_b: Vec<Vec<[f64; 4]>>,
}

fn check_distribution(name: &str, q: &[f64]) -> Result<()> {
    if q.iter().any(|&v| !(v >= -tolerances::NORMALIZATION)) {
        return Err(Error::Invariant(format!("{name} has a negative entry")));
    }
    let total: f64 = q.iter().sum();
    if (total - 1.0).abs() > tolerances::NORMALIZATION {
        return Err(Error::Invariant(format!("{name} sums to {total}")));
    }
    Ok(())
}

impl BilocalModel {
    /// Deterministic A and C strategies `0..l1` and `0..l2` (cycling through
    /// the eight distinct ones).
    pub fn with_strategies(q1: Vec<f64>, q2: Vec<f64>, resp_b: Vec<Vec<[f64; 4]>>) -> Result<Self> {
        let table = |l: usize| -> Vec<[i8; 3]> {
            (0..l)
                .map(|s| [1, 2, 3].map(|k| strategy_output(s, k)))
                .collect()
        };
        let model = Self {
            resp_a: table(q1.len()),
            resp_c: table(q2.len()),
            q1,
            q2,
            resp_b,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        check_distribution("q1", &self.q1)?;
        check_distribution("q2", &self.q2)?;
        if self.resp_a.len() != self.q1.len() || self.resp_c.len() != self.q2.len() {
            return Err(Error::Invariant(
                "response tables do not match q1, q2".into(),
            ));
        }
        if self
            .resp_a
            .iter()
            .chain(&self.resp_c)
            .flatten()
            .any(|v| v.abs() != 1)
        {
            return Err(Error::Invariant(
                "deterministic responses must be ±1".into(),
            ));
        }
        if self.resp_b.len() != self.q1.len()
            || self.resp_b.iter().any(|r| r.len() != self.q2.len())
        {
            return Err(Error::Invariant(
                "respB shape does not match q1 × q2".into(),
            ));
        }
        for row in self.resp_b.iter().flatten() {
            check_distribution("respB row", row)?;
        }
        Ok(())
    }
}

/// Exact joint distribution of a bilocal model.
pub fn induced_table(model: &BilocalModel) -> Result<CorrelatorTable> {
    model.validate()?;
    let mut p = vec![0.0; TABLE_LEN];
    for (k, v) in p.iter_mut().enumerate() {
        let (x, z, a, b, c) = table_event(k);
        let mut acc = 0.0;
        for (l1, q1) in model.q1.iter().enumerate() {
            if model.resp_a[l1][x - 1] != a {
                continue;
            }
            for (l2, q2) in model.q2.iter().enumerate() {
                if model.resp_c[l2][z - 1] == c {
                    acc += q1 * q2 * model.resp_b[l1][l2][b];
                }
            }
        }
        *v = acc;
    }
    CorrelatorTable::new(p)
}

/// A linear functional of the table rewritten over `(λ1, λ2, b)`.
#[derive(Debug, Clone)]
struct Lifted {
    g: Vec<f64>,
    l2: usize,
}

impl Lifted {
    fn new(weights: &[f64], l1: usize, l2: usize) -> Self {
        let mut g = vec![0.0; l1 * l2 * 4];
        for s in 0..l1 {
            for t in 0..l2 {
                for b in 0..4 {
                    let mut acc = 0.0;
                    for (k, w) in weights.iter().enumerate() {
                        let (x, z, a, bb, c) = table_event(k);
                        if bb == b && strategy_output(s, x) == a && strategy_output(t, z) == c {
                            acc += w;
                        }
                    }
                    g[(s * l2 + t) * 4 + b] = acc;
                }
            }
        }
        Self { g, l2 }
    }

    fn at(&self, s: usize, t: usize, b: usize) -> f64 {
        self.g[(s * self.l2 + t) * 4 + b]
    }

    fn value(&self, m: &BilocalModel) -> f64 {
        let mut acc = 0.0;
        for (s, q1) in m.q1.iter().enumerate() {
            for (t, q2) in m.q2.iter().enumerate() {
                for b in 0..4 {
                    acc += q1 * q2 * m.resp_b[s][t][b] * self.at(s, t, b);
                }
            }
        }
        acc
    }
}

/// Optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeeSawOptions {
    pub l1: usize,
    pub l2: usize,
    /// Stop when a sweep improves `B` by less than this.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for SeeSawOptions {
    fn default() -> Self {
        Self {
            l1: STRATEGIES,
            l2: STRATEGIES,
            tolerance: 1e-6,
            max_sweeps: 100,
        }
    }
}

struct Objective {
    b: Lifted,
    constraints: Vec<Lifted>,
    opts: SeeSawOptions,
}

#[derive(Clone, Copy, PartialEq)]
enum Fixed {
    Left,
    Right,
}

impl Objective {
    fn new(opts: SeeSawOptions) -> Result<Self> {
        if opts.l1 < STRATEGIES || opts.l2 < STRATEGIES {
            return Err(Error::invalid(format!(
                "need at least {STRATEGIES} strategies per side"
            )));
        }
        let constraints = z_list()
            .iter()
            .map(|s| Ok(Lifted::new(&s.weights()?, opts.l1, opts.l2)))
            .collect::<Result<_>>()?;
        Ok(Self {
            b: Lifted::new(&bilocal_weights(), opts.l1, opts.l2),
            constraints,
            opts,
        })
    }

    /// One LP block: optimize the free side's distribution and Bob's
    /// response with the other side's distribution held at `fixed_q`.
    fn block(&self, fixed: Fixed, fixed_q: &[f64], z_cap: f64) -> Result<(f64, BilocalModel)> {
        let (nf, nr) = match fixed {
            Fixed::Right => (self.opts.l1, self.opts.l2),
            Fixed::Left => (self.opts.l2, self.opts.l1),
        };
        // (free, fixed) -> (λ1, λ2)
        let pair = |f: usize, r: usize| match fixed {
            Fixed::Right => (f, r),
            Fixed::Left => (r, f),
        };
        // fixed strategies of negligible weight only spoil the scaling
        let active: Vec<usize> = (0..nr).filter(|&r| fixed_q[r] > 1e-12).collect();
        let na = active.len();
        // variables: q[f] then W[f][k][b] over active fixed strategies k
        let n = nf + nf * na * 4;
        let wi = |f: usize, k: usize, b: usize| nf + (f * na + k) * 4 + b;
        let mut objective = vec![0.0; n];
        for f in 0..nf {
            for (k, &r) in active.iter().enumerate() {
                let (s, t) = pair(f, r);
                for b in 0..4 {
                    objective[wi(f, k, b)] = fixed_q[r] * self.b.at(s, t, b);
                }
            }
        }
        let mut lp = LinearProgram::new(objective);
        let mut row = vec![0.0; n];
        row[..nf].fill(1.0);
        lp.equal(row, 1.0);
        for f in 0..nf {
            for k in 0..na {
                let mut row = vec![0.0; n];
                row[f] = -1.0;
                for b in 0..4 {
                    row[wi(f, k, b)] = 1.0;
                }
                lp.equal(row, 0.0);
            }
        }
        // scaled copies of one row collapse to the tightest bound
        let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
        for c in &self.constraints {
            if self.constant_in_block(c, fixed) {
                continue;
            }
            let mut terms = Vec::new();
            for f in 0..nf {
                for (k, &r) in active.iter().enumerate() {
                    let (s, t) = pair(f, r);
                    for b in 0..4 {
                        let coeff = fixed_q[r] * c.at(s, t, b);
                        if coeff.abs() > 1e-14 {
                            terms.push((wi(f, k, b), coeff));
                        }
                    }
                }
            }
            let Some(&(_, lead)) = terms.iter().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            else {
                continue;
            };
            let unit: Vec<(usize, f64)> = terms.iter().map(|&(i, v)| (i, v / lead)).collect();
            let bound = (z_cap + LP_SLACK) / lead.abs();
            match rows.iter_mut().find(|(u, _)| same_row(u, &unit)) {
                Some(row) => row.1 = row.1.min(bound),
                None => rows.push((unit, bound)),
            }
        }
        for (unit, bound) in rows {
            let mut up = vec![0.0; n];
            let mut down = vec![0.0; n];
            for &(i, v) in &unit {
                up[i] = v;
                down[i] = -v;
            }
            lp.at_most(up, bound);
            lp.at_most(down, bound);
        }
        let (_, sol) = lp.maximize()?;

        let qf: Vec<f64> = sol[..nf].to_vec();
        let total: f64 = qf.iter().sum();
        let qf: Vec<f64> = qf.iter().map(|v| v / total).collect();
        let mut resp_b = vec![vec![[0.25; 4]; self.opts.l2]; self.opts.l1];
        for f in 0..nf {
            let raw_q = sol[f];
            if raw_q < 1e-12 {
                continue;
            }
            for (k, &r) in active.iter().enumerate() {
                let (s, t) = pair(f, r);
                let mut row = [0.0; 4];
                for (b, v) in row.iter_mut().enumerate() {
                    *v = (sol[wi(f, k, b)] / raw_q).max(0.0);
                }
                let sum: f64 = row.iter().sum();
                resp_b[s][t] = if sum > 0.0 {
                    row.map(|v| v / sum)
                } else {
                    [0.25; 4]
                };
            }
        }
        let (q1, q2) = match fixed {
            Fixed::Right => (qf, fixed_q.to_vec()),
            Fixed::Left => (fixed_q.to_vec(), qf),
        };
        let model = BilocalModel::with_strategies(q1, q2, resp_b)?;
        Ok((self.b.value(&model), model))
    }

    /// Correlators that involve only the fixed party cannot change in the
    /// block; they are held by the fixed distribution already.
    fn constant_in_block(&self, c: &Lifted, fixed: Fixed) -> bool {
        let (l1, l2) = (self.opts.l1, self.opts.l2);
        match fixed {
            Fixed::Right => (0..l2).all(|t| {
                let v = c.at(0, t, 0);
                (0..l1).all(|s| (0..4).all(|b| (c.at(s, t, b) - v).abs() < 1e-14))
            }),
            Fixed::Left => (0..l1).all(|s| {
                let v = c.at(s, 0, 0);
                (0..l2).all(|t| (0..4).all(|b| (c.at(s, t, b) - v).abs() < 1e-14))
            }),
        }
    }

    fn max_violation(&self, model: &BilocalModel) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.value(model).abs())
            .fold(0.0, f64::max)
    }

    /// Alternates blocks starting with `first` fixed at `start_q`.
    fn see_saw(&self, z_cap: f64, first: Fixed, start_q: &[f64]) -> Result<(f64, BilocalModel)> {
        let (mut best, mut model) = self.block(first, start_q, z_cap)?;
        let mut fixed = first;
        for _ in 0..self.opts.max_sweeps {
            fixed = match fixed {
                Fixed::Left => Fixed::Right,
                Fixed::Right => Fixed::Left,
            };
            let q = match fixed {
                Fixed::Left => model.q1.clone(),
                Fixed::Right => model.q2.clone(),
            };
            let (value, next) = match self.block(fixed, &q, z_cap) {
                Ok(r) => r,
                Err(_) => break,
            };
            let gain = value - best;
            if value > best {
                best = value;
                model = next;
            }
            if gain < self.opts.tolerance {
                break;
            }
        }
        Ok((best, model))
    }
}

fn same_row(a: &[(usize, f64)], b: &[(usize, f64)]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.0 == y.0 && (x.1 - y.1).abs() < 1e-12)
}

/// Random distribution over `n` strategies whose single-party correlators
/// are within `z_cap`, by mixing a Dirichlet draw with its antipodal image.
fn feasible_start(rng: &mut ChaCha8Rng, n: usize, z_cap: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    let q: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let m = (1..=3)
        .map(|k| {
            q.iter()
                .enumerate()
                .map(|(s, v)| v * strategy_output(s, k) as f64)
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max);
    // one-party correlators scale by (2λ − 1)
    let lambda = if m > 0.0 {
        0.5 * (1.0 + (z_cap / m).min(1.0))
    } else {
        1.0
    };
    let mut mixed = vec![0.0; n];
    for (s, v) in q.iter().enumerate() {
        mixed[s] += lambda * v;
        mixed[antipode(s)] += (1.0 - lambda) * v;
    }
    mixed
}

fn check_cap(z_cap: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&z_cap) {
        return Err(Error::invalid(format!("Z cap {z_cap} outside [0, 1]")));
    }
    Ok(())
}

fn restart_seed(seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng.random()
}

fn best_of(results: Vec<(f64, BilocalModel)>) -> Option<(f64, BilocalModel)> {
    let mut best: Option<(f64, BilocalModel)> = None;
    for (v, m) in results {
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, m));
        }
    }
    best
}

struct Search<'a> {
    objective: &'a Objective,
    z_cap: f64,
    restarts: usize,
    seed: u64,
}

impl Search<'_> {
    fn run(&self, warm: Option<&BilocalModel>) -> Result<(f64, BilocalModel)> {
        let opts = self.objective.opts;
        let attempts: Vec<Result<(f64, BilocalModel)>> = (0..self.restarts)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(self.seed, i));
                if i % 2 == 0 {
                    let q2 = feasible_start(&mut rng, opts.l2, self.z_cap);
                    self.objective.see_saw(self.z_cap, Fixed::Right, &q2)
                } else {
                    let q1 = feasible_start(&mut rng, opts.l1, self.z_cap);
                    self.objective.see_saw(self.z_cap, Fixed::Left, &q1)
                }
            })
            .collect();
        let mut results = Vec::with_capacity(attempts.len() + 1);
        if let Some(m) = warm {
            results.push(self.objective.see_saw(self.z_cap, Fixed::Right, &m.q2)?);
        }
        let mut first_error = None;
        for a in attempts {
            match a {
                Ok(r) => results.push(r),
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        let (value, model) = match best_of(results) {
            Some(best) => best,
            None => return Err(first_error.unwrap_or_else(|| Error::invalid("no restarts"))),
        };
        let slack = self.objective.max_violation(&model) - self.z_cap;
        if slack > 1e-7 {
            return Err(Error::Numerical(format!(
                "optimizer returned a model violating the cap by {slack:.3e}"
            )));
        }
        Ok((value, model))
    }
}

/// Best `B` found over bilocal models with all `Z`-list correlators
/// bounded by `z_cap`. A lower bound on the constrained maximum.
pub fn maximize_b(z_cap: f64, restarts: usize, seed: u64) -> Result<(BilocalModel, f64)> {
    maximize_b_with(z_cap, restarts, seed, SeeSawOptions::default())
}

pub fn maximize_b_with(
    z_cap: f64,
    restarts: usize,
    seed: u64,
    opts: SeeSawOptions,
) -> Result<(BilocalModel, f64)> {
    check_cap(z_cap)?;
    if restarts == 0 {
        return Err(Error::invalid("need at least one restart"));
    }
    let objective = Objective::new(opts)?;
    let (value, model) = Search {
        objective: &objective,
        z_cap,
        restarts,
        seed,
    }
    .run(None)?;
    Ok((model, value))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCurvePoint {
    pub z_cap: f64,
    pub best_b: f64,
    /// `3 + Z + 4Z²`.
    pub certified_bound: f64,
}

impl BoundCurvePoint {
    pub fn gap(&self) -> f64 {
        self.certified_bound - self.best_b
    }

    /// Below both the quadratic and the linear `3 + 5Z` envelopes.
    pub fn within_envelopes(&self) -> bool {
        self.best_b <= self.certified_bound + tolerances::ENVELOPE_SLACK
            && self.best_b <= 3.0 + 5.0 * self.z_cap + tolerances::ENVELOPE_SLACK
    }
}

/// `{0, 0.05, …, 0.55}`.
pub fn default_grid() -> Vec<f64> {
    (0..12).map(|k| k as f64 * 0.05).collect()
}

/// Bound curve over `z_grid` (sorted ascending). Each point also restarts
/// from the previous point's best model, which stays feasible.
pub fn validate_correction(
    z_grid: &[f64],
    restarts: usize,
    seed: u64,
) -> Result<Vec<BoundCurvePoint>> {
    if z_grid.is_empty() {
        return Err(Error::invalid("empty Z grid"));
    }
    if z_grid
        .iter()
        .any(|&z| !(0.0..=tolerances::MAX_CERTIFIED_Z).contains(&z))
    {
        return Err(Error::invalid(format!(
            "grid must lie within [0, {}]",
            tolerances::MAX_CERTIFIED_Z
        )));
    }
    if z_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("grid must be sorted ascending"));
    }
    if restarts == 0 {
        return Err(Error::invalid("need at least one restart"));
    }
    let objective = Objective::new(SeeSawOptions::default())?;
    let mut warm: Option<BilocalModel> = None;
    let mut out = Vec::with_capacity(z_grid.len());
    for (i, &z) in z_grid.iter().enumerate() {
        let (value, model) = Search {
            objective: &objective,
            z_cap: z,
            restarts,
            seed: restart_seed(seed, 1_000_000 + i),
        }
        .run(warm.as_ref())?;
        out.push(BoundCurvePoint {
            z_cap: z,
            best_b: value,
            certified_bound: 3.0 + correction(z),
        });
        warm = Some(model);
    }
    Ok(out)
}

pub fn curve_to_csv(points: &[BoundCurvePoint]) -> String {
    let mut out = String::from("Z,best_B,certified_bound,gap\n");
    for p in points {
        writeln!(
            out,
            "{:.4},{:.9},{:.9},{:.9}",
            p.z_cap,
            p.best_b,
            p.certified_bound,
            p.gap()
        )
        .expect("writing to a String");
    }
    out
}

/// Deterministic model `A ≡ a`, `C ≡ c`, Bob always `b`.
pub fn point_model(a: [i8; 3], b: usize, c: [i8; 3]) -> Result<BilocalModel> {
    if b >= 4 {
        return Err(Error::invalid(format!("outcome index {b} not in 0..4")));
    }
    let mut row = [0.0; 4];
    row[b] = 1.0;
    let model = BilocalModel {
        q1: vec![1.0],
        q2: vec![1.0],
        resp_a: vec![a],
        resp_c: vec![c],
        resp_b: vec![vec![row]],
    };
    model.validate()?;
    Ok(model)
}

/// All 8 × 4 × 8 deterministic models; their maximum is the unconstrained
/// bilocal maximum of a linear objective.
pub fn deterministic_maximum(weights: &[f64]) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for s in 0..STRATEGIES {
        for t in 0..STRATEGIES {
            for b in 0..4 {
                let a = [1, 2, 3].map(|k| strategy_output(s, k));
                let c = [1, 2, 3].map(|k| strategy_output(t, k));
                let table = induced_table(&point_model(a, b, c)?)?;
                best = best.max(table.dot(weights));
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::swapnet::{correlator, CorrSpec};
    use crate::witnesses::eval_bilocal;

    #[test]
    fn strategies_enumerate_all_sign_patterns() {
        let mut seen = std::collections::HashSet::new();
        for s in 0..STRATEGIES {
            seen.insert([1, 2, 3].map(|k| strategy_output(s, k)));
            assert!([1, 2, 3]
                .iter()
                .all(|&k| strategy_output(antipode(s), k) == -strategy_output(s, k)));
        }
        assert_eq!(seen.len(), 8);
        assert_eq!(antipode(9), 14);
    }

    #[test]
    fn uniform_bob_kills_bob_correlators() {
        let q = vec![1.0 / 8.0; 8];
        let model =
            BilocalModel::with_strategies(q.clone(), q, vec![vec![[0.25; 4]; 8]; 8]).unwrap();
        let t = induced_table(&model).unwrap();
        for y in 1..=3 {
            assert!(correlator(&t, CorrSpec::b(y)).unwrap().abs() < 1e-15);
            assert!(correlator(&t, CorrSpec::abc(1, y, 2)).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn point_model_one_body() {
        let t = induced_table(&point_model([1, 1, 1], 2, [1, -1, 1]).unwrap()).unwrap();
        for x in 1..=3 {
            assert!((correlator(&t, CorrSpec::a(x)).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((correlator(&t, CorrSpec::c(2)).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(
            BilocalModel::with_strategies(vec![0.5, 0.6], vec![1.0], vec![vec![[0.25; 4]]; 2])
                .is_err()
        );
        assert!(point_model([1, 0, 1], 0, [1, 1, 1]).is_err());
    }

    #[test]
    fn lifted_matches_induced_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q1 = feasible_start(&mut rng, 8, 1.0);
        let q2 = feasible_start(&mut rng, 8, 1.0);
        let resp_b = (0..8)
            .map(|_| {
                (0..8)
                    .map(|_| {
                        let r: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
                        let total: f64 = r.iter().sum();
                        r.map(|v| v / total)
                    })
                    .collect()
            })
            .collect();
        let model = BilocalModel::with_strategies(q1, q2, resp_b).unwrap();
        let objective = Objective::new(SeeSawOptions::default()).unwrap();
        let table = induced_table(&model).unwrap();
        assert!((objective.b.value(&model) - eval_bilocal(&table).unwrap().b).abs() < 1e-12);
        for (c, spec) in objective.constraints.iter().zip(z_list()) {
            assert!((c.value(&model) - correlator(&table, spec).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn feasible_start_respects_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for cap in [0.0, 0.1, 0.5] {
            let q = feasible_start(&mut rng, 8, cap);
            assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for k in 1..=3 {
                let m: f64 = q
                    .iter()
                    .enumerate()
                    .map(|(s, v)| v * strategy_output(s, k) as f64)
                    .sum();
                assert!(m.abs() <= cap + 1e-12);
            }
        }
    }

    #[test]
    fn unconstrained_maximum_by_enumeration() {
        assert!((deterministic_maximum(&bilocal_weights()).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn zero_cap_reaches_three() {
        let (model, b) = maximize_b(0.0, 4, 1).unwrap();
        assert!((b - 3.0).abs() < 1e-3, "{b}");
        let score = eval_bilocal(&induced_table(&model).unwrap()).unwrap();
        assert!((score.b - b).abs() < 1e-9 && score.z < 1e-7);
    }

    #[test]
    fn full_cap_reaches_enumerated_maximum() {
        let (_, b) = maximize_b(1.0, 4, 2).unwrap();
        assert!((b - 8.0).abs() < 1e-6, "{b}");
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        let a = maximize_b(0.1, 3, 5).unwrap().1;
        let b = maximize_b(0.1, 3, 5).unwrap().1;
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(maximize_b(1.5, 1, 0).is_err());
        assert!(maximize_b(0.1, 0, 0).is_err());
        assert!(validate_correction(&[], 1, 0).is_err());
        assert!(validate_correction(&[0.6], 1, 0).is_err());
        assert!(validate_correction(&[0.2, 0.1], 1, 0).is_err());
    }

    #[test]
    fn curve_csv_layout() {
        let pts = [BoundCurvePoint {
            z_cap: 0.25,
            best_b: 3.4,
            certified_bound: 3.5,
        }];
        let csv = curve_to_csv(&pts);
        assert_eq!(
            csv.lines().nth(1).unwrap(),
            "0.2500,3.400000000,3.500000000,0.100000000"
        );
        assert!(pts[0].within_envelopes());
    }
}
