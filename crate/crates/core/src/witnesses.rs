//! Network Bell-inequality scores: the bilocal inequality `B = S/3 − T`
//! with its `Z` correction, the two full-network-nonlocality functionals
//! `F1`, `F2`, and the square-root bilocal functional `B′`.

use std::fmt::Write as _;

use crate::ejm::EjmOutcome;
use crate::error::{Error, Result};
use crate::swapnet::{
    correlator, table_event, CorrSpec, CorrelatorTable, CountTable, EVENTS, SETTINGS,
};
use crate::tolerances;

/// `12√3 + 2√15`.
pub fn bprime_bound() -> f64 {
    12.0 * 3f64.sqrt() + 2.0 * 15f64.sqrt()
}

/// `f(Z) = Z + 4Z²`.
pub fn correction(z: f64) -> f64 {
    z + 4.0 * z * z
}

/// Whether `(x, y, z)` is a permutation of `(1, 2, 3)`.
pub fn is_permutation(x: usize, y: usize, z: usize) -> bool {
    x != y && y != z && x != z
}

/// `true` for the cyclic orderings of `(1, 2, 3)`.
pub fn is_even_permutation(x: usize, y: usize, z: usize) -> bool {
    matches!((x, y, z), (1, 2, 3) | (2, 3, 1) | (3, 1, 2))
}

/// The correlators entering `S`: `(⟨B^k C_k⟩, ⟨A_k B^k⟩)` for `k = 1..3`.
pub fn s_terms() -> Vec<(CorrSpec, f64)> {
    (1..=3)
        .flat_map(|k| [(CorrSpec::bc(k, k), 1.0), (CorrSpec::ab(k, k), -1.0)])
        .collect()
}

/// The six permutation triples entering `T`.
pub fn t_terms() -> Vec<CorrSpec> {
    let mut out = Vec::with_capacity(6);
    for x in 1..=3 {
        for y in 1..=3 {
            for z in 1..=3 {
                if is_permutation(x, y, z) {
                    out.push(CorrSpec::abc(x, y, z));
                }
            }
        }
    }
    out
}

/// Every one-, two- and three-body correlator absent from `S` and `T`.
pub fn z_list() -> Vec<CorrSpec> {
    let mut out = Vec::with_capacity(51);
    for k in 1..=3 {
        out.extend([CorrSpec::a(k), CorrSpec::b(k), CorrSpec::c(k)]);
    }
    for i in 1..=3 {
        for j in 1..=3 {
            if i != j {
                out.push(CorrSpec::ab(i, j));
                out.push(CorrSpec::bc(i, j));
            }
            out.push(CorrSpec::ac(i, j));
        }
    }
    for x in 1..=3 {
        for y in 1..=3 {
            for z in 1..=3 {
                if !is_permutation(x, y, z) {
                    out.push(CorrSpec::abc(x, y, z));
                }
            }
        }
    }
    out
}

/// Weights `w` with `B = Σ w·p`.
pub fn bilocal_weights() -> Vec<f64> {
    let mut w = vec![0.0; SETTINGS * EVENTS];
    for (spec, sign) in s_terms() {
        for (wk, v) in w.iter_mut().zip(spec.weights().expect("valid spec")) {
            *wk += sign * v / 3.0;
        }
    }
    for spec in t_terms() {
        for (wk, v) in w.iter_mut().zip(spec.weights().expect("valid spec")) {
            *wk -= v;
        }
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilocalScore {
    pub b: f64,
    pub s: f64,
    pub t: f64,
    pub z: f64,
    /// `3 + f(Z)`, absent when `Z` is beyond the certified range.
    pub bound: Option<f64>,
    /// `B − bound`.
    pub violation: Option<f64>,
}

impl BilocalScore {
    pub fn certified(&self) -> bool {
        self.bound.is_some()
    }
}

pub fn eval_bilocal(table: &CorrelatorTable) -> Result<BilocalScore> {
    let mut s = 0.0;
    for (spec, sign) in s_terms() {
        s += sign * correlator(table, spec)?;
    }
    let mut t = 0.0;
    for spec in t_terms() {
        t += correlator(table, spec)?;
    }
    let mut z: f64 = 0.0;
    for spec in z_list() {
        z = z.max(correlator(table, spec)?.abs());
    }
    let b = s / 3.0 - t;
    let bound = (z <= tolerances::MAX_CERTIFIED_Z).then(|| 3.0 + correction(z));
    Ok(BilocalScore {
        b,
        s,
        t,
        z,
        bound,
        violation: bound.map(|bd| b - bd),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FnnScore {
    pub f1: f64,
    pub f2: f64,
    pub bound: f64,
}

impl FnnScore {
    /// Both functionals above the bound.
    pub fn full_network_nonlocal(&self) -> bool {
        self.f1 > self.bound && self.f2 > self.bound
    }
}

pub fn eval_fnn(table: &CorrelatorTable) -> Result<FnnScore> {
    let k = |spec| correlator(table, spec);
    let a1b2c3 = k(CorrSpec::abc(1, 2, 3))?;
    let c3 = k(CorrSpec::c(3))?;
    let a1 = k(CorrSpec::a(1))?;
    let f1 = -a1b2c3 - k(CorrSpec::ab(2, 2))?
        + c3 * (k(CorrSpec::ab(1, 2))? + k(CorrSpec::abc(2, 2, 3))? + c3);
    let f2 = -a1b2c3
        + k(CorrSpec::bc(2, 2))?
        + a1 * (k(CorrSpec::bc(2, 3))? - k(CorrSpec::abc(1, 2, 2))? + a1);
    Ok(FnnScore { f1, f2, bound: 1.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BprimeScore {
    pub bprime: f64,
    pub bound: f64,
}

impl BprimeScore {
    pub fn violation(&self) -> f64 {
        self.bprime - self.bound
    }
}

fn clamped_sqrt(radicand: f64) -> Result<f64> {
    if radicand < -tolerances::RADICAND {
        return Err(Error::InconsistentTable(format!(
            "negative square-root argument {radicand:.3e}"
        )));
    }
    Ok(radicand.max(0.0).sqrt())
}

/// Sums `p(a,b,c|x,z)` weighted by `f(a, c)` into `[x][z][b]` and the
/// matching Bob marginals.
type Moments = [[[f64; 4]; 3]; 3];

fn conditional_moments(table: &CorrelatorTable, f: impl Fn(i8, i8) -> f64) -> (Moments, Moments) {
    let mut num = [[[0.0; 4]; 3]; 3];
    let mut den = [[[0.0; 4]; 3]; 3];
    for (k, &p) in table.probabilities().iter().enumerate() {
        let (x, z, a, b, c) = table_event(k);
        num[x - 1][z - 1][b] += f(a, c) * p;
        den[x - 1][z - 1][b] += p;
    }
    (num, den)
}

fn ratio(num: f64, den: f64) -> Result<f64> {
    if den < tolerances::MIN_PROBABILITY {
        return Err(Error::ZeroProbability(den));
    }
    Ok(num / den)
}

/// `B′` with one-party conditional expectations pooled over the unused input.
pub fn eval_bprime(table: &CorrelatorTable) -> Result<BprimeScore> {
    let pb = table.bob_marginal();
    if let Some(&p) = pb.iter().find(|&&p| p < tolerances::MIN_PROBABILITY) {
        return Err(Error::ZeroProbability(p));
    }
    let (na, den) = conditional_moments(table, |a, _| a as f64);
    let (nc, _) = conditional_moments(table, |_, c| c as f64);
    let (nac, _) = conditional_moments(table, |a, c| (a * c) as f64);
    let mut total = 0.0;
    for o in EjmOutcome::ALL {
        let b = o.index();
        let p = pb[b];
        for x in 0..3 {
            let e = ratio(
                (0..3).map(|z| na[x][z][b]).sum(),
                (0..3).map(|z| den[x][z][b]).sum(),
            )?;
            total += clamped_sqrt(p * (1.0 - o.bit(x + 1)? * e))?;
        }
        for z in 0..3 {
            let e = ratio(
                (0..3).map(|x| nc[x][z][b]).sum(),
                (0..3).map(|x| den[x][z][b]).sum(),
            )?;
            total += clamped_sqrt(p * (1.0 + o.bit(z + 1)? * e))?;
        }
        for x in 0..3 {
            for z in 0..3 {
                if x == z {
                    continue;
                }
                let e = ratio(nac[x][z][b], den[x][z][b])?;
                let sign = o.bit(x + 1)? * o.bit(z + 1)?;
                total += clamped_sqrt(p * (1.0 - sign * e))?;
            }
        }
    }
    Ok(BprimeScore {
        bprime: total,
        bound: bprime_bound(),
    })
}

/// Noiseless values `(B, F)` with `F = F1 = F2`.
pub fn quantum_prediction(theta: f64) -> Result<(f64, f64)> {
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::invalid(format!("theta {theta} outside [0, pi/2]")));
    }
    Ok((3.0 + theta.cos(), 0.5 * (1.0 + theta.sin() + theta.cos())))
}

/// Standard deviation of `f(p)` under per-setting multinomial statistics,
/// by linear propagation with a numerical gradient.
pub fn delta_method_sigma(
    table: &CorrelatorTable,
    shots: &[u64; SETTINGS],
    f: impl Fn(&CorrelatorTable) -> Result<f64>,
) -> Result<f64> {
    let h = 1e-6;
    let base = table.probabilities().to_vec();
    let f0 = f(table)?;
    let mut grad = vec![0.0; base.len()];
    for (k, g) in grad.iter_mut().enumerate() {
        let mut up = base.clone();
        up[k] += h;
        let fu = f(&CorrelatorTable::unchecked(up))?;
        *g = if base[k] > h {
            let mut down = base.clone();
            down[k] -= h;
            (fu - f(&CorrelatorTable::unchecked(down))?) / (2.0 * h)
        } else {
            (fu - f0) / h
        };
    }
    let mut var = 0.0;
    for (s, &n) in shots.iter().enumerate() {
        if n == 0 {
            return Err(Error::InconsistentTable("setting without counts".into()));
        }
        let range = s * EVENTS..(s + 1) * EVENTS;
        let mean: f64 = range.clone().map(|k| grad[k] * base[k]).sum();
        let second: f64 = range.map(|k| grad[k] * grad[k] * base[k]).sum();
        var += (second - mean * mean).max(0.0) / n as f64;
    }
    Ok(var.sqrt())
}

/// One row of a score table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub family: &'static str,
    pub theta: f64,
    pub value: f64,
    pub sigma: Option<f64>,
    pub z_term: Option<f64>,
    pub bound: Option<f64>,
    /// Present only for a positive violation.
    pub violation: Option<f64>,
    pub nsd: Option<f64>,
}

pub const SCORE_HEADER: &str = "family,theta,value,sigma,z_term,bound,violation,nsd";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "None".to_string(), |v| format!("{v:.6}"))
}

impl ScoreRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.6},{:.6},{},{},{},{},{}",
            self.family,
            self.theta,
            self.value,
            opt(self.sigma),
            opt(self.z_term),
            self.bound
                .map_or_else(|| "uncertified".to_string(), |v| format!("{v:.6}")),
            opt(self.violation),
            opt(self.nsd),
        )
    }
}

pub fn scores_to_csv(rows: &[ScoreRow]) -> String {
    let mut out = format!("{SCORE_HEADER}\n");
    for r in rows {
        writeln!(out, "{}", r.to_csv()).expect("writing to a String");
    }
    out
}

/// Rows for `B`, `F1`, `F2` and `B′`. With counts, values come from the
/// observed frequencies and carry error bars and standard-deviation counts.
pub fn score_rows(
    theta: f64,
    table: &CorrelatorTable,
    counts: Option<&CountTable>,
) -> Result<Vec<ScoreRow>> {
    let observed;
    let (table, shots) = match counts {
        Some(c) => {
            observed = c.frequencies()?;
            (&observed, Some(c.shots()))
        }
        None => (table, None),
    };
    let bl = eval_bilocal(table)?;
    let fnn = eval_fnn(table)?;
    let bp = eval_bprime(table)?;
    let sigma_of = |f: &dyn Fn(&CorrelatorTable) -> Result<f64>| -> Result<Option<f64>> {
        shots.map(|s| delta_method_sigma(table, &s, f)).transpose()
    };
    let positive = |v: f64| (v > 0.0).then_some(v);
    let nsd = |violation: Option<f64>, sigma: Option<f64>| match (violation, sigma) {
        (Some(v), Some(s)) if s > 0.0 => Some(v / s),
        _ => None,
    };

    let b_sigma = sigma_of(&|t| Ok(eval_bilocal(t)?.b))?;
    let bv_sigma = sigma_of(&|t| {
        let s = eval_bilocal(t)?;
        Ok(s.b - 3.0 - correction(s.z))
    })?;
    let bl_violation = bl.violation.and_then(positive);
    let f1_sigma = sigma_of(&|t| Ok(eval_fnn(t)?.f1))?;
    let f2_sigma = sigma_of(&|t| Ok(eval_fnn(t)?.f2))?;
    let bp_sigma = sigma_of(&|t| Ok(eval_bprime(t)?.bprime))?;

    let mut rows = vec![ScoreRow {
        family: "bilocal",
        theta,
        value: bl.b,
        sigma: b_sigma,
        z_term: Some(bl.z),
        bound: bl.bound,
        violation: bl_violation,
        nsd: nsd(bl_violation, bv_sigma),
    }];
    for (family, value, sigma) in [("fnn1", fnn.f1, f1_sigma), ("fnn2", fnn.f2, f2_sigma)] {
        let violation = positive(value - fnn.bound);
        rows.push(ScoreRow {
            family,
            theta,
            value,
            sigma,
            z_term: None,
            bound: Some(fnn.bound),
            violation,
            nsd: nsd(violation, sigma),
        });
    }
    let violation = positive(bp.violation());
    rows.push(ScoreRow {
        family: "bprime",
        theta,
        value: bp.bprime,
        sigma: bp_sigma,
        z_term: None,
        bound: Some(bp.bound),
        violation,
        nsd: nsd(violation, bp_sigma),
    });
    Ok(rows)
}
