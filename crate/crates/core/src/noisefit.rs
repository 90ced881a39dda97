//! Noise model of the swapping experiment: isotropic sources of visibility
//! `V` and phase errors `δ1..δ5` in the EJM circuit. Forward prediction of
//! the network functionals, a least-squares fit to measured values and a
//! numerical check of the small-`δ` expansions.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ejm::{ejm_povm, EjmBasis, PhaseErrors};
use crate::error::{Error, Result};
use crate::qmath::{pure_fidelity, PureState};
use crate::swapnet::{
    prepare_input, run_protocol, BobOperators, CorrelatorTable, MeasurementSettings,
};
use crate::tomo::measurement_fidelity;
use crate::witnesses::{bilocal_weights, eval_bilocal, eval_bprime, eval_fnn};

/// Number of free parameters: `V` and five phases.
pub const NUM_PARAMS: usize = 6;

/// Largest phase error explored by the fit.
pub const MAX_FIT_PHASE: f64 = FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    visibility: f64,
    deltas: PhaseErrors,
}

impl NoiseParams {
    pub fn new(visibility: f64, deltas: PhaseErrors) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) {
            return Err(Error::invalid(format!(
                "visibility {visibility} outside [0, 1]"
            )));
        }
        Ok(Self { visibility, deltas })
    }

    pub fn ideal() -> Self {
        Self {
            visibility: 1.0,
            deltas: PhaseErrors::zero(),
        }
    }

    /// The fitted values reported for the experiment.
    pub fn reference() -> Self {
        Self {
            visibility: 0.984,
            deltas: PhaseErrors::new([0.0, 0.022 * PI, -0.033 * PI, -0.004 * PI, -0.011 * PI])
                .expect("small phases"),
        }
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    pub fn deltas(&self) -> &PhaseErrors {
        &self.deltas
    }

    /// `[V, δ1, …, δ5]`.
    pub fn to_vector(&self) -> [f64; NUM_PARAMS] {
        let d = self.deltas.deltas();
        [self.visibility, d[0], d[1], d[2], d[3], d[4]]
    }

    pub fn from_vector(v: [f64; NUM_PARAMS]) -> Result<Self> {
        Self::new(v[0], PhaseErrors::new([v[1], v[2], v[3], v[4], v[5]])?)
    }
}

/// Predicted values of the network functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub b: f64,
    pub z: f64,
    pub f1: f64,
    pub f2: f64,
    pub bprime: f64,
}

/// The correlator table of the noisy protocol at `theta`.
pub fn noisy_table(theta: f64, params: &NoiseParams) -> Result<CorrelatorTable> {
    run_protocol(
        &prepare_input(params.visibility, params.visibility)?,
        &ejm_povm(theta, &params.deltas)?,
        &MeasurementSettings::standard(),
    )
}

pub fn predict(theta: f64, params: &NoiseParams) -> Result<Prediction> {
    let table = noisy_table(theta, params)?;
    let bilocal = eval_bilocal(&table)?;
    let fnn = eval_fnn(&table)?;
    Ok(Prediction {
        b: bilocal.b,
        z: bilocal.z,
        f1: fnn.f1,
        f2: fnn.f2,
        bprime: eval_bprime(&table)?.bprime,
    })
}

/// Fidelity of `ρ_V ⊗ ρ_V` with `|φ+⟩ ⊗ |φ+⟩`.
pub fn state_fidelity(params: &NoiseParams) -> Result<f64> {
    let target = PureState::phi_plus().tensor(&PureState::phi_plus())?;
    pure_fidelity(
        &target,
        prepare_input(params.visibility, params.visibility)?.rho(),
    )
}

/// Fidelity of the phase-distorted measurement with the ideal EJM at `theta`.
pub fn params_measurement_fidelity(theta: f64, params: &NoiseParams) -> Result<f64> {
    measurement_fidelity(&ejm_povm(theta, &params.deltas)?, &EjmBasis::new(theta)?)
}

/// One measured point: `θ` in radians and the three fitted observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub theta: f64,
    pub b: f64,
    pub f1: f64,
    pub f2: f64,
}

/// Numeric CSV with a header row, columns looked up by name.
#[derive(Debug, Clone)]
pub struct CsvColumns {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CsvColumns {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Parse("empty CSV".into()))?
            .split(',')
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for line in lines {
            let row = line
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("{f:?} in {line:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != header.len() {
                return Err(Error::Parse(format!(
                    "row {line:?} has {} fields, header has {}",
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn has(&self, name: &str) -> bool {
        self.header.iter().any(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("missing column {name:?}")))?;
        Ok(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub const FIT_HEADER: &str = "theta,B,F1,F2";

/// Reads `theta,B,F1,F2` columns; other columns are ignored.
pub fn read_fit_data(text: &str) -> Result<Vec<FitPoint>> {
    let csv = CsvColumns::parse(text)?;
    let (theta, b, f1, f2) = (
        csv.column("theta")?,
        csv.column("B")?,
        csv.column("F1")?,
        csv.column("F2")?,
    );
    Ok((0..csv.len())
        .map(|i| FitPoint {
            theta: theta[i],
            b: b[i],
            f1: f1[i],
            f2: f2[i],
        })
        .collect())
}

pub fn load_fit_data(path: &Path) -> Result<Vec<FitPoint>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_fit_data(&text)
}

pub fn fit_data_to_csv(points: &[FitPoint]) -> String {
    let mut out = format!("{FIT_HEADER}\n");
    for p in points {
        out.push_str(&format!("{},{},{},{}\n", p.theta, p.b, p.f1, p.f2));
    }
    out
}

/// A tabulated measurement with its standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub sigma: f64,
}

/// One row of the shipped measured data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredRow {
    pub theta: f64,
    pub b: Measured,
    pub f1: Measured,
    pub f2: Measured,
    pub bprime: Measured,
}

/// Path of the shipped measured values.
pub fn measured_data_path() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/data/measured.csv"))
}

pub fn read_measured(text: &str) -> Result<Vec<MeasuredRow>> {
    let csv = CsvColumns::parse(text)?;
    let pair = |name: &str| -> Result<Vec<Measured>> {
        let v = csv.column(name)?;
        let s = csv.column(&format!("{name}_sigma"))?;
        Ok(v.into_iter()
            .zip(s)
            .map(|(value, sigma)| Measured { value, sigma })
            .collect())
    };
    let theta = csv.column("theta")?;
    let (b, f1, f2, bp) = (pair("B")?, pair("F1")?, pair("F2")?, pair("Bprime")?);
    Ok((0..csv.len())
        .map(|i| MeasuredRow {
            theta: theta[i],
            b: b[i],
            f1: f1[i],
            f2: f2[i],
            bprime: bp[i],
        })
        .collect())
}

pub fn measured_data() -> Result<Vec<MeasuredRow>> {
    let path = measured_data_path();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_measured(&text)
}

/// Settings of the multi-start coordinate descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub starts: usize,
    /// Coordinate sweeps per start.
    pub max_iterations: usize,
    pub seed: u64,
    /// A start stops once every step is below this.
    pub min_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 20,
            max_iterations: 10_000,
            seed: 0,
            min_step: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: NoiseParams,
    /// Sum of squared errors over all points and observables.
    pub residual: f64,
    pub state_fidelity: f64,
    /// Mean over the data angles.
    pub measurement_fidelity: f64,
    /// `false` when the winning start hit the iteration cap.
    pub converged: bool,
    pub iterations: usize,
    pub points: usize,
    /// Residual after each sweep of the winning start.
    pub history: Vec<f64>,
}

/// Flat key-value form of a [`FitResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub visibility: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
    pub delta5: f64,
    pub residual: f64,
    pub state_fidelity: f64,
    pub measurement_fidelity: f64,
    pub converged: bool,
    pub iterations: usize,
    pub points: usize,
}

impl FitRecord {
    pub fn to_text(&self) -> Result<String> {
        toml::to_string(self)
            .map_err(|e| Error::Numerical(format!("cannot serialize fit record: {e}")))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn params(&self) -> Result<NoiseParams> {
        NoiseParams::from_vector([
            self.visibility,
            self.delta1,
            self.delta2,
            self.delta3,
            self.delta4,
            self.delta5,
        ])
    }
}

impl FitResult {
    pub fn record(&self) -> FitRecord {
        let [visibility, delta1, delta2, delta3, delta4, delta5] = self.params.to_vector();
        FitRecord {
            visibility,
            delta1,
            delta2,
            delta3,
            delta4,
            delta5,
            residual: self.residual,
            state_fidelity: self.state_fidelity,
            measurement_fidelity: self.measurement_fidelity,
            converged: self.converged,
            iterations: self.iterations,
            points: self.points,
        }
    }
}

/// `B`, `F1`, `F2` without the `Z` scan, reusing Bob's conditional states
/// while `V` is unchanged.
struct Evaluator {
    b_weights: Vec<f64>,
    settings: MeasurementSettings,
    cache: Option<(f64, BobOperators)>,
}

impl Evaluator {
    fn new() -> Self {
        Self {
            b_weights: bilocal_weights(),
            settings: MeasurementSettings::standard(),
            cache: None,
        }
    }

    fn operators(&mut self, v: f64) -> Result<&BobOperators> {
        if self.cache.as_ref().is_none_or(|c| c.0 != v) {
            let ops = BobOperators::new(&prepare_input(v, v)?, &self.settings)?;
            self.cache = Some((v, ops));
        }
        Ok(&self.cache.as_ref().expect("just filled").1)
    }

    fn residual(&mut self, data: &[FitPoint], x: &[f64; NUM_PARAMS]) -> Result<f64> {
        let params = NoiseParams::from_vector(*x)?;
        let weights = std::mem::take(&mut self.b_weights);
        let ops = self.operators(params.visibility)?;
        let mut total = 0.0;
        for p in data {
            let table = ops.table(&ejm_povm(p.theta, &params.deltas)?)?;
            let fnn = eval_fnn(&table)?;
            let b = table.dot(&weights);
            total += (b - p.b).powi(2) + (fnn.f1 - p.f1).powi(2) + (fnn.f2 - p.f2).powi(2);
        }
        self.b_weights = weights;
        Ok(total)
    }
}

/// Sum of squared errors of `params` on `data`.
pub fn residual(data: &[FitPoint], params: &NoiseParams) -> Result<f64> {
    Evaluator::new().residual(data, &params.to_vector())
}

fn clamp_params(x: &mut [f64; NUM_PARAMS]) {
    x[0] = x[0].clamp(0.0, 1.0);
    for d in &mut x[1..] {
        *d = d.clamp(-MAX_FIT_PHASE, MAX_FIT_PHASE);
    }
}

struct Descent {
    x: [f64; NUM_PARAMS],
    value: f64,
    history: Vec<f64>,
    converged: bool,
}

const INITIAL_STEPS: [f64; NUM_PARAMS] = [0.02, 0.05, 0.05, 0.05, 0.05, 0.05];

/// Coordinate descent with per-coordinate steps that double on success and
/// halve on failure.
fn descend(
    eval: &mut Evaluator,
    data: &[FitPoint],
    start: [f64; NUM_PARAMS],
    opts: &FitOptions,
) -> Result<Descent> {
    let mut x = start;
    clamp_params(&mut x);
    let mut value = eval.residual(data, &x)?;
    let mut steps = INITIAL_STEPS;
    let mut history = vec![value];
    for _ in 0..opts.max_iterations {
        for i in 0..NUM_PARAMS {
            let mut best: Option<([f64; NUM_PARAMS], f64)> = None;
            for sign in [1.0, -1.0] {
                let mut trial = x;
                trial[i] += sign * steps[i];
                clamp_params(&mut trial);
                if trial[i] == x[i] {
                    continue;
                }
                let v = eval.residual(data, &trial)?;
                if v < best.map_or(value, |b| b.1) {
                    best = Some((trial, v));
                }
            }
            match best {
                Some((trial, v)) => {
                    x = trial;
                    value = v;
                    steps[i] = (2.0 * steps[i]).min(INITIAL_STEPS[i]);
                }
                None => steps[i] *= 0.5,
            }
        }
        history.push(value);
        if steps.iter().all(|&s| s < opts.min_step) {
            return Ok(Descent {
                x,
                value,
                history,
                converged: true,
            });
        }
    }
    Ok(Descent {
        x,
        value,
        history,
        converged: false,
    })
}

/// Starting points: the noiseless model first, then random draws.
fn fit_starts(opts: &FitOptions) -> Vec<[f64; NUM_PARAMS]> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = vec![NoiseParams::ideal().to_vector()];
    while out.len() < opts.starts {
        let mut x = [0.0; NUM_PARAMS];
        x[0] = rng.random_range(0.9..=1.0);
        for d in &mut x[1..] {
            *d = rng.random_range(-0.1 * PI..=0.1 * PI);
        }
        out.push(x);
    }
    out.truncate(opts.starts);
    out
}

/// Least-squares fit of `V, δ1..δ5` to `(θ, B, F1, F2)` points.
pub fn fit(data: &[FitPoint]) -> Result<FitResult> {
    fit_with(data, &FitOptions::default())
}

pub fn fit_with(data: &[FitPoint], opts: &FitOptions) -> Result<FitResult> {
    if data.len() < NUM_PARAMS {
        return Err(Error::invalid(format!(
            "{} data points cannot determine {NUM_PARAMS} parameters",
            data.len()
        )));
    }
    if opts.starts == 0 {
        return Err(Error::invalid("fit needs at least one start"));
    }
    if let Some(p) = data.iter().find(|p| !(0.0..=FRAC_PI_2).contains(&p.theta)) {
        return Err(Error::invalid(format!(
            "theta {} outside [0, pi/2]",
            p.theta
        )));
    }
    let runs = fit_starts(opts)
        .into_par_iter()
        .map(|start| descend(&mut Evaluator::new(), data, start, opts))
        .collect::<Result<Vec<_>>>()?;
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.value < a.value { b } else { a })
        .expect("at least one start");
    let params = NoiseParams::from_vector(best.x)?;
    let mut mf = 0.0;
    for p in data {
        mf += params_measurement_fidelity(p.theta, &params)?;
    }
    Ok(FitResult {
        params,
        residual: best.value,
        state_fidelity: state_fidelity(&params)?,
        measurement_fidelity: mf / data.len() as f64,
        converged: best.converged,
        iterations: best.history.len() - 1,
        points: data.len(),
        history: best.history,
    })
}

/// Deviation of the numerical functionals from their second-order
/// expansions under a pure `δ5 = δ` error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationRow {
    pub delta: f64,
    /// `B(0) − (4 − 4δ²/3)`.
    pub b: f64,
    /// `F1(π/4) − ((1+√2)/2 − δ/2 − (1+√2)δ²/4)`.
    pub f1: f64,
    /// `F2(π/4) − ((1+√2)/2 + δ/2 − (1+√2)δ²/4)`.
    pub f2: f64,
    /// `F2(π/4) − F1(π/4)`.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub rows: Vec<PerturbationRow>,
    /// Log-log slopes of `|residual|` against `δ`; `None` when every residual
    /// vanishes to rounding.
    pub slope_b: Option<f64>,
    pub slope_f1: Option<f64>,
    pub slope_f2: Option<f64>,
}

/// Smallest slope accepted as third order.
pub const MIN_SLOPE: f64 = 2.5;

/// Residuals below this are treated as exact.
const ROUNDING: f64 = 1e-13;

impl PerturbationReport {
    /// Every slope is at least [`MIN_SLOPE`] (an exactly vanishing residual
    /// also passes).
    pub fn passes(&self) -> bool {
        [self.slope_b, self.slope_f1, self.slope_f2]
            .iter()
            .all(|s| s.is_none_or(|s| s >= MIN_SLOPE))
    }
}

pub fn perturbation_row(delta: f64) -> Result<PerturbationRow> {
    let params = NoiseParams::new(1.0, PhaseErrors::spatial_phase(delta)?)?;
    let b = predict_b(0.0, &params)?;
    let fnn = eval_fnn(&noisy_table(FRAC_PI_4, &params)?)?;
    let c = (1.0 + 2f64.sqrt()) / 2.0;
    let quad = (1.0 + 2f64.sqrt()) / 4.0 * delta * delta;
    Ok(PerturbationRow {
        delta,
        b: b - (4.0 - 4.0 / 3.0 * delta * delta),
        f1: fnn.f1 - (c - delta / 2.0 - quad),
        f2: fnn.f2 - (c + delta / 2.0 - quad),
        offset: fnn.f2 - fnn.f1,
    })
}

fn predict_b(theta: f64, params: &NoiseParams) -> Result<f64> {
    Ok(noisy_table(theta, params)?.dot(&bilocal_weights()))
}

/// Least-squares slope of `ln|r|` against `ln δ`, skipping vanishing `r`.
fn log_slope(points: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .filter(|(_, r)| r.abs() > ROUNDING)
        .map(|(d, r)| (d.ln(), r.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Checks the expansions at every `δ` (positive, at most 0.2).
pub fn perturbation_check(deltas: &[f64]) -> Result<PerturbationReport> {
    if deltas.len() < 2 {
        return Err(Error::invalid("slope estimation needs at least two deltas"));
    }
    if let Some(d) = deltas.iter().find(|&&d| !(d > 0.0 && d <= 0.2)) {
        return Err(Error::invalid(format!("delta {d} outside (0, 0.2]")));
    }
    let rows = deltas
        .iter()
        .map(|&d| perturbation_row(d))
        .collect::<Result<Vec<_>>>()?;
    Ok(PerturbationReport {
        slope_b: log_slope(rows.iter().map(|r| (r.delta, r.b))),
        slope_f1: log_slope(rows.iter().map(|r| (r.delta, r.f1))),
        slope_f2: log_slope(rows.iter().map(|r| (r.delta, r.f2))),
        rows,
    })
}

/// `n` logarithmically spaced values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
        .collect()
}
