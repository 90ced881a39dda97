//! Maximum-likelihood detector and state tomography, POVM fidelities and
//! source-independence metrics.
//!
//! Both reconstructions use multiplicative fixed-point updates. Each update
//! is mixed with the current estimate, halving the step until the
//! log-likelihood does not decrease, so the likelihood history is monotone.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ejm::EjmBasis;
use crate::error::{Error, Result};
use crate::qmath::{
    c, clamp_psd, fidelity, hermitian_map, hermitian_part, identity, mutual_information,
    parse_matrix, split_marginals, ComplexMatrix, ComplexVector, DensityMatrix, Povm, PureState,
    ONE, ZERO,
};
use crate::swapnet::multinomial;
use crate::tolerances;

/// Smallest step tried by the backtracking line search.
const MIN_STEP: f64 = 1e-6;

/// Probabilities are floored here inside logarithms and ratios.
const PROBABILITY_FLOOR: f64 = 1e-300;

/// `|0⟩, |1⟩, |+⟩, |−⟩, |+i⟩, |−i⟩`.
pub fn pauli_eigenstates() -> [PureState; 6] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        [ONE, ZERO],
        [ZERO, ONE],
        [c(s, 0.0), c(s, 0.0)],
        [c(s, 0.0), c(-s, 0.0)],
        [c(s, 0.0), c(0.0, s)],
        [c(s, 0.0), c(0.0, -s)],
    ]
    .map(|a| PureState::from_slice(&a).expect("unit vectors"))
}

/// Probe states for detector tomography.
#[derive(Debug, Clone, PartialEq)]
pub struct TomoInputSet {
    states: Vec<PureState>,
}

impl TomoInputSet {
    /// All 36 products of two single-qubit Pauli eigenstates, first qubit
    /// major.
    pub fn standard() -> Self {
        let single = pauli_eigenstates();
        let states = single
            .iter()
            .flat_map(|a| single.iter().map(move |b| a.tensor(b).expect("two qubits")))
            .collect();
        Self { states }
    }

    pub fn new(states: Vec<PureState>) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(Error::invalid("empty input set"));
        };
        let dim = first.dim();
        if let Some(s) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: s.dim(),
            });
        }
        Ok(Self { states })
    }

    pub fn states(&self) -> &[PureState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    /// Rank of `X ↦ (⟨ψ_j|X|ψ_j⟩)_j` on Hermitian operators.
    pub fn rank(&self) -> usize {
        let d = self.dim();
        let rows = DMatrix::<f64>::from_fn(self.len(), 2 * d * d, |j, k| {
            let z = self.states[j].projector()[(k / 2 / d, (k / 2) % d)];
            if k % 2 == 0 {
                z.re
            } else {
                z.im
            }
        });
        rows.rank(1e-9)
    }

    pub fn is_complete(&self) -> bool {
        let d = self.dim();
        self.rank() == d * d
    }

    fn check_complete(&self) -> Result<()> {
        if !self.is_complete() {
            let d = self.dim();
            return Err(Error::invalid(format!(
                "input set has rank {} < {} and is not informationally complete",
                self.rank(),
                d * d
            )));
        }
        Ok(())
    }
}

/// Outcome counts per probe state, all states with the same number of shots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountRecord {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
    shots: u64,
}

impl CountRecord {
    pub fn new(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if labels.is_empty() || counts.is_empty() {
            return Err(Error::invalid("empty count record"));
        }
        if let Some(row) = counts.iter().find(|r| r.len() != labels.len()) {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                actual: row.len(),
            });
        }
        let shots: u64 = counts[0].iter().sum();
        if shots == 0 {
            return Err(Error::invalid("probe states need at least one shot"));
        }
        if let Some(j) = counts.iter().position(|r| r.iter().sum::<u64>() != shots) {
            return Err(Error::Invariant(format!(
                "state {j} has {} shots, expected {shots}",
                counts[j].iter().sum::<u64>()
            )));
        }
        Ok(Self {
            labels,
            counts,
            shots,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("state-index,outcome-label,count\n");
        for (j, row) in self.counts.iter().enumerate() {
            for (label, n) in self.labels.iter().zip(row) {
                writeln!(out, "{j},{label},{n}").expect("writing to a String");
            }
        }
        out
    }

    /// Rows may come in any order; outcome labels are ordered by first
    /// appearance.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("state-index,outcome-label,count") => {}
            other => return Err(Error::Parse(format!("unexpected header {other:?}"))),
        }
        let mut labels: Vec<String> = Vec::new();
        let mut entries = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("expected 3 fields in {line:?}")));
            }
            let j: usize = f[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad state index {:?}", f[0])))?;
            let n: u64 = f[2]
                .parse()
                .map_err(|_| Error::Parse(format!("bad count {:?}", f[2])))?;
            let b = match labels.iter().position(|l| l == f[1]) {
                Some(b) => b,
                None => {
                    labels.push(f[1].to_string());
                    labels.len() - 1
                }
            };
            entries.push((j, b, n));
        }
        let states = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
        let mut counts = vec![vec![None; labels.len()]; states];
        for (j, b, n) in entries {
            if counts[j][b].replace(n).is_some() {
                return Err(Error::Parse(format!(
                    "duplicate entry for state {j}, outcome {}",
                    labels[b]
                )));
            }
        }
        let counts = counts
            .into_iter()
            .enumerate()
            .map(|(j, row)| {
                row.into_iter()
                    .collect::<Option<Vec<u64>>>()
                    .ok_or_else(|| Error::Parse(format!("missing outcomes for state {j}")))
            })
            .collect::<Result<_>>()?;
        Self::new(labels, counts)
    }
}

/// Multinomial outcome counts of `povm` on every probe state.
pub fn simulate_tomo_counts(
    povm: &Povm,
    inputs: &TomoInputSet,
    shots: u64,
    seed: u64,
) -> Result<CountRecord> {
    if shots == 0 {
        return Err(Error::invalid("shots must be at least 1"));
    }
    if povm.dim() != inputs.dim() {
        return Err(Error::DimensionMismatch {
            expected: inputs.dim(),
            actual: povm.dim(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = inputs
        .states()
        .iter()
        .map(|s| multinomial(&mut rng, shots, &povm.probabilities(&s.density())?))
        .collect::<Result<_>>()?;
    CountRecord::new(povm.labels().to_vec(), counts)
}

/// Stopping rule of the likelihood ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlOptions {
    /// Stop once an iteration gains less log-likelihood per unit weight.
    pub stop: f64,
    pub max_iterations: usize,
}

impl Default for MlOptions {
    fn default() -> Self {
        Self {
            stop: tolerances::ML_STOP,
            max_iterations: tolerances::ML_MAX_ITERATIONS,
        }
    }
}

/// Result of an iterative reconstruction.
#[derive(Debug, Clone)]
pub struct MlReport<T> {
    pub estimate: T,
    /// Log-likelihood per unit weight after every accepted iteration,
    /// starting with the initial guess.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T> MlReport<T> {
    pub fn monotone(&self) -> bool {
        self.log_likelihood.windows(2).all(|w| w[1] >= w[0])
    }
}

/// Generic ascent loop: `step` proposes a point, `mix` interpolates,
/// `score` evaluates the log-likelihood.
fn ascend<T: Clone>(
    opts: MlOptions,
    start: T,
    score: impl Fn(&T) -> f64,
    step: impl Fn(&T) -> Result<T>,
    mix: impl Fn(&T, &T, f64) -> T,
) -> Result<(T, Vec<f64>, usize, bool)> {
    let mut current = start;
    let mut ll = score(&current);
    let mut history = vec![ll];
    for it in 1..=opts.max_iterations {
        let proposal = step(&current)?;
        let mut t = 1.0;
        let accepted = loop {
            let candidate = if t == 1.0 {
                proposal.clone()
            } else {
                mix(&current, &proposal, t)
            };
            let value = score(&candidate);
            if value >= ll {
                break Some((candidate, value));
            }
            t *= 0.5;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some((next, value)) = accepted else {
            return Ok((current, history, it, true));
        };
        assert!(value >= ll, "log-likelihood decreased");
        let gain = value - ll;
        current = next;
        ll = value;
        history.push(ll);
        if gain < opts.stop {
            return Ok((current, history, it, true));
        }
    }
    Ok((current, history, opts.max_iterations, false))
}

fn tr_prod(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    crate::qmath::trace_of_product(a, b).re
}

/// Inverse square root on the support, zero elsewhere.
fn inverse_sqrt(m: &ComplexMatrix) -> ComplexMatrix {
    hermitian_map(m, |v| {
        if v > tolerances::EIGEN_CLAMP {
            1.0 / v.sqrt()
        } else {
            0.0
        }
    })
}

/// Clamps to the PSD cone and restores `Σ E_b = I`.
fn project_povm(elements: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    let clamped: Vec<ComplexMatrix> = elements
        .iter()
        .map(|e| clamp_psd(&hermitian_part(e)))
        .collect();
    let total = clamped.iter().fold(
        ComplexMatrix::zeros(clamped[0].nrows(), clamped[0].ncols()),
        |acc, e| acc + e,
    );
    let k = inverse_sqrt(&total);
    clamped
        .iter()
        .map(|e| hermitian_part(&(&k * e * &k)))
        .collect()
}

/// Detector tomography from outcome weights per probe state (counts or
/// exact probabilities).
fn reconstruct_povm(
    opts: MlOptions,
    weights: &[Vec<f64>],
    inputs: &TomoInputSet,
    labels: Vec<String>,
) -> Result<MlReport<Povm>> {
    inputs.check_complete()?;
    if weights.len() != inputs.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            actual: weights.len(),
        });
    }
    let outcomes = labels.len();
    if weights.iter().any(|r| r.len() != outcomes) {
        return Err(Error::invalid(
            "every probe state needs one weight per outcome",
        ));
    }
    let total: f64 = weights.iter().flatten().sum();
    if !(total > 0.0) || weights.iter().flatten().any(|&w| w < 0.0) {
        return Err(Error::invalid(
            "weights must be nonnegative with positive total",
        ));
    }
    let d = inputs.dim();
    let rhos: Vec<ComplexMatrix> = inputs.states().iter().map(PureState::projector).collect();

    let probs = |e: &[ComplexMatrix]| -> Vec<Vec<f64>> {
        rhos.iter()
            .map(|r| {
                e.iter()
                    .map(|eb| tr_prod(r, eb).max(PROBABILITY_FLOOR))
                    .collect()
            })
            .collect()
    };
    let score = |e: &Vec<ComplexMatrix>| -> f64 {
        let p = probs(e);
        let mut acc = 0.0;
        for (wr, pr) in weights.iter().zip(&p) {
            for (w, q) in wr.iter().zip(pr) {
                if *w > 0.0 {
                    acc += w * q.ln();
                }
            }
        }
        acc / total
    };
    let step = |e: &Vec<ComplexMatrix>| -> Result<Vec<ComplexMatrix>> {
        let p = probs(e);
        let mut r = vec![ComplexMatrix::zeros(d, d); outcomes];
        for (j, rho) in rhos.iter().enumerate() {
            for b in 0..outcomes {
                if weights[j][b] > 0.0 {
                    r[b] += rho.scale(weights[j][b] / p[j][b]);
                }
            }
        }
        let rer: Vec<ComplexMatrix> = r.iter().zip(e).map(|(rb, eb)| rb * eb * rb).collect();
        let g = rer
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, x| acc + x);
        let k = inverse_sqrt(&g);
        Ok(rer.iter().map(|x| hermitian_part(&(&k * x * &k))).collect())
    };
    let mix = |a: &Vec<ComplexMatrix>, b: &Vec<ComplexMatrix>, t: f64| -> Vec<ComplexMatrix> {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.scale(1.0 - t) + y.scale(t))
            .collect()
    };
    let start = vec![identity(d).unscale(outcomes as f64); outcomes];
    let (elements, history, iterations, converged) = ascend(opts, start, score, step, mix)?;
    let povm = Povm::with_tolerance(
        project_povm(&elements),
        labels,
        tolerances::RECONSTRUCTED_POVM,
    )?;
    Ok(MlReport {
        estimate: povm,
        log_likelihood: history,
        iterations,
        converged,
    })
}

/// Maximum-likelihood POVM from counted outcomes.
pub fn ml_povm(counts: &CountRecord, inputs: &TomoInputSet) -> Result<MlReport<Povm>> {
    let weights: Vec<Vec<f64>> = counts
        .counts()
        .iter()
        .map(|r| r.iter().map(|&n| n as f64).collect())
        .collect();
    reconstruct_povm(
        MlOptions::default(),
        &weights,
        inputs,
        counts.labels().to_vec(),
    )
}

/// Same as [`ml_povm`] with exact outcome probabilities in place of counts.
pub fn ml_povm_exact(
    probabilities: &[Vec<f64>],
    inputs: &TomoInputSet,
    labels: Vec<String>,
    opts: MlOptions,
) -> Result<MlReport<Povm>> {
    reconstruct_povm(opts, probabilities, inputs, labels)
}

/// Counts for all `3^n` Pauli settings. Setting `s` measures qubit `k` in
/// the basis given by base-3 digit `k` of `s` (qubit 0 most significant,
/// `0 = X`, `1 = Y`, `2 = Z`); outcome bit `k` set means eigenvalue `−1`
/// on qubit `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliCounts {
    num_qubits: usize,
    counts: Vec<Vec<u64>>,
}

impl PauliCounts {
    pub fn new(num_qubits: usize, counts: Vec<Vec<u64>>) -> Result<Self> {
        if num_qubits == 0 || num_qubits > tolerances::MAX_QUBITS {
            return Err(Error::invalid(format!("{num_qubits} qubits not supported")));
        }
        let settings = 3usize.pow(num_qubits as u32);
        if counts.len() != settings {
            return Err(Error::invalid(format!(
                "{} settings given, all {settings} Pauli settings are required",
                counts.len()
            )));
        }
        let outcomes = 1usize << num_qubits;
        if let Some(s) = counts
            .iter()
            .position(|r| r.len() != outcomes || r.iter().sum::<u64>() == 0)
        {
            return Err(Error::invalid(format!(
                "setting {s} is incomplete or has no shots"
            )));
        }
        Ok(Self { num_qubits, counts })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }
}

/// Eigenvectors of the Pauli settings as the columns of a
/// `2^n × (3^n·2^n)` matrix, setting major.
fn pauli_kets(num_qubits: usize) -> ComplexMatrix {
    let single = pauli_eigenstates();
    // basis 0 = X uses |±⟩, 1 = Y uses |±i⟩, 2 = Z uses |0⟩, |1⟩
    let eigen = |basis: usize, bit: usize| -> &PureState {
        match basis {
            0 => &single[2 + bit],
            1 => &single[4 + bit],
            _ => &single[bit],
        }
    };
    let settings = 3usize.pow(num_qubits as u32);
    let outcomes = 1usize << num_qubits;
    let mut kets = ComplexMatrix::zeros(outcomes, settings * outcomes);
    for s in 0..settings {
        for o in 0..outcomes {
            let mut v = ComplexVector::from_element(1, ONE);
            for k in 0..num_qubits {
                let basis = s / 3usize.pow((num_qubits - 1 - k) as u32) % 3;
                let bit = (o >> (num_qubits - 1 - k)) & 1;
                v = v.kronecker(eigen(basis, bit).amplitudes());
            }
            kets.set_column(s * outcomes + o, &v);
        }
    }
    kets
}

/// Born probabilities of every Pauli setting, in [`PauliCounts`] layout.
pub fn pauli_probabilities(rho: &DensityMatrix) -> Vec<Vec<f64>> {
    let n = rho.num_qubits();
    let outcomes = 1usize << n;
    let kets = pauli_kets(n);
    let flat = ket_probabilities(&kets, rho.matrix());
    flat.chunks(outcomes).map(|c| c.to_vec()).collect()
}

fn ket_probabilities(kets: &ComplexMatrix, rho: &ComplexMatrix) -> Vec<f64> {
    let m = rho * kets;
    (0..kets.ncols())
        .map(|k| kets.column(k).dotc(&m.column(k)).re.max(0.0))
        .collect()
}

pub fn simulate_pauli_counts(rho: &DensityMatrix, shots: u64, seed: u64) -> Result<PauliCounts> {
    if shots == 0 {
        return Err(Error::invalid("shots must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = pauli_probabilities(rho)
        .iter()
        .map(|p| multinomial(&mut rng, shots, p))
        .collect::<Result<_>>()?;
    PauliCounts::new(rho.num_qubits(), counts)
}

/// `RρR` reconstruction from per-setting weights.
fn reconstruct_state(
    opts: MlOptions,
    num_qubits: usize,
    weights: &[Vec<f64>],
) -> Result<MlReport<DensityMatrix>> {
    let outcomes = 1usize << num_qubits;
    let settings = weights.len();
    // per-setting frequencies; each setting's projectors sum to I
    let freqs: Vec<f64> = weights
        .iter()
        .flat_map(|r| {
            let total: f64 = r.iter().sum();
            r.iter().map(move |w| w / total)
        })
        .collect();
    let kets = pauli_kets(num_qubits);
    let score = |rho: &ComplexMatrix| -> f64 {
        let p = ket_probabilities(&kets, rho);
        freqs
            .iter()
            .zip(&p)
            .filter(|(f, _)| **f > 0.0)
            .map(|(f, q)| f * q.max(PROBABILITY_FLOOR).ln())
            .sum::<f64>()
            / settings as f64
    };
    let step = |rho: &ComplexMatrix| -> Result<ComplexMatrix> {
        let p = ket_probabilities(&kets, rho);
        let mut scaled = kets.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col.scale_mut(freqs[k] / p[k].max(PROBABILITY_FLOOR) / settings as f64);
        }
        let r = scaled * kets.adjoint();
        let next = &r * rho * &r;
        let tr = next.trace().re;
        if !(tr > 0.0) {
            return Err(Error::Numerical("state update vanished".into()));
        }
        Ok(hermitian_part(&next.unscale(tr)))
    };
    let mix = |a: &ComplexMatrix, b: &ComplexMatrix, t: f64| a.scale(1.0 - t) + b.scale(t);
    let start = identity(outcomes).unscale(outcomes as f64);
    let (rho, history, iterations, converged) = ascend(opts, start, score, step, mix)?;
    Ok(MlReport {
        estimate: DensityMatrix::from_approximate(&rho)?,
        log_likelihood: history,
        iterations,
        converged,
    })
}

/// Maximum-likelihood density matrix from Pauli-setting counts.
pub fn ml_state(counts: &PauliCounts) -> Result<MlReport<DensityMatrix>> {
    let weights: Vec<Vec<f64>> = counts
        .counts()
        .iter()
        .map(|r| r.iter().map(|&n| n as f64).collect())
        .collect();
    reconstruct_state(MlOptions::default(), counts.num_qubits(), &weights)
}

/// Same as [`ml_state`] with exact probabilities in place of counts.
pub fn ml_state_exact(
    num_qubits: usize,
    probabilities: &[Vec<f64>],
    opts: MlOptions,
) -> Result<MlReport<DensityMatrix>> {
    if num_qubits == 0 || num_qubits > tolerances::MAX_QUBITS {
        return Err(Error::invalid(format!("{num_qubits} qubits not supported")));
    }
    let settings = 3usize.pow(num_qubits as u32);
    let outcomes = 1usize << num_qubits;
    if probabilities.len() != settings || probabilities.iter().any(|r| r.len() != outcomes) {
        return Err(Error::invalid(
            "all Pauli settings with all outcomes are required",
        ));
    }
    reconstruct_state(opts, num_qubits, probabilities)
}

fn check_ejm_shape(povm: &Povm) -> Result<()> {
    if povm.len() != 4 || povm.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: if povm.len() != 4 {
                povm.len()
            } else {
                povm.dim()
            },
        });
    }
    Ok(())
}

/// `⟨ψ_b|E_b|ψ_b⟩` for each outcome.
pub fn element_fidelities(povm: &Povm, basis: &EjmBasis) -> Result<[f64; 4]> {
    check_ejm_shape(povm)?;
    Ok(std::array::from_fn(|b| {
        let v = basis.states()[b].amplitudes();
        (v.adjoint() * &povm.elements()[b] * v)[(0, 0)]
            .re
            .clamp(0.0, 1.0)
    }))
}

/// `(¼ Σ_b √⟨ψ_b|E_b|ψ_b⟩)²`.
pub fn measurement_fidelity(povm: &Povm, basis: &EjmBasis) -> Result<f64> {
    let f = element_fidelities(povm, basis)?;
    let mean = f.iter().map(|v| v.sqrt()).sum::<f64>() / 4.0;
    Ok(mean * mean)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndependenceMetrics {
    /// Fidelity of `ρ` with `ρ_AB1 ⊗ ρ_B2C`.
    pub product_fidelity: f64,
    /// `S(ρ ‖ ρ_AB1 ⊗ ρ_B2C)` in bits.
    pub mutual_information_bits: f64,
}

/// How far a state on `(A, B1, B2, C)` is from two independent sources.
pub fn independence_metrics(rho: &DensityMatrix) -> Result<IndependenceMetrics> {
    if rho.num_qubits() != 4 {
        return Err(Error::invalid(format!(
            "independence needs a 4-qubit state, got {} qubits",
            rho.num_qubits()
        )));
    }
    let (left, right) = split_marginals(rho, 2)?;
    Ok(IndependenceMetrics {
        product_fidelity: fidelity(rho, &left.tensor(&right)?)?,
        mutual_information_bits: mutual_information(rho, 2)?,
    })
}

/// The two printed detector reconstructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureAngle {
    Theta0,
    Theta45,
}

impl FixtureAngle {
    pub const ALL: [FixtureAngle; 2] = [FixtureAngle::Theta0, FixtureAngle::Theta45];

    pub fn tag(self) -> &'static str {
        match self {
            FixtureAngle::Theta0 => "theta0",
            FixtureAngle::Theta45 => "theta45",
        }
    }

    pub fn theta(self) -> f64 {
        match self {
            FixtureAngle::Theta0 => 0.0,
            FixtureAngle::Theta45 => std::f64::consts::FRAC_PI_4,
        }
    }
}

/// Directory of the shipped fixture matrices.
pub fn fixture_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures"))
}

/// Reads `E1_<tag>.txt` … `E4_<tag>.txt` from `dir`. The printed matrices
/// are rounded, so they are symmetrized and checked against a loose
/// tolerance.
pub fn load_fixture_povm(dir: &Path, angle: FixtureAngle) -> Result<Povm> {
    let elements = (1..=4)
        .map(|k| {
            let path = dir.join(format!("E{k}_{}.txt", angle.tag()));
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            Ok(hermitian_part(&parse_matrix(&text)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Povm::with_tolerance(
        elements,
        crate::ejm::outcome_labels(),
        tolerances::FIXTURE_POVM,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ejm::{ejm_povm, PhaseErrors};
    use crate::qmath::pure_fidelity;

    const TIGHT: MlOptions = MlOptions {
        stop: 1e-16,
        max_iterations: 100_000,
    };

    #[test]
    fn standard_inputs_are_complete() {
        let inputs = TomoInputSet::standard();
        assert_eq!(inputs.len(), 36);
        assert_eq!(inputs.rank(), 16);
        let z_only = TomoInputSet::new(inputs.states()[..2].to_vec()).unwrap();
        assert!(!z_only.is_complete());
    }

    #[test]
    fn ideal_ejm_on_computational_state_is_uniform() {
        let povm = EjmBasis::new(0.0).unwrap().projective_povm();
        let p = povm
            .probabilities(&PureState::basis(2, 0).unwrap().density())
            .unwrap();
        assert!(p.iter().all(|v| (v - 0.25).abs() < 1e-12));
    }

    #[test]
    fn simulated_counts_reproducible_and_validated() {
        let povm = EjmBasis::new(0.3).unwrap().projective_povm();
        let inputs = TomoInputSet::standard();
        let a = simulate_tomo_counts(&povm, &inputs, 500, 4).unwrap();
        assert_eq!(a, simulate_tomo_counts(&povm, &inputs, 500, 4).unwrap());
        assert!(simulate_tomo_counts(&povm, &inputs, 0, 4).is_err());
        assert_eq!(CountRecord::from_csv(&a.to_csv()).unwrap(), a);
    }

    #[test]
    fn count_record_rejects_uneven_shots() {
        assert!(
            CountRecord::new(vec!["a".into(), "b".into()], vec![vec![1, 2], vec![2, 2]]).is_err()
        );
    }

    #[test]
    fn exact_probabilities_recover_noisy_povm() {
        // full-rank truth keeps the fixed-point iteration well conditioned
        let ideal = ejm_povm(
            0.7,
            &PhaseErrors::new([0.05, 0.0, -0.1, 0.02, 0.03]).unwrap(),
        )
        .unwrap();
        let elements: Vec<_> = ideal
            .elements()
            .iter()
            .map(|e| e.scale(0.9) + identity(4).scale(0.025))
            .collect();
        let truth = Povm::new(elements, ideal.labels().to_vec()).unwrap();
        let inputs = TomoInputSet::standard();
        let probs: Vec<Vec<f64>> = inputs
            .states()
            .iter()
            .map(|s| truth.probabilities(&s.density()).unwrap())
            .collect();
        let report = ml_povm_exact(&probs, &inputs, truth.labels().to_vec(), TIGHT).unwrap();
        assert!(report.monotone());
        for (e, t) in report.estimate.elements().iter().zip(truth.elements()) {
            assert!((e - t).camax() < 1e-6, "{}", (e - t).camax());
        }
    }

    #[test]
    fn incomplete_inputs_rejected() {
        let inputs = TomoInputSet::new(TomoInputSet::standard().states()[..10].to_vec()).unwrap();
        let record =
            CountRecord::new(crate::ejm::outcome_labels(), vec![vec![1, 1, 1, 1]; 10]).unwrap();
        assert!(ml_povm(&record, &inputs).is_err());
    }

    #[test]
    fn state_tomography_exact_recovery() {
        let truth = DensityMatrix::isotropic(0.8).unwrap();
        let report = ml_state_exact(2, &pauli_probabilities(&truth), TIGHT).unwrap();
        assert!(report.monotone());
        assert!((report.estimate.matrix() - truth.matrix()).camax() < 1e-6);
    }

    #[test]
    fn state_tomography_round_trip_two_qubits() {
        let truth = PureState::phi_plus();
        let counts = simulate_pauli_counts(&truth.density(), 10_000, 8).unwrap();
        let report = ml_state(&counts).unwrap();
        assert!(report.monotone());
        assert!(pure_fidelity(&truth, &report.estimate).unwrap() > 0.995);
    }

    #[test]
    fn detector_round_trip() {
        let basis = EjmBasis::new(std::f64::consts::FRAC_PI_4).unwrap();
        let inputs = TomoInputSet::standard();
        let counts = simulate_tomo_counts(&basis.projective_povm(), &inputs, 100_000, 0).unwrap();
        let report = ml_povm(&counts, &inputs).unwrap();
        assert!(report.monotone());
        let f = measurement_fidelity(&report.estimate, &basis).unwrap();
        assert!(
            f > 0.999,
            "{f} after {} iterations, converged {}",
            report.iterations,
            report.converged
        );
    }

    #[test]
    fn four_qubit_round_trip() {
        let phi = PureState::phi_plus();
        let truth = phi.tensor(&phi).unwrap();
        let counts = simulate_pauli_counts(&truth.density(), 10_000, 2).unwrap();
        let report = ml_state(&counts).unwrap();
        assert!(report.monotone());
        let f = pure_fidelity(&truth, &report.estimate).unwrap();
        assert!(f > 0.995, "{f} after {} iterations", report.iterations);
    }

    #[test]
    fn noisy_input_fidelity() {
        // two isotropic pairs: fidelity ((1 + 3V)/4)² with the ideal input
        let v = 0.984;
        let iso = DensityMatrix::isotropic(v).unwrap();
        let phi = PureState::phi_plus();
        let target = phi.tensor(&phi).unwrap();
        let counts = simulate_pauli_counts(&iso.tensor(&iso).unwrap(), 100_000, 5).unwrap();
        let report = ml_state(&counts).unwrap();
        let f = pure_fidelity(&target, &report.estimate).unwrap();
        let expected = ((1.0 + 3.0 * v) / 4.0_f64).powi(2);
        assert!((f - expected).abs() < 0.003, "{f} vs {expected}");
        // per-pair visibility needed for an input fidelity of 0.99
        let iso = DensityMatrix::isotropic(0.99331).unwrap();
        let f = pure_fidelity(&target, &iso.tensor(&iso).unwrap()).unwrap();
        assert!((f - 0.99).abs() < 1e-4);
    }

    #[test]
    fn incomplete_pauli_settings_rejected() {
        assert!(PauliCounts::new(2, vec![vec![1, 0, 0, 0]; 8]).is_err());
        assert!(ml_state_exact(2, &[vec![0.25; 4]], MlOptions::default()).is_err());
    }

    #[test]
    fn fidelity_of_ideal_povm_is_one() {
        let basis = EjmBasis::new(1.1).unwrap();
        let f = measurement_fidelity(&basis.projective_povm(), &basis).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        let other = EjmBasis::new(0.2).unwrap();
        assert!(measurement_fidelity(&other.projective_povm(), &basis).unwrap() < 1.0);
    }

    #[test]
    fn fixture_element_fidelities() {
        let expected = [
            (FixtureAngle::Theta0, [0.988, 0.978, 0.988, 0.985], 0.985),
            (FixtureAngle::Theta45, [0.974, 0.964, 0.978, 0.984], 0.975),
        ];
        for (angle, elements, average) in expected {
            let povm = load_fixture_povm(fixture_dir(), angle).unwrap();
            let basis = EjmBasis::new(angle.theta()).unwrap();
            let f = element_fidelities(&povm, &basis).unwrap();
            for (got, want) in f.iter().zip(elements) {
                assert!((got - want).abs() < 0.002, "{got} vs {want}");
            }
            assert!((measurement_fidelity(&povm, &basis).unwrap() - average).abs() < 0.002);
        }
    }

    #[test]
    fn missing_fixture_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_fixture_povm(dir.path(), FixtureAngle::Theta0),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn independence_of_product_and_entangled_states() {
        let iso = DensityMatrix::isotropic(0.984).unwrap();
        let m = independence_metrics(&iso.tensor(&iso).unwrap()).unwrap();
        assert!(m.mutual_information_bits.abs() < 1e-9);
        assert!((m.product_fidelity - 1.0).abs() < 1e-9);
        // |φ+⟩ on (B1, B2) with A and C in |0⟩ is not a product across the cut
        let zero = PureState::basis(1, 0).unwrap();
        let psi = zero
            .tensor(&PureState::phi_plus())
            .unwrap()
            .tensor(&zero)
            .unwrap();
        let m = independence_metrics(&psi.density()).unwrap();
        assert!((m.mutual_information_bits - 2.0).abs() < 1e-9);
        assert!(independence_metrics(&iso).is_err());
    }
}
