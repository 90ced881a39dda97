//! The Alice-Bob-Charlie entanglement-swapping protocol: input states,
//! local measurement settings, joint outcome tables, correlators and count
//! sampling.
//!
//! Qubit wires are ordered `(A, B1, B2, C)`. Bob's POVM acts on `(B1, B2)`.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::ejm::{ejm_povm, EjmOutcome, PhaseErrors};
use crate::error::{Error, Result};
use crate::qmath::{
    identity, kron, pauli_x, pauli_y, pauli_z, sqrt_psd, trace_of_product, ComplexMatrix,
    DensityMatrix, Povm, ZERO,
};
use crate::tolerances;

/// Number of `(x, z)` setting pairs.
pub const SETTINGS: usize = 9;
/// Number of `(a, b, c)` events per setting.
pub const EVENTS: usize = 16;
/// Length of a flattened joint table.
pub const TABLE_LEN: usize = SETTINGS * EVENTS;

/// Dichotomic outcomes in storage order.
pub const SIGNS: [i8; 2] = [1, -1];

fn sign_index(s: i8) -> Result<usize> {
    match s {
        1 => Ok(0),
        -1 => Ok(1),
        _ => Err(Error::invalid(format!("outcome {s} is not ±1"))),
    }
}

fn check_input(name: &str, v: usize) -> Result<()> {
    if !(1..=3).contains(&v) {
        return Err(Error::invalid(format!("{name} = {v} not in 1..=3")));
    }
    Ok(())
}

/// Flat index of `(x, z, a, b, c)` with `x, z ∈ 1..=3`, `a, c ∈ {±1}` and
/// `b` an outcome index in `0..4`.
pub fn table_index(x: usize, z: usize, a: i8, b: usize, c: i8) -> Result<usize> {
    check_input("x", x)?;
    check_input("z", z)?;
    if b >= 4 {
        return Err(Error::invalid(format!("outcome index {b} not in 0..4")));
    }
    let (ai, ci) = (sign_index(a)?, sign_index(c)?);
    Ok(((x - 1) * 3 + (z - 1)) * EVENTS + (ai * 4 + b) * 2 + ci)
}

/// Inverse of [`table_index`].
pub fn table_event(index: usize) -> (usize, usize, i8, usize, i8) {
    let setting = index / EVENTS;
    let e = index % EVENTS;
    (
        setting / 3 + 1,
        setting % 3 + 1,
        SIGNS[e / 8],
        (e / 2) % 4,
        SIGNS[e % 2],
    )
}

/// Two isotropic Bell pairs on `(A, B1)` and `(B2, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputState {
    rho: DensityMatrix,
    visibilities: Option<(f64, f64)>,
}

impl InputState {
    /// Arbitrary four-qubit state on `(A, B1, B2, C)`.
    pub fn from_density(rho: DensityMatrix) -> Result<Self> {
        if rho.num_qubits() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 16,
                actual: rho.dim(),
            });
        }
        Ok(Self {
            rho,
            visibilities: None,
        })
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    /// `(V1, V2)` when built by [`prepare_input`].
    pub fn visibilities(&self) -> Option<(f64, f64)> {
        self.visibilities
    }
}

/// `ρ1 ⊗ ρ2` with `ρi = Vi |φ+⟩⟨φ+| + (1 − Vi) I/4`.
pub fn prepare_input(v1: f64, v2: f64) -> Result<InputState> {
    let rho = DensityMatrix::isotropic(v1)?.tensor(&DensityMatrix::isotropic(v2)?)?;
    Ok(InputState {
        rho,
        visibilities: Some((v1, v2)),
    })
}

/// Observables for Alice and Charlie, indexed by input `1..=3`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSettings {
    observables: [ComplexMatrix; 3],
}

impl MeasurementSettings {
    /// `−σX`, `σY`, `−σZ`.
    pub fn standard() -> Self {
        Self {
            observables: [-pauli_x(), pauli_y(), -pauli_z()],
        }
    }

    /// Custom dichotomic single-qubit observables.
    pub fn new(observables: [ComplexMatrix; 3]) -> Result<Self> {
        for (k, o) in observables.iter().enumerate() {
            if o.nrows() != 2 || o.ncols() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    actual: o.nrows(),
                });
            }
            let herm = (o - o.adjoint()).camax();
            let invol = (o * o - identity(2)).camax();
            if herm > tolerances::HERMITIAN || invol > tolerances::HERMITIAN {
                return Err(Error::Invariant(format!(
                    "observable {} is not a Hermitian involution",
                    k + 1
                )));
            }
        }
        Ok(Self { observables })
    }

    pub fn observable(&self, input: usize) -> Result<&ComplexMatrix> {
        check_input("input", input)?;
        Ok(&self.observables[input - 1])
    }

    /// Projector onto the `outcome` eigenspace, `(I + outcome·O)/2`.
    pub fn projector(&self, input: usize, outcome: i8) -> Result<ComplexMatrix> {
        sign_index(outcome)?;
        let o = self.observable(input)?;
        Ok((identity(2) + o.scale(outcome as f64)).scale(0.5))
    }
}

/// Joint distribution `p(a, b, c | x, z)` stored flat in [`table_index`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorTable {
    p: Vec<f64>,
}

impl CorrelatorTable {
    /// Validates nonnegativity and per-setting normalization. Entries above
    /// `−1e-12` are clamped to zero.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() != TABLE_LEN {
            return Err(Error::DimensionMismatch {
                expected: TABLE_LEN,
                actual: p.len(),
            });
        }
        let mut p = p;
        for (k, v) in p.iter_mut().enumerate() {
            if !v.is_finite() || *v < -tolerances::MIN_PROBABILITY {
                return Err(Error::InconsistentTable(format!(
                    "entry {k} has probability {v}"
                )));
            }
            *v = v.max(0.0);
        }
        for s in 0..SETTINGS {
            let total: f64 = p[s * EVENTS..(s + 1) * EVENTS].iter().sum();
            if (total - 1.0).abs() > tolerances::NORMALIZATION {
                return Err(Error::InconsistentTable(format!(
                    "setting (x={}, z={}) sums to {total}",
                    s / 3 + 1,
                    s % 3 + 1
                )));
            }
        }
        Ok(Self { p })
    }

    /// Skips validation; for perturbed tables inside numerical derivatives.
    pub(crate) fn unchecked(p: Vec<f64>) -> Self {
        debug_assert_eq!(p.len(), TABLE_LEN);
        Self { p }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn get(&self, x: usize, z: usize, a: i8, b: usize, c: i8) -> Result<f64> {
        Ok(self.p[table_index(x, z, a, b, c)?])
    }

    /// Bob's marginal pooled over all settings.
    pub fn bob_marginal(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (k, v) in self.p.iter().enumerate() {
            out[table_event(k).3] += v / SETTINGS as f64;
        }
        out
    }

    /// Largest change of Alice's marginal over `z`, or Charlie's over `x`.
    pub fn signaling_gap(&self) -> f64 {
        let mut alice = [[0.0; 2]; 9];
        let mut charlie = [[0.0; 2]; 9];
        for (k, v) in self.p.iter().enumerate() {
            let (x, z, a, _, c) = table_event(k);
            alice[(x - 1) * 3 + (z - 1)][sign_index(a).unwrap_or(0)] += v;
            charlie[(z - 1) * 3 + (x - 1)][sign_index(c).unwrap_or(0)] += v;
        }
        let mut gap: f64 = 0.0;
        for fixed in 0..3 {
            for other in 1..3 {
                for side in [&alice, &charlie] {
                    gap = gap.max((side[fixed * 3][0] - side[fixed * 3 + other][0]).abs());
                }
            }
        }
        gap
    }

    /// Fails when [`signaling_gap`](Self::signaling_gap) exceeds the tolerance.
    pub fn check_no_signaling(&self) -> Result<()> {
        let gap = self.signaling_gap();
        if gap > tolerances::NO_SIGNALING {
            return Err(Error::InconsistentTable(format!("signaling gap {gap:.3e}")));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,z,a,b,c,probability\n");
        for (k, v) in self.p.iter().enumerate() {
            let (x, z, a, b, c) = table_event(k);
            let label = EjmOutcome::ALL[b].label();
            writeln!(out, "{x},{z},{a},{label},{c},{v}").expect("writing to a String");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let values = parse_event_csv(text, "probability", |s| {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad probability {s:?}")))
        })?;
        Self::new(values)
    }

    /// Linear functional `Σ w·p`.
    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.p.iter().zip(weights).map(|(p, w)| p * w).sum()
    }
}

fn parse_event_csv<T: Default + Clone>(
    text: &str,
    value_column: &str,
    parse: impl Fn(&str) -> Result<T>,
) -> Result<Vec<T>> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty table".into()))?;
    let expected = format!("x,z,a,b,c,{value_column}");
    if header.replace(' ', "") != expected {
        return Err(Error::Parse(format!(
            "header {header:?}, expected {expected:?}"
        )));
    }
    let mut values = vec![T::default(); TABLE_LEN];
    let mut seen = [false; TABLE_LEN];
    for line in lines {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(Error::Parse(format!("expected 6 fields in {line:?}")));
        }
        let num = |s: &str| {
            s.parse::<i64>()
                .map_err(|_| Error::Parse(format!("bad integer {s:?} in {line:?}")))
        };
        let b: EjmOutcome = f[3].parse()?;
        let idx = table_index(
            num(f[0])? as usize,
            num(f[1])? as usize,
            num(f[2])? as i8,
            b.index(),
            num(f[4])? as i8,
        )
        .map_err(|e| Error::Parse(e.to_string()))?;
        if seen[idx] {
            return Err(Error::Parse(format!("duplicate row {line:?}")));
        }
        seen[idx] = true;
        values[idx] = parse(f[5])?;
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(Error::Parse(format!(
            "missing row for event {:?}",
            table_event(k)
        )));
    }
    Ok(values)
}

/// `p(a,b,c|x,z) = Tr[ρ (Π_a^x ⊗ E_b ⊗ Π_c^z)]`.
pub fn run_protocol(
    input: &InputState,
    povm: &Povm,
    settings: &MeasurementSettings,
) -> Result<CorrelatorTable> {
    BobOperators::new(input, settings)?.table(povm)
}

/// Bob's unnormalized conditional states `Tr_{A,C}[(Π_a^x ⊗ I ⊗ Π_c^z) ρ]`
/// for every `(x, z, a, c)`. The table of any POVM follows from them.
#[derive(Debug, Clone)]
pub struct BobOperators {
    ops: Vec<ComplexMatrix>,
}

impl BobOperators {
    pub fn new(input: &InputState, settings: &MeasurementSettings) -> Result<Self> {
        let rho = input.rho.matrix();
        let mut ops = Vec::with_capacity(SETTINGS * 4);
        for x in 1..=3 {
            for z in 1..=3 {
                for a in SIGNS {
                    let pa = settings.projector(x, a)?;
                    for c in SIGNS {
                        ops.push(bob_operator(rho, &pa, &settings.projector(z, c)?));
                    }
                }
            }
        }
        Ok(Self { ops })
    }

    pub fn table(&self, povm: &Povm) -> Result<CorrelatorTable> {
        if povm.dim() != 4 || povm.len() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                actual: povm.dim(),
            });
        }
        let mut p = vec![0.0; TABLE_LEN];
        let mut ops = self.ops.iter();
        for x in 1..=3 {
            for z in 1..=3 {
                for a in SIGNS {
                    for c in SIGNS {
                        let sigma = ops.next().expect("36 operators");
                        for (b, e) in povm.elements().iter().enumerate() {
                            p[table_index(x, z, a, b, c)?] = trace_of_product(sigma, e).re;
                        }
                    }
                }
            }
        }
        CorrelatorTable::new(p)
    }
}

/// `Tr_{A,C}[(Π_A ⊗ I ⊗ Π_C) ρ]` on `(B1, B2)`.
fn bob_operator(rho: &ComplexMatrix, pa: &ComplexMatrix, pc: &ComplexMatrix) -> ComplexMatrix {
    let full = |a: usize, bb: usize, c: usize| (a << 3) | (bb << 1) | c;
    let mut out = ComplexMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = ZERO;
            for a1 in 0..2 {
                for a2 in 0..2 {
                    let wa = pa[(a2, a1)];
                    if wa == ZERO {
                        continue;
                    }
                    for c1 in 0..2 {
                        for c2 in 0..2 {
                            acc += wa * pc[(c2, c1)] * rho[(full(a1, i, c1), full(a2, j, c2))];
                        }
                    }
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// The exact table of the noiseless protocol at `theta`.
pub fn ideal_table(theta: f64) -> Result<CorrelatorTable> {
    run_protocol(
        &prepare_input(1.0, 1.0)?,
        &ejm_povm(theta, &PhaseErrors::zero())?,
        &MeasurementSettings::standard(),
    )
}

/// Which parties enter a correlator: Alice's input, Bob's bit, Charlie's input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CorrSpec {
    pub x: Option<usize>,
    pub y: Option<usize>,
    pub z: Option<usize>,
}

impl CorrSpec {
    pub fn new(x: Option<usize>, y: Option<usize>, z: Option<usize>) -> Self {
        Self { x, y, z }
    }

    pub fn a(x: usize) -> Self {
        Self::new(Some(x), None, None)
    }

    pub fn b(y: usize) -> Self {
        Self::new(None, Some(y), None)
    }

    pub fn c(z: usize) -> Self {
        Self::new(None, None, Some(z))
    }

    pub fn ab(x: usize, y: usize) -> Self {
        Self::new(Some(x), Some(y), None)
    }

    pub fn bc(y: usize, z: usize) -> Self {
        Self::new(None, Some(y), Some(z))
    }

    pub fn ac(x: usize, z: usize) -> Self {
        Self::new(Some(x), None, Some(z))
    }

    pub fn abc(x: usize, y: usize, z: usize) -> Self {
        Self::new(Some(x), Some(y), Some(z))
    }

    /// Number of parties involved.
    pub fn order(&self) -> usize {
        [self.x, self.y, self.z]
            .iter()
            .filter(|v| v.is_some())
            .count()
    }

    /// Weights `w` with `correlator = Σ w·p`. Unused inputs are averaged
    /// uniformly.
    pub fn weights(&self) -> Result<Vec<f64>> {
        if self.order() == 0 {
            return Err(Error::invalid("correlator names no party"));
        }
        for (name, v) in [("x", self.x), ("y", self.y), ("z", self.z)] {
            if let Some(v) = v {
                check_input(name, v)?;
            }
        }
        let nx = if self.x.is_some() { 1.0 } else { 3.0 };
        let nz = if self.z.is_some() { 1.0 } else { 3.0 };
        let mut w = vec![0.0; TABLE_LEN];
        for (k, wk) in w.iter_mut().enumerate() {
            let (x, z, a, b, c) = table_event(k);
            if self.x.is_some_and(|v| v != x) || self.z.is_some_and(|v| v != z) {
                continue;
            }
            let mut value = 1.0 / (nx * nz);
            if self.x.is_some() {
                value *= a as f64;
            }
            if let Some(y) = self.y {
                value *= EjmOutcome::ALL[b].bit(y)?;
            }
            if self.z.is_some() {
                value *= c as f64;
            }
            *wk = value;
        }
        Ok(w)
    }

    pub fn label(&self) -> String {
        let mut s = String::new();
        if let Some(x) = self.x {
            write!(s, "A{x}").expect("writing to a String");
        }
        if let Some(y) = self.y {
            write!(s, "B^{y}").expect("writing to a String");
        }
        if let Some(z) = self.z {
            write!(s, "C{z}").expect("writing to a String");
        }
        s
    }
}

/// `⟨A_x B^y C_z⟩` and its sub-products.
pub fn correlator(table: &CorrelatorTable, spec: CorrSpec) -> Result<f64> {
    Ok(table.dot(&spec.weights()?))
}

/// Conditional state of `(A, C)` after Bob obtains `outcome`, and its
/// probability.
pub fn post_measurement_state(
    input: &InputState,
    povm: &Povm,
    outcome: usize,
) -> Result<(DensityMatrix, f64)> {
    let e = povm
        .elements()
        .get(outcome)
        .ok_or_else(|| Error::invalid(format!("outcome {outcome} out of range")))?;
    if e.nrows() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: e.nrows(),
        });
    }
    let k = kron(&kron(&identity(2), &sqrt_psd(e))?, &identity(2))?;
    let post = &k * input.rho.matrix() * k.adjoint();
    let reduced = crate::qmath::partial_trace_matrix(&post, 4, &[0, 3])?;
    let prob = reduced.trace().re;
    if prob < tolerances::MIN_PROBABILITY {
        return Err(Error::ZeroProbability(prob));
    }
    Ok((
        DensityMatrix::from_approximate(&reduced.unscale(prob))?,
        prob,
    ))
}

/// Counts `n(a,b,c|x,z)` in [`table_index`] order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    counts: Vec<u64>,
}

impl CountTable {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() != TABLE_LEN {
            return Err(Error::DimensionMismatch {
                expected: TABLE_LEN,
                actual: counts.len(),
            });
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total counts for each of the nine settings.
    pub fn shots(&self) -> [u64; SETTINGS] {
        let mut out = [0; SETTINGS];
        for (s, o) in out.iter_mut().enumerate() {
            *o = self.counts[s * EVENTS..(s + 1) * EVENTS].iter().sum();
        }
        out
    }

    /// Relative frequencies per setting.
    pub fn frequencies(&self) -> Result<CorrelatorTable> {
        let shots = self.shots();
        if let Some(s) = shots.iter().position(|&n| n == 0) {
            return Err(Error::InconsistentTable(format!(
                "setting (x={}, z={}) has no counts",
                s / 3 + 1,
                s % 3 + 1
            )));
        }
        let p = self
            .counts
            .iter()
            .enumerate()
            .map(|(k, &n)| n as f64 / shots[k / EVENTS] as f64)
            .collect();
        CorrelatorTable::new(p)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,z,a,b,c,count\n");
        for (k, n) in self.counts.iter().enumerate() {
            let (x, z, a, b, c) = table_event(k);
            let label = EjmOutcome::ALL[b].label();
            writeln!(out, "{x},{z},{a},{label},{c},{n}").expect("writing to a String");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let counts = parse_event_csv(text, "count", |s| {
            s.parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad count {s:?}")))
        })?;
        Self::new(counts)
    }
}

/// One multinomial draw of `shots` trials over `probs`, via conditional
/// binomials.
pub fn multinomial(rng: &mut ChaCha8Rng, shots: u64, probs: &[f64]) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(probs.len());
    let mut left = shots;
    let mut mass = 1.0;
    for (k, &p) in probs.iter().enumerate() {
        if k + 1 == probs.len() {
            out.push(left);
            break;
        }
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let n = if left == 0 || q == 0.0 {
            0
        } else {
            Binomial::new(left, q)
                .map_err(|e| Error::Numerical(e.to_string()))?
                .sample(rng)
        };
        out.push(n);
        left -= n;
        mass -= p;
    }
    Ok(out)
}

/// Per-setting multinomial counts, deterministic in `seed`.
pub fn sample_counts(
    table: &CorrelatorTable,
    shots_per_setting: u64,
    seed: u64,
) -> Result<CountTable> {
    if shots_per_setting == 0 {
        return Err(Error::invalid("shots must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = Vec::with_capacity(TABLE_LEN);
    for s in 0..SETTINGS {
        let probs = &table.p[s * EVENTS..(s + 1) * EVENTS];
        counts.extend(multinomial(&mut rng, shots_per_setting, probs)?);
    }
    CountTable::new(counts)
}
