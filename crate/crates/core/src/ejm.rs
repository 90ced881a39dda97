//! Elegant Joint Measurement bases, their gate-circuit realization with
//! phase-error injection, and the resulting POVMs.
//!
//! The two measured qubits are ordered `(s, p)`: qubit 0 is the control
//! (spatial) qubit and qubit 1 the target (polarization) qubit of the
//! circuit. Basis amplitudes use the same ordering.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::qmath::{
    bloch_vector, c, format_matrix, identity, kron, phase, ComplexMatrix, DensityMatrix, Povm,
    PureState, ONE, ZERO,
};

/// One of the four admissible outcomes `(b¹, b², b³)` with `b¹b²b³ = +1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EjmOutcome {
    bits: [i8; 3],
}

impl EjmOutcome {
    /// All outcomes in canonical order `+++`, `+--`, `-+-`, `--+`.
    pub const ALL: [EjmOutcome; 4] = [
        EjmOutcome { bits: [1, 1, 1] },
        EjmOutcome { bits: [1, -1, -1] },
        EjmOutcome { bits: [-1, 1, -1] },
        EjmOutcome { bits: [-1, -1, 1] },
    ];

    pub fn new(bits: [i8; 3]) -> Result<Self> {
        if bits.iter().any(|b| b.abs() != 1) || bits.iter().product::<i8>() != 1 {
            return Err(Error::invalid(format!(
                "outcome bits {bits:?} must be ±1 with product +1"
            )));
        }
        Ok(Self { bits })
    }

    pub fn from_index(index: usize) -> Result<Self> {
        Self::ALL
            .get(index)
            .copied()
            .ok_or_else(|| Error::invalid(format!("outcome index {index} out of range")))
    }

    /// Position in [`EjmOutcome::ALL`].
    pub fn index(self) -> usize {
        Self::ALL
            .iter()
            .position(|o| *o == self)
            .expect("outcome validated on construction")
    }

    pub fn bits(self) -> [i8; 3] {
        self.bits
    }

    /// `b^y` for `y ∈ {1, 2, 3}`.
    pub fn bit(self, y: usize) -> Result<f64> {
        match y {
            1..=3 => Ok(self.bits[y - 1] as f64),
            _ => Err(Error::invalid(format!("bit index {y} not in 1..=3"))),
        }
    }

    pub fn label(self) -> &'static str {
        ["+++", "+--", "-+-", "--+"][self.index()]
    }

    /// Computational basis state the zero-error circuit maps this outcome's
    /// basis state to.
    pub fn detector(self) -> usize {
        OUTCOME_DETECTORS[self.index()]
    }
}

impl fmt::Display for EjmOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for EjmOutcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|o| o.label() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown outcome label {s:?}")))
    }
}

/// Detector index `i(b)` for each outcome in canonical order. The zero-error
/// circuit sends `|ψ_b⟩` to `|i(b)⟩` for every θ.
pub const OUTCOME_DETECTORS: [usize; 4] = [2, 0, 1, 3];

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::invalid(format!("theta {theta} outside [0, pi/2]")));
    }
    Ok(())
}

/// The four iso-entangled basis states for a given θ.
#[derive(Debug, Clone, PartialEq)]
pub struct EjmBasis {
    theta: f64,
    states: [PureState; 4],
}

impl EjmBasis {
    pub fn new(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        let r_plus = (ONE + phase(theta)) * FRAC_1_SQRT_2;
        let r_minus = (ONE - phase(theta)) * FRAC_1_SQRT_2;
        let q = FRAC_PI_4;
        let amps = [
            [phase(-q), -r_plus, -r_minus, phase(-3.0 * q)],
            [phase(q), r_minus, r_plus, phase(3.0 * q)],
            [phase(-3.0 * q), r_minus, r_plus, phase(-q)],
            [phase(3.0 * q), -r_plus, -r_minus, phase(q)],
        ];
        let states = amps.map(|a| {
            let half: Vec<_> = a.iter().map(|z| z * 0.5).collect();
            PureState::normalized(half.into()).expect("basis amplitudes have unit norm")
        });
        Ok(Self { theta, states })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn states(&self) -> &[PureState; 4] {
        &self.states
    }

    pub fn state(&self, outcome: EjmOutcome) -> &PureState {
        &self.states[outcome.index()]
    }

    /// Projective POVM onto the basis, outcomes in canonical order.
    pub fn projective_povm(&self) -> Povm {
        Povm::new(
            self.states.iter().map(PureState::projector).collect(),
            outcome_labels(),
        )
        .expect("orthonormal basis")
    }

    /// Basis states as the columns of a 4×4 matrix in the qmath text format.
    pub fn to_text(&self) -> String {
        let m = ComplexMatrix::from_fn(4, 4, |r, k| self.states[k].amplitudes()[r]);
        format_matrix(&m)
    }

    /// Entanglement entropy (bits) of one basis state.
    pub fn entanglement_entropy(&self, outcome: EjmOutcome) -> f64 {
        self.state(outcome)
            .density()
            .partial_trace(&[0])
            .expect("two-qubit state")
            .entropy()
    }
}

/// `(label, text)` for every element of `povm`.
pub fn export_povm(povm: &Povm) -> Vec<(String, String)> {
    povm.labels()
        .iter()
        .cloned()
        .zip(povm.elements().iter().map(format_matrix))
        .collect()
}

pub fn outcome_labels() -> Vec<String> {
    EjmOutcome::ALL
        .iter()
        .map(|o| o.label().to_string())
        .collect()
}

/// Phase errors `δ1..δ5` (radians) injected into the EJM circuit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseErrors {
    deltas: [f64; 5],
}

impl PhaseErrors {
    pub fn new(deltas: [f64; 5]) -> Result<Self> {
        if let Some(d) = deltas.iter().find(|d| !(d.abs() < PI)) {
            return Err(Error::invalid(format!("phase error {d} outside (-pi, pi)")));
        }
        Ok(Self { deltas })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Only the error on the final spatial `R_{π/2}` gate.
    pub fn spatial_phase(delta: f64) -> Result<Self> {
        Self::new([0.0, 0.0, 0.0, 0.0, delta])
    }

    pub fn deltas(&self) -> [f64; 5] {
        self.deltas
    }
}

/// `diag(1, e^{iφ})`.
pub fn phase_gate(phi: f64) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, phase(phi)])
}

pub fn hadamard() -> ComplexMatrix {
    let h = c(FRAC_1_SQRT_2, 0.0);
    ComplexMatrix::from_row_slice(2, 2, &[h, h, h, -h])
}

fn on_control(gate: &ComplexMatrix) -> ComplexMatrix {
    kron(gate, &identity(2)).expect("two qubits")
}

fn on_target(gate: &ComplexMatrix) -> ComplexMatrix {
    kron(&identity(2), gate).expect("two qubits")
}

/// `|0⟩⟨0| ⊗ when_zero + |1⟩⟨1| ⊗ when_one`.
fn controlled(when_zero: &ComplexMatrix, when_one: &ComplexMatrix) -> ComplexMatrix {
    let p0 = ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
    let p1 = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE]);
    kron(&p0, when_zero).expect("two qubits") + kron(&p1, when_one).expect("two qubits")
}

/// Two-qubit unitary of the EJM circuit, gates applied in order:
///
/// 1. CNOT, control `s`, target `p`
/// 2. `R_{δ1}` on `s`
/// 3. `H` on `s`
/// 4. `R_{δ2}` on `s`
/// 5. on `p`: `R_{π/2+δ3}` if `s = 0`, `R_{π-θ+δ4}` if `s = 1`
/// 6. `H` on `p`
/// 7. `R_{π/2+δ5}` on `s`
/// 8. `H` on `s`
pub fn ejm_circuit(theta: f64, errors: &PhaseErrors) -> Result<ComplexMatrix> {
    check_theta(theta)?;
    let [d1, d2, d3, d4, d5] = errors.deltas;
    let x = crate::qmath::pauli_x();
    let h = hadamard();
    let steps = [
        controlled(&identity(2), &x),
        on_control(&phase_gate(d1)),
        on_control(&h),
        on_control(&phase_gate(d2)),
        controlled(&phase_gate(FRAC_PI_2 + d3), &phase_gate(PI - theta + d4)),
        on_target(&h),
        on_control(&phase_gate(FRAC_PI_2 + d5)),
        on_control(&h),
    ];
    Ok(steps.iter().fold(identity(4), |acc, gate| gate * acc))
}

/// POVM realized by the circuit: `E_b = U† |i(b)⟩⟨i(b)| U`.
pub fn ejm_povm(theta: f64, errors: &PhaseErrors) -> Result<Povm> {
    let u = ejm_circuit(theta, errors)?;
    let elements = EjmOutcome::ALL
        .iter()
        .map(|o| {
            let row = u.row(o.detector()).into_owned();
            row.adjoint() * row
        })
        .collect();
    Povm::new(elements, outcome_labels())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Reduced state of qubit 0 (the right qubit is lost).
    Left,
    /// Reduced state of qubit 1 (the left qubit is lost).
    Right,
}

impl Side {
    /// Orientation of the reduced Bloch vectors relative to `(b¹, b², b³)`.
    pub fn orientation(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

/// Bloch vectors of the single-qubit reductions of the four basis states,
/// in canonical outcome order.
pub fn tetrahedron(basis: &EjmBasis, side: Side) -> [Vector3<f64>; 4] {
    let keep = match side {
        Side::Left => 0,
        Side::Right => 1,
    };
    basis.states.each_ref().map(|s| {
        let reduced: DensityMatrix = s.density().partial_trace(&[keep]).expect("two qubits");
        bloch_vector(&reduced).expect("one qubit")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::hermitian_eigen;
    use crate::tolerances;

    fn gram_gap(basis: &EjmBasis) -> f64 {
        let mut gap: f64 = 0.0;
        for (i, a) in basis.states().iter().enumerate() {
            for (j, b) in basis.states().iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                gap = gap.max((a.inner(b) - c(target, 0.0)).norm());
            }
        }
        gap
    }

    #[test]
    fn outcomes_are_admissible() {
        for o in EjmOutcome::ALL {
            assert_eq!(o.bits().iter().product::<i8>(), 1);
            assert_eq!(o.label().parse::<EjmOutcome>().unwrap(), o);
        }
        assert!(EjmOutcome::new([1, 1, -1]).is_err());
        assert!(EjmOutcome::ALL[0].bit(0).is_err());
        assert!(EjmOutcome::ALL[0].bit(4).is_err());
    }

    #[test]
    fn rejects_theta_outside_range() {
        assert!(EjmBasis::new(-1e-3).is_err());
        assert!(EjmBasis::new(FRAC_PI_2 + 1e-3).is_err());
        assert!(ejm_circuit(2.0, &PhaseErrors::zero()).is_err());
    }

    #[test]
    fn phase_errors_range() {
        assert!(PhaseErrors::new([0.0, 0.0, PI, 0.0, 0.0]).is_err());
        assert!(PhaseErrors::new([0.0, 0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(PhaseErrors::new([0.1, -0.2, 3.0, -3.0, 0.0]).is_ok());
    }

    #[test]
    fn basis_orthonormal_at_corners() {
        for theta in [0.0, FRAC_PI_4, FRAC_PI_2] {
            assert!(gram_gap(&EjmBasis::new(theta).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn bell_limit_is_maximally_entangled() {
        let basis = EjmBasis::new(FRAC_PI_2).unwrap();
        for o in EjmOutcome::ALL {
            assert!((basis.entanglement_entropy(o) - 1.0).abs() < 1e-10);
        }
        // Bell basis up to local unitaries: each reduction is maximally mixed
        for v in tetrahedron(&basis, Side::Left) {
            assert!(v.norm() < 1e-12);
        }
    }

    #[test]
    fn outcome_map_from_zero_error_circuit() {
        // the detector table is whatever the θ = 0 circuit produces
        let basis = EjmBasis::new(0.0).unwrap();
        let u = ejm_circuit(0.0, &PhaseErrors::zero()).unwrap();
        for o in EjmOutcome::ALL {
            let image = basis.state(o).apply(&u).unwrap();
            let hit: Vec<usize> = (0..4)
                .filter(|&i| image.amplitudes()[i].norm() > 1.0 - 1e-10)
                .collect();
            assert_eq!(hit, vec![o.detector()], "outcome {o}");
        }
    }

    #[test]
    fn circuit_maps_basis_to_detectors_at_pi_over_4() {
        let theta = FRAC_PI_4;
        let basis = EjmBasis::new(theta).unwrap();
        let u = ejm_circuit(theta, &PhaseErrors::zero()).unwrap();
        for o in EjmOutcome::ALL {
            let image = basis.state(o).apply(&u).unwrap();
            for i in 0..4 {
                let expected = if i == o.detector() { 1.0 } else { 0.0 };
                assert!((image.amplitudes()[i].norm() - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn circuit_is_unitary_with_errors() {
        let errors = PhaseErrors::new([0.3, -1.2, 2.5, -0.7, 0.9]).unwrap();
        for theta in [0.0, 0.4, FRAC_PI_2] {
            for e in [PhaseErrors::zero(), errors] {
                let u = ejm_circuit(theta, &e).unwrap();
                assert!((u.adjoint() * &u - identity(4)).camax() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_error_povm_equals_projectors() {
        for theta in [0.0, 0.3, FRAC_PI_4, 1.2, FRAC_PI_2] {
            let basis = EjmBasis::new(theta).unwrap();
            let povm = ejm_povm(theta, &PhaseErrors::zero()).unwrap();
            for (e, s) in povm.elements().iter().zip(basis.states()) {
                assert!((e - s.projector()).camax() < 1e-10);
            }
        }
    }

    #[test]
    fn noisy_povm_complete() {
        let errors = PhaseErrors::new([0.1, 0.2, -0.3, 0.4, -0.5]).unwrap();
        let povm = ejm_povm(0.5, &errors).unwrap();
        let sum = povm
            .elements()
            .iter()
            .fold(ComplexMatrix::zeros(4, 4), |acc, e| acc + e);
        assert!((sum - identity(4)).camax() < tolerances::POVM);
    }

    #[test]
    fn tetrahedron_at_theta_zero() {
        let basis = EjmBasis::new(0.0).unwrap();
        let left = tetrahedron(&basis, Side::Left);
        let right = tetrahedron(&basis, Side::Right);
        assert!((left[0] - Vector3::new(0.5, 0.5, 0.5)).norm() < 1e-12);
        assert!((right[0] + Vector3::new(0.5, 0.5, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn tetrahedron_geometry() {
        let target = (-1.0f64 / 3.0).acos();
        for theta in [0.0, 0.3, 1.0] {
            let basis = EjmBasis::new(theta).unwrap();
            let radius = 3f64.sqrt() / 2.0 * theta.cos();
            for side in [Side::Left, Side::Right] {
                let vs = tetrahedron(&basis, side);
                for (o, v) in EjmOutcome::ALL.iter().zip(&vs) {
                    assert!((v.norm() - radius).abs() < 1e-10);
                    let b = o.bits().map(f64::from);
                    let dir = Vector3::new(b[0], b[1], b[2]) * (side.orientation() / 3f64.sqrt());
                    assert!(v.normalize().angle(&dir) < 1e-8);
                }
                for i in 0..4 {
                    for j in i + 1..4 {
                        assert!((vs[i].angle(&vs[j]) - target).abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn povm_text_round_trip() {
        let povm = ejm_povm(0.4, &PhaseErrors::zero()).unwrap();
        let exported = export_povm(&povm);
        assert_eq!(exported[1].0, "+--");
        for ((_, text), e) in exported.iter().zip(povm.elements()) {
            assert!((crate::qmath::parse_matrix(text).unwrap() - e).camax() < 1e-15);
        }
        let basis = EjmBasis::new(0.4).unwrap();
        let m = crate::qmath::parse_matrix(&basis.to_text()).unwrap();
        assert!((m.adjoint() * &m - identity(4)).camax() < 1e-12);
    }

    #[test]
    fn entanglement_matches_binary_entropy() {
        let theta: f64 = 0.9;
        let basis = EjmBasis::new(theta).unwrap();
        let lambda = (1.0 + 3f64.sqrt() / 2.0 * theta.cos()) / 2.0;
        let h = -lambda * lambda.log2() - (1.0 - lambda) * (1.0 - lambda).log2();
        for o in EjmOutcome::ALL {
            let reduced = basis.state(o).density().partial_trace(&[1]).unwrap();
            let (values, _) = hermitian_eigen(reduced.matrix());
            assert!((values[1] - lambda).abs() < 1e-10);
            assert!((basis.entanglement_entropy(o) - h).abs() < 1e-10);
        }
    }
}
