//! Dense complex linear algebra and quantum-information primitives for
//! registers of one to four qubits.
//!
//! Matrix functions (square roots, logarithms) go through the Hermitian
//! eigendecomposition with eigenvalues clamped at
//! [`tolerances::EIGEN_CLAMP`](crate::tolerances::EIGEN_CLAMP).

mod text;

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::tolerances;

pub use nalgebra::Complex;
pub use text::{format_matrix, parse_matrix};

pub type Complex64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `e^{i phi}`.
pub fn phase(phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, phi)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

fn qubits_for_dim(dim: usize) -> Option<usize> {
    if dim.is_power_of_two() {
        Some(dim.trailing_zeros() as usize)
    } else {
        None
    }
}

fn check_register_dim(dim: usize) -> Result<usize> {
    let n = qubits_for_dim(dim)
        .ok_or_else(|| Error::invalid(format!("dimension {dim} is not a power of two")))?;
    if n > tolerances::MAX_QUBITS {
        return Err(Error::invalid(format!(
            "{n} qubits exceed the {}-qubit limit",
            tolerances::MAX_QUBITS
        )));
    }
    Ok(n)
}

/// Kronecker product `a ⊗ b`, with the indices of `a` most significant.
///
/// Fails when the product would act on more than four qubits.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.nrows() * b.nrows();
    let cols = a.ncols() * b.ncols();
    if rows.max(cols) > 1 << tolerances::MAX_QUBITS {
        return Err(Error::invalid(format!(
            "tensor product of dimension {rows}x{cols} exceeds the {}-qubit limit",
            tolerances::MAX_QUBITS
        )));
    }
    Ok(a.kronecker(b))
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_gap(m: &ComplexMatrix) -> f64 {
    let mut gap: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            gap = gap.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    gap
}

/// `(m + m†) / 2`.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues in ascending order
/// and the matching unit eigenvectors as columns.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(m.nrows(), order.len(), |r, k| {
        eig.eigenvectors[(r, order[k])]
    });
    (values, vectors)
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_map(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let mut scaled = vectors.clone();
    for (k, &v) in values.iter().enumerate() {
        let fv = f(v);
        scaled.column_mut(k).scale_mut(fv);
    }
    scaled * vectors.adjoint()
}

/// Square root of a positive semidefinite matrix.
pub fn sqrt_psd(m: &ComplexMatrix) -> ComplexMatrix {
    hermitian_map(m, |v| {
        if v > tolerances::EIGEN_CLAMP {
            v.sqrt()
        } else {
            0.0
        }
    })
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    hermitian_eigen(m).0[0]
}

/// Projects a Hermitian matrix onto the PSD cone by zeroing negative eigenvalues.
pub fn clamp_psd(m: &ComplexMatrix) -> ComplexMatrix {
    hermitian_map(m, |v| v.max(0.0))
}

/// A unit-norm amplitude vector over the computational basis of 1-4 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: ComplexVector,
    num_qubits: usize,
}

impl PureState {
    pub fn new(amplitudes: ComplexVector) -> Result<Self> {
        let num_qubits = check_register_dim(amplitudes.len())?;
        if num_qubits == 0 {
            return Err(Error::invalid("a state needs at least one qubit"));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Invariant("non-finite amplitude".into()));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > tolerances::STATE_NORM {
            return Err(Error::Invariant(format!("state norm {norm} is not 1")));
        }
        Ok(Self {
            amplitudes,
            num_qubits,
        })
    }

    /// Rescales `amplitudes` to unit norm before validating.
    pub fn normalized(amplitudes: ComplexVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid(
                "cannot normalize a zero or non-finite vector",
            ));
        }
        Self::new(amplitudes.unscale(norm))
    }

    pub fn from_slice(amplitudes: &[Complex64]) -> Result<Self> {
        Self::new(ComplexVector::from_column_slice(amplitudes))
    }

    /// Computational basis state `|index⟩` on `num_qubits` qubits.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::invalid(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut v = ComplexVector::zeros(dim);
        v[index] = ONE;
        Self::new(v)
    }

    /// `(|00⟩ + |11⟩)/√2`.
    pub fn phi_plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amplitudes: ComplexVector::from_column_slice(&[c(s, 0.0), ZERO, ZERO, c(s, 0.0)]),
            num_qubits: 2,
        }
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let n = self.num_qubits + other.num_qubits;
        if n > tolerances::MAX_QUBITS {
            return Err(Error::invalid(format!(
                "tensor product on {n} qubits exceeds the {}-qubit limit",
                tolerances::MAX_QUBITS
            )));
        }
        Ok(PureState {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
            num_qubits: n,
        })
    }

    /// Entrywise complex conjugate in the computational basis.
    pub fn conj(&self) -> PureState {
        PureState {
            amplitudes: self.amplitudes.map(|z| z.conj()),
            num_qubits: self.num_qubits,
        }
    }

    pub fn projector(&self) -> ComplexMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: self.projector(),
            num_qubits: self.num_qubits,
        }
    }

    pub fn apply(&self, unitary: &ComplexMatrix) -> Result<PureState> {
        if unitary.ncols() != self.dim() || unitary.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: unitary.ncols(),
            });
        }
        PureState::new(unitary * &self.amplitudes)
    }
}

/// A Hermitian, unit-trace, positive semidefinite operator on 1-4 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    num_qubits: usize,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid("density matrix must be square"));
        }
        let num_qubits = check_register_dim(matrix.nrows())?;
        if num_qubits == 0 {
            return Err(Error::invalid("a state needs at least one qubit"));
        }
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Invariant("non-finite matrix entry".into()));
        }
        let gap = hermiticity_gap(&matrix);
        if gap > tolerances::HERMITIAN {
            return Err(Error::Invariant(format!("not Hermitian (gap {gap:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tolerances::TRACE || tr.im.abs() > tolerances::TRACE {
            return Err(Error::Invariant(format!("trace {tr} is not 1")));
        }
        let lo = min_eigenvalue(&matrix);
        if lo < -tolerances::PSD {
            return Err(Error::Invariant(format!(
                "not positive semidefinite (eigenvalue {lo:.3e})"
            )));
        }
        Ok(Self { matrix, num_qubits })
    }

    /// Symmetrizes, clamps negative eigenvalues and renormalizes the trace
    /// before validating. Intended for iterative reconstructions whose
    /// output drifts by rounding.
    pub fn from_approximate(matrix: &ComplexMatrix) -> Result<Self> {
        let clamped = clamp_psd(&hermitian_part(matrix));
        let tr = clamped.trace().re;
        if !(tr > 0.0) {
            return Err(Error::Numerical("approximate state has zero trace".into()));
        }
        Self::new(hermitian_part(&clamped.unscale(tr)))
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        let dim = 1usize << num_qubits;
        check_register_dim(dim)?;
        Ok(Self {
            matrix: identity(dim).unscale(dim as f64),
            num_qubits,
        })
    }

    /// `v |φ+⟩⟨φ+| + (1 - v) I/4`.
    pub fn isotropic(visibility: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) {
            return Err(Error::invalid(format!(
                "visibility {visibility} outside [0, 1]"
            )));
        }
        let m = PureState::phi_plus().projector().scale(visibility)
            + identity(4).scale((1.0 - visibility) / 4.0);
        Ok(Self {
            matrix: m,
            num_qubits: 2,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(DensityMatrix {
            matrix: kron(&self.matrix, &other.matrix)?,
            num_qubits: self.num_qubits + other.num_qubits,
        })
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: self.matrix.map(|z| z.conj()),
            num_qubits: self.num_qubits,
        }
    }

    /// `U ρ U†`.
    pub fn evolve(&self, unitary: &ComplexMatrix) -> Result<DensityMatrix> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: unitary.nrows(),
            });
        }
        DensityMatrix::from_approximate(&(unitary * &self.matrix * unitary.adjoint()))
    }

    /// `Tr[ρ O]`, real part.
    pub fn expectation(&self, observable: &ComplexMatrix) -> Result<f64> {
        if observable.nrows() != self.dim() || observable.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: observable.nrows(),
            });
        }
        Ok(trace_of_product(&self.matrix, observable).re)
    }

    /// Reduced state on the qubits listed in `keep` (any order; the result
    /// keeps ascending qubit order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let matrix = partial_trace_matrix(&self.matrix, self.num_qubits, keep)?;
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        Ok(DensityMatrix {
            matrix: hermitian_part(&matrix),
            num_qubits: kept.len(),
        })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .filter(|&v| v > tolerances::EIGEN_CLAMP)
            .map(|v| -v * v.log2())
            .sum()
    }

    /// `Tr[ρ²]`.
    pub fn purity(&self) -> f64 {
        trace_of_product(&self.matrix, &self.matrix).re
    }
}

/// `Tr[a b]` without forming the product.
pub fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Partial trace of an arbitrary square operator on `num_qubits` qubits.
pub fn partial_trace_matrix(
    m: &ComplexMatrix,
    num_qubits: usize,
    keep: &[usize],
) -> Result<ComplexMatrix> {
    if keep.is_empty() {
        return Err(Error::invalid("partial trace needs a nonempty keep set"));
    }
    if m.nrows() != 1 << num_qubits || !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: 1 << num_qubits,
            actual: m.nrows(),
        });
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&q) = kept.iter().find(|&&q| q >= num_qubits) {
        return Err(Error::invalid(format!(
            "qubit {q} out of range for {num_qubits} qubits"
        )));
    }
    let traced: Vec<usize> = (0..num_qubits).filter(|q| !kept.contains(q)).collect();
    // bit position of qubit q inside a full index
    let shift = |q: usize| num_qubits - 1 - q;
    let scatter = |bits: usize, qubits: &[usize]| -> usize {
        let k = qubits.len();
        qubits.iter().enumerate().fold(0, |acc, (j, &q)| {
            acc | (((bits >> (k - 1 - j)) & 1) << shift(q))
        })
    };
    let dk = 1usize << kept.len();
    let dt = 1usize << traced.len();
    let mut out = ComplexMatrix::zeros(dk, dk);
    for i in 0..dk {
        let fi = scatter(i, &kept);
        for j in 0..dk {
            let fj = scatter(j, &kept);
            let mut acc = ZERO;
            for t in 0..dt {
                let ft = scatter(t, &traced);
                acc += m[(fi | ft, fj | ft)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

fn same_dim(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    Ok(())
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho, sigma)?;
    let root = sqrt_psd(&rho.matrix);
    let inner = &root * &sigma.matrix * &root;
    let (values, _) = hermitian_eigen(&inner);
    let tr: f64 = values
        .iter()
        .filter(|&&v| v > tolerances::EIGEN_CLAMP)
        .map(|v| v.sqrt())
        .sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// `⟨ψ|σ|ψ⟩`, the fidelity of a pure state with a density matrix.
pub fn pure_fidelity(psi: &PureState, sigma: &DensityMatrix) -> Result<f64> {
    if psi.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            actual: sigma.dim(),
        });
    }
    let v = psi.amplitudes();
    Ok((v.adjoint() * &sigma.matrix * v)[(0, 0)].re.clamp(0.0, 1.0))
}

/// Quantum relative entropy `Tr[ρ (log₂ρ − log₂σ)]` in bits.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho, sigma)?;
    let (sigma_values, sigma_vectors) = hermitian_eigen(&sigma.matrix);
    let mut leak = 0.0;
    let mut cross = 0.0;
    for (k, &lambda) in sigma_values.iter().enumerate() {
        let v = sigma_vectors.column(k);
        let weight = (v.adjoint() * &rho.matrix * v)[(0, 0)].re;
        if lambda > tolerances::EIGEN_CLAMP {
            cross += weight * lambda.log2();
        } else {
            leak += weight.max(0.0);
        }
    }
    if leak > tolerances::SUPPORT {
        return Err(Error::InfiniteDivergence { leak });
    }
    Ok((-rho.entropy() - cross).max(0.0))
}

/// Mutual information across the cut between the first `left_qubits`
/// qubits and the rest: `S(ρ ‖ ρ_L ⊗ ρ_R)`.
pub fn mutual_information(rho: &DensityMatrix, left_qubits: usize) -> Result<f64> {
    let (left, right) = split_marginals(rho, left_qubits)?;
    relative_entropy(rho, &left.tensor(&right)?)
}

/// Reduced states on the first `left_qubits` qubits and on the rest.
pub fn split_marginals(
    rho: &DensityMatrix,
    left_qubits: usize,
) -> Result<(DensityMatrix, DensityMatrix)> {
    let n = rho.num_qubits();
    if left_qubits == 0 || left_qubits >= n {
        return Err(Error::invalid(format!(
            "cut after {left_qubits} qubits is not a bipartition of {n} qubits"
        )));
    }
    let left: Vec<usize> = (0..left_qubits).collect();
    let right: Vec<usize> = (left_qubits..n).collect();
    Ok((rho.partial_trace(&left)?, rho.partial_trace(&right)?))
}

/// Bloch vector `(Tr ρσX, Tr ρσY, Tr ρσZ)` of a single-qubit state.
pub fn bloch_vector(rho: &DensityMatrix) -> Result<Vector3<f64>> {
    if rho.num_qubits() != 1 {
        return Err(Error::invalid(format!(
            "Bloch vector needs one qubit, got {}",
            rho.num_qubits()
        )));
    }
    Ok(Vector3::new(
        rho.expectation(&pauli_x())?,
        rho.expectation(&pauli_y())?,
        rho.expectation(&pauli_z())?,
    ))
}

/// Positive operators summing to the identity, one per labelled outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Self> {
        Self::with_tolerance(elements, labels, tolerances::POVM)
    }

    pub fn with_tolerance(
        elements: Vec<ComplexMatrix>,
        labels: Vec<String>,
        tol: f64,
    ) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::invalid("a POVM needs at least one element"));
        }
        if elements.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: elements.len(),
                actual: labels.len(),
            });
        }
        let dim = elements[0].nrows();
        check_register_dim(dim)?;
        let mut total = ComplexMatrix::zeros(dim, dim);
        for (k, e) in elements.iter().enumerate() {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: e.nrows(),
                });
            }
            let gap = hermiticity_gap(e);
            if gap > tol {
                return Err(Error::Invariant(format!(
                    "element {k} not Hermitian (gap {gap:.3e})"
                )));
            }
            let lo = min_eigenvalue(e);
            if lo < -tol {
                return Err(Error::Invariant(format!(
                    "element {k} not positive (eigenvalue {lo:.3e})"
                )));
            }
            total += e;
        }
        let gap = (total - identity(dim)).camax();
        if gap > tol {
            return Err(Error::Invariant(format!(
                "elements do not sum to identity (gap {gap:.3e})"
            )));
        }
        Ok(Self { elements, labels })
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    /// Born probabilities of every outcome on `rho`.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: rho.dim(),
            });
        }
        Ok(self
            .elements
            .iter()
            .map(|e| trace_of_product(rho.matrix(), e).re.max(0.0))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ket(bits: &[Complex64]) -> PureState {
        PureState::from_slice(bits).unwrap()
    }

    #[test]
    fn identity_tensor_identity() {
        assert_eq!(kron(&identity(2), &identity(2)).unwrap(), identity(4));
    }

    #[test]
    fn ket_tensor_ordering() {
        let zero = PureState::basis(1, 0).unwrap();
        let one = PureState::basis(1, 1).unwrap();
        let v = zero.tensor(&one).unwrap();
        assert_eq!(v.amplitudes()[1], ONE);
        assert_eq!(v.amplitudes().iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn phi_plus_squared_amplitudes() {
        let phi = PureState::phi_plus();
        let v = phi.tensor(&phi).unwrap();
        for (k, z) in v.amplitudes().iter().enumerate() {
            let expected = if [0, 3, 12, 15].contains(&k) {
                0.5
            } else {
                0.0
            };
            assert!((z - c(expected, 0.0)).norm() < 1e-15, "index {k}");
        }
    }

    #[test]
    fn tensor_rejects_five_qubits() {
        let two = PureState::phi_plus();
        let four = two.tensor(&two).unwrap();
        let one = PureState::basis(1, 0).unwrap();
        assert!(four.tensor(&one).is_err());
        assert!(kron(&four.projector(), &identity(2)).is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let phi = PureState::phi_plus().density();
        let reduced = phi.partial_trace(&[0]).unwrap();
        assert!((reduced.matrix() - identity(2).scale(0.5)).camax() < 1e-15);

        let s01 = PureState::basis(2, 1).unwrap().density();
        let reduced = s01.partial_trace(&[1]).unwrap();
        assert!((reduced.matrix() - PureState::basis(1, 1).unwrap().projector()).camax() < 1e-15);

        assert!(phi.partial_trace(&[]).is_err());
        assert!(phi.partial_trace(&[2]).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let z0 = PureState::basis(1, 0).unwrap().density();
        let z1 = PureState::basis(1, 1).unwrap().density();
        assert!((fidelity(&z0, &z0).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&z0, &z1).unwrap().abs() < 1e-12);

        let v = 0.984;
        let phi = PureState::phi_plus().density();
        let noisy = DensityMatrix::isotropic(v).unwrap();
        let f = fidelity(&phi, &noisy).unwrap();
        assert!((f - (v + (1.0 - v) / 4.0)).abs() < 1e-12);
        assert!((f - 0.988).abs() < 1e-12);
        let fp = pure_fidelity(&PureState::phi_plus(), &noisy).unwrap();
        assert!((f - fp).abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_examples() {
        let rho = DensityMatrix::isotropic(0.7).unwrap();
        assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-10);

        let phi = PureState::phi_plus().density();
        assert!((mutual_information(&phi, 1).unwrap() - 2.0).abs() < 1e-9);

        let product = PureState::basis(1, 0)
            .unwrap()
            .tensor(&ket(&[c(0.6, 0.0), c(0.0, 0.8)]))
            .unwrap()
            .density();
        assert!(mutual_information(&product, 1).unwrap().abs() < 1e-9);
    }

    #[test]
    fn relative_entropy_support_violation() {
        let z0 = PureState::basis(1, 0).unwrap().density();
        let z1 = PureState::basis(1, 1).unwrap().density();
        assert!(matches!(
            relative_entropy(&z0, &z1),
            Err(Error::InfiniteDivergence { .. })
        ));
    }

    #[test]
    fn bloch_examples() {
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert!(bloch_vector(&mixed).unwrap().norm() < 1e-15);
        let z0 = PureState::basis(1, 0).unwrap().density();
        assert!((bloch_vector(&z0).unwrap() - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
        assert!(bloch_vector(&PureState::phi_plus().density()).is_err());
    }

    #[test]
    fn entropy_of_pure_and_mixed() {
        assert!(PureState::phi_plus().density().entropy().abs() < 1e-10);
        for n in 1..=4 {
            let m = DensityMatrix::maximally_mixed(n).unwrap();
            assert!((m.entropy() - n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn density_matrix_validation() {
        let mut m = identity(2).scale(0.5);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(1, 0)] = c(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_ok());
        assert!(DensityMatrix::new(identity(2)).is_err());
        let neg = ComplexMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), ZERO, ZERO, c(-0.5, 0.0)]);
        assert!(DensityMatrix::new(neg).is_err());
    }

    #[test]
    fn povm_validation() {
        let p0 = PureState::basis(1, 0).unwrap().projector();
        let p1 = PureState::basis(1, 1).unwrap().projector();
        let labels = vec!["0".to_string(), "1".to_string()];
        assert!(Povm::new(vec![p0.clone(), p1], labels.clone()).is_ok());
        assert!(Povm::new(vec![p0.clone(), p0], labels).is_err());
    }
}
