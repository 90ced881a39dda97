//! Numerical tolerances shared by every module and by the acceptance suite.

/// Unit norm of pure-state amplitude vectors.
pub const STATE_NORM: f64 = 1e-12;

/// Hermiticity of density matrices, entrywise.
pub const HERMITIAN: f64 = 1e-12;

/// Unit trace of density matrices.
pub const TRACE: f64 = 1e-12;

/// Most negative eigenvalue tolerated in a density matrix.
pub const PSD: f64 = 1e-10;

/// Hermiticity, positivity and completeness of POVM elements.
pub const POVM: f64 = 1e-10;

/// Eigenvalues below this are treated as zero in matrix functions
/// (square roots, logarithms).
pub const EIGEN_CLAMP: f64 = 1e-12;

/// Weight of rho allowed outside the support of sigma in relative entropy.
pub const SUPPORT: f64 = 1e-9;

/// Normalization of joint outcome distributions.
pub const NORMALIZATION: f64 = 1e-10;

/// No-signaling gap of quantum-generated tables.
pub const NO_SIGNALING: f64 = 1e-9;

/// Radicands of the second bilocal functional are clamped to zero above
/// this negative value.
pub const RADICAND: f64 = 1e-12;

/// Conditional states are undefined for outcome probabilities below this.
pub const MIN_PROBABILITY: f64 = 1e-12;

/// Largest Z for which the quadratic correction `Z + 4 Z^2` is certified.
pub const MAX_CERTIFIED_Z: f64 = 0.55;

/// Slack allowed when comparing optimized bilocal values to the envelope.
pub const ENVELOPE_SLACK: f64 = 1e-6;

/// Positivity and completeness of reconstructed POVMs.
pub const RECONSTRUCTED_POVM: f64 = 1e-8;

/// Log-likelihood increase that terminates maximum-likelihood iterations.
pub const ML_STOP: f64 = 1e-10;

/// Iteration cap of maximum-likelihood reconstructions.
pub const ML_MAX_ITERATIONS: usize = 10_000;

/// Largest register handled by the dense routines.
pub const MAX_QUBITS: usize = 4;

/// Hermiticity, positivity and completeness of the printed detector
/// matrices, which are rounded to three decimals.
pub const FIXTURE_POVM: f64 = 5e-3;
