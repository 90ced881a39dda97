//! Entanglement swapping through Elegant Joint Measurements (EJMs).
//!
//! The crate simulates the three-party line network in which Bob applies an
//! EJM to one half of each of two entangled pairs, while Alice and Charlie
//! measure Pauli observables on the remaining qubits. On top of the
//! simulation it evaluates network Bell functionals, searches bilocal
//! hidden-variable models, fits a phase-error noise model to measured data
//! and performs maximum-likelihood state and detector tomography.
//!
//! Qubits are ordered left to right with qubit 0 the most significant bit of
//! a computational-basis index. The network wires are `(A, B1, B2, C)`.

pub mod bilocal;
pub mod cli;
pub mod ejm;
pub mod error;
pub mod noisefit;
pub mod qmath;
pub mod swapnet;
pub mod tolerances;
pub mod tomo;
pub mod witnesses;

pub use error::{Error, Result};
