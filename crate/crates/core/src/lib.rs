//! Design and analysis of strongly-modulating NMR control pulses under
//! RF-amplitude inhomogeneity.
//!
//! The crate is organized bottom-up:
//!
//! * [`operator`] dense spin-space linear algebra and Liouville-space vectorization
//! * [`pauli`] Pauli product basis and decomposition
//! * [`spin_system`] internal and RF Hamiltonians
//! * [`propagator`] exact piecewise-constant propagators plus a time-stepped oracle
//! * [`ensemble`] RF distributions, Kraus sets, superoperators, nutation profiles
//! * [`metrics`] correlation, attenuation and gate fidelity
//! * [`gates`] target rotations and the example gate sets
//! * [`designer`] Nelder-Mead pulse search and robustness sweeps
//! * [`spectra`] superoperator spectra and first-order perturbation analysis
//! * [`protocol`] simulated three-input-state gate characterization
//!
//! [`sample`] holds the random unitary and Hermitian generators used by tests.

pub mod designer;
pub mod ensemble;
pub mod error;
pub mod gates;
pub mod metrics;
pub mod operator;
pub mod pauli;
pub mod propagator;
pub mod protocol;
pub mod sample;
pub mod spectra;
pub mod spin_system;

pub use error::{Error, Result};
