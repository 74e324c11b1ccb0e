//! Numerical laboratory for noise accumulation in Trotterized kicked-Ising
//! dynamics.
//!
//! The crate is organized around one experiment shape: evolve a product state
//! under alternating ZZ / transverse-field layers on a small lattice, apply a
//! Pauli noise channel after every step (or per gate), and study how
//! expectation values of few-body observables decay. The interesting physics
//! lives in the ratio noisy/noiseless, which for generic parameters follows
//! exp(-lambda * t) with a rate set by operator spreading rather than by the
//! raw error count.
//!
//! Module map:
//! - [`pauli`]: bit-packed Pauli strings, sparse operators, dense matrices and
//!   the fast Pauli-basis transform.
//! - [`model`]: lattice graphs, edge colorings, circuit descriptions, noise
//!   channels and observable specifications.
//! - [`engines`]: statevector, density-matrix and stochastic-trajectory
//!   evolution, plus measurement and decay-metric helpers.
//! - [`sigma`]: noise-insertion series and the error-mitigation estimators
//!   built from them.
//! - [`strings`]: Heisenberg-picture operator-spreading diagnostics.
//! - [`free_fermion`]: exact solutions for the integrable transverse-field
//!   chain.

pub mod bits;
pub mod engines;
pub mod error;
pub mod free_fermion;
pub mod model;
pub mod pauli;
pub mod sigma;
mod smallmat;

pub use engines::{
    decay_rate_series, normalized_difference, run_density_quench, run_statevector_quench,
    run_trajectory_quench, DensityMatrix, ProductState, QuenchResult, StateVector,
    TrajectoryBatch,
};
pub use error::{Error, Result};
pub use model::{
    circuit::{FieldSchedule, TrotterCircuit},
    lattice::LatticeGraph,
    noise::{Cadence, NoiseChannel},
    observable::ObservableSpec,
};
pub use pauli::{dense::DenseOperator, operator::PauliOperator, string::PauliString};
pub use sigma::{
    measure_d1, mitigate_exp, mitigate_lin, noisy_sigma_series, randomized_d1_estimate,
    sigma_report, NoisySigmaSeries, SigmaReport,
};
