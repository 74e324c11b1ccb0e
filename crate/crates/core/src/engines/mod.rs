//! Evolution engines and their shared output/diagnostic machinery.
//!
//! Three ways to push a kicked-Ising quench forward:
//! - `statevector`: exact pure states up to 26 sites, noiseless only,
//! - `density`: exact open-system evolution up to 12 sites,
//! - `trajectory`: stochastic Pauli unraveling, converging to `density`.
//!
//! All three record the same observable tables ([`result::QuenchResult`]);
//! `metrics` turns noisy/noiseless series pairs into decay-rate and
//! normalized-deviation diagnostics, and `shots` estimates symmetrized
//! observables from single-shot measurement records.

pub mod density;
pub mod kernels;
pub mod metrics;
pub mod quench;
pub mod result;
pub mod shots;
pub mod statevector;
pub mod trajectory;

pub use density::{ChannelMix, DensityMatrix, MAX_DENSITY_SITES};
pub use kernels::ZzPhaseTable;
pub use metrics::{decay_rate_series, normalized_difference};
pub use quench::{
    eval_on_density, eval_on_statevector, run_density_quench, run_statevector_quench,
    ObservablePlan,
};
pub use result::QuenchResult;
pub use shots::{estimate_sxk_from_counts, estimate_sxk_from_samples};
pub use statevector::{
    evolve_statevector, ProductState, StateVector, MAX_STATEVECTOR_SITES,
};
pub use trajectory::{run_trajectory_quench, ErrorEvent, TrajectoryBatch};
