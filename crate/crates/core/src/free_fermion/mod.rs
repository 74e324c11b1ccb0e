//! Exactly solvable transverse-field chain.
//!
//! A periodic 1D chain with H = Σ Z_j Z_{j+1} + h Σ X_j maps under a
//! Jordan-Wigner transformation (X_j = 1 - 2 c†_j c_j) to free fermions.
//! Starting from |+...+⟩, which is the fermionic vacuum, everything stays in
//! the even-parity sector with half-integer momenta k = 2π(n+1/2)/N. Each
//! Trotter step factorizes over (k, -k) pairs into 4x4 blocks, so observables
//! like S_x = (1/N) Σ X_j come out in closed form, and noisy evolution can be
//! tracked exactly at the level of Majorana two-point functions.
//!
//! Submodules: closed-form magnetization and decay rates (`analytic`),
//! Gaussian trajectory sampling on the Majorana correlation matrix
//! (`majorana`), the exact error-sector recurrence (`recurrence`), and the
//! momentum-space transfer system for depolarizing noise (`transfer`).

mod analytic;
mod majorana;
mod recurrence;
mod transfer;

pub use analytic::{
    analytic_magnetization, continuum_magnetization, depolarizing_decay_rate,
    floquet_blocks, magnetization_series, mean_magnetization,
    thermodynamic_magnetization, x_noise_decay_rate, BlockAngles, FloquetBlock,
};
pub use majorana::{
    gaussian_trajectories, measured_decay_rate, sectorized_final_values, x_noise_series,
    MajoranaState, XNoiseSeries,
};
pub use recurrence::{sigma1_free_fermion, sigma1_series, sigma_n_series};
pub use transfer::{depolarizing_transfer_evolution, TransferEvolution, TransferSystem};

use crate::error::{Error, Result};

/// Parameters of the chain: site count (even), transverse field, Trotter step.
/// `dt = 0` selects the continuum (Hamiltonian) limit where that is defined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeFermionModel {
    pub n_sites: usize,
    pub h: f64,
    pub dt: f64,
}

impl FreeFermionModel {
    pub fn new(n_sites: usize, h: f64, dt: f64) -> Result<Self> {
        if n_sites < 2 || n_sites % 2 != 0 {
            return Err(Error::invalid(format!(
                "free-fermion chain needs an even site count >= 2, got {n_sites}"
            )));
        }
        if !h.is_finite() || h < 0.0 {
            return Err(Error::invalid(format!("field must be finite and >= 0, got {h}")));
        }
        if !dt.is_finite() || dt < 0.0 {
            return Err(Error::invalid(format!("dt must be finite and >= 0, got {dt}")));
        }
        Ok(FreeFermionModel { n_sites, h, dt })
    }

    /// Even-sector momenta 2π(n+1/2)/N restricted to (0, π); there are N/2.
    pub fn positive_momenta(&self) -> Vec<f64> {
        let n = self.n_sites;
        (0..n / 2)
            .map(|i| 2.0 * (i as f64 + 0.5) * std::f64::consts::PI / n as f64)
            .collect()
    }

    pub fn is_continuum(&self) -> bool {
        self.dt == 0.0
    }
}
