//! Noise-insertion series and the mitigation estimators built from them.
//!
//! A noisy expectation value expands in the per-slot error probability as
//! ⟨O⟩_noisy = Σ_n εⁿ ⟨Σ_n⟩, and the first coefficient is measurable: run the
//! circuit with one Kraus operator inserted by hand at every slot, sum, and
//! subtract the slot count times the plain run. Two estimators consume it:
//!
//! ```text
//! LIN:  <O>_lin = <O>_noisy - eps * Sigma1_noisy
//! EXP:  <O>_exp = <O>_noisy * exp(-eps * Sigma1_noisy / <O>_noisy)
//! ```
//!
//! Both cancel the O(ε) bias; EXP additionally resums the geometric tail
//! that dominates once the expected error count passes one. The module also
//! carries the shot-allocation arithmetic for the two-circuit measurement
//! and the randomized insertion schedule that collapses the per-slot circuit
//! family into one circuit with a classically sampled slot register.

mod insertion;

pub use insertion::{
    enumerate_sectors, insertion_supports, measure_d1, measure_d2, noisy_sigma_series,
    randomized_d1_estimate, sectors_to_noisy, sigma1_from, sigma2_from, sigma_report,
    NoisySigmaSeries,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::noise::NoiseChannel;

/// One hand-inserted error: a Kraus operator at a site or edge, placed in
/// the noise slot that follows Trotter step `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorInsertion {
    /// 1-based step whose slot receives the operator.
    pub step: usize,
    /// Support sites: (site, None) for one-qubit channels, (a, Some(b)) for
    /// edge channels.
    pub support: (usize, Option<usize>),
    /// Index into the channel's Kraus list.
    pub kraus: usize,
    pub weight: f64,
}

/// Everything a mitigation run reports for one (circuit, channel, time).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SigmaReport {
    pub d0: f64,
    pub d1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<f64>,
    pub sigma1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    pub epsilon: f64,
    /// Error locations per step.
    pub n_loc: usize,
    pub t: usize,
    pub sigma1_over_sigma0: f64,
    /// Per-location, per-step sensitivity -Sigma1 / (Sigma0 * n_loc * t).
    pub rho: f64,
    pub lin: f64,
    /// Withheld (None) when the noisy signal is too small to divide by.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr_d0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr_d1: Option<f64>,
}

/// First-order subtraction; exact up to O(eps^2) bias by construction.
pub fn mitigate_lin(d0_noisy: f64, sigma1_noisy: f64, epsilon: f64) -> f64 {
    d0_noisy - epsilon * sigma1_noisy
}

/// Exponential resummation. `scale` is the natural magnitude of the
/// observable (1 for normalized magnetizations); the estimate is withheld
/// when |D0| < 1e-6 * scale because the exponent diverges.
pub fn mitigate_exp(
    d0_noisy: f64,
    sigma1_noisy: f64,
    epsilon: f64,
    scale: f64,
) -> Result<f64> {
    if d0_noisy.abs() < 1e-6 * scale.abs() {
        return Err(Error::Numerical(format!(
            "noisy signal {d0_noisy:.3e} below the guard for scale {scale:.3e}; \
             EXP estimate withheld"
        )));
    }
    Ok(d0_noisy * (-epsilon * sigma1_noisy / d0_noisy).exp())
}

/// Which estimator a shot budget is being planned for. EXP carries the two
/// measured ratios its variance formula needs.
#[derive(Debug, Clone, Copy)]
pub enum MitigationMethod {
    Lin,
    Exp { d1_over_d0: f64, sigma1_over_d0: f64 },
}

/// Mitigated-estimate variance for a unit total shot budget split as
/// S0/S1 = beta between the plain circuit and the insertion circuit.
///
/// ```text
/// LIN: Delta = sigma0^2/S0 (1 + x)^2 + sigma1^2/S1 x^2,      x = N_gate eps
/// EXP: Delta = [sigma0^2/S0 (1 + eps D1/D0)^2 + sigma1^2/S1 x^2]
///              * exp(-2 eps Sigma1/D0)
/// ```
///
/// sigma1 is the spread of a single-shot estimate of D1/N_gate.
pub fn shot_variance_at_split(
    sigma0: f64,
    sigma1: f64,
    epsilon: f64,
    n_gate: usize,
    method: MitigationMethod,
    beta: f64,
) -> f64 {
    let x = n_gate as f64 * epsilon;
    let s0 = beta / (1.0 + beta);
    let s1 = 1.0 / (1.0 + beta);
    match method {
        MitigationMethod::Lin => {
            sigma0 * sigma0 / s0 * (1.0 + x) * (1.0 + x) + sigma1 * sigma1 / s1 * x * x
        }
        MitigationMethod::Exp { d1_over_d0, sigma1_over_d0 } => {
            let a = 1.0 + epsilon * d1_over_d0;
            (sigma0 * sigma0 / s0 * a * a + sigma1 * sigma1 / s1 * x * x)
                * (-2.0 * epsilon * sigma1_over_d0).exp()
        }
    }
}

/// Optimal split beta = S0/S1 and the variance it attains (unit budget).
/// Minimizing A/S0 + B/S1 under S0 + S1 = 1 gives beta = sqrt(A/B) and the
/// closed form (sqrt(A) + sqrt(B))^2.
pub fn variance_and_shots(
    sigma0: f64,
    sigma1: f64,
    epsilon: f64,
    n_gate: usize,
    method: MitigationMethod,
) -> Result<(f64, f64)> {
    if !(sigma0 > 0.0 && sigma1 > 0.0) {
        return Err(Error::invalid("shot planning needs positive spreads"));
    }
    let x = n_gate as f64 * epsilon;
    if !(x > 0.0) {
        return Err(Error::invalid(
            "shot planning needs a positive expected error count",
        ));
    }
    match method {
        MitigationMethod::Lin => {
            let beta = sigma0 / sigma1 * (1.0 + x) / x;
            let root = sigma0 * (1.0 + x) + sigma1 * x;
            Ok((root * root, beta))
        }
        MitigationMethod::Exp { d1_over_d0, sigma1_over_d0 } => {
            let a = (1.0 + epsilon * d1_over_d0).abs();
            let beta = sigma0 / sigma1 * a / x;
            let root = sigma0 * a + sigma1 * x;
            Ok((root * root * (-2.0 * epsilon * sigma1_over_d0).exp(), beta))
        }
    }
}

/// Bits in the step register of the randomized schedule.
pub fn schedule_register_width(t: usize) -> u32 {
    assert!(t >= 1);
    usize::BITS - (t - 1).leading_zeros()
}

/// A uniform draw from the register lands outside 1..=t with this
/// probability and the shot is discarded.
pub fn schedule_rejection_probability(t: usize) -> f64 {
    1.0 - t as f64 / (1u64 << schedule_register_width(t)) as f64
}

/// Endless stream of uniformly placed insertions: the step comes from a
/// rejection-sampled binary register, the location is uniform, the Kraus
/// index is drawn by weight. Averaging the insertion expectations and
/// multiplying by c * N_loc * t unbiases D1.
pub struct InsertionSchedule<R: Rng> {
    t: usize,
    width: u32,
    supports: Vec<(usize, Option<usize>)>,
    /// (kraus index, weight, cumulative weight / c).
    kraus_cdf: Vec<(usize, f64, f64)>,
    rng: R,
}

pub fn randomized_insertion_schedule<R: Rng>(
    t: usize,
    supports: Vec<(usize, Option<usize>)>,
    channel: &NoiseChannel,
    rng: R,
) -> Result<InsertionSchedule<R>> {
    if t == 0 || supports.is_empty() {
        return Err(Error::invalid("schedule needs at least one step and location"));
    }
    let c = channel.c_total();
    if !(c > 0.0) {
        return Err(Error::invalid("channel has no error weight to sample"));
    }
    let mut acc = 0.0;
    let kraus_cdf = channel
        .kraus
        .iter()
        .enumerate()
        .map(|(u, k)| {
            acc += k.weight / c;
            (u, k.weight, acc)
        })
        .collect();
    Ok(InsertionSchedule { t, width: schedule_register_width(t), supports, kraus_cdf, rng })
}

impl<R: Rng> Iterator for InsertionSchedule<R> {
    type Item = ErrorInsertion;

    fn next(&mut self) -> Option<ErrorInsertion> {
        let step = loop {
            let raw = if self.width == 0 {
                0
            } else {
                self.rng.gen_range(0..(1u64 << self.width))
            };
            // the register encodes step - 1; draws past the end are discarded
            if (raw as usize) < self.t {
                break raw as usize + 1;
            }
        };
        let support = self.supports[self.rng.gen_range(0..self.supports.len())];
        let dart = self.rng.gen::<f64>();
        let &(kraus, weight, _) = self
            .kraus_cdf
            .iter()
            .find(|&&(_, _, cum)| dart < cum)
            .unwrap_or_else(|| self.kraus_cdf.last().unwrap());
        Some(ErrorInsertion { step, support, kraus, weight })
    }
}
