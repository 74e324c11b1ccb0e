//! Linear transfer system for ⟨S_x⟩ under weak depolarizing noise, in the
//! continuum (dt → 0) limit.
//!
//! Per positive momentum k the observable closes on three quadratures
//! x_{k,A}, x_{k,B}, x_{k,C}; coherent motion is the block
//!   G_k = Δε_k [[0, 0, −sin2θ], [0, 0, cos2θ], [sin2θ, −cos2θ, 0]],
//! and the channel couples momenta through the N-periodic sawtooth
//! φ(j) = −(4/3)(|j|+1) via φ̂(k) = (1/N)Σ_j e^{ijk}φ(j):
//!   𝒩_{k,q} = diag(φ̂(k−q)+φ̂(k+q), φ̂(k−q)−φ̂(k+q), φ̂(k−q)−φ̂(k+q)).
//! The full generator is ℳ = G + η𝒩 and ∂_τ x = ℳx with
//! x_{k,A}(0) = 2/N, giving ⟨S_x(τ)⟩ = Σ_{k>0} x_{k,A}(τ).

use num_complex::Complex64;

use super::analytic::continuum_angles;
use super::FreeFermionModel;
use crate::error::{Error, Result};
use crate::smallmat::{eigenvalues, eigenvector, expm, RMat};

/// Cap keeping the dense 3N/2-dimensional eigenproblem affordable.
pub const MAX_TRANSFER_SITES: usize = 256;

/// φ̂ at a momentum difference; the sum runs over one period and is real
/// because φ(j) = φ(N−j) on 1..N−1.
fn phi_hat(n: usize, k: f64) -> f64 {
    let mut acc = 0.0;
    for j in 1..=n {
        let folded = if j > n / 2 { j as i64 - n as i64 } else { j as i64 };
        let phi = -(4.0 / 3.0) * (folded.unsigned_abs() as f64 + 1.0);
        acc += (j as f64 * k).cos() * phi;
    }
    acc / n as f64
}

/// Dense generator ℳ together with the structured initial condition.
pub struct TransferSystem {
    pub n_sites: usize,
    pub h: f64,
    pub eta: f64,
    generator: RMat,
    x0: Vec<f64>,
}

impl TransferSystem {
    pub fn new(model: &FreeFermionModel, eta: f64) -> Result<Self> {
        if !model.is_continuum() {
            return Err(Error::invalid(
                "the transfer system is built in the continuum limit; set dt = 0",
            ));
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::invalid("noise rate must be finite and >= 0"));
        }
        let n = model.n_sites;
        if n > MAX_TRANSFER_SITES {
            return Err(Error::SystemTooLarge {
                context: "depolarizing transfer system",
                n_sites: n,
                max_sites: MAX_TRANSFER_SITES,
            });
        }
        let momenta = model.positive_momenta();
        let half = momenta.len();
        let dim = 3 * half;
        let mut m = RMat::zeros(dim);
        for (i, &k) in momenta.iter().enumerate() {
            let a = continuum_angles(model.h, k);
            let (c2, s2) = (a.cos_2theta(), a.sin_2theta());
            let de = a.delta_eps();
            m.set(3 * i, 3 * i + 2, -de * s2);
            m.set(3 * i + 1, 3 * i + 2, de * c2);
            m.set(3 * i + 2, 3 * i, de * s2);
            m.set(3 * i + 2, 3 * i + 1, -de * c2);
        }
        if eta > 0.0 {
            for (i, &k) in momenta.iter().enumerate() {
                for (j, &q) in momenta.iter().enumerate() {
                    let diff = phi_hat(n, k - q);
                    let sum = phi_hat(n, k + q);
                    let d_a = eta * (diff + sum);
                    let d_bc = eta * (diff - sum);
                    m.set(3 * i, 3 * j, m.get(3 * i, 3 * j) + d_a);
                    m.set(3 * i + 1, 3 * j + 1, m.get(3 * i + 1, 3 * j + 1) + d_bc);
                    m.set(3 * i + 2, 3 * j + 2, m.get(3 * i + 2, 3 * j + 2) + d_bc);
                }
            }
        }
        let mut x0 = vec![0.0; dim];
        for i in 0..half {
            x0[3 * i] = 2.0 / n as f64;
        }
        Ok(TransferSystem { n_sites: n, h: model.h, eta, generator: m, x0 })
    }

    /// Applies the pure noise part to a vector (used by consistency tests).
    pub fn noise_action(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.eta == 0.0 {
            return Err(Error::invalid("system was built without noise"));
        }
        let mut full = vec![0.0; x.len()];
        self.generator.apply(x, &mut full);
        let model = FreeFermionModel::new(self.n_sites, self.h, 0.0)?;
        let free = TransferSystem::new(&model, 0.0)?;
        let mut coherent = vec![0.0; x.len()];
        free.generator.apply(x, &mut coherent);
        Ok(full
            .iter()
            .zip(&coherent)
            .map(|(f, c)| (f - c) / self.eta)
            .collect())
    }

    /// Integrates ∂_τ x = ℳx on a uniform grid by one exact exponential
    /// propagator per sample interval.
    pub fn evolve(&self, t_max: f64, n_points: usize) -> Result<TransferEvolution> {
        if !(t_max > 0.0) || n_points == 0 {
            return Err(Error::invalid("need t_max > 0 and at least one sample"));
        }
        let dtau = t_max / n_points as f64;
        let mut scaled = self.generator.clone();
        scaled.scale(dtau);
        let prop = expm(&scaled);
        let half = self.x0.len() / 3;
        let mut x = self.x0.clone();
        let mut scratch = vec![0.0; x.len()];
        let mut times = Vec::with_capacity(n_points + 1);
        let mut sx = Vec::with_capacity(n_points + 1);
        for i in 0..=n_points {
            times.push(i as f64 * dtau);
            sx.push((0..half).map(|m| x[3 * m]).sum());
            if i < n_points {
                prop.apply(&x, &mut scratch);
                std::mem::swap(&mut x, &mut scratch);
            }
        }
        Ok(TransferEvolution { times, sx })
    }

    /// Late-time decay rate per unit η: the eigenvalue of ℳ whose
    /// eigenvector overlaps the structured initial condition most, not the
    /// global spectral bound.
    pub fn spectral_decay_rate(&self) -> Result<f64> {
        if self.eta <= 0.0 {
            return Err(Error::invalid("decay rate needs eta > 0"));
        }
        let eigs = eigenvalues(&self.generator)?;
        let norm0: f64 = self.x0.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut best: Option<(f64, Complex64)> = None;
        for &mu in &eigs {
            let v = eigenvector(&self.generator, mu)?;
            let dot: Complex64 = v
                .iter()
                .zip(&self.x0)
                .map(|(a, &b)| a.conj() * b)
                .sum();
            let vnorm: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let overlap = dot.norm() / (vnorm * norm0);
            if best.map_or(true, |(o, _)| overlap > o) {
                best = Some((overlap, mu));
            }
        }
        let (_, mu) = best.ok_or_else(|| Error::invalid("empty spectrum"))?;
        Ok(-mu.re / self.eta)
    }
}

/// Magnetization trace from the transfer integration.
#[derive(Clone, Debug)]
pub struct TransferEvolution {
    pub times: Vec<f64>,
    pub sx: Vec<f64>,
}

impl TransferEvolution {
    /// Least-squares slope of ln|sx| over the index window [i0, i1].
    pub fn log_slope(&self, i0: usize, i1: usize) -> Result<f64> {
        if i1 <= i0 + 1 || i1 >= self.times.len() {
            return Err(Error::invalid("bad fit window"));
        }
        let pts: Vec<(f64, f64)> = (i0..=i1)
            .filter(|&i| self.sx[i].abs() > 1e-300)
            .map(|i| (self.times[i], self.sx[i].abs().ln()))
            .collect();
        if pts.len() < 3 {
            return Err(Error::invalid("fit window has too few usable points"));
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let sy: f64 = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let num: f64 = pts.iter().map(|p| (p.0 - sx) * (p.1 - sy)).sum();
        let den: f64 = pts.iter().map(|p| (p.0 - sx) * (p.0 - sx)).sum();
        if den == 0.0 {
            return Err(Error::invalid("degenerate fit window"));
        }
        Ok(num / den)
    }
}

/// One-call form: build the system and integrate to t_max.
pub fn depolarizing_transfer_evolution(
    model: &FreeFermionModel,
    eta: f64,
    t_max: f64,
    n_points: usize,
) -> Result<TransferEvolution> {
    TransferSystem::new(model, eta)?.evolve(t_max, n_points)
}
