//! Gaussian-state simulation on the Majorana correlation matrix.
//!
//! With η_{2j} = c_j + c†_j and η_{2j+1} = i(c_j − c†_j), the chain step is
//! a product of planar rotations on Γ_ab = Im⟨η_a η_b⟩:
//!   X_j = i η_{2j} η_{2j+1}, so exp(−i dt h X_j) rotates the (2j, 2j+1)
//!   plane by 2 dt h; Z_j Z_{j+1} = i η_{2j+1} η_{2j+2} rotates (2j+1, 2j+2)
//!   by 2 dt. The wrap-around bond picks up the fermion parity, which is +1
//!   for the all-plus start, flipping the sign of its angle.
//! An X error at site j conjugates Γ by a sign flip of rows/columns 2j and
//! 2j+1, itself a Gaussian operation, so every noise trajectory stays
//! Gaussian and costs O(N²) per step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use super::FreeFermionModel;
use crate::engines::QuenchResult;
use crate::error::{Error, Result};

/// Largest chain the trajectory sampler accepts; the correlation matrix is
/// (2N)² doubles, so this caps a trajectory at 8 MB.
pub const MAX_MAJORANA_SITES: usize = 512;

/// Planar rotation set applied to rows then columns; all pairs within one
/// pass are disjoint.
pub(crate) type PairPass = Vec<(usize, usize, f64, f64)>;

pub(crate) fn pass_with_angles(pairs: &[(usize, usize, f64)]) -> PairPass {
    pairs
        .iter()
        .map(|&(p, q, ang)| (p, q, ang.cos(), ang.sin()))
        .collect()
}

/// X-layer pairs (2j, 2j+1) at angle 2 dt h.
pub(crate) fn field_pairs(n: usize, h: f64, dt: f64) -> Vec<(usize, usize, f64)> {
    (0..n).map(|j| (2 * j, 2 * j + 1, 2.0 * dt * h)).collect()
}

/// Coupling pairs (2j+1, 2j+2) at angle 2 dt, seam (2N−1, 0) negated.
pub(crate) fn coupling_pairs(n: usize, dt: f64) -> Vec<(usize, usize, f64)> {
    let mut pairs: Vec<(usize, usize, f64)> =
        (0..n - 1).map(|j| (2 * j + 1, 2 * j + 2, 2.0 * dt)).collect();
    pairs.push((2 * n - 1, 0, -2.0 * dt));
    pairs
}

/// Γ ← R Γ Rᵀ for one disjoint pass: rows first, then columns, with
/// row_p' = c·row_p + s·row_q and row_q' = −s·row_p + c·row_q.
pub(crate) fn rotate_pass(a: &mut [f64], dim: usize, pass: &[(usize, usize, f64, f64)]) {
    for &(p, q, c, s) in pass {
        let (first, second) = if p < q { (p, q) } else { (q, p) };
        let (head, tail) = a.split_at_mut(second * dim);
        let row_first = &mut head[first * dim..first * dim + dim];
        let row_second = &mut tail[..dim];
        // honor the (p, q) orientation regardless of memory order
        let (rp, rq): (&mut [f64], &mut [f64]) = if p < q {
            (row_first, row_second)
        } else {
            (row_second, row_first)
        };
        for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
            let (u, v) = (*x, *y);
            *x = c * u + s * v;
            *y = -s * u + c * v;
        }
    }
    for row in a.chunks_exact_mut(dim) {
        for &(p, q, c, s) in pass {
            let (u, v) = (row[p], row[q]);
            row[p] = c * u + s * v;
            row[q] = -s * u + c * v;
        }
    }
}

/// Correlation matrix Γ_ab = Im⟨η_a η_b⟩ of a Gaussian state, 2N×2N real
/// antisymmetric, Γ² = −1 while the state stays pure.
#[derive(Clone, Debug)]
pub struct MajoranaState {
    n_sites: usize,
    gamma: Vec<f64>,
}

impl MajoranaState {
    /// All-spins-plus product state: ⟨X_j⟩ = 1, so Γ[2j, 2j+1] = −1.
    pub fn plus_state(n_sites: usize) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::invalid("need at least 2 sites"));
        }
        if n_sites > MAX_MAJORANA_SITES {
            return Err(Error::SystemTooLarge {
                context: "majorana trajectory",
                n_sites,
                max_sites: MAX_MAJORANA_SITES,
            });
        }
        let dim = 2 * n_sites;
        let mut gamma = vec![0.0; dim * dim];
        for j in 0..n_sites {
            gamma[2 * j * dim + 2 * j + 1] = -1.0;
            gamma[(2 * j + 1) * dim + 2 * j] = 1.0;
        }
        Ok(MajoranaState { n_sites, gamma })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn dim(&self) -> usize {
        2 * self.n_sites
    }

    /// One Trotter step: field layer, then coupling layer.
    pub fn step(&mut self, h: f64, dt: f64) {
        let n = self.n_sites;
        let dim = self.dim();
        let fp = pass_with_angles(&field_pairs(n, h, dt));
        let cp = pass_with_angles(&coupling_pairs(n, dt));
        rotate_pass(&mut self.gamma, dim, &fp);
        rotate_pass(&mut self.gamma, dim, &cp);
    }

    fn step_with(&mut self, fp: &PairPass, cp: &PairPass) {
        let dim = self.dim();
        rotate_pass(&mut self.gamma, dim, fp);
        rotate_pass(&mut self.gamma, dim, cp);
    }

    /// Conjugation by X_j: η_{2j}, η_{2j+1} flip sign, everything else
    /// commutes through.
    pub fn apply_x_error(&mut self, site: usize) {
        debug_assert!(site < self.n_sites);
        let dim = self.dim();
        for col in [2 * site, 2 * site + 1] {
            for r in 0..dim {
                self.gamma[r * dim + col] = -self.gamma[r * dim + col];
            }
        }
        for row in [2 * site, 2 * site + 1] {
            for c in 0..dim {
                self.gamma[row * dim + c] = -self.gamma[row * dim + c];
            }
        }
    }

    /// Per-site X channel rho -> (1 - eps) rho + eps X_j rho X_j, all sites.
    /// X_j conjugation flips eta_{2j}, eta_{2j+1}; under the channel an entry
    /// with exactly one index at site j damps by (1 - 2 eps), so applying it
    /// everywhere multiplies every cross-site entry by (1 - 2 eps)^2 and
    /// leaves the on-site blocks alone. The state goes mixed, but the
    /// two-point sector stays closed, so magnetizations remain exact.
    pub fn apply_x_channel(&mut self, epsilon: f64) {
        let d = 1.0 - 2.0 * epsilon;
        let dim = self.dim();
        damp_cross_site(&mut self.gamma, dim, d * d);
    }

    /// ⟨S_x⟩ = (1/N) Σ_j ⟨X_j⟩ = −(1/N) Σ_j Γ[2j, 2j+1].
    pub fn magnetization(&self) -> f64 {
        let dim = self.dim();
        let sum: f64 = (0..self.n_sites)
            .map(|j| self.gamma[2 * j * dim + 2 * j + 1])
            .sum();
        -sum / self.n_sites as f64
    }

    /// max |Γ + Γᵀ|, zero for a valid correlation matrix.
    pub fn antisymmetry_defect(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in 0..r {
                worst = worst.max((self.gamma[r * dim + c] + self.gamma[c * dim + r]).abs());
            }
            worst = worst.max(self.gamma[r * dim + r].abs());
        }
        worst
    }

    /// max |Γ² + 1|, zero iff the Gaussian state is pure.
    pub fn purity_defect(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                let mut acc = 0.0;
                for m in 0..dim {
                    acc += self.gamma[r * dim + m] * self.gamma[m * dim + c];
                }
                if r == c {
                    acc += 1.0;
                }
                worst = worst.max(acc.abs());
            }
        }
        worst
    }
}

fn damp_cross_site(gamma: &mut [f64], dim: usize, factor: f64) {
    for r in 0..dim {
        let site = r / 2;
        let row = &mut gamma[r * dim..(r + 1) * dim];
        for (c, v) in row.iter_mut().enumerate() {
            if c / 2 != site {
                *v *= factor;
            }
        }
    }
}

/// Exact noisy X-channel evolution and its first noise-insertion sum.
#[derive(Debug, Clone)]
pub struct XNoiseSeries {
    /// ⟨S_x(t)⟩ under the channel at strength `epsilon`, steps 0..=T.
    pub sx: Vec<f64>,
    /// Bare single-insertion sum D₁(t), one X conjugation summed over
    /// every site and every past step of the noisy circuit.
    pub d1: Vec<f64>,
    /// Σ₁(t) = D₁(t) − N·t·⟨S_x(t)⟩, the counting term already removed.
    pub sigma1: Vec<f64>,
}

/// Runs the Trotter circuit with the per-site X channel applied exactly
/// after every step and accumulates Σ₁ alongside.
///
/// The error part E[ρ] = Σ_j X_j ρ X_j acts entry-wise on Γ: an entry with
/// indices on two different sites picks up −1 from each of those two site
/// conjugations and +1 from the other N−2, so E scales it by N−4, while
/// on-site entries get N. Subtracting the slot count N·id leaves
///
///     (E − N·id)[Γ]_ab = −4 Γ_ab   (cross-site),   0   (on-site),
///
/// so a second matrix σ advanced by the same noisy step with the kick
/// σ += (E − N)[Γ] after each step reads out Σ₁(t) through the same
/// magnetization functional as the state itself.
pub fn x_noise_series(model: &FreeFermionModel, epsilon: f64, steps: usize) -> Result<XNoiseSeries> {
    if model.is_continuum() {
        return Err(Error::invalid(
            "the noisy channel needs dt > 0 to define its per-step slots",
        ));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid(
            "per-step flip probability must lie in [0, 1]",
        ));
    }
    let n = model.n_sites;
    let mut state = MajoranaState::plus_state(n)?;
    let dim = state.dim();
    let mut sigma = vec![0.0f64; dim * dim];
    let field_pass = pass_with_angles(&field_pairs(n, model.h, model.dt));
    let coupling_pass = pass_with_angles(&coupling_pairs(n, model.dt));
    let damp = {
        let d = 1.0 - 2.0 * epsilon;
        d * d
    };
    let magnetization_of = |gamma: &[f64]| -> f64 {
        let sum: f64 = (0..n).map(|j| gamma[2 * j * dim + 2 * j + 1]).sum();
        -sum / n as f64
    };

    let mut sx = Vec::with_capacity(steps + 1);
    let mut sigma1 = Vec::with_capacity(steps + 1);
    sx.push(state.magnetization());
    sigma1.push(0.0);
    for _ in 0..steps {
        rotate_pass(&mut sigma, dim, &field_pass);
        rotate_pass(&mut sigma, dim, &coupling_pass);
        damp_cross_site(&mut sigma, dim, damp);
        state.step_with(&field_pass, &coupling_pass);
        damp_cross_site(&mut state.gamma, dim, damp);
        for r in 0..dim {
            let site = r / 2;
            for c in 0..dim {
                if c / 2 != site {
                    sigma[r * dim + c] -= 4.0 * state.gamma[r * dim + c];
                }
            }
        }
        sx.push(state.magnetization());
        sigma1.push(magnetization_of(&sigma));
    }
    let d1 = sigma1
        .iter()
        .zip(sx.iter())
        .enumerate()
        .map(|(t, (s1, v))| s1 + (n * t) as f64 * v)
        .collect();
    Ok(XNoiseSeries { sx, d1, sigma1 })
}

struct TrajectoryPlan {
    n: usize,
    steps: usize,
    p_error: f64,
    field_pass: PairPass,
    coupling_pass: PairPass,
}

impl TrajectoryPlan {
    fn build(model: &FreeFermionModel, eta: f64, steps: usize) -> Result<Self> {
        if model.is_continuum() {
            return Err(Error::invalid(
                "trajectory sampling needs dt > 0 to discretize the error clock",
            ));
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::invalid("error rate must be finite and >= 0"));
        }
        let p_error = eta * model.dt;
        if p_error > 1.0 {
            return Err(Error::invalid(format!(
                "per-step error probability eta*dt = {p_error} exceeds 1; reduce dt or eta"
            )));
        }
        Ok(TrajectoryPlan {
            n: model.n_sites,
            steps,
            p_error,
            field_pass: pass_with_angles(&field_pairs(model.n_sites, model.h, model.dt)),
            coupling_pass: pass_with_angles(&coupling_pairs(model.n_sites, model.dt)),
        })
    }

    /// Runs one noise realization, invoking `record(step, ⟨S_x⟩)` at every
    /// step including 0; returns the number of inserted errors. The RNG is
    /// consumed at a fixed rate of one draw per site per step so trajectory
    /// streams stay aligned whatever the error pattern.
    fn run<R: Rng, F: FnMut(usize, f64)>(&self, rng: &mut R, mut record: F) -> Result<u32> {
        let mut state = MajoranaState::plus_state(self.n)?;
        record(0, state.magnetization());
        let mut error_count = 0u32;
        for t in 1..=self.steps {
            state.step_with(&self.field_pass, &self.coupling_pass);
            for j in 0..self.n {
                let u: f64 = rng.gen();
                if u < self.p_error {
                    state.apply_x_error(j);
                    error_count += 1;
                }
            }
            record(t, state.magnetization());
        }
        Ok(error_count)
    }
}

const TRAJECTORY_CHUNK: usize = 16;

/// Monte-Carlo estimate of ⟨S_x(t)⟩ under per-site X noise with rate `eta`
/// per unit time, discretized to probability eta·dt per site per step.
/// Trajectory b draws from stream b of a counter RNG seeded with `seed`, so
/// results are reproducible and independent of thread count.
pub fn gaussian_trajectories(
    model: &FreeFermionModel,
    eta: f64,
    steps: usize,
    trajectories: usize,
    seed: u64,
) -> Result<QuenchResult> {
    if trajectories == 0 {
        return Err(Error::invalid("need at least one trajectory"));
    }
    let plan = TrajectoryPlan::build(model, eta, steps)?;
    let n_chunks = trajectories.div_ceil(TRAJECTORY_CHUNK);
    let partials: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * TRAJECTORY_CHUNK;
            let hi = ((chunk + 1) * TRAJECTORY_CHUNK).min(trajectories);
            let mut sum = vec![0.0; steps + 1];
            let mut sumsq = vec![0.0; steps + 1];
            for b in lo..hi {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                plan.run(&mut rng, |t, m| {
                    sum[t] += m;
                    sumsq[t] += m * m;
                })?;
            }
            Ok((sum, sumsq))
        })
        .collect();

    let mut sum = vec![0.0; steps + 1];
    let mut sumsq = vec![0.0; steps + 1];
    for partial in partials {
        let (s, sq) = partial?;
        for t in 0..=steps {
            sum[t] += s[t];
            sumsq[t] += sq[t];
        }
    }
    let b = trajectories as f64;
    let mut result = QuenchResult::new("majorana", vec!["sx_1".to_string()], true);
    for t in 0..=steps {
        let mean = sum[t] / b;
        let stderr = if trajectories > 1 {
            ((sumsq[t] - b * mean * mean).max(0.0) / ((b - 1.0) * b)).sqrt()
        } else {
            0.0
        };
        result.push_step(t, &[mean], Some(&[stderr]));
    }
    Ok(result)
}

/// Final-time ⟨S_x⟩ of each trajectory together with its error count,
/// for analyses that bin realizations by the number of inserted errors.
pub fn sectorized_final_values(
    model: &FreeFermionModel,
    eta: f64,
    steps: usize,
    trajectories: usize,
    seed: u64,
) -> Result<Vec<(u32, f64)>> {
    let plan = TrajectoryPlan::build(model, eta, steps)?;
    let n_chunks = trajectories.div_ceil(TRAJECTORY_CHUNK);
    let partials: Vec<Result<Vec<(u32, f64)>>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * TRAJECTORY_CHUNK;
            let hi = ((chunk + 1) * TRAJECTORY_CHUNK).min(trajectories);
            let mut out = Vec::with_capacity(hi - lo);
            for b in lo..hi {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                let mut last = 0.0;
                let count = plan.run(&mut rng, |_, m| last = m)?;
                out.push((count, last));
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(trajectories);
    for partial in partials {
        all.extend(partial?);
    }
    Ok(all)
}

/// Per-step decay rate per unit error rate,
///   λ_mes(t) = −ln(noisy(t)/clean(t)) / (η t dt),
/// directly comparable to the analytic 4(1 − m). Entry 0 (and any step
/// where the ratio is not positive) is NaN.
pub fn measured_decay_rate(noisy: &[f64], clean: &[f64], eta: f64, dt: f64) -> Vec<f64> {
    noisy
        .iter()
        .zip(clean.iter())
        .enumerate()
        .map(|(t, (&a, &b))| {
            let ratio = a / b;
            if t == 0 || !(ratio > 0.0) {
                f64::NAN
            } else {
                -ratio.ln() / (eta * t as f64 * dt)
            }
        })
        .collect()
}
