//! Noise-series coefficients for ⟨S_x⟩ under per-step X noise.
//!
//! Writing the noisy expectation as Σ_n ⟨Σ_n(t)⟩ εⁿ in the per-step error
//! probability ε, the coefficients obey
//!   Σ_0(t) = S_x(t),
//!   Σ_n(t) = Σ_{s=0}^{t−1} U^{t−s} 𝒩(Σ_{n−1}(s)) U^{s−t},
//! where 𝒩 is the averaged single-error map and the conjugation count t−s
//! runs over the noise slots after Trotter steps 1..t. One insertion per
//! step: terms with several errors inside the same step are dropped, an
//! O(t^{n−1}) correction to the O(t^n) leading behaviour. For
//! translation-invariant quadratic operators 𝒩(O) = −4O + 4⟨O⟩S_x (⟨·⟩ in
//! the all-plus state): cross-site Majorana bilinears touch exactly two
//! sites and pick up −4, while on-site bilinears (the X_j themselves) are
//! immune, which the ⟨O⟩S_x term restores. Everything stays quadratic, so
//! each Σ_n is a 2N×2N coefficient matrix evolved by the same planar
//! rotations as the state, in the transposed direction.

use super::analytic::magnetization_series;
use super::majorana::{
    coupling_pairs, field_pairs, pass_with_angles, rotate_pass, PairPass,
    MAX_MAJORANA_SITES,
};
use super::FreeFermionModel;
use crate::error::{Error, Result};

/// First-order coefficient from the closed convolution form,
///   ⟨Σ₁(t)⟩ = −4t⟨S_x(t)⟩ + 4Σ_{s=1}^t ⟨S_x(s)⟩⟨S_x(t−s)⟩.
pub fn sigma1_free_fermion(model: &FreeFermionModel, t: usize) -> f64 {
    let m = magnetization_series(model, t);
    convolution_term(&m, t)
}

/// ⟨Σ₁(t)⟩ for every t in 0..=steps.
pub fn sigma1_series(model: &FreeFermionModel, steps: usize) -> Vec<f64> {
    let m = magnetization_series(model, steps);
    (0..=steps).map(|t| convolution_term(&m, t)).collect()
}

fn convolution_term(m: &[f64], t: usize) -> f64 {
    let conv: f64 = (1..=t).map(|s| m[s] * m[t - s]).sum();
    -4.0 * t as f64 * m[t] + 4.0 * conv
}

/// Heisenberg coefficient matrices for S_x and the Σ_n hierarchy.
///
/// Operators O = Σ G_ab iη_aη_b evolve against the step as G ← RᵀGR, which
/// is the coupling pass then the field pass, both with negated angles. The
/// all-plus readout is ⟨O⟩ = 2Σ_j G[2j, 2j+1].
struct OperatorHierarchy {
    dim: usize,
    n_sites: usize,
    mats: Vec<Vec<f64>>,
    sx: Vec<f64>,
    inv_field: PairPass,
    inv_coupling: PairPass,
}

fn plus_readout(g: &[f64], dim: usize, n_sites: usize) -> f64 {
    2.0 * (0..n_sites).map(|j| g[2 * j * dim + 2 * j + 1]).sum::<f64>()
}

impl OperatorHierarchy {
    fn new(model: &FreeFermionModel, n_max: usize) -> Result<Self> {
        if model.is_continuum() {
            return Err(Error::invalid(
                "the coefficient recurrence needs dt > 0",
            ));
        }
        let n = model.n_sites;
        if n > MAX_MAJORANA_SITES {
            return Err(Error::SystemTooLarge {
                context: "noise-series recurrence",
                n_sites: n,
                max_sites: MAX_MAJORANA_SITES,
            });
        }
        let dim = 2 * n;
        let mut sx = vec![0.0; dim * dim];
        for j in 0..n {
            sx[2 * j * dim + 2 * j + 1] = 0.5 / n as f64;
            sx[(2 * j + 1) * dim + 2 * j] = -0.5 / n as f64;
        }
        let mut mats = vec![vec![0.0; dim * dim]; n_max + 1];
        mats[0].copy_from_slice(&sx);
        let negate = |pairs: Vec<(usize, usize, f64)>| {
            pass_with_angles(
                &pairs.into_iter().map(|(p, q, a)| (p, q, -a)).collect::<Vec<_>>(),
            )
        };
        Ok(OperatorHierarchy {
            dim,
            n_sites: n,
            mats,
            sx,
            inv_field: negate(field_pairs(n, model.h, model.dt)),
            inv_coupling: negate(coupling_pairs(n, model.dt)),
        })
    }

    fn step(&mut self) {
        // noise first, in descending n so each Σ_n picks up Σ_{n−1} as it
        // stood at the previous step; then every matrix ages one step. This
        // places each insertion after a Trotter step, matching the sampler.
        for n in (1..self.mats.len()).rev() {
            let prev_mean = plus_readout(&self.mats[n - 1], self.dim, self.n_sites);
            let (head, tail) = self.mats.split_at_mut(n);
            let prev = &head[n - 1];
            let cur = &mut tail[0];
            for (c, (&p, &s)) in cur.iter_mut().zip(prev.iter().zip(self.sx.iter())) {
                *c += -4.0 * p + 4.0 * prev_mean * s;
            }
        }
        for g in &mut self.mats {
            rotate_pass(g, self.dim, &self.inv_coupling);
            rotate_pass(g, self.dim, &self.inv_field);
        }
    }

    fn readouts(&self) -> Vec<f64> {
        self.mats
            .iter()
            .map(|g| plus_readout(g, self.dim, self.n_sites))
            .collect()
    }
}

/// ⟨Σ_n(t)⟩ for n in 0..=n_max and t in 0..=steps via the matrix
/// recurrence; `out[n][t]`. Exact to rounding, cost O(n_max · t · N²).
pub fn sigma_n_series(
    model: &FreeFermionModel,
    n_max: usize,
    steps: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut h = OperatorHierarchy::new(model, n_max)?;
    let mut out = vec![Vec::with_capacity(steps + 1); n_max + 1];
    for (series, value) in out.iter_mut().zip(h.readouts()) {
        series.push(value);
    }
    for _ in 1..=steps {
        h.step();
        for (series, value) in out.iter_mut().zip(h.readouts()) {
            series.push(value);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_fermion::{
        sectorized_final_values, x_noise_decay_rate, MajoranaState,
    };
    use crate::pauli::{DenseOperator, PauliKind, PauliOperator, PauliString};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn sigma1_vanishes_at_time_zero() {
        let model = FreeFermionModel::new(16, 1.2, 0.1).unwrap();
        assert_eq!(sigma1_free_fermion(&model, 0), 0.0);
        assert_eq!(sigma1_series(&model, 5)[0], 0.0);
    }

    #[test]
    fn matrix_recurrence_matches_closed_form() {
        let model = FreeFermionModel::new(32, 1.5, 0.05).unwrap();
        let steps = 100;
        let series = sigma_n_series(&model, 1, steps).unwrap();
        let m = magnetization_series(&model, steps);
        let s1 = sigma1_series(&model, steps);
        for t in 0..=steps {
            assert!(
                (series[0][t] - m[t]).abs() < 1e-10,
                "order 0, step {t}: {} vs {}",
                series[0][t],
                m[t]
            );
            assert!(
                (series[1][t] - s1[t]).abs() < 1e-8,
                "order 1, step {t}: {} vs {}",
                series[1][t],
                s1[t]
            );
        }
    }

    #[test]
    fn recurrence_rejects_continuum_model() {
        let model = FreeFermionModel::new(8, 1.0, 0.0).unwrap();
        assert!(sigma_n_series(&model, 1, 10).is_err());
    }

    fn final_magnetization_with_errors(
        n: usize,
        h: f64,
        dt: f64,
        steps: usize,
        errors: &[(usize, usize)],
    ) -> f64 {
        let mut state = MajoranaState::plus_state(n).unwrap();
        for t in 1..=steps {
            state.step(h, dt);
            for &(et, site) in errors {
                if et == t {
                    state.apply_x_error(site);
                }
            }
        }
        state.magnetization()
    }

    #[test]
    fn hierarchy_matches_exact_enumeration_through_order_two() {
        // Σ₁ = Σ_a (v_a − v₀) over single-error runs and
        // Σ₂ = Σ_{a<b} (v_ab − v_a − v_b + v₀) over distinct-step pairs:
        // small enough to enumerate outright, pinning the recurrence exactly
        let (n, h, dt, steps) = (8usize, 1.5, 0.05, 6usize);
        let model = FreeFermionModel::new(n, h, dt).unwrap();
        let v0 = final_magnetization_with_errors(n, h, dt, steps, &[]);
        let slots: Vec<(usize, usize)> = (1..=steps)
            .flat_map(|s| (0..n).map(move |j| (s, j)))
            .collect();
        let singles: Vec<f64> = slots
            .iter()
            .map(|&sl| final_magnetization_with_errors(n, h, dt, steps, &[sl]))
            .collect();
        let sigma1_exact: f64 = singles.iter().map(|v| v - v0).sum();
        let mut sigma2_exact = 0.0;
        for i in 0..slots.len() {
            for j in i + 1..slots.len() {
                if slots[i].0 == slots[j].0 {
                    continue;
                }
                let pair = final_magnetization_with_errors(
                    n,
                    h,
                    dt,
                    steps,
                    &[slots[i], slots[j]],
                );
                sigma2_exact += pair - singles[i] - singles[j] + v0;
            }
        }
        let series = sigma_n_series(&model, 2, steps).unwrap();
        assert!(
            (series[1][steps] - sigma1_exact).abs() < 1e-9,
            "order 1: {} vs enumerated {sigma1_exact}",
            series[1][steps]
        );
        assert!(
            (series[2][steps] - sigma2_exact).abs() < 1e-9,
            "order 2: {} vs enumerated {sigma2_exact}",
            series[2][steps]
        );
    }

    #[test]
    fn late_time_ratio_approaches_decay_rate() {
        // −Σ₁/(t S_x(t)) → λ; the finite-size echo at t·dt ≈ N/4 must stay
        // beyond the window, hence the large chain
        let model = FreeFermionModel::new(400, 1.5, 0.05).unwrap();
        let steps = 1000; // t·dt = 50
        let t = steps;
        let m = magnetization_series(&model, steps);
        let s1 = sigma1_free_fermion(&model, t);
        let ratio = -s1 / (t as f64 * m[t]);
        let lambda = 2.0 / 2.25;
        assert!(
            (ratio - lambda).abs() < 0.01 * lambda,
            "ratio {ratio} vs analytic {lambda}"
        );
    }

    #[test]
    fn sigma1_ratio_is_size_independent() {
        let steps = 200; // t·dt = 10, before either chain's revival
        let ratio = |n: usize| {
            let model = FreeFermionModel::new(n, 1.5, 0.05).unwrap();
            let m = magnetization_series(&model, steps);
            -sigma1_free_fermion(&model, steps) / (steps as f64 * m[steps])
        };
        let (r100, r200) = (ratio(100), ratio(200));
        assert!(
            (r100 - r200).abs() < 0.01 * r100.abs(),
            "N=100 gives {r100}, N=200 gives {r200}"
        );
    }

    /// Normalized coefficient ratios q_n = (Σ_n dtⁿ/Σ₀)/((−x)ⁿ/n!) at
    /// x = λ t̃. The factorization they probe is exact only in the limit:
    /// each q_n carries a correction one power of t down, dressed by the
    /// oscillating equilibration tail.
    fn coefficient_ratios(n: usize, steps: usize) -> (f64, f64, f64) {
        let (h, dt) = (1.5, 0.05);
        let model = FreeFermionModel::new(n, h, dt).unwrap();
        let lambda = x_noise_decay_rate(&model);
        let series = sigma_n_series(&model, 3, steps).unwrap();
        let base = series[0][steps];
        let x = lambda * steps as f64 * dt;
        (
            series[1][steps] * dt / (base * -x),
            series[2][steps] * dt * dt / (base * x * x / 2.0),
            series[3][steps] * dt * dt * dt / (base * -x * x * x / 6.0),
        )
    }

    #[test]
    fn sigma_ratios_factorize_geometrically() {
        // At λ t̃ ≈ 1 only the linear coefficient has settled; the quadratic
        // one still sits about 1.7× above its limit. Deep in the decay
        // (λ t̃ ≈ 12, still well before the finite-size revival at t̃ ≈ N/4)
        // all three match (−x)ⁿ/n! and the early deviations have shrunk.
        let (q1_near, q2_near, q3_near) = coefficient_ratios(64, 23);
        assert!((q1_near - 1.0).abs() < 0.2, "order 1 early: {q1_near}");

        let (q1_far, q2_far, q3_far) = coefficient_ratios(128, 276);
        assert!((q1_far - 1.0).abs() < 0.02, "order 1 late: {q1_far}");
        assert!((q2_far - 1.0).abs() < 0.10, "order 2 late: {q2_far}");
        assert!((q3_far - 1.0).abs() < 0.20, "order 3 late: {q3_far}");
        assert!(
            (q2_far - 1.0).abs() < (q2_near - 1.0).abs()
                && (q3_far - 1.0).abs() < (q3_near - 1.0).abs(),
            "no convergence: q2 {q2_near}->{q2_far}, q3 {q3_near}->{q3_far}"
        );
    }

    #[test]
    fn trajectory_sectors_reproduce_first_order_coefficient() {
        // Trajectories binned by error count: with M = N·steps slots,
        // Σ₁ = M(mean₁ − mean₀) exactly, up to sampling error. The higher
        // sector means factorize: the damage of n errors is n times (in the
        // multiplicative sense) the damage of one.
        let (n, h, dt, steps) = (32usize, 1.5, 0.05, 23usize);
        let model = FreeFermionModel::new(n, h, dt).unwrap();
        let slots = (n * steps) as f64;
        let eta = 1.5 / (slots * dt); // mean error count ≈ 1.5
        let data = sectorized_final_values(&model, eta, steps, 2000, 41).unwrap();

        let mut sums = [0.0f64; 4];
        let mut counts = [0usize; 4];
        for &(errs, value) in &data {
            let e = errs as usize;
            if e < 4 {
                sums[e] += value;
                counts[e] += 1;
            }
        }
        for (i, &c) in counts.iter().enumerate() {
            assert!(c > 50, "sector {i} underpopulated: {c} of 2000");
        }
        let mean: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();

        let sigma1 = sigma1_free_fermion(&model, steps);
        let mc_sigma1 = slots * (mean[1] - mean[0]);
        assert!(
            (mc_sigma1 - sigma1).abs() < 0.2 * sigma1.abs(),
            "sampled {mc_sigma1} vs exact {sigma1}"
        );

        let d = mean[1] / mean[0];
        for order in 2..4 {
            let damage = 1.0 - mean[order] / mean[0];
            let predicted = 1.0 - d.powi(order as i32);
            assert!(
                (damage - predicted).abs() < 0.2 * predicted,
                "order {order}: damage {damage} vs factorized {predicted}"
            );
        }
    }

    /// Jordan-Wigner Majorana as an explicit Pauli string:
    /// η_{2j} = X_0…X_{j−1} Z_j, η_{2j+1} = X_0…X_{j−1} Y_j.
    fn eta_string(a: usize) -> PauliString {
        let site = a / 2;
        let mut letters: Vec<(usize, PauliKind)> =
            (0..site).map(|l| (l, PauliKind::X)).collect();
        letters.push((site, if a % 2 == 0 { PauliKind::Z } else { PauliKind::Y }));
        PauliString::from_letters(&letters)
    }

    fn bilinear(n_sites: usize, a: usize, b: usize) -> PauliOperator {
        let mut op = PauliOperator::zero(n_sites);
        op.add_term(eta_string(a).mul(&eta_string(b)), Complex64::new(0.0, 1.0));
        op
    }

    fn averaged_x_channel(n_sites: usize, o: &DenseOperator) -> DenseOperator {
        let mut out = DenseOperator::zeros(n_sites);
        for j in 0..n_sites {
            let mut xj = PauliOperator::zero(n_sites);
            xj.add_term(PauliString::x_on(j), Complex64::new(1.0, 0.0));
            let xd = xj.to_dense();
            let mut conj = xd.matmul(&o.matmul(&xd));
            conj.sub_assign(o);
            out.add_assign(&conj);
        }
        out
    }

    fn plus_expectation(o: &DenseOperator) -> f64 {
        let dim = o.dim();
        let amp = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        let psi = vec![amp; dim];
        let applied = o.apply(&psi);
        psi.iter()
            .zip(&applied)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    #[test]
    fn averaged_channel_matches_quadratic_noise_map() {
        // Σ_j(X_j O X_j − O) = −4O + 4⟨O⟩S_x for translation-invariant
        // quadratic O, all bond offsets including the wrap-around, which the
        // all-X Jordan-Wigner string makes exactly as noisy as a bulk bond.
        let n = 6;
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let mut op = PauliOperator::zero(n);
        for offset in 1..=3usize {
            let (ca, cb): (f64, f64) =
                (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            for j in 0..n {
                let a = 2 * j + 1;
                let b = (2 * j + 2 * offset) % (2 * n);
                for (p, c) in bilinear(n, a, b).terms() {
                    op.add_term(p, c * ca);
                }
                let a2 = 2 * j;
                let b2 = (2 * j + 2 * offset + 1) % (2 * n);
                for (p, c) in bilinear(n, a2, b2).terms() {
                    op.add_term(p, c * cb);
                }
            }
        }
        let gamma: f64 = rng.gen_range(-1.0..1.0);
        for j in 0..n {
            for (p, c) in bilinear(n, 2 * j, 2 * j + 1).terms() {
                op.add_term(p, c * gamma);
            }
        }

        let dense = op.to_dense();
        let channel = averaged_x_channel(n, &dense);

        let mut sx = PauliOperator::zero(n);
        for j in 0..n {
            sx.add_term(PauliString::x_on(j), Complex64::new(1.0 / n as f64, 0.0));
        }
        let mut expected = dense.clone();
        expected.scale(Complex64::new(-4.0, 0.0));
        let mut sx_part = sx.to_dense();
        sx_part.scale(Complex64::new(4.0 * plus_expectation(&dense), 0.0));
        expected.add_assign(&sx_part);

        assert!(
            channel.max_abs_diff(&expected) < 1e-10,
            "map defect {}",
            channel.max_abs_diff(&expected)
        );
    }

    #[test]
    fn seam_bond_as_noisy_as_bulk_bond() {
        let n = 6;
        for (a, b) in [(1usize, 2usize), (2 * n - 1, 0)] {
            let dense = bilinear(n, a, b).to_dense();
            let channel = averaged_x_channel(n, &dense);
            let mut expected = dense.clone();
            expected.scale(Complex64::new(-4.0, 0.0));
            assert!(
                channel.max_abs_diff(&expected) < 1e-12,
                "bilinear ({a},{b}) defect {}",
                channel.max_abs_diff(&expected)
            );
        }
    }
}
