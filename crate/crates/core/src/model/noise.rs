//! Pauli noise channels.
//!
//! Every channel here has the form
//!
//! ```text
//! N(rho) = (1 - c eps) rho + eps * sum_u w_u K_u rho K_u
//! ```
//!
//! with Pauli Kraus operators K_u on one site or one edge and c = sum_u w_u,
//! so the weights plus the identity weight sum to one. Because the K_u are
//! Pauli strings, the channel is diagonal in the Pauli basis: a string P is
//! scaled by f_P = (1 - c eps) + eps sum_u w_u s(P, K_u), where s = +1 when P
//! and K_u commute on the support and -1 otherwise. The engines consume these
//! transfer eigenvalues directly; the Kraus form is kept for trajectory
//! sampling and for exact small-system checks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{DenseOperator, PauliKind, PauliString};

/// When the channel acts during a Trotter step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cadence {
    /// Once per step: on every site (arity 1) or every edge (arity 2).
    PerStep,
    /// Right after each two-qubit gate, on that gate's edge (arity 2 only).
    PerTwoQubitGate,
}

#[derive(Debug, Clone)]
pub struct KrausTerm {
    pub weight: f64,
    /// One letter for single-site channels, two for edge channels.
    pub letters: (PauliKind, Option<PauliKind>),
}

impl KrausTerm {
    fn one(weight: f64, a: PauliKind) -> Self {
        KrausTerm { weight, letters: (a, None) }
    }

    fn two(weight: f64, a: PauliKind, b: PauliKind) -> Self {
        KrausTerm { weight, letters: (a, Some(b)) }
    }
}

#[derive(Debug, Clone)]
pub struct NoiseChannel {
    pub kraus: Vec<KrausTerm>,
    pub epsilon: f64,
    pub cadence: Cadence,
    pub name: String,
}

fn letters_commute(a: PauliKind, b: PauliKind) -> bool {
    a == PauliKind::I || b == PauliKind::I || a == b
}

impl NoiseChannel {
    /* ---------------- presets ---------------- */

    /// Deterministic X kick with probability eps.
    pub fn single_pauli_x(epsilon: f64) -> Result<Self> {
        let ch = NoiseChannel {
            kraus: vec![KrausTerm::one(1.0, PauliKind::X)],
            epsilon,
            cadence: Cadence::PerStep,
            name: "single_pauli_x".into(),
        };
        ch.validate_physical()?;
        Ok(ch)
    }

    /// (1 - 3 eps/4) rho + (eps/4)(X rho X + Y rho Y + Z rho Z).
    pub fn depolarizing_1q(epsilon: f64) -> Result<Self> {
        let ch = Self::depolarizing_1q_signed(epsilon);
        ch.validate_physical()?;
        Ok(ch)
    }

    /// Same kernel without the positivity check. Finite-difference probes
    /// evaluate derivatives with small negative eps; the algebra is identical.
    pub fn depolarizing_1q_signed(epsilon: f64) -> Self {
        NoiseChannel {
            kraus: vec![
                KrausTerm::one(0.25, PauliKind::X),
                KrausTerm::one(0.25, PauliKind::Y),
                KrausTerm::one(0.25, PauliKind::Z),
            ],
            epsilon,
            cadence: Cadence::PerStep,
            name: "depolarizing_1q".into(),
        }
    }

    /// Measured two-qubit error probabilities of a trapped-ion ZZ gate at
    /// angle theta, with the four double-bit-flip entries (all < 1e-5)
    /// dropped. Probabilities scale as p(theta) = (0.418 theta + 0.34) p(pi/2).
    pub fn h1_1_two_qubit(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid(format!(
                "gate angle must lie in (0, pi/2], got {theta}"
            )));
        }
        use PauliKind::*;
        let table: [(PauliKind, PauliKind, f64); 11] = [
            (I, X, 0.000124),
            (I, Y, 0.000124),
            (I, Z, 0.000327),
            (X, I, 0.000114),
            (X, Z, 0.000114),
            (Y, I, 0.000114),
            (Y, Z, 0.000114),
            (Z, I, 0.000221),
            (Z, X, 0.000124),
            (Z, Y, 0.000124),
            (Z, Z, 0.000122),
        ];
        let scale = 0.418 * theta + 0.34;
        let kraus = table
            .iter()
            .map(|&(a, b, p)| KrausTerm::two(p * scale, a, b))
            .collect();
        let ch = NoiseChannel {
            kraus,
            // Probabilities are absolute: fold them into the weights and keep
            // the strength knob at 1.
            epsilon: 1.0,
            cadence: Cadence::PerStep,
            name: "h1_1_two_qubit".into(),
        };
        ch.validate_physical()?;
        Ok(ch)
    }

    pub fn build_noise_preset(name: &str, param: f64) -> Result<Self> {
        match name {
            "single_pauli_X" | "single_pauli_x" => Self::single_pauli_x(param),
            "depolarizing_1q" => Self::depolarizing_1q(param),
            "h1_1_two_qubit" => Self::h1_1_two_qubit(param),
            other => Err(Error::invalid(format!("unknown noise preset '{other}'"))),
        }
    }

    pub fn with_cadence(mut self, cadence: Cadence) -> Result<Self> {
        if cadence == Cadence::PerTwoQubitGate && self.arity() != 2 {
            return Err(Error::incompatible(
                "per-gate cadence needs a two-site channel",
            ));
        }
        self.cadence = cadence;
        Ok(self)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /* ---------------- structure ---------------- */

    pub fn arity(&self) -> usize {
        match self.kraus.first() {
            Some(k) if k.letters.1.is_some() => 2,
            _ => 1,
        }
    }

    /// c = sum of Kraus weights; the identity keeps weight 1 - c eps.
    pub fn c_total(&self) -> f64 {
        self.kraus.iter().map(|k| k.weight).sum()
    }

    pub fn identity_weight(&self) -> f64 {
        1.0 - self.c_total() * self.epsilon
    }

    pub fn validate_physical(&self) -> Result<()> {
        let mixed = self
            .kraus
            .iter()
            .any(|k| (k.letters.1.is_some()) != (self.arity() == 2));
        if mixed {
            return Err(Error::invalid("channel mixes one- and two-site Kraus terms"));
        }
        if self.kraus.iter().any(|k| k.weight < 0.0) {
            return Err(Error::invalid("Kraus weights must be nonnegative"));
        }
        if self.epsilon < 0.0 {
            return Err(Error::invalid("error probability must be nonnegative"));
        }
        let idw = self.identity_weight();
        if !(0.0..=1.0 + 1e-12).contains(&idw) {
            return Err(Error::invalid(format!(
                "identity weight {idw} outside [0, 1]"
            )));
        }
        Ok(())
    }

    /* ---------------- Pauli-basis action ---------------- */

    /// Transfer eigenvalues of a single-site channel, indexed I, X, Y, Z.
    pub fn transfer_eigenvalues_1(&self) -> [f64; 4] {
        assert_eq!(self.arity(), 1, "single-site eigenvalues of an edge channel");
        let base = self.identity_weight();
        let letters = [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z];
        let mut f = [0.0; 4];
        for (i, p) in letters.iter().enumerate() {
            let mut acc = base;
            for k in &self.kraus {
                let s = if letters_commute(*p, k.letters.0) { 1.0 } else { -1.0 };
                acc += self.epsilon * k.weight * s;
            }
            f[i] = acc;
        }
        f
    }

    /// Transfer eigenvalues of an edge channel, indexed 4*a + b with letters
    /// ordered I, X, Y, Z; index a refers to the first site of the edge.
    pub fn transfer_eigenvalues_2(&self) -> [f64; 16] {
        assert_eq!(self.arity(), 2, "edge eigenvalues of a single-site channel");
        let base = self.identity_weight();
        let letters = [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z];
        let mut f = [0.0; 16];
        for (ia, a) in letters.iter().enumerate() {
            for (ib, b) in letters.iter().enumerate() {
                let mut acc = base;
                for k in &self.kraus {
                    let kb = k.letters.1.unwrap();
                    let commute =
                        letters_commute(*a, k.letters.0) == letters_commute(*b, kb);
                    acc += self.epsilon * k.weight * if commute { 1.0 } else { -1.0 };
                }
                f[ia * 4 + ib] = acc;
            }
        }
        f
    }

    /// Kraus string acting on the given support sites.
    pub fn kraus_string(&self, term: usize, sites: (usize, Option<usize>)) -> PauliString {
        let k = &self.kraus[term];
        let mut letters = vec![(sites.0, k.letters.0)];
        if let Some(b) = k.letters.1 {
            letters.push((sites.1.expect("edge channel needs two sites"), b));
        }
        PauliString::from_letters(&letters)
    }

    /// Exact dense action on a density matrix; the slow reference used to
    /// validate the fused kernels.
    pub fn apply_to_dense(&self, rho: &DenseOperator, sites: (usize, Option<usize>)) -> DenseOperator {
        let mut out = rho.clone();
        out.scale(Complex64::new(self.identity_weight(), 0.0));
        for (idx, term) in self.kraus.iter().enumerate() {
            let k = self.kraus_string(idx, sites);
            let op = crate::PauliOperator::from_terms(
                rho.n_sites(),
                &[(k, Complex64::new(1.0, 0.0))],
            )
            .to_dense();
            let mut conj = op.matmul(rho).matmul(&op);
            conj.scale(Complex64::new(self.epsilon * term.weight, 0.0));
            out.add_assign(&conj);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn depolarizing_eigenvalues_are_one_minus_eps() {
        let eps = 0.37;
        let f = NoiseChannel::depolarizing_1q(eps).unwrap().transfer_eigenvalues_1();
        assert!((f[0] - 1.0).abs() < 1e-15);
        for p in 1..4 {
            assert!((f[p] - (1.0 - eps)).abs() < 1e-15, "letter {p}");
        }
    }

    #[test]
    fn x_kick_flips_z_and_y() {
        let f = NoiseChannel::single_pauli_x(0.2).unwrap().transfer_eigenvalues_1();
        assert!((f[0] - 1.0).abs() < 1e-15);
        assert!((f[1] - 1.0).abs() < 1e-15); // X survives
        assert!((f[2] - 0.6).abs() < 1e-15); // Y: 1 - 2 eps
        assert!((f[3] - 0.6).abs() < 1e-15); // Z: 1 - 2 eps
    }

    #[test]
    fn hardware_preset_scales_with_angle() {
        let full = NoiseChannel::h1_1_two_qubit(std::f64::consts::FRAC_PI_2).unwrap();
        let iz = full
            .kraus
            .iter()
            .find(|k| k.letters == (PauliKind::I, Some(PauliKind::Z)))
            .unwrap();
        let scale_half_pi = 0.418 * std::f64::consts::FRAC_PI_2 + 0.34;
        assert!((iz.weight - 0.000327 * scale_half_pi).abs() < 1e-12);

        let reduced = NoiseChannel::h1_1_two_qubit(0.3).unwrap();
        let ratio = reduced.c_total() / full.c_total();
        let want = (0.418 * 0.3 + 0.34) / scale_half_pi;
        assert!((ratio - want).abs() < 1e-12);
        // The 0.3-angle reduction factor is about 0.47 of the raw table.
        assert!((0.418f64 * 0.3 + 0.34 - 0.4654).abs() < 1e-12);
        assert_eq!(reduced.kraus.len(), 11);
    }

    #[test]
    fn eigenvalues_match_dense_action() {
        // Scale a random two-site density matrix through the dense Kraus sum
        // and compare against the Pauli-diagonal eigenvalue picture.
        use crate::pauli::{dense_to_pauli_in_place, pauli_index};
        let ch = NoiseChannel::h1_1_two_qubit(0.3).unwrap();
        let f = ch.transfer_eigenvalues_2();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut rho = DenseOperator::zeros(2);
        for v in rho.a.iter_mut() {
            *v = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        // Hermitize.
        let herm = {
            let mut h = rho.clone();
            let dag = rho.dagger();
            h.add_assign(&dag);
            h.scale(Complex64::new(0.5, 0.0));
            h
        };
        let out = ch.apply_to_dense(&herm, (0, Some(1)));
        let mut before = herm.a.clone();
        let mut after = out.a.clone();
        dense_to_pauli_in_place(2, &mut before);
        dense_to_pauli_in_place(2, &mut after);
        let letter_masks = [(0u64, 0u64), (1, 0), (1, 1), (0, 1)]; // I X Y Z
        for a in 0..4 {
            for b in 0..4 {
                let x = letter_masks[a].0 | (letter_masks[b].0 << 1);
                let z = letter_masks[a].1 | (letter_masks[b].1 << 1);
                let idx = pauli_index(x, z, 2);
                let want = before[idx] * f[a * 4 + b];
                assert!(
                    (after[idx] - want).norm() < 1e-13,
                    "letters ({a},{b})"
                );
            }
        }
    }

    #[test]
    fn trace_preserved_on_random_density_matrix() {
        let ch = NoiseChannel::depolarizing_1q(0.1).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let psi: Vec<Complex64> = (0..8)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<Complex64> = psi.into_iter().map(|a| a / norm).collect();
        let rho = DenseOperator::from_pure_state(&psi);
        let out = ch.apply_to_dense(&rho, (1, None));
        assert!((out.trace().re - 1.0).abs() < 1e-12);
        assert!(out.trace().im.abs() < 1e-14);
    }

    #[test]
    fn preset_validation() {
        assert!(NoiseChannel::build_noise_preset("depolarizing_1q", 0.0).is_ok());
        assert!(NoiseChannel::build_noise_preset("nope", 0.1).is_err());
        assert!(NoiseChannel::h1_1_two_qubit(0.0).is_err());
        assert!(NoiseChannel::h1_1_two_qubit(2.0).is_err());
        assert!(NoiseChannel::depolarizing_1q(2.0).is_err()); // identity weight < 0
        let per_gate = NoiseChannel::h1_1_two_qubit(0.3)
            .unwrap()
            .with_cadence(Cadence::PerTwoQubitGate);
        assert!(per_gate.is_ok());
        assert!(NoiseChannel::depolarizing_1q(0.1)
            .unwrap()
            .with_cadence(Cadence::PerTwoQubitGate)
            .is_err());
    }
}
