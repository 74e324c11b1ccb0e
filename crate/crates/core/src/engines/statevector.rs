//! Pure-state engine.
//!
//! Amplitudes are stored dense over computational basis states; bit j of the
//! index is the Z eigenvalue of site j (0 -> +1). One Trotter step applies
//! the transverse-field rotations exp(-i dt h X_j) on every site and then the
//! coupling layer exp(-i dt Z_a Z_b) over the lattice edges. The coupling
//! layer is diagonal and handled by a precomputed phase table.

use num_complex::Complex64;

use crate::bits::chunked_sum;
use crate::engines::kernels::ZzPhaseTable;
use crate::error::{Error, Result};
use crate::model::circuit::TrotterCircuit;
use crate::model::observable::{binomial, ObservableSpec};
use crate::pauli::string::PauliString;
use crate::pauli::transform::RelevantBasis;

pub const MAX_STATEVECTOR_SITES: usize = 26;

/// Product initial states the quench protocols use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductState {
    /// Every site in the +1 eigenstate of X.
    PlusX,
    /// Every site in |0> (the +1 eigenstate of Z).
    ZeroZ,
    /// Every site in the +1 eigenstate of Y.
    PlusY,
}

impl ProductState {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "plus" | "plus_x" | "x+" => Ok(ProductState::PlusX),
            "zero" | "zero_z" | "z+" => Ok(ProductState::ZeroZ),
            "y_plus" | "plus_y" | "y+" => Ok(ProductState::PlusY),
            other => Err(Error::invalid(format!("unknown product state {other:?}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ProductState::PlusX => "plus",
            ProductState::ZeroZ => "zero",
            ProductState::PlusY => "y_plus",
        }
    }
}

#[derive(Debug, Clone)]
pub struct StateVector {
    n_sites: usize,
    pub amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new_product(n_sites: usize, init: ProductState) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_STATEVECTOR_SITES {
            return Err(Error::SystemTooLarge {
                context: "statevector",
                n_sites,
                max_sites: MAX_STATEVECTOR_SITES,
            });
        }
        let dim = 1usize << n_sites;
        let amps = match init {
            ProductState::ZeroZ => {
                let mut a = vec![Complex64::new(0.0, 0.0); dim];
                a[0] = Complex64::new(1.0, 0.0);
                a
            }
            ProductState::PlusX => {
                let w = Complex64::new((dim as f64).sqrt().recip(), 0.0);
                vec![w; dim]
            }
            ProductState::PlusY => {
                // |y+> = (|0> + i|1>)/sqrt(2) per site: amplitude i^{popcount}.
                let w = (dim as f64).sqrt().recip();
                (0..dim)
                    .map(|b| {
                        let ph = match (b as u64).count_ones() & 3 {
                            0 => Complex64::new(1.0, 0.0),
                            1 => Complex64::new(0.0, 1.0),
                            2 => Complex64::new(-1.0, 0.0),
                            _ => Complex64::new(0.0, -1.0),
                        };
                        ph * w
                    })
                    .collect()
            }
        };
        Ok(StateVector { n_sites, amps })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        chunked_sum(self.amps.len(), 1 << 12, |i| self.amps[i].norm_sqr())
    }

    /// exp(-i theta X_j) on one site.
    pub fn apply_x_rotation(&mut self, site: usize, theta: f64) {
        debug_assert!(site < self.n_sites);
        let (c, s) = (theta.cos(), theta.sin());
        let mis = Complex64::new(0.0, -s);
        let bit = 1usize << site;
        let mut g = 0;
        while g < self.amps.len() {
            let (lo, hi) = self.amps[g..g + 2 * bit].split_at_mut(bit);
            for (u, v) in lo.iter_mut().zip(hi.iter_mut()) {
                let a = *u;
                let b = *v;
                *u = c * a + mis * b;
                *v = mis * a + c * b;
            }
            g += 2 * bit;
        }
    }

    /// exp(-i theta X_j) on every site.
    pub fn apply_x_layer(&mut self, theta: f64) {
        for j in 0..self.n_sites {
            self.apply_x_rotation(j, theta);
        }
    }

    /// Whole coupling layer via the phase table; `lut` must come from
    /// `table.phase_lut(dt)` (or `-dt` for the inverse).
    pub fn apply_zz_layer(&mut self, table: &ZzPhaseTable, lut: &[Complex64]) {
        debug_assert_eq!(table.k.len(), self.amps.len());
        let off = table.num_edges as i32;
        for (a, &k) in self.amps.iter_mut().zip(table.k.iter()) {
            *a *= lut[(k as i32 + off) as usize];
        }
    }

    /// exp(-i theta Z_a Z_b) for a single edge.
    pub fn apply_zz_edge(&mut self, a: usize, b: usize, theta: f64) {
        let pa = Complex64::new(0.0, -theta).exp();
        let pb = Complex64::new(0.0, theta).exp();
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            let same = ((idx >> a) ^ (idx >> b)) & 1 == 0;
            *amp *= if same { pa } else { pb };
        }
    }

    /// Left-multiplies by a Pauli string (used for error insertion).
    pub fn apply_pauli(&mut self, p: &PauliString) {
        let x = p.x as usize;
        debug_assert!(x < self.dim() && (p.z as usize) < self.dim());
        let ph = p.phase_factor();
        if x == 0 {
            for (b, a) in self.amps.iter_mut().enumerate() {
                let s = if ((b as u64 & p.z).count_ones() & 1) == 1 { -1.0 } else { 1.0 };
                *a *= ph * s;
            }
            return;
        }
        // out[b ^ x] = phase * (-1)^{z.b} in[b]: swap within orbit pairs.
        for b in 0..self.amps.len() {
            let partner = b ^ x;
            if partner < b {
                continue;
            }
            let sb = if ((b as u64 & p.z).count_ones() & 1) == 1 { -1.0 } else { 1.0 };
            let sp = if ((partner as u64 & p.z).count_ones() & 1) == 1 { -1.0 } else { 1.0 };
            let ab = self.amps[b];
            let ap = self.amps[partner];
            self.amps[partner] = ph * sb * ab;
            self.amps[b] = ph * sp * ap;
        }
    }

    /// <psi| P |psi>.
    pub fn pauli_expectation(&self, p: &PauliString) -> Complex64 {
        let x = p.x as usize;
        let ph = p.phase_factor();
        let dim = self.amps.len();
        let re = chunked_sum(dim, 1 << 12, |b| {
            let s = if ((b as u64 & p.z).count_ones() & 1) == 1 { -1.0 } else { 1.0 };
            (self.amps[b ^ x].conj() * (ph * s) * self.amps[b]).re
        });
        let im = chunked_sum(dim, 1 << 12, |b| {
            let s = if ((b as u64 & p.z).count_ones() & 1) == 1 { -1.0 } else { 1.0 };
            (self.amps[b ^ x].conj() * (ph * s) * self.amps[b]).im
        });
        Complex64::new(re, im)
    }

    /// Rotates a copy of the amplitudes so that measuring in the computational
    /// basis realizes a measurement of every site in `basis`, and returns the
    /// weight histogram W[m] = sum over outcomes with m minus signs of |amp|^2.
    pub fn outcome_weight_histogram(&self, basis: RelevantBasis) -> Vec<f64> {
        let mut work = Vec::new();
        self.outcome_weight_histogram_with(basis, &mut work)
    }

    /// Same, reusing a caller-held buffer so repeated evaluation allocates
    /// nothing after the first call.
    pub fn outcome_weight_histogram_with(
        &self,
        basis: RelevantBasis,
        work: &mut Vec<Complex64>,
    ) -> Vec<f64> {
        work.clear();
        work.extend_from_slice(&self.amps);
        rotate_to_basis(work, self.n_sites, basis);
        let mut hist = vec![0.0f64; self.n_sites + 1];
        for (b, a) in work.iter().enumerate() {
            hist[(b as u64).count_ones() as usize] += a.norm_sqr();
        }
        hist
    }

    /// Exact expectation of the symmetrized weight-k observables
    /// S^(k) = C(N,k)^{-1} sum over k-site subsets of the product of `basis`
    /// Paulis, for every requested k, sharing one basis rotation.
    pub fn sym_expectations(&self, basis: RelevantBasis, ks: &[usize]) -> Result<Vec<f64>> {
        for &k in ks {
            if k > self.n_sites {
                return Err(Error::invalid(format!(
                    "weight {k} exceeds {} sites",
                    self.n_sites
                )));
            }
        }
        let hist = self.outcome_weight_histogram(basis);
        Ok(sym_from_weight_histogram(&hist, self.n_sites, ks))
    }

    pub fn expectation(&self, obs: &ObservableSpec) -> Result<f64> {
        match obs {
            ObservableSpec::SymmetrizedWeightK { k, basis } => {
                let basis = RelevantBasis::from_kind(*basis)?;
                Ok(self.sym_expectations(basis, &[*k])?[0])
            }
            ObservableSpec::GlobalParity => {
                Ok(self.sym_expectations(RelevantBasis::XType, &[self.n_sites])?[0])
            }
            ObservableSpec::SitePauli { site, kind } => {
                if *site >= self.n_sites {
                    return Err(Error::invalid(format!("site {site} out of range")));
                }
                let p = PauliString::from_letters(&[(*site, *kind)]);
                Ok(self.pauli_expectation(&p).re)
            }
            ObservableSpec::Custom(op) => {
                if op.n_sites() != self.n_sites {
                    return Err(Error::incompatible("operator size mismatch"));
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for (p, coeff) in op.terms() {
                    acc += coeff * self.pauli_expectation(&p);
                }
                Ok(acc.re)
            }
        }
    }

    /// Samples `shots` single-shot outcomes of an all-site `basis` measurement
    /// and returns the counts histogram over the number of minus results.
    pub fn sample_minus_counts(
        &self,
        basis: RelevantBasis,
        shots: usize,
        rng: &mut impl rand::Rng,
    ) -> Vec<u64> {
        let mut work = self.amps.clone();
        rotate_to_basis(&mut work, self.n_sites, basis);
        let mut cum = Vec::with_capacity(work.len());
        let mut acc = 0.0f64;
        for a in &work {
            acc += a.norm_sqr();
            cum.push(acc);
        }
        let total = acc;
        let mut hist = vec![0u64; self.n_sites + 1];
        for _ in 0..shots {
            let u: f64 = rng.gen::<f64>() * total;
            let idx = cum.partition_point(|&c| c <= u).min(work.len() - 1);
            hist[(idx as u64).count_ones() as usize] += 1;
        }
        hist
    }
}

/// In-place single-site basis change taking `basis` eigenstates to the
/// computational basis (bit = 1 means the -1 eigenstate).
pub(crate) fn rotate_to_basis(amps: &mut [Complex64], n_sites: usize, basis: RelevantBasis) {
    match basis {
        RelevantBasis::ZType => {}
        RelevantBasis::XType => {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            for j in 0..n_sites {
                let bit = 1usize << j;
                let mut g = 0;
                while g < amps.len() {
                    let (lo, hi) = amps[g..g + 2 * bit].split_at_mut(bit);
                    for (u, v) in lo.iter_mut().zip(hi.iter_mut()) {
                        let a = *u;
                        let b = *v;
                        *u = r * (a + b);
                        *v = r * (a - b);
                    }
                    g += 2 * bit;
                }
            }
        }
        RelevantBasis::YType => {
            // <y+|psi> = (a0 - i a1)/sqrt2, <y-|psi> = (a0 + i a1)/sqrt2.
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let mi = Complex64::new(0.0, -1.0);
            let pi = Complex64::new(0.0, 1.0);
            for j in 0..n_sites {
                let bit = 1usize << j;
                let mut g = 0;
                while g < amps.len() {
                    let (lo, hi) = amps[g..g + 2 * bit].split_at_mut(bit);
                    for (u, v) in lo.iter_mut().zip(hi.iter_mut()) {
                        let a = *u;
                        let b = *v;
                        *u = r * (a + mi * b);
                        *v = r * (a + pi * b);
                    }
                    g += 2 * bit;
                }
            }
        }
    }
}

/// e(k, m) = [z^k] (1+z)^{N-m} (1-z)^m; the expectation of the unnormalized
/// weight-k symmetric sum given m minus outcomes among N sites.
pub fn weight_k_kernel(n_sites: usize, m: usize) -> Vec<f64> {
    let mut poly = vec![0.0f64; n_sites + 1];
    poly[0] = 1.0;
    let mut deg = 0usize;
    for step in 0..n_sites {
        let sign = if step < n_sites - m { 1.0 } else { -1.0 };
        deg += 1;
        for d in (1..=deg).rev() {
            poly[d] += sign * poly[d - 1];
        }
    }
    poly
}

/// S^(k) values from a weight histogram (probabilities or counts).
pub fn sym_from_weight_histogram(hist: &[f64], n_sites: usize, ks: &[usize]) -> Vec<f64> {
    debug_assert_eq!(hist.len(), n_sites + 1);
    let total: f64 = hist.iter().sum();
    let mut out = vec![0.0f64; ks.len()];
    for (m, &w) in hist.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let kern = weight_k_kernel(n_sites, m);
        for (slot, &k) in ks.iter().enumerate() {
            out[slot] += w * kern[k];
        }
    }
    for (slot, &k) in ks.iter().enumerate() {
        out[slot] /= total * binomial(n_sites, k);
    }
    out
}

/// Runs a quench, invoking `on_step(step, state)` after every Trotter step
/// (step counts from 1). The state starts in `init` at step 0.
pub fn evolve_statevector(
    circuit: &TrotterCircuit,
    init: ProductState,
    mut on_step: impl FnMut(usize, &StateVector) -> Result<()>,
) -> Result<StateVector> {
    let n = circuit.n_sites();
    let mut state = StateVector::new_product(n, init)?;
    let edges = circuit.ordered_edges();
    let table = ZzPhaseTable::build(n, &edges);
    let lut = table.phase_lut(circuit.dt);
    for step in 1..=circuit.num_steps {
        let theta = circuit.dt * circuit.h_at(step);
        state.apply_x_layer(theta);
        state.apply_zz_layer(&table, &lut);
        on_step(step, &state)?;
    }
    Ok(state)
}
