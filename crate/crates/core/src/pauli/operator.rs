//! Sparse operators: complex combinations of Pauli strings.
//!
//! Coefficients are stored against the *Hermitian* form of each string, so a
//! Hermitian operator has (numerically) real coefficients. Keys are ordered,
//! which makes every reduction over terms deterministic.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;

use super::dense::DenseOperator;
use super::string::PauliString;

#[derive(Debug, Clone)]
pub struct PauliOperator {
    n_sites: usize,
    terms: BTreeMap<(u64, u64), Complex64>,
}

/// Rewrite an arbitrary-phase string as (coefficient) * (Hermitian string).
fn fold_canonical(p: &PauliString) -> ((u64, u64), Complex64) {
    let canonical = ((p.x & p.z).count_ones() % 4) as u8;
    let extra = (p.phase + 4 - canonical) & 3;
    let factor = match extra {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    ((p.x, p.z), factor)
}

impl PauliOperator {
    pub fn zero(n_sites: usize) -> Self {
        assert!(n_sites <= 64);
        PauliOperator { n_sites, terms: BTreeMap::new() }
    }

    pub fn identity(n_sites: usize) -> Self {
        let mut op = Self::zero(n_sites);
        op.add_term(PauliString::IDENTITY, Complex64::new(1.0, 0.0));
        op
    }

    pub fn from_terms(n_sites: usize, terms: &[(PauliString, Complex64)]) -> Self {
        let mut op = Self::zero(n_sites);
        for (p, c) in terms {
            op.add_term(*p, *c);
        }
        op
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add_term(&mut self, p: PauliString, coeff: Complex64) {
        let (key, factor) = fold_canonical(&p);
        let entry = self.terms.entry(key).or_insert(Complex64::new(0.0, 0.0));
        *entry += coeff * factor;
    }

    /// Add `coeff` times the Hermitian string with masks (x, z).
    pub fn add_hermitian_term(&mut self, x: u64, z: u64, coeff: f64) {
        let entry = self.terms.entry((x, z)).or_insert(Complex64::new(0.0, 0.0));
        *entry += coeff;
    }

    /// Iterate (Hermitian string, coefficient), ordered by (x, z) masks.
    pub fn terms(&self) -> impl Iterator<Item = (PauliString, Complex64)> + '_ {
        self.terms
            .iter()
            .map(|(&(x, z), &c)| (PauliString::hermitian(x, z), c))
    }

    pub fn coefficient(&self, x: u64, z: u64) -> Complex64 {
        self.terms.get(&(x, z)).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn scale(&mut self, factor: Complex64) {
        for c in self.terms.values_mut() {
            *c *= factor;
        }
    }

    pub fn add_assign(&mut self, other: &PauliOperator) {
        assert_eq!(self.n_sites, other.n_sites);
        for (&key, &c) in &other.terms {
            let entry = self.terms.entry(key).or_insert(Complex64::new(0.0, 0.0));
            *entry += c;
        }
    }

    /// Drop terms with |coefficient| <= eps.
    pub fn prune(&mut self, eps: f64) {
        self.terms.retain(|_, c| c.norm() > eps);
    }

    pub fn dagger(&self) -> PauliOperator {
        // Hermitian basis strings are self-adjoint, so only conjugate coefficients.
        let mut out = Self::zero(self.n_sites);
        for (&key, &c) in &self.terms {
            out.terms.insert(key, c.conj());
        }
        out
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    /// Sum of |coefficient|^2. By the orthogonality of Pauli strings this is
    /// 2^{-n} tr(A^dag A).
    pub fn norm2(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn mul(&self, other: &PauliOperator) -> PauliOperator {
        assert_eq!(self.n_sites, other.n_sites);
        let mut out = Self::zero(self.n_sites);
        for (pa, ca) in self.terms() {
            for (pb, cb) in other.terms() {
                out.add_term(pa.mul(&pb), ca * cb);
            }
        }
        out
    }

    /// i [A, B]; Hermitian when A and B are.
    pub fn commutator_i(a: &PauliOperator, b: &PauliOperator) -> PauliOperator {
        assert_eq!(a.n_sites, b.n_sites);
        let mut out = Self::zero(a.n_sites);
        let i2 = Complex64::new(0.0, 2.0);
        for (pa, ca) in a.terms() {
            for (pb, cb) in b.terms() {
                // Commuting strings cancel between AB and BA; anticommuting
                // ones double up.
                if !pa.commutes_with(&pb) {
                    out.add_term(pa.mul(&pb), i2 * ca * cb);
                }
            }
        }
        out.prune(0.0);
        out
    }

    pub fn expectation(&self, psi: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, c) in self.terms() {
            acc += c * p.expectation(psi);
        }
        acc
    }

    pub fn to_dense(&self) -> DenseOperator {
        let mut dense = DenseOperator::zeros(self.n_sites);
        let dim = dense.dim();
        for (p, coeff) in self.terms() {
            let ph = p.phase_factor() * coeff;
            for col in 0..dim {
                let row = col ^ p.x as usize;
                let sign = if ((col as u64 & p.z).count_ones()) & 1 == 0 { 1.0 } else { -1.0 };
                dense.a[row * dim + col] += ph * sign;
            }
        }
        dense
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (p, c)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)*{}", c.re, c.im, p)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::string::PauliKind;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn random_operator(n: usize, n_terms: usize, rng: &mut ChaCha12Rng) -> PauliOperator {
        let mut op = PauliOperator::zero(n);
        for _ in 0..n_terms {
            let x = rng.gen::<u64>() & ((1 << n) - 1);
            let z = rng.gen::<u64>() & ((1 << n) - 1);
            let c = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            op.add_term(PauliString::hermitian(x, z), c);
        }
        op
    }

    #[test]
    fn operator_product_matches_dense_product() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..10 {
            let a = random_operator(3, 4, &mut rng);
            let b = random_operator(3, 4, &mut rng);
            let ab = a.mul(&b);
            let dense_direct = a.to_dense().matmul(&b.to_dense());
            let dense_via_terms = ab.to_dense();
            assert!(dense_direct.max_abs_diff(&dense_via_terms) < 1e-12);
        }
    }

    #[test]
    fn commutator_i_is_hermitian_and_matches_dense() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..10 {
            let mut a = random_operator(3, 5, &mut rng);
            let mut b = random_operator(3, 5, &mut rng);
            // Make both Hermitian by keeping only real parts.
            a = hermitize(&a);
            b = hermitize(&b);
            let c = PauliOperator::commutator_i(&a, &b);
            assert!(c.is_hermitian(1e-12));
            let da = a.to_dense();
            let db = b.to_dense();
            let mut want = da.matmul(&db);
            want.sub_assign(&db.matmul(&da));
            want.scale(Complex64::new(0.0, 1.0));
            assert!(want.max_abs_diff(&c.to_dense()) < 1e-12);
        }
    }

    fn hermitize(op: &PauliOperator) -> PauliOperator {
        let mut out = PauliOperator::zero(op.n_sites());
        for (p, c) in op.terms() {
            out.add_term(p, Complex64::new(c.re, 0.0));
        }
        out
    }

    #[test]
    fn expectation_matches_dense_action() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let op = random_operator(3, 6, &mut rng);
        let mut psi: Vec<Complex64> = (0..8)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in psi.iter_mut() {
            *a /= norm;
        }
        let dense = op.to_dense();
        let applied = dense.apply(&psi);
        let want: Complex64 = psi.iter().zip(&applied).map(|(a, b)| a.conj() * b).sum();
        assert!((op.expectation(&psi) - want).norm() < 1e-12);
    }

    #[test]
    fn from_letters_y_pair_squares_to_identity() {
        let yy = PauliString::from_letters(&[(0, PauliKind::Y), (1, PauliKind::Y)]);
        let op = PauliOperator::from_terms(2, &[(yy, Complex64::new(1.0, 0.0))]);
        let sq = op.mul(&op);
        assert!((sq.coefficient(0, 0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(sq.n_terms(), 1);
    }
}
