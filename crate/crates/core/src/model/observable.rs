//! Observable specifications.
//!
//! The workhorse family is the symmetrized weight-k product
//!
//! ```text
//! S_b^{(k)} = binom(N, k)^{-1} * sum_{|A| = k} prod_{j in A} P_j,   P in {X, Y, Z}
//! ```
//!
//! normalized so a product state polarized along +b gives expectation 1 at
//! every k. k = 1 is the magnetization, k = N the global parity along b.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliKind, PauliOperator, PauliString};

#[derive(Debug, Clone)]
pub enum ObservableSpec {
    /// Average of all weight-k products of one Pauli letter.
    SymmetrizedWeightK { k: usize, basis: PauliKind },
    SitePauli { site: usize, kind: PauliKind },
    /// Product of X over every site (= SymmetrizedWeightK with k = N).
    GlobalParity,
    Custom(PauliOperator),
}

/// Visit every n-bit mask of popcount k in ascending order (Gosper's hack).
pub fn for_each_weight_k_mask(n: usize, k: usize, mut f: impl FnMut(u64)) {
    assert!(k >= 1 && k <= n && n < 64);
    let limit = 1u64 << n;
    let mut v = (1u64 << k) - 1;
    while v < limit {
        f(v);
        let t = v | (v - 1);
        v = (t + 1) | (((!t & (t + 1)) - 1) >> (v.trailing_zeros() + 1));
    }
}

/// binom(n, k) as f64 (exact for the sizes used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

impl ObservableSpec {
    pub fn validate(&self, n_sites: usize) -> Result<()> {
        match self {
            ObservableSpec::SymmetrizedWeightK { k, basis } => {
                if *k < 1 || *k > n_sites {
                    return Err(Error::incompatible(format!(
                        "weight {k} outside 1..={n_sites}"
                    )));
                }
                if *basis == PauliKind::I {
                    return Err(Error::invalid("observable basis must be X, Y or Z"));
                }
                Ok(())
            }
            ObservableSpec::SitePauli { site, kind } => {
                if *site >= n_sites {
                    return Err(Error::incompatible(format!("site {site} off the lattice")));
                }
                if *kind == PauliKind::I {
                    return Err(Error::invalid("site observable must be X, Y or Z"));
                }
                Ok(())
            }
            ObservableSpec::GlobalParity => Ok(()),
            ObservableSpec::Custom(op) => {
                if op.n_sites() != n_sites {
                    return Err(Error::incompatible(format!(
                        "operator on {} sites used with {n_sites}-site system",
                        op.n_sites()
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            ObservableSpec::SymmetrizedWeightK { k, basis } => {
                format!("s{}_{k}", basis.as_char().to_ascii_lowercase())
            }
            ObservableSpec::SitePauli { site, kind } => {
                format!("{}{site}", kind.as_char().to_ascii_lowercase())
            }
            ObservableSpec::GlobalParity => "parity_x".into(),
            ObservableSpec::Custom(_) => "custom".into(),
        }
    }

    /// Expand into an explicit operator. Symmetrized specs with more than
    /// 2^20 terms are refused; use the engines' direct estimators there.
    pub fn as_operator(&self, n_sites: usize) -> Result<PauliOperator> {
        self.validate(n_sites)?;
        match self {
            ObservableSpec::SymmetrizedWeightK { k, basis } => {
                let count = binomial(n_sites, *k);
                if count > (1u64 << 20) as f64 {
                    return Err(Error::incompatible(format!(
                        "{count} terms is too many to expand; evaluate via an engine"
                    )));
                }
                let mut op = PauliOperator::zero(n_sites);
                let coeff = 1.0 / count;
                let (with_x, with_z) = match basis {
                    PauliKind::X => (true, false),
                    PauliKind::Y => (true, true),
                    PauliKind::Z => (false, true),
                    PauliKind::I => unreachable!(),
                };
                for_each_weight_k_mask(n_sites, *k, |mask| {
                    let x = if with_x { mask } else { 0 };
                    let z = if with_z { mask } else { 0 };
                    op.add_hermitian_term(x, z, coeff);
                });
                Ok(op)
            }
            ObservableSpec::SitePauli { site, kind } => Ok(PauliOperator::from_terms(
                n_sites,
                &[(
                    PauliString::from_letters(&[(*site, *kind)]),
                    Complex64::new(1.0, 0.0),
                )],
            )),
            ObservableSpec::GlobalParity => {
                let all = (1u64 << n_sites) - 1;
                let mut op = PauliOperator::zero(n_sites);
                op.add_hermitian_term(all, 0, 1.0);
                Ok(op)
            }
            ObservableSpec::Custom(op) => Ok(op.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(12, 2), 66.0);
        assert_eq!(binomial(20, 10), 184756.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(3, 7), 0.0);
    }

    #[test]
    fn weight_k_masks_enumerate_binomially_many() {
        let mut count = 0;
        for_each_weight_k_mask(10, 3, |m| {
            assert_eq!(m.count_ones(), 3);
            count += 1;
        });
        assert_eq!(count, 120);
    }

    #[test]
    fn symmetrized_operator_has_unit_expectation_in_polarized_state() {
        // |+>^4: every X-string has expectation 1, so S_x^{(k)} = 1.
        let n = 4;
        let dim = 1usize << n;
        let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        let plus = vec![amp; dim];
        for k in 1..=n {
            let spec = ObservableSpec::SymmetrizedWeightK { k, basis: PauliKind::X };
            let op = spec.as_operator(n).unwrap();
            let val = op.expectation(&plus);
            assert!((val.re - 1.0).abs() < 1e-12, "k={k}");
            assert!(val.im.abs() < 1e-14);
        }
    }

    #[test]
    fn parity_equals_weight_n_symmetrized() {
        let n = 3;
        let a = ObservableSpec::GlobalParity.as_operator(n).unwrap();
        let b = ObservableSpec::SymmetrizedWeightK { k: n, basis: PauliKind::X }
            .as_operator(n)
            .unwrap();
        assert!(a.to_dense().max_abs_diff(&b.to_dense()) < 1e-15);
    }

    #[test]
    fn validation_rejects_misuse() {
        assert!(ObservableSpec::SymmetrizedWeightK { k: 0, basis: PauliKind::X }
            .validate(4)
            .is_err());
        assert!(ObservableSpec::SymmetrizedWeightK { k: 5, basis: PauliKind::X }
            .validate(4)
            .is_err());
        assert!(ObservableSpec::SitePauli { site: 9, kind: PauliKind::Z }
            .validate(4)
            .is_err());
        assert!(ObservableSpec::SitePauli { site: 1, kind: PauliKind::I }
            .validate(4)
            .is_err());
    }
}
