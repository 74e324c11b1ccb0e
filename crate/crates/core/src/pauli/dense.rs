//! Dense complex matrices on the full 2^n Hilbert space.
//!
//! Row-major storage, `a[row * dim + col]`. This type backs the exact-diag
//! oracles and the density-matrix engine; the heavy per-step kernels live in
//! the engine, not here.

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct DenseOperator {
    n_sites: usize,
    pub a: Vec<Complex64>,
}

impl DenseOperator {
    pub fn zeros(n_sites: usize) -> Self {
        let dim = 1usize << n_sites;
        DenseOperator { n_sites, a: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(n_sites: usize) -> Self {
        let mut m = Self::zeros(n_sites);
        let dim = m.dim();
        for i in 0..dim {
            m.a[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// |psi><psi|.
    pub fn from_pure_state(psi: &[Complex64]) -> Self {
        let dim = psi.len();
        let n_sites = dim.trailing_zeros() as usize;
        assert_eq!(1usize << n_sites, dim, "state length must be a power of two");
        let mut m = Self::zeros(n_sites);
        for r in 0..dim {
            for c in 0..dim {
                m.a[r * dim + c] = psi[r] * psi[c].conj();
            }
        }
        m
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.a[r * self.dim() + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        let dim = self.dim();
        self.a[r * dim + c] = v;
    }

    pub fn trace(&self) -> Complex64 {
        let dim = self.dim();
        (0..dim).map(|i| self.a[i * dim + i]).sum()
    }

    /// tr(A^dag B), the unnormalized Hilbert-Schmidt inner product.
    pub fn hs_inner(&self, other: &DenseOperator) -> Complex64 {
        assert_eq!(self.n_sites, other.n_sites);
        self.a
            .iter()
            .zip(&other.a)
            .map(|(x, y)| x.conj() * y)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        self.a
            .iter()
            .zip(&other.a)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&mut self, factor: Complex64) {
        for v in self.a.iter_mut() {
            *v *= factor;
        }
    }

    pub fn add_assign(&mut self, other: &DenseOperator) {
        assert_eq!(self.n_sites, other.n_sites);
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += y;
        }
    }

    pub fn sub_assign(&mut self, other: &DenseOperator) {
        assert_eq!(self.n_sites, other.n_sites);
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x -= y;
        }
    }

    pub fn dagger(&self) -> DenseOperator {
        let dim = self.dim();
        let mut out = Self::zeros(self.n_sites);
        for r in 0..dim {
            for c in 0..dim {
                out.a[c * dim + r] = self.a[r * dim + c].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseOperator) -> DenseOperator {
        assert_eq!(self.n_sites, other.n_sites);
        let dim = self.dim();
        let mut out = Self::zeros(self.n_sites);
        for r in 0..dim {
            for k in 0..dim {
                let aik = self.a[r * dim + k];
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                let row_b = &other.a[k * dim..(k + 1) * dim];
                let row_o = &mut out.a[r * dim..(r + 1) * dim];
                for (o, b) in row_o.iter_mut().zip(row_b) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let dim = self.dim();
        assert_eq!(psi.len(), dim);
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for r in 0..dim {
            let row = &self.a[r * dim..(r + 1) * dim];
            out[r] = row.iter().zip(psi).map(|(m, v)| m * v).sum();
        }
        out
    }

    /// exp(factor * A) by scaling-and-squaring with a Taylor core.
    ///
    /// Intended for oracle comparisons at small n; cost is dim^3 per square.
    pub fn matexp(&self, factor: Complex64) -> DenseOperator {
        let dim = self.dim();
        // Induced infinity norm of factor * A.
        let mut norm: f64 = 0.0;
        for r in 0..dim {
            let s: f64 = self.a[r * dim..(r + 1) * dim].iter().map(|x| x.norm()).sum();
            norm = norm.max(s * factor.norm());
        }
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let scaled_factor = factor / 2f64.powi(squarings as i32);

        let mut result = Self::identity(self.n_sites);
        let mut term = Self::identity(self.n_sites);
        for k in 1..=60 {
            term = term.matmul(self);
            // Fold factor/k into the running product so term = (fA)^k / k!.
            term.scale(scaled_factor / (k as f64));
            result.add_assign(&term);
            if term.max_abs() < 1e-18 * result.max_abs().max(1.0) {
                break;
            }
        }
        let mut out = result;
        for _ in 0..squarings {
            out = out.matmul(&out);
        }
        out
    }
}
