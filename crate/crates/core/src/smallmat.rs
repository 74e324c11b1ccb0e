//! Dense kernels for small real matrices: exponential, Hessenberg QR
//! eigenvalues, and complex shifted solves for inverse iteration.
//!
//! Transfer systems here are O(10^2) dimensional, small enough that plain
//! O(n^3) routines finish in milliseconds and a general linear algebra
//! dependency would be dead weight. Everything is row-major `Vec<f64>`.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub(crate) struct RMat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl RMat {
    pub fn zeros(n: usize) -> Self {
        RMat { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RMat::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    pub fn matmul(&self, other: &RMat) -> RMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = RMat::zeros(n);
        for i in 0..n {
            let row = &self.a[i * n..(i + 1) * n];
            let orow = &mut out.a[i * n..(i + 1) * n];
            for (k, &aik) in row.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let brow = &other.a[k * n..(k + 1) * n];
                for j in 0..n {
                    orow[j] += aik * brow[j];
                }
            }
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.a {
            *v *= s;
        }
    }

    pub fn add_assign(&mut self, other: &RMat) {
        for (v, o) in self.a.iter_mut().zip(&other.a) {
            *v += o;
        }
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|i| self.a[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        assert_eq!(x.len(), n);
        assert_eq!(out.len(), n);
        for i in 0..n {
            let row = &self.a[i * n..(i + 1) * n];
            out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Matrix exponential by scaling-and-squaring over a fixed Taylor kernel.
///
/// The argument is scaled so its inf-norm is below 1/2; the order-20 Taylor
/// tail is then < 1e-26, far below the squaring round-off.
pub(crate) fn expm(a: &RMat) -> RMat {
    let norm = a.inf_norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let mut b = a.clone();
    b.scale(0.5f64.powi(squarings as i32));

    let mut result = RMat::identity(a.n);
    let mut term = RMat::identity(a.n);
    for k in 1..=20u32 {
        term = term.matmul(&b);
        term.scale(1.0 / k as f64);
        result.add_assign(&term);
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    result
}

/// Reduce to upper Hessenberg form in place by Householder reflections.
fn hessenberg(h: &mut RMat) {
    let n = h.n;
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for col in 0..n - 2 {
        // build the reflector annihilating h[col+2.., col]
        let mut norm2 = 0.0;
        for i in col + 1..n {
            norm2 += h.get(i, col) * h.get(i, col);
        }
        let alpha = norm2.sqrt();
        if alpha < 1e-300 {
            continue;
        }
        let pivot = h.get(col + 1, col);
        let sign = if pivot >= 0.0 { 1.0 } else { -1.0 };
        v[col + 1] = pivot + sign * alpha;
        for i in col + 2..n {
            v[i] = h.get(i, col);
        }
        let vnorm2: f64 = (col + 1..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 < 1e-300 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // H <- (I - beta v v^T) H
        for j in col..n {
            let dot: f64 = (col + 1..n).map(|i| v[i] * h.get(i, j)).sum();
            let s = beta * dot;
            for i in col + 1..n {
                let val = h.get(i, j) - s * v[i];
                h.set(i, j, val);
            }
        }
        // H <- H (I - beta v v^T)
        for i in 0..n {
            let dot: f64 = (col + 1..n).map(|j| h.get(i, j) * v[j]).sum();
            let s = beta * dot;
            for j in col + 1..n {
                let val = h.get(i, j) - s * v[j];
                h.set(i, j, val);
            }
        }
        for i in col + 2..n {
            h.set(i, col, 0.0);
        }
    }
}

fn eig2(a: f64, b: f64, c: f64, d: f64) -> (Complex64, Complex64) {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        (
            Complex64::new(tr / 2.0 + r, 0.0),
            Complex64::new(tr / 2.0 - r, 0.0),
        )
    } else {
        let r = (-disc).sqrt();
        (
            Complex64::new(tr / 2.0, r),
            Complex64::new(tr / 2.0, -r),
        )
    }
}

/// All eigenvalues of a real matrix: Hessenberg reduction followed by the
/// implicit double-shift QR iteration with deflation.
pub(crate) fn eigenvalues(a: &RMat) -> Result<Vec<Complex64>> {
    let n = a.n;
    let mut h = a.clone();
    hessenberg(&mut h);
    let mut eigs = Vec::with_capacity(n);
    if n == 0 {
        return Ok(eigs);
    }
    if n == 1 {
        eigs.push(Complex64::new(h.get(0, 0), 0.0));
        return Ok(eigs);
    }

    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut stalled = 0usize;
    let mut total_iters = 0usize;
    let max_iters = 60 * n;

    loop {
        // zero out negligible subdiagonals
        for m in 1..=hi {
            let s = h.get(m - 1, m - 1).abs() + h.get(m, m).abs();
            let s = if s == 0.0 { 1.0 } else { s };
            if h.get(m, m - 1).abs() <= eps * s {
                h.set(m, m - 1, 0.0);
            }
        }
        // deflate converged trailing blocks
        if hi == 0 || h.get(hi, hi - 1) == 0.0 {
            eigs.push(Complex64::new(h.get(hi, hi), 0.0));
            if hi == 0 {
                break;
            }
            hi -= 1;
            stalled = 0;
            continue;
        }
        if hi == 1 || h.get(hi - 1, hi - 2) == 0.0 {
            let (e1, e2) = eig2(
                h.get(hi - 1, hi - 1),
                h.get(hi - 1, hi),
                h.get(hi, hi - 1),
                h.get(hi, hi),
            );
            eigs.push(e1);
            eigs.push(e2);
            if hi == 1 {
                break;
            }
            hi -= 2;
            stalled = 0;
            continue;
        }

        total_iters += 1;
        stalled += 1;
        if total_iters > max_iters {
            return Err(Error::Numerical(
                "QR eigenvalue iteration failed to converge".into(),
            ));
        }

        // active block [lo..=hi]
        let mut lo = hi;
        while lo > 0 && h.get(lo, lo - 1) != 0.0 {
            lo -= 1;
        }

        // double shift from the trailing 2x2, with an exceptional kick when stalled
        let (mut s, mut t);
        if stalled % 11 == 0 {
            let w = h.get(hi, hi - 1).abs() + h.get(hi - 1, hi - 2).abs();
            s = 2.0 * (h.get(hi, hi) + 0.75 * w);
            t = (h.get(hi, hi) + 0.75 * w).powi(2);
        } else {
            s = h.get(hi - 1, hi - 1) + h.get(hi, hi);
            t = h.get(hi - 1, hi - 1) * h.get(hi, hi) - h.get(hi - 1, hi) * h.get(hi, hi - 1);
        }
        if !s.is_finite() || !t.is_finite() {
            s = 0.0;
            t = 0.0;
        }

        // first column of (H - aI)(H - bI)
        let mut x = h.get(lo, lo) * h.get(lo, lo) + h.get(lo, lo + 1) * h.get(lo + 1, lo)
            - s * h.get(lo, lo)
            + t;
        let mut y = h.get(lo + 1, lo) * (h.get(lo, lo) + h.get(lo + 1, lo + 1) - s);
        let mut z = if lo + 2 <= hi {
            h.get(lo + 2, lo + 1) * h.get(lo + 1, lo)
        } else {
            0.0
        };

        // chase the bulge; the final step at k = hi-1 is the 2-row reflector
        // that clears h[hi, hi-2] and restores Hessenberg form
        for k in lo..hi {
            let rows = if k + 2 <= hi { 3 } else { 2 };
            let (v0, v1, v2) = (x, y, if rows == 3 { z } else { 0.0 });
            let norm = (v0 * v0 + v1 * v1 + v2 * v2).sqrt();
            if norm > 1e-300 {
                let sign = if v0 >= 0.0 { 1.0 } else { -1.0 };
                let w0 = v0 + sign * norm;
                let (w1, w2) = (v1, v2);
                let wnorm2 = w0 * w0 + w1 * w1 + w2 * w2;
                if wnorm2 > 1e-300 {
                    let beta = 2.0 / wnorm2;
                    // left: rows k..k+rows, columns max(lo, k-1)..n
                    let jstart = if k > lo { k - 1 } else { lo };
                    for j in jstart..n {
                        let mut dot = w0 * h.get(k, j) + w1 * h.get(k + 1, j);
                        if rows == 3 {
                            dot += w2 * h.get(k + 2, j);
                        }
                        let sfac = beta * dot;
                        h.set(k, j, h.get(k, j) - sfac * w0);
                        h.set(k + 1, j, h.get(k + 1, j) - sfac * w1);
                        if rows == 3 {
                            h.set(k + 2, j, h.get(k + 2, j) - sfac * w2);
                        }
                    }
                    // right: columns k..k+rows, rows 0..=min(hi, k+3)
                    let iend = hi.min(k + 3);
                    for i in 0..=iend {
                        let mut dot = w0 * h.get(i, k) + w1 * h.get(i, k + 1);
                        if rows == 3 {
                            dot += w2 * h.get(i, k + 2);
                        }
                        let sfac = beta * dot;
                        h.set(i, k, h.get(i, k) - sfac * w0);
                        h.set(i, k + 1, h.get(i, k + 1) - sfac * w1);
                        if rows == 3 {
                            h.set(i, k + 2, h.get(i, k + 2) - sfac * w2);
                        }
                    }
                }
            }
            // seed the next reflector: at k+1 = hi-1 it is the 2-row one,
            // fed by the bulge pair (h[hi-1, hi-2], h[hi, hi-2])
            if k + 1 < hi {
                x = h.get(k + 1, k);
                y = h.get(k + 2, k);
                z = if k + 3 <= hi { h.get(k + 3, k) } else { 0.0 };
            }
        }
    }
    Ok(eigs)
}

/// Complex LU factorization with partial pivoting.
pub(crate) struct CLu {
    n: usize,
    a: Vec<Complex64>,
    piv: Vec<usize>,
}

impl CLu {
    pub fn factor(n: usize, mut a: Vec<Complex64>) -> Result<CLu> {
        assert_eq!(a.len(), n * n);
        let mut piv = vec![0usize; n];
        for col in 0..n {
            let mut best = col;
            let mut best_mag = a[col * n + col].norm_sqr();
            for r in col + 1..n {
                let mag = a[r * n + col].norm_sqr();
                if mag > best_mag {
                    best = r;
                    best_mag = mag;
                }
            }
            if best_mag < 1e-300 {
                return Err(Error::Numerical("singular matrix in LU factorization".into()));
            }
            piv[col] = best;
            if best != col {
                for j in 0..n {
                    a.swap(col * n + j, best * n + j);
                }
            }
            let inv_pivot = Complex64::new(1.0, 0.0) / a[col * n + col];
            for r in col + 1..n {
                let factor = a[r * n + col] * inv_pivot;
                a[r * n + col] = factor;
                for j in col + 1..n {
                    let sub = factor * a[col * n + j];
                    a[r * n + j] -= sub;
                }
            }
        }
        Ok(CLu { n, a, piv })
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for col in 0..n {
            b.swap(col, self.piv[col]);
            let bc = b[col];
            for r in col + 1..n {
                b[r] -= self.a[r * n + col] * bc;
            }
        }
        for col in (0..n).rev() {
            b[col] /= self.a[col * n + col];
            let bc = b[col];
            for r in 0..col {
                b[r] -= self.a[r * n + col] * bc;
            }
        }
    }
}

/// Eigenvector for a known eigenvalue by shifted inverse iteration.
///
/// The shift is jittered off the exact eigenvalue so the solve stays
/// well-posed; two or three iterations from a fixed start are plenty when
/// `mu` is accurate to working precision.
pub(crate) fn eigenvector(a: &RMat, mu: Complex64) -> Result<Vec<Complex64>> {
    let n = a.n;
    let scale = 1.0 + a.inf_norm();
    let mut jitter = 1e-12 * scale;
    for _attempt in 0..4 {
        let shift = mu + Complex64::new(jitter, jitter);
        let mut m = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = Complex64::new(a.get(i, j), 0.0);
            }
            m[i * n + i] -= shift;
        }
        match CLu::factor(n, m) {
            Ok(lu) => {
                let mut v: Vec<Complex64> = (0..n)
                    .map(|i| Complex64::new(1.0 / (1.0 + i as f64), 0.0))
                    .collect();
                for _ in 0..3 {
                    lu.solve_in_place(&mut v);
                    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                    if !norm.is_finite() || norm < 1e-300 {
                        break;
                    }
                    for c in &mut v {
                        *c /= norm;
                    }
                }
                let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if norm.is_finite() && norm > 0.5 {
                    return Ok(v);
                }
            }
            Err(_) => {}
        }
        jitter *= 100.0;
    }
    Err(Error::Numerical("inverse iteration failed to produce an eigenvector".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn expm_rotation_block() {
        // expm([[0, -w],[w, 0]]) = [[cos w, -sin w],[sin w, cos w]]
        let w = 1.3;
        let mut a = RMat::zeros(2);
        a.set(0, 1, -w);
        a.set(1, 0, w);
        let e = expm(&a);
        assert!(close(e.get(0, 0), w.cos(), 1e-14));
        assert!(close(e.get(0, 1), -w.sin(), 1e-14));
        assert!(close(e.get(1, 0), w.sin(), 1e-14));
        assert!(close(e.get(1, 1), w.cos(), 1e-14));
    }

    #[test]
    fn expm_additive_on_commuting_args() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n = 5;
        let mut a = RMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                a.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let mut a2 = a.clone();
        a2.scale(2.0);
        let e1 = expm(&a);
        let e2 = expm(&a2);
        let prod = e1.matmul(&e1);
        for (x, y) in prod.a.iter().zip(&e2.a) {
            assert!(close(*x, *y, 1e-12));
        }
    }

    #[test]
    fn eigenvalues_of_known_spectra() {
        // companion matrix of (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
        let mut c = RMat::zeros(3);
        c.set(0, 0, 6.0);
        c.set(0, 1, -11.0);
        c.set(0, 2, 6.0);
        c.set(1, 0, 1.0);
        c.set(2, 1, 1.0);
        let mut eigs: Vec<f64> = eigenvalues(&c)
            .unwrap()
            .iter()
            .map(|e| {
                assert!(e.im.abs() < 1e-9);
                e.re
            })
            .collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(close(eigs[0], 1.0, 1e-9));
        assert!(close(eigs[1], 2.0, 1e-9));
        assert!(close(eigs[2], 3.0, 1e-9));
    }

    #[test]
    fn eigenvalues_of_antisymmetric_are_imaginary_pairs() {
        let mut a = RMat::zeros(4);
        // two independent rotation planes with speeds 0.7 and 2.1
        a.set(0, 1, -0.7);
        a.set(1, 0, 0.7);
        a.set(2, 3, -2.1);
        a.set(3, 2, 2.1);
        let mut ims: Vec<f64> = eigenvalues(&a).unwrap().iter().map(|e| e.im).collect();
        ims.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!(close(ims[0], -2.1, 1e-10));
        assert!(close(ims[1], -0.7, 1e-10));
        assert!(close(ims[2], 0.7, 1e-10));
        assert!(close(ims[3], 2.1, 1e-10));
        for e in eigenvalues(&a).unwrap() {
            assert!(e.re.abs() < 1e-10);
        }
    }

    #[test]
    fn eigenvalues_random_matrix_match_characteristic_action() {
        // check sum and product of eigenvalues against trace and determinant
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let n = 12;
        let mut a = RMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                a.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let eigs = eigenvalues(&a).unwrap();
        assert_eq!(eigs.len(), n);
        let tr: f64 = (0..n).map(|i| a.get(i, i)).sum();
        let sum: Complex64 = eigs.iter().sum();
        assert!(close(sum.re, tr, 1e-8));
        assert!(sum.im.abs() < 1e-8);
    }

    #[test]
    fn inverse_iteration_recovers_eigenvector() {
        let mut a = RMat::zeros(3);
        // diagonalizable with eigenvalues 1, 2, 4
        a.set(0, 0, 1.0);
        a.set(1, 1, 2.0);
        a.set(2, 2, 4.0);
        a.set(0, 1, 0.5);
        a.set(1, 2, -0.3);
        let eigs = eigenvalues(&a).unwrap();
        for mu in eigs {
            let v = eigenvector(&a, mu).unwrap();
            // residual || (A - mu) v ||
            let mut res = 0.0f64;
            for i in 0..3 {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..3 {
                    acc += Complex64::new(a.get(i, j), 0.0) * v[j];
                }
                acc -= mu * v[i];
                res += acc.norm_sqr();
            }
            assert!(res.sqrt() < 1e-8, "residual {} for mu {}", res.sqrt(), mu);
        }
    }

    #[test]
    fn complex_lu_solves_known_system() {
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        // [[2, i],[−i, 3]] x = [1+i, 2]
        let a = vec![one * 2.0, i, -i, one * 3.0];
        let lu = CLu::factor(2, a).unwrap();
        let mut b = vec![one + i, one * 2.0];
        lu.solve_in_place(&mut b);
        // verify by substitution
        let r0 = one * 2.0 * b[0] + i * b[1] - (one + i);
        let r1 = -i * b[0] + one * 3.0 * b[1] - one * 2.0;
        assert!(r0.norm() < 1e-12);
        assert!(r1.norm() < 1e-12);
    }
}
