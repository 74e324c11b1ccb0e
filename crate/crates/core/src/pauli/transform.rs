//! Fast transform between a dense matrix and its Pauli-string coefficients.
//!
//! Any M on n sites expands uniquely as M = sum_P c_P P over the 4^n
//! Hermitian strings, with c_P = 2^{-n} tr(P M) (strings are orthogonal:
//! 2^{-n} tr(P Q) = delta_{PQ}). Computing every c_P naively costs 8^n; the
//! butterfly here does it in n * 4^n by factorizing over sites, exactly like
//! a Walsh-Hadamard transform with a 4-element kernel.
//!
//! Packing: the flat index of a dense element is row * 2^n + col, so bit j
//! holds col_j and bit n+j holds row_j. After the forward pass the same
//! buffer holds c_P at index x | (z << n), where (x, z) are the occupation
//! masks of the string. A site with both bits set is a Y factor.
//!
//! The single-site dictionary, with a = <row|M|col>:
//!   cI = (a00 + a11)/2        cX = (a01 + a10)/2
//!   cZ = (a00 - a11)/2        cY = i (a01 - a10)/2

use num_complex::Complex64;

use super::dense::DenseOperator;

/// Coefficient index of the string with masks (x, z).
#[inline(always)]
pub fn pauli_index(x: u64, z: u64, n_sites: usize) -> usize {
    (x as usize) | ((z as usize) << n_sites)
}

/// Masks (x, z) of a coefficient index.
#[inline(always)]
pub fn split_pauli_index(p: usize, n_sites: usize) -> (u64, u64) {
    let mask = (1u64 << n_sites) - 1;
    ((p as u64) & mask, (p as u64 >> n_sites) & mask)
}

/// Number of non-identity sites of a coefficient index.
#[inline(always)]
pub fn weight_of_index(p: usize, n_sites: usize) -> u32 {
    let (x, z) = split_pauli_index(p, n_sites);
    (x | z).count_ones()
}

/// In-place dense -> Pauli coefficients. Buffer length must be 4^n.
pub fn dense_to_pauli_in_place(n_sites: usize, buf: &mut [Complex64]) {
    let total = 1usize << (2 * n_sites);
    assert_eq!(buf.len(), total);
    let half = Complex64::new(0.5, 0.0);
    let ihalf = Complex64::new(0.0, 0.5);
    for j in 0..n_sites {
        let sc = 1usize << j;
        let sr = 1usize << (n_sites + j);
        let mut high = 0;
        while high < total {
            let mut mid = high;
            let mid_end = high + sr;
            while mid < mid_end {
                for base in mid..mid + sc {
                    let i00 = base;
                    let i01 = base + sc;
                    let i10 = base + sr;
                    let i11 = base + sc + sr;
                    let a00 = buf[i00];
                    let a01 = buf[i01];
                    let a10 = buf[i10];
                    let a11 = buf[i11];
                    buf[i00] = (a00 + a11) * half;
                    buf[i01] = (a01 + a10) * half;
                    buf[i11] = (a01 - a10) * ihalf;
                    buf[i10] = (a00 - a11) * half;
                }
                mid += sc << 1;
            }
            high += sr << 1;
        }
    }
}

/// In-place Pauli coefficients -> dense. Exact inverse of the forward pass.
pub fn pauli_to_dense_in_place(n_sites: usize, buf: &mut [Complex64]) {
    let total = 1usize << (2 * n_sites);
    assert_eq!(buf.len(), total);
    let i_unit = Complex64::new(0.0, 1.0);
    for j in 0..n_sites {
        let sc = 1usize << j;
        let sr = 1usize << (n_sites + j);
        let mut high = 0;
        while high < total {
            let mut mid = high;
            let mid_end = high + sr;
            while mid < mid_end {
                for base in mid..mid + sc {
                    let i00 = base;
                    let i01 = base + sc;
                    let i10 = base + sr;
                    let i11 = base + sc + sr;
                    let ci = buf[i00];
                    let cx = buf[i01];
                    let cz = buf[i10];
                    let cy = buf[i11];
                    buf[i00] = ci + cz;
                    buf[i01] = cx - i_unit * cy;
                    buf[i10] = cx + i_unit * cy;
                    buf[i11] = ci - cz;
                }
                mid += sc << 1;
            }
            high += sr << 1;
        }
    }
}

/// String families that survive averaging over a product-state stabilizer.
///
/// For a product state with all spins along +x, only strings made of I and X
/// have nonzero expectation; analogously for +z and +y products. Projection
/// keeps exactly those coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelevantBasis {
    /// I/X strings: z-mask must vanish.
    XType,
    /// I/Z strings: x-mask must vanish.
    ZType,
    /// I/Y strings: x-mask equals z-mask.
    YType,
}

impl RelevantBasis {
    pub fn from_kind(kind: super::string::PauliKind) -> crate::error::Result<Self> {
        use super::string::PauliKind;
        match kind {
            PauliKind::X => Ok(RelevantBasis::XType),
            PauliKind::Y => Ok(RelevantBasis::YType),
            PauliKind::Z => Ok(RelevantBasis::ZType),
            PauliKind::I => Err(crate::error::Error::invalid(
                "identity is not a measurement basis",
            )),
        }
    }

    #[inline(always)]
    pub fn keeps(self, p: usize, n_sites: usize) -> bool {
        let (x, z) = split_pauli_index(p, n_sites);
        match self {
            RelevantBasis::XType => z == 0,
            RelevantBasis::ZType => x == 0,
            RelevantBasis::YType => x == z,
        }
    }

    /// Zero every coefficient outside the family.
    pub fn project_in_place(self, n_sites: usize, coeffs: &mut [Complex64]) {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            RelevantBasis::XType => {
                // Kept indices are exactly the first 2^n entries.
                let keep = 1usize << n_sites;
                for v in coeffs[keep..].iter_mut() {
                    *v = zero;
                }
            }
            _ => {
                for (p, v) in coeffs.iter_mut().enumerate() {
                    if !self.keeps(p, n_sites) {
                        *v = zero;
                    }
                }
            }
        }
    }
}

/// Pauli coefficients of a Hermitian matrix as a real vector.
pub fn hermitian_coeffs(dense: &DenseOperator) -> Vec<f64> {
    let mut scratch = dense.a.clone();
    let mut out = Vec::new();
    hermitian_coeffs_with(dense, &mut scratch, &mut out);
    out
}

/// Same as [`hermitian_coeffs`], reusing caller buffers (hot path at n = 12).
pub fn hermitian_coeffs_with(
    dense: &DenseOperator,
    scratch: &mut Vec<Complex64>,
    out: &mut Vec<f64>,
) {
    let n = dense.n_sites();
    scratch.clear();
    scratch.extend_from_slice(&dense.a);
    dense_to_pauli_in_place(n, scratch);
    out.clear();
    out.extend(scratch.iter().map(|c| c.re));
    debug_assert!(
        scratch.iter().map(|c| c.im.abs()).fold(0.0, f64::max) < 1e-10,
        "coefficients of a Hermitian matrix should be real"
    );
}
