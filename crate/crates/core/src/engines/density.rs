//! Mixed-state engine.
//!
//! The density matrix is stored dense and row-major, index = r * 2^N + c, so
//! bit j of the flat index is the column bit of site j and bit N+j the row
//! bit. Unitary layers act by conjugation; Pauli channels act site-locally as
//! a real 2x2 mixing of the (00,11) populations and the (01,10) coherences,
//! which lets a channel ride along with the next rotation pass over the same
//! site at no extra memory traffic.

use num_complex::Complex64;

use crate::bits::chunked_sum;
use crate::engines::kernels::ZzPhaseTable;
use crate::engines::statevector::StateVector;
use crate::error::{Error, Result};
use crate::model::noise::NoiseChannel;
use crate::model::observable::{binomial, ObservableSpec};
use crate::pauli::string::PauliString;
use crate::pauli::transform::RelevantBasis;

pub const MAX_DENSITY_SITES: usize = 12;

/// One-site Pauli channel reduced to its action on a single-site block:
/// populations mix with (keep, swap) = ((f_I + f_Z)/2, (f_I - f_Z)/2) and
/// coherences with ((f_X + f_Y)/2, (f_X - f_Y)/2).
#[derive(Debug, Clone, Copy)]
pub struct ChannelMix {
    pub pop_keep: f64,
    pub pop_swap: f64,
    pub coh_keep: f64,
    pub coh_swap: f64,
}

impl ChannelMix {
    pub fn from_eigenvalues(f: [f64; 4]) -> Self {
        let [fi, fx, fy, fz] = f;
        ChannelMix {
            pop_keep: 0.5 * (fi + fz),
            pop_swap: 0.5 * (fi - fz),
            coh_keep: 0.5 * (fx + fy),
            coh_swap: 0.5 * (fx - fy),
        }
    }

    /// Mixer of the inverse map (eigenvalues 1/f); unphysical but linear.
    pub fn inverse_from_eigenvalues(f: [f64; 4]) -> Result<Self> {
        for v in f {
            if v.abs() < 1e-14 {
                return Err(Error::Numerical(
                    "channel eigenvalue too small to invert".into(),
                ));
            }
        }
        Ok(Self::from_eigenvalues([
            1.0 / f[0],
            1.0 / f[1],
            1.0 / f[2],
            1.0 / f[3],
        ]))
    }
}

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    n_sites: usize,
    pub a: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn new_product(n_sites: usize, init: crate::engines::statevector::ProductState) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_DENSITY_SITES {
            return Err(Error::SystemTooLarge {
                context: "density matrix",
                n_sites,
                max_sites: MAX_DENSITY_SITES,
            });
        }
        let state = StateVector::new_product(n_sites, init)?;
        Ok(Self::from_statevector(&state))
    }

    pub fn from_statevector(state: &StateVector) -> Self {
        let dim = state.dim();
        let mut a = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            let ar = state.amps[r];
            if ar.norm_sqr() == 0.0 {
                continue;
            }
            let row = &mut a[r * dim..(r + 1) * dim];
            for (c, slot) in row.iter_mut().enumerate() {
                *slot = ar * state.amps[c].conj();
            }
        }
        DensityMatrix { n_sites: state.n_sites(), a }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    pub fn trace(&self) -> Complex64 {
        let dim = self.dim();
        let mut t = Complex64::new(0.0, 0.0);
        for r in 0..dim {
            t += self.a[r * dim + r];
        }
        t
    }

    pub fn check_trace(&self) -> Result<()> {
        let t = self.trace();
        if (t.re - 1.0).abs() > 1e-10 || t.im.abs() > 1e-10 {
            return Err(Error::Numerical(format!(
                "trace drifted to {t} from 1"
            )));
        }
        Ok(())
    }

    pub fn purity(&self) -> f64 {
        chunked_sum(self.a.len(), 1 << 12, |i| self.a[i].norm_sqr())
    }

    /// The workhorse pass: over site j, optionally a channel before, a
    /// rotation exp(-i theta X_j) (conjugation), and a channel after, all in
    /// one sweep over the 2x2 blocks (r_j, c_j).
    pub fn fused_site_pass(
        &mut self,
        site: usize,
        pre: Option<ChannelMix>,
        theta: Option<f64>,
        post: Option<ChannelMix>,
    ) {
        debug_assert!(site < self.n_sites);
        let cb = 1usize << site;
        let rb = 1usize << (self.n_sites + site);
        let rot = theta.map(|t| (t.cos(), Complex64::new(0.0, -t.sin())));
        let len = self.a.len();
        let mut hi = 0;
        while hi < len {
            let mut mid = hi;
            let mid_end = hi + rb;
            while mid < mid_end {
                for base in mid..mid + cb {
                    // Quad at (r_j, c_j) in {0,1}^2.
                    let i00 = base;
                    let i01 = base + cb;
                    let i10 = base + rb;
                    let i11 = base + rb + cb;
                    let mut q00 = self.a[i00];
                    let mut q01 = self.a[i01];
                    let mut q10 = self.a[i10];
                    let mut q11 = self.a[i11];
                    if let Some(m) = pre {
                        let (p00, p11) = (
                            m.pop_keep * q00 + m.pop_swap * q11,
                            m.pop_keep * q11 + m.pop_swap * q00,
                        );
                        let (c01, c10) = (
                            m.coh_keep * q01 + m.coh_swap * q10,
                            m.coh_keep * q10 + m.coh_swap * q01,
                        );
                        q00 = p00;
                        q11 = p11;
                        q01 = c01;
                        q10 = c10;
                    }
                    if let Some((c, mis)) = rot {
                        // Row mix by R, then column mix by R^dagger.
                        let t00 = c * q00 + mis * q10;
                        let t01 = c * q01 + mis * q11;
                        let t10 = mis * q00 + c * q10;
                        let t11 = mis * q01 + c * q11;
                        let pis = -mis; // +i sin(theta)
                        q00 = c * t00 + pis * t01;
                        q01 = pis * t00 + c * t01;
                        q10 = c * t10 + pis * t11;
                        q11 = pis * t10 + c * t11;
                    }
                    if let Some(m) = post {
                        let (p00, p11) = (
                            m.pop_keep * q00 + m.pop_swap * q11,
                            m.pop_keep * q11 + m.pop_swap * q00,
                        );
                        let (c01, c10) = (
                            m.coh_keep * q01 + m.coh_swap * q10,
                            m.coh_keep * q10 + m.coh_swap * q01,
                        );
                        q00 = p00;
                        q11 = p11;
                        q01 = c01;
                        q10 = c10;
                    }
                    self.a[i00] = q00;
                    self.a[i01] = q01;
                    self.a[i10] = q10;
                    self.a[i11] = q11;
                }
                mid += 2 * cb;
            }
            hi += 2 * rb;
        }
    }

    /// exp(-i theta X_j) conjugation on every site.
    pub fn apply_x_layer(&mut self, theta: f64) {
        for j in 0..self.n_sites {
            self.fused_site_pass(j, None, Some(theta), None);
        }
    }

    /// One-site channel mix on every site.
    pub fn apply_mix_all_sites(&mut self, mix: ChannelMix) {
        for j in 0..self.n_sites {
            self.fused_site_pass(j, Some(mix), None, None);
        }
    }

    /// Coupling-layer conjugation; `lut` from `table.diff_phase_lut(dt)`
    /// (negative dt for the inverse).
    pub fn apply_zz_layer(&mut self, table: &ZzPhaseTable, lut: &[Complex64]) {
        let dim = self.dim();
        debug_assert_eq!(table.k.len(), dim);
        let off = 2 * table.num_edges as i32;
        for r in 0..dim {
            let kr = table.k[r] as i32;
            let row = &mut self.a[r * dim..(r + 1) * dim];
            for (c, slot) in row.iter_mut().enumerate() {
                *slot *= lut[(kr - table.k[c] as i32 + off) as usize];
            }
        }
    }

    /// exp(-i theta Z_a Z_b) conjugation for one edge.
    pub fn apply_zz_edge(&mut self, a: usize, b: usize, theta: f64) {
        let dim = self.dim();
        let phases = [
            Complex64::new(0.0, 2.0 * theta).exp(),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -2.0 * theta).exp(),
        ];
        for r in 0..dim {
            let sr = if ((r >> a) ^ (r >> b)) & 1 == 0 { 1i32 } else { -1 };
            let row = &mut self.a[r * dim..(r + 1) * dim];
            for (c, slot) in row.iter_mut().enumerate() {
                let sc = if ((c >> a) ^ (c >> b)) & 1 == 0 { 1i32 } else { -1 };
                // exp(-i theta (sr - sc)): difference in {-2, 0, 2}.
                *slot *= phases[((sr - sc) / 2 + 1) as usize];
            }
        }
    }

    /// Two-site Pauli channel on edge (a, b) given its sixteen transfer
    /// eigenvalues indexed 4 * letter(a) + letter(b) with I,X,Y,Z = 0..3.
    pub fn apply_edge_channel(&mut self, a: usize, b: usize, eigs: &[f64; 16]) {
        let ca = 1usize << a;
        let cb = 1usize << b;
        let ra = ca << self.n_sites;
        let rb = cb << self.n_sites;
        let dim_sq = self.a.len();
        let half = Complex64::new(0.5, 0.0);
        let ih = Complex64::new(0.0, 0.5);
        let mi = Complex64::new(0.0, -1.0);
        let pi = Complex64::new(0.0, 1.0);
        // Letter of a mini Pauli index (col bit x, row bit z).
        let letter = |x: usize, z: usize| -> usize {
            match (x, z) {
                (0, 0) => 0,
                (1, 0) => 1,
                (1, 1) => 2,
                _ => 3,
            }
        };
        let mask = ca | cb | ra | rb;
        for base in 0..dim_sq {
            if base & mask != 0 {
                continue;
            }
            // Gather the 16-element block over (r_a, r_b, c_a, c_b).
            let mut q = [[Complex64::new(0.0, 0.0); 4]; 4]; // [mini_row][mini_col]
            for mr in 0..4usize {
                for mc in 0..4usize {
                    let idx = base
                        + if mr & 1 != 0 { ra } else { 0 }
                        + if mr & 2 != 0 { rb } else { 0 }
                        + if mc & 1 != 0 { ca } else { 0 }
                        + if mc & 2 != 0 { cb } else { 0 };
                    q[mr][mc] = self.a[idx];
                }
            }
            // Forward butterfly per site: (00,01,10,11) -> (I,X,Y,Z) slots
            // (I at 00, X at 0row/1col, Y at 11, Z at 1row/0col).
            let mut p = [[Complex64::new(0.0, 0.0); 4]; 4];
            for site_bit in [1usize, 2] {
                for hr in 0..4usize {
                    if hr & site_bit != 0 {
                        continue;
                    }
                    for hc in 0..4usize {
                        if hc & site_bit != 0 {
                            continue;
                        }
                        let a00 = q[hr][hc];
                        let a01 = q[hr][hc | site_bit];
                        let a10 = q[hr | site_bit][hc];
                        let a11 = q[hr | site_bit][hc | site_bit];
                        p[hr][hc] = half * (a00 + a11);
                        p[hr][hc | site_bit] = half * (a01 + a10);
                        p[hr | site_bit][hc | site_bit] = ih * (a01 - a10);
                        p[hr | site_bit][hc] = half * (a00 - a11);
                    }
                }
                q = p;
            }
            // Scale by eigenvalues: mini coeff at (x_a, z_a, x_b, z_b).
            for zr in 0..4usize {
                for xc in 0..4usize {
                    let la = letter(xc & 1, zr & 1);
                    let lb = letter((xc >> 1) & 1, (zr >> 1) & 1);
                    q[zr][xc] *= eigs[4 * la + lb];
                }
            }
            // Inverse butterfly per site.
            for site_bit in [1usize, 2] {
                for hr in 0..4usize {
                    if hr & site_bit != 0 {
                        continue;
                    }
                    for hc in 0..4usize {
                        if hc & site_bit != 0 {
                            continue;
                        }
                        let ci = q[hr][hc];
                        let cx = q[hr][hc | site_bit];
                        let cy = q[hr | site_bit][hc | site_bit];
                        let cz = q[hr | site_bit][hc];
                        p[hr][hc] = ci + cz;
                        p[hr][hc | site_bit] = cx + mi * cy;
                        p[hr | site_bit][hc] = cx + pi * cy;
                        p[hr | site_bit][hc | site_bit] = ci - cz;
                    }
                }
                q = p;
            }
            for mr in 0..4usize {
                for mc in 0..4usize {
                    let idx = base
                        + if mr & 1 != 0 { ra } else { 0 }
                        + if mr & 2 != 0 { rb } else { 0 }
                        + if mc & 1 != 0 { ca } else { 0 }
                        + if mc & 2 != 0 { cb } else { 0 };
                    self.a[idx] = q[mr][mc];
                }
            }
        }
    }

    /// Full channel application at its native arity (one pass per site for
    /// one-qubit channels, one pass per lattice edge for two-qubit ones).
    pub fn apply_channel(&mut self, channel: &NoiseChannel, edges: &[(usize, usize)]) -> Result<()> {
        if channel.arity() == 1 {
            let mix = ChannelMix::from_eigenvalues(channel.transfer_eigenvalues_1());
            self.apply_mix_all_sites(mix);
        } else {
            let eigs = channel.transfer_eigenvalues_2();
            for &(a, b) in edges {
                self.apply_edge_channel(a, b, &eigs);
            }
        }
        Ok(())
    }

    /// rho -> P rho P for a Hermitian Pauli string; phases cancel, leaving
    /// (-1)^{z.r + z.c} rho[r^x, c^x].
    pub fn conjugate_pauli(&mut self, p: &PauliString) {
        debug_assert!(p.is_hermitian());
        let dim = self.dim();
        let x = p.x as usize;
        let z = p.z;
        let mut out = vec![Complex64::new(0.0, 0.0); self.a.len()];
        for r in 0..dim {
            let sr = if ((r as u64 & z).count_ones() & 1) == 1 { -1.0 } else { 1.0 };
            let src = &self.a[(r ^ x) * dim..(r ^ x) * dim + dim];
            let dst = &mut out[r * dim..r * dim + dim];
            for (c, slot) in dst.iter_mut().enumerate() {
                let sc = if ((c as u64 & z).count_ones() & 1) == 1 { -1.0 } else { 1.0 };
                *slot = sr * sc * src[c ^ x];
            }
        }
        self.a = out;
    }

    /// Adds w * P rho P into `into` without touching rho: the accumulation
    /// form of [`Self::conjugate_pauli`] used by insertion sums, one sweep.
    pub fn accumulate_conjugation(&self, p: &PauliString, w: f64, into: &mut DensityMatrix) {
        debug_assert!(p.is_hermitian());
        debug_assert_eq!(self.n_sites, into.n_sites);
        let dim = self.dim();
        let x = p.x as usize;
        let z = p.z;
        for r in 0..dim {
            let sr = if ((r as u64 & z).count_ones() & 1) == 1 { -w } else { w };
            let src = &self.a[(r ^ x) * dim..(r ^ x) * dim + dim];
            let dst = &mut into.a[r * dim..r * dim + dim];
            for (c, slot) in dst.iter_mut().enumerate() {
                let sc = if ((c as u64 & z).count_ones() & 1) == 1 { -1.0 } else { 1.0 };
                *slot += sr * sc * src[c ^ x];
            }
        }
    }

    /// All-zero matrix of the same shape; the seed of linear-response
    /// accumulators that ride along a quench.
    pub fn zeros_like(&self) -> DensityMatrix {
        DensityMatrix {
            n_sites: self.n_sites,
            a: vec![Complex64::new(0.0, 0.0); self.a.len()],
        }
    }

    /// Adds wx X rho X + wy Y rho Y + wz Z rho Z (all at one site) into
    /// `into` in a single sweep: X and Y read the site-flipped entry, Y and
    /// Z carry the sign (-1)^{r_j + c_j}.
    pub fn accumulate_site_error_part(
        &self,
        site: usize,
        wx: f64,
        wy: f64,
        wz: f64,
        into: &mut DensityMatrix,
    ) {
        debug_assert_eq!(self.n_sites, into.n_sites);
        let dim = self.dim();
        let m = 1usize << site;
        for r in 0..dim {
            let flip = &self.a[(r ^ m) * dim..(r ^ m) * dim + dim];
            let same = &self.a[r * dim..r * dim + dim];
            let dst = &mut into.a[r * dim..r * dim + dim];
            let rb = r & m;
            for (c, slot) in dst.iter_mut().enumerate() {
                let s = if (c & m) == rb { 1.0 } else { -1.0 };
                *slot += (wx + wy * s) * flip[c ^ m] + wz * s * same[c];
            }
        }
    }

    /// tr(rho P).
    pub fn pauli_expectation(&self, p: &PauliString) -> Complex64 {
        let dim = self.dim();
        let x = p.x as usize;
        let ph = p.phase_factor();
        let mut acc = Complex64::new(0.0, 0.0);
        for b in 0..dim {
            let s = if ((b as u64 & p.z).count_ones() & 1) == 1 { -1.0 } else { 1.0 };
            acc += self.a[b * dim + (b ^ x)] * s;
        }
        ph * acc
    }

    /// <prod_{j in mask} X_j> for every mask in one sweep:
    /// acc[r ^ c] += rho[r, c].
    pub fn x_products_all_masks(&self) -> Vec<f64> {
        let dim = self.dim();
        let mut acc = vec![Complex64::new(0.0, 0.0); dim];
        for r in 0..dim {
            let row = &self.a[r * dim..(r + 1) * dim];
            for (c, &v) in row.iter().enumerate() {
                acc[r ^ c] += v;
            }
        }
        acc.iter().map(|v| v.re).collect()
    }

    /// <prod_{j in mask} Z_j> for every mask: a sign transform of the diagonal.
    pub fn z_products_all_masks(&self) -> Vec<f64> {
        let dim = self.dim();
        let mut diag: Vec<f64> = (0..dim).map(|b| self.a[b * dim + b].re).collect();
        // Walsh transform: out[m] = sum_b (-1)^{|b & m|} diag[b].
        let mut len = 1;
        while len < dim {
            let mut g = 0;
            while g < dim {
                for i in g..g + len {
                    let u = diag[i];
                    let v = diag[i + len];
                    diag[i] = u + v;
                    diag[i + len] = u - v;
                }
                g += 2 * len;
            }
            len <<= 1;
        }
        diag
    }

    /// Symmetrized weight-k expectations for all requested k in one pass.
    pub fn sym_expectations(&self, basis: RelevantBasis, ks: &[usize]) -> Result<Vec<f64>> {
        for &k in ks {
            if k > self.n_sites {
                return Err(Error::invalid(format!(
                    "weight {k} exceeds {} sites",
                    self.n_sites
                )));
            }
        }
        let products = match basis {
            RelevantBasis::XType => self.x_products_all_masks(),
            RelevantBasis::ZType => self.z_products_all_masks(),
            RelevantBasis::YType => {
                return Err(Error::invalid(
                    "Y-basis symmetrized observables are not supported on the density engine",
                ))
            }
        };
        let mut sums = vec![0.0f64; self.n_sites + 1];
        for (mask, &v) in products.iter().enumerate() {
            sums[(mask as u32).count_ones() as usize] += v;
        }
        Ok(ks
            .iter()
            .map(|&k| sums[k] / binomial(self.n_sites, k))
            .collect())
    }

    pub fn expectation(&self, obs: &ObservableSpec) -> Result<f64> {
        match obs {
            ObservableSpec::SymmetrizedWeightK { k, basis } => {
                let basis = RelevantBasis::from_kind(*basis)?;
                Ok(self.sym_expectations(basis, &[*k])?[0])
            }
            ObservableSpec::GlobalParity => {
                let dim = self.dim();
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..dim {
                    acc += self.a[r * dim + (dim - 1 - r)];
                }
                Ok(acc.re)
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
}
