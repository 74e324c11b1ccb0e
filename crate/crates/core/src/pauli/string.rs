//! Single Pauli strings and their group algebra.

use num_complex::Complex64;
use std::fmt;

use crate::error::{Error, Result};

/// One single-site Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliKind {
    I,
    X,
    Y,
    Z,
}

impl PauliKind {
    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' | 'i' | '1' => Ok(PauliKind::I),
            'X' | 'x' => Ok(PauliKind::X),
            'Y' | 'y' => Ok(PauliKind::Y),
            'Z' | 'z' => Ok(PauliKind::Z),
            _ => Err(Error::invalid(format!("unknown Pauli letter '{c}'"))),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            PauliKind::I => 'I',
            PauliKind::X => 'X',
            PauliKind::Y => 'Y',
            PauliKind::Z => 'Z',
        }
    }
}

/// `i^phase * X^x * Z^z` on up to 64 sites.
///
/// The phase exponent is kept mod 4. Strings with
/// `phase == popcount(x & z) mod 4` are Hermitian (each doubly-occupied site
/// is a genuine Y factor); [`PauliString::hermitian`] builds that form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
    pub phase: u8,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0, phase: 0 };

    /// Hermitian string with the given X/Z occupation masks.
    pub fn hermitian(x: u64, z: u64) -> Self {
        PauliString { x, z, phase: ((x & z).count_ones() % 4) as u8 }
    }

    pub fn x_on(site: usize) -> Self {
        PauliString { x: 1 << site, z: 0, phase: 0 }
    }

    pub fn z_on(site: usize) -> Self {
        PauliString { x: 0, z: 1 << site, phase: 0 }
    }

    pub fn y_on(site: usize) -> Self {
        PauliString { x: 1 << site, z: 1 << site, phase: 1 }
    }

    pub fn from_letters(letters: &[(usize, PauliKind)]) -> Self {
        let mut x = 0u64;
        let mut z = 0u64;
        for &(site, kind) in letters {
            match kind {
                PauliKind::I => {}
                PauliKind::X => x |= 1 << site,
                PauliKind::Y => {
                    x |= 1 << site;
                    z |= 1 << site;
                }
                PauliKind::Z => z |= 1 << site,
            }
        }
        PauliString::hermitian(x, z)
    }

    /// Parse "XIZY..." with site 0 leftmost; returns the Hermitian form.
    pub fn parse(s: &str) -> Result<Self> {
        let mut letters = Vec::new();
        for (site, c) in s.chars().enumerate() {
            if site >= 64 {
                return Err(Error::invalid("Pauli string longer than 64 sites"));
            }
            letters.push((site, PauliKind::from_char(c)?));
        }
        Ok(PauliString::from_letters(&letters))
    }

    pub fn letter_at(&self, site: usize) -> PauliKind {
        match ((self.x >> site) & 1, (self.z >> site) & 1) {
            (0, 0) => PauliKind::I,
            (1, 0) => PauliKind::X,
            (0, 1) => PauliKind::Z,
            _ => PauliKind::Y,
        }
    }

    /// Number of non-identity sites.
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase == ((self.x & self.z).count_ones() % 4) as u8
    }

    /// i^phase as a complex number.
    pub fn phase_factor(&self) -> Complex64 {
        match self.phase & 3 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    /// Group product. Moving X^x2 through Z^z1 costs (-1)^{|z1 & x2|}.
    pub fn mul(&self, other: &PauliString) -> PauliString {
        let phase = (self.phase
            + other.phase
            + 2 * ((self.z & other.x).count_ones() % 2) as u8)
            & 3;
        PauliString { x: self.x ^ other.x, z: self.z ^ other.z, phase }
    }

    pub fn dagger(&self) -> PauliString {
        // (i^p X^x Z^z)^dag = i^{-p} (-1)^{|x&z|} X^x Z^z
        let phase = ((4 - self.phase) + 2 * ((self.x & self.z).count_ones() % 2) as u8) & 3;
        PauliString { x: self.x, z: self.z, phase }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Apply to a state vector: out[b ^ x] += i^phase (-1)^{z.b} in[b].
    pub fn apply_to(&self, input: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(input.len(), out.len());
        let ph = self.phase_factor();
        for (b, &amp) in input.iter().enumerate() {
            let sign = if ((b as u64 & self.z).count_ones()) & 1 == 0 { 1.0 } else { -1.0 };
            out[b ^ self.x as usize] += ph * sign * amp;
        }
    }

    /// <psi| P |psi>.
    pub fn expectation(&self, psi: &[Complex64]) -> Complex64 {
        let ph = self.phase_factor();
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, &amp) in psi.iter().enumerate() {
            let sign = if ((b as u64 & self.z).count_ones()) & 1 == 0 { 1.0 } else { -1.0 };
            acc += psi[b ^ self.x as usize].conj() * ph * sign * amp;
        }
        acc
    }
}

impl fmt::Display for PauliString {
    /// Letters for sites 0..n where n is the highest occupied site + 1
    /// (minimum 1), prefixed by the phase if nontrivial.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let canonical = ((self.x & self.z).count_ones() % 4) as u8;
        match (self.phase + 4 - canonical) & 3 {
            0 => {}
            1 => write!(f, "i*")?,
            2 => write!(f, "-")?,
            _ => write!(f, "-i*")?,
        }
        let top = 64 - (self.x | self.z | 1).leading_zeros() as usize;
        for site in 0..top {
            write!(f, "{}", self.letter_at(site).as_char())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// 2x2 matrix of a single letter.
    fn letter_matrix(k: PauliKind) -> [[Complex64; 2]; 2] {
        let z = c(0.0, 0.0);
        match k {
            PauliKind::I => [[c(1.0, 0.0), z], [z, c(1.0, 0.0)]],
            PauliKind::X => [[z, c(1.0, 0.0)], [c(1.0, 0.0), z]],
            PauliKind::Y => [[z, c(0.0, -1.0)], [c(0.0, 1.0), z]],
            PauliKind::Z => [[c(1.0, 0.0), z], [z, c(-1.0, 0.0)]],
        }
    }

    fn mat_mul(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
        let mut out = [[c(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    /// Single-site dense matrix of a PauliString restricted to site 0.
    fn string_matrix(p: &PauliString) -> [[Complex64; 2]; 2] {
        let mut m = letter_matrix(PauliKind::I);
        if p.x & 1 == 1 {
            m = mat_mul(m, letter_matrix(PauliKind::X));
        }
        if p.z & 1 == 1 {
            m = mat_mul(m, letter_matrix(PauliKind::Z));
        }
        let ph = p.phase_factor();
        for row in m.iter_mut() {
            for e in row.iter_mut() {
                *e *= ph;
            }
        }
        m
    }

    #[test]
    fn single_site_product_table_matches_dense() {
        let kinds = [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z];
        for &a in &kinds {
            for &b in &kinds {
                let pa = PauliString::from_letters(&[(0, a)]);
                let pb = PauliString::from_letters(&[(0, b)]);
                let prod = pa.mul(&pb);
                let want = mat_mul(letter_matrix(a), letter_matrix(b));
                let got = string_matrix(&prod);
                for i in 0..2 {
                    for j in 0..2 {
                        assert!(
                            (got[i][j] - want[i][j]).norm() < 1e-14,
                            "{a:?} * {b:?} mismatch at ({i},{j})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn hermitian_square_is_identity_with_no_phase() {
        let p = PauliString::parse("XYZIY").unwrap();
        let sq = p.mul(&p);
        assert_eq!(sq, PauliString::IDENTITY);
    }

    #[test]
    fn dagger_of_hermitian_is_itself() {
        for s in ["X", "Y", "Z", "XY", "YZX", "YYIZX"] {
            let p = PauliString::parse(s).unwrap();
            assert_eq!(p.dagger(), p, "{s}");
        }
        // i*X is anti-Hermitian: dagger flips the sign.
        let ix = PauliString { x: 1, z: 0, phase: 1 };
        assert_eq!(ix.dagger(), PauliString { x: 1, z: 0, phase: 3 });
    }

    #[test]
    fn commutation_matches_product_order() {
        let pairs = [("XI", "ZI", false), ("XZ", "ZX", true), ("YY", "XX", true), ("XY", "XZ", false)];
        for (a, b, want) in pairs {
            let pa = PauliString::parse(a).unwrap();
            let pb = PauliString::parse(b).unwrap();
            assert_eq!(pa.commutes_with(&pb), want, "{a} vs {b}");
            let ab = pa.mul(&pb);
            let ba = pb.mul(&pa);
            assert_eq!(ab.x, ba.x);
            assert_eq!(ab.z, ba.z);
            assert_eq!(ab.phase == ba.phase, want);
        }
    }

    #[test]
    fn weight_counts_non_identity_sites() {
        assert_eq!(PauliString::parse("IXIYZ").unwrap().weight(), 3);
        assert_eq!(PauliString::IDENTITY.weight(), 0);
    }

    #[test]
    fn apply_matches_y_convention() {
        // Y|0> = i|1>, Y|1> = -i|0>
        let y = PauliString::y_on(0);
        let mut out = vec![c(0.0, 0.0); 2];
        y.apply_to(&[c(1.0, 0.0), c(0.0, 0.0)], &mut out);
        assert!((out[1] - c(0.0, 1.0)).norm() < 1e-15);
        let mut out2 = vec![c(0.0, 0.0); 2];
        y.apply_to(&[c(0.0, 0.0), c(1.0, 0.0)], &mut out2);
        assert!((out2[0] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn display_round_trips_canonical_strings() {
        for s in ["X", "IZ", "XYZ", "IIYIX"] {
            let p = PauliString::parse(s).unwrap();
            assert_eq!(format!("{p}"), s);
        }
    }
}
