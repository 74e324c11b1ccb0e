//! Shared low-level tables for the evolution engines.
//!
//! The ZZ layer of a step is diagonal: acting on a basis state |b>, every
//! edge contributes a phase exp(-i dt s_e(b)) with s_e = +1 when the two bits
//! agree and -1 otherwise. The whole layer therefore multiplies |b> by
//! exp(-i dt k(b)) with the integer k(b) = sum_e s_e(b), so one table of
//! small integers plus a tiny lookup of unit phases replaces an edge-by-edge
//! sweep.

use num_complex::Complex64;

/// k(b) for every basis state, with |k| <= number of edges.
#[derive(Debug, Clone)]
pub struct ZzPhaseTable {
    pub n_sites: usize,
    pub num_edges: usize,
    pub k: Vec<i16>,
}

impl ZzPhaseTable {
    pub fn build(n_sites: usize, edges: &[(usize, usize)]) -> Self {
        assert!(n_sites <= 26, "phase table would exceed the memory budget");
        assert!(
            edges.len() <= i16::MAX as usize / 2,
            "edge count overflows the phase counter"
        );
        let dim = 1usize << n_sites;
        // Incident sites per site (a doubled edge appears twice).
        let mut adj: Vec<Vec<u8>> = vec![Vec::new(); n_sites];
        for &(a, b) in edges {
            adj[a].push(b as u8);
            adj[b].push(a as u8);
        }
        let mut k = vec![0i16; dim];
        k[0] = edges.len() as i16;
        for b in 1..dim {
            let q = b.trailing_zeros() as usize;
            let prev = b & (b - 1); // clear the lowest bit
            // Flipping bit q moves each incident edge by +-2.
            let mut delta = 0i16;
            for &m in &adj[q] {
                delta += if (b >> m) & 1 == 1 { 2 } else { -2 };
            }
            k[b] = k[prev] + delta;
        }
        ZzPhaseTable { n_sites, num_edges: edges.len(), k }
    }

    /// Unit phases exp(-i dt j) for j = -num_edges ..= num_edges,
    /// indexed j + num_edges. Pass negative dt for the inverse layer.
    pub fn phase_lut(&self, dt: f64) -> Vec<Complex64> {
        let e = self.num_edges as i32;
        (-e..=e)
            .map(|j| Complex64::new(0.0, -dt * j as f64).exp())
            .collect()
    }

    /// Phases exp(-i dt d) for the difference d = k(row) - k(col) of a
    /// density-matrix conjugation, d = -2 num_edges ..= 2 num_edges,
    /// indexed d + 2 num_edges.
    pub fn diff_phase_lut(&self, dt: f64) -> Vec<Complex64> {
        let e = 2 * self.num_edges as i32;
        (-e..=e)
            .map(|j| Complex64::new(0.0, -dt * j as f64).exp())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::lattice::LatticeGraph;

    #[test]
    fn phase_counter_matches_direct_edge_sum() {
        let g = LatticeGraph::build_square_lattice(2, 3, true).unwrap();
        let t = ZzPhaseTable::build(g.num_sites(), g.edges());
        for b in 0..(1usize << g.num_sites()) {
            let mut want = 0i16;
            for &(x, y) in g.edges() {
                let same = ((b >> x) ^ (b >> y)) & 1 == 0;
                want += if same { 1 } else { -1 };
            }
            assert_eq!(t.k[b], want, "b={b}");
        }
    }

    #[test]
    fn doubled_edges_count_twice() {
        let g = LatticeGraph::build_square_lattice(2, 2, true).unwrap();
        let t = ZzPhaseTable::build(g.num_sites(), g.edges());
        // All spins aligned: every one of the 8 edges contributes +1.
        assert_eq!(t.k[0], 8);
        assert_eq!(t.k[0b1111], 8);
    }
}
