//! Lattice graphs and the gate-ordering edge coloring.
//!
//! Sites are indexed row-major: site = row * cols + col. Edges are listed in
//! application order, partitioned into sequential color groups:
//!
//! 1. horizontal brickwork A: even rows pair from even offsets, odd rows from
//!    odd offsets (the horizontal wrap joins whichever matching its left
//!    endpoint parity puts it in),
//! 2. horizontal brickwork B: the complementary matching per row,
//! 3. all vertical edges, row-major, including the bottom wrap.
//!
//! On a periodic lattice of width 2 the two horizontal matchings contain the
//! same site pair twice; both copies are kept as distinct gates.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LatticeGraph {
    num_sites: usize,
    /// Site pairs in application order.
    edges: Vec<(usize, usize)>,
    /// Partition of edge indices into sequentially applied groups.
    edge_colors: Option<Vec<Vec<usize>>>,
    /// Human-readable shape tag carried into result files.
    pub label: String,
}

/// Horizontal matching of one row cycle, starting from `parity` (0 or 1).
///
/// Pairs (c, c+1) for c = parity, parity+2, ... while c+1 < cols, then the
/// wrap (cols-1, 0) when the wrap's left offset cols-1 has that parity.
fn row_matching(row: usize, cols: usize, parity: usize, periodic: bool) -> Vec<(usize, usize)> {
    let base = row * cols;
    let mut out = Vec::new();
    let mut c = parity;
    while c + 1 < cols {
        out.push((base + c, base + c + 1));
        c += 2;
    }
    if periodic && (cols - 1) % 2 == parity {
        out.push((base + cols - 1, base));
    }
    out
}

impl LatticeGraph {
    /// Rectangular lattice with the three-group gate ordering.
    pub fn build_square_lattice(rows: usize, cols: usize, periodic: bool) -> Result<Self> {
        let min = if periodic { 2 } else { 1 };
        if rows < min || cols < min {
            return Err(Error::invalid(format!(
                "square lattice needs rows, cols >= {min} (got {rows} x {cols})"
            )));
        }
        let num_sites = rows * cols;
        let mut edges = Vec::new();
        let mut colors: Vec<Vec<usize>> = vec![Vec::new(), Vec::new(), Vec::new()];

        // Group 1: even rows even-offset matching, odd rows odd-offset.
        for r in 0..rows {
            for e in row_matching(r, cols, r % 2, periodic) {
                colors[0].push(edges.len());
                edges.push(e);
            }
        }
        // Group 2: the complementary matchings.
        for r in 0..rows {
            for e in row_matching(r, cols, (r + 1) % 2, periodic) {
                colors[1].push(edges.len());
                edges.push(e);
            }
        }
        // Group 3: verticals, row-major.
        let last_row = if periodic { rows } else { rows.saturating_sub(1) };
        for r in 0..last_row {
            for c in 0..cols {
                colors[2].push(edges.len());
                edges.push((r * cols + c, ((r + 1) % rows) * cols + c));
            }
        }

        let graph = LatticeGraph {
            num_sites,
            edges,
            edge_colors: Some(colors),
            label: format!("square-{rows}x{cols}-{}", if periodic { "periodic" } else { "open" }),
        };
        graph.validate()?;
        Ok(graph)
    }

    /// One-dimensional chain; the two horizontal matchings of a single row.
    pub fn chain(length: usize, periodic: bool) -> Result<Self> {
        if length < 2 {
            return Err(Error::invalid("chain needs at least 2 sites"));
        }
        let mut edges = Vec::new();
        let mut colors: Vec<Vec<usize>> = vec![Vec::new(), Vec::new()];
        for e in row_matching(0, length, 0, periodic) {
            colors[0].push(edges.len());
            edges.push(e);
        }
        for e in row_matching(0, length, 1, periodic) {
            colors[1].push(edges.len());
            edges.push(e);
        }
        let graph = LatticeGraph {
            num_sites: length,
            edges,
            edge_colors: Some(colors),
            label: format!("chain-{length}-{}", if periodic { "periodic" } else { "open" }),
        };
        graph.validate()?;
        Ok(graph)
    }

    /// Connect `hub` to every other site, keeping all base edges.
    ///
    /// Spokes that duplicate an existing edge (in either orientation) are
    /// dropped; the new spokes form one extra color group applied last.
    pub fn build_wheel_spokes(base: &LatticeGraph, hub: usize) -> Result<Self> {
        if hub >= base.num_sites {
            return Err(Error::invalid(format!(
                "hub {hub} outside lattice of {} sites",
                base.num_sites
            )));
        }
        let mut graph = base.clone();
        let mut spokes = Vec::new();
        for j in 0..base.num_sites {
            if j == hub {
                continue;
            }
            let duplicate = graph
                .edges
                .iter()
                .any(|&(a, b)| (a, b) == (hub, j) || (a, b) == (j, hub));
            if !duplicate {
                spokes.push(graph.edges.len());
                graph.edges.push((hub, j));
            }
        }
        if !spokes.is_empty() {
            match graph.edge_colors.as_mut() {
                Some(colors) => colors.push(spokes),
                None => {}
            }
            graph.label = format!("{}+hub{hub}", graph.label);
        }
        graph.validate()?;
        Ok(graph)
    }

    /// Arbitrary graph from an explicit edge list (no coloring).
    pub fn from_edges(num_sites: usize, edges: Vec<(usize, usize)>, label: &str) -> Result<Self> {
        let graph = LatticeGraph {
            num_sites,
            edges,
            edge_colors: None,
            label: label.to_string(),
        };
        graph.validate()?;
        Ok(graph)
    }

    fn validate(&self) -> Result<()> {
        for &(a, b) in &self.edges {
            if a == b {
                return Err(Error::invalid(format!("self-loop on site {a}")));
            }
            if a >= self.num_sites || b >= self.num_sites {
                return Err(Error::invalid(format!(
                    "edge ({a},{b}) outside lattice of {} sites",
                    self.num_sites
                )));
            }
        }
        if let Some(colors) = &self.edge_colors {
            let mut seen = vec![false; self.edges.len()];
            for group in colors {
                for &idx in group {
                    if idx >= self.edges.len() || seen[idx] {
                        return Err(Error::invalid("edge colors must partition the edge list"));
                    }
                    seen[idx] = true;
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::invalid("edge colors must cover every edge"));
            }
        }
        Ok(())
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_colors(&self) -> Option<&[Vec<usize>]> {
        self.edge_colors.as_deref()
    }

    /// Edge indices in gate-application order: color groups in sequence when
    /// present, list order otherwise.
    pub fn application_order(&self) -> Vec<usize> {
        match &self.edge_colors {
            Some(colors) => colors.iter().flatten().copied().collect(),
            None => (0..self.edges.len()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_square_has_two_edges_per_site() {
        for (r, c) in [(5, 4), (4, 5), (3, 4), (2, 2)] {
            let g = LatticeGraph::build_square_lattice(r, c, true).unwrap();
            assert_eq!(g.num_sites(), r * c);
            assert_eq!(g.num_edges(), 2 * r * c, "{r}x{c}");
        }
    }

    #[test]
    fn edge_groups_follow_brickwork_then_vertical_order() {
        // 4 rows of 5 sites: the application order is pinned to this exact
        // sequence, which matches the hardware gate schedule.
        let g = LatticeGraph::build_square_lattice(4, 5, true).unwrap();
        let order = g.application_order();
        let seq: Vec<(usize, usize)> = order.iter().map(|&i| g.edges()[i]).collect();
        let want_prefix = [
            (0, 1),
            (2, 3),
            (4, 0),
            (6, 7),
            (8, 9),
            (10, 11),
            (12, 13),
            (14, 10),
            (16, 17),
            (18, 19),
        ];
        assert_eq!(&seq[..10], &want_prefix);
        let want_second = [
            (1, 2),
            (3, 4),
            (5, 6),
            (7, 8),
            (9, 5),
            (11, 12),
            (13, 14),
            (15, 16),
            (17, 18),
            (19, 15),
        ];
        assert_eq!(&seq[10..20], &want_second);
        let want_vertical_start = [(0, 5), (1, 6), (2, 7), (3, 8), (4, 9), (5, 10)];
        assert_eq!(&seq[20..26], &want_vertical_start);
        assert_eq!(seq.len(), 40);
    }

    #[test]
    fn two_by_two_keeps_doubled_wrap_edges() {
        let g = LatticeGraph::build_square_lattice(2, 2, true).unwrap();
        assert_eq!(g.num_edges(), 8);
        // Every site sees 4 incident edges.
        for site in 0..4 {
            let deg = g
                .edges()
                .iter()
                .filter(|&&(a, b)| a == site || b == site)
                .count();
            assert_eq!(deg, 4, "site {site}");
        }
    }

    #[test]
    fn open_lattice_drops_wraps() {
        let g = LatticeGraph::build_square_lattice(3, 4, false).unwrap();
        // Horizontals: 3 rows x 3; verticals: 2 x 4.
        assert_eq!(g.num_edges(), 9 + 8);
    }

    #[test]
    fn wheel_spokes_union_count_and_idempotence() {
        let base = LatticeGraph::build_square_lattice(3, 4, true).unwrap();
        let wheel = LatticeGraph::build_wheel_spokes(&base, 1).unwrap();
        // 24 base edges + 11 spokes - 4 already-present neighbors.
        assert_eq!(wheel.num_edges(), 31);
        for j in 0..12 {
            if j != 1 {
                assert!(
                    wheel
                        .edges()
                        .iter()
                        .any(|&(a, b)| (a, b) == (1, j) || (a, b) == (j, 1)),
                    "missing spoke to {j}"
                );
            }
        }
        // All base edges retained as a prefix.
        assert_eq!(&wheel.edges()[..24], base.edges());
        let again = LatticeGraph::build_wheel_spokes(&wheel, 1).unwrap();
        assert_eq!(again.num_edges(), wheel.num_edges());
        assert_eq!(again.label, wheel.label);
    }

    #[test]
    fn wheel_on_tiny_lattice_adds_only_missing_pairs() {
        let base = LatticeGraph::build_square_lattice(2, 2, true).unwrap();
        let wheel = LatticeGraph::build_wheel_spokes(&base, 1).unwrap();
        // Site 1 already touches 0 and 3 (doubled); only (1,2) is new.
        assert_eq!(wheel.num_edges(), 9);
        assert_eq!(*wheel.edges().last().unwrap(), (1, 2));
    }

    #[test]
    fn chain_matchings_cover_all_bonds() {
        let g = LatticeGraph::chain(10, true).unwrap();
        assert_eq!(g.num_edges(), 10);
        let open = LatticeGraph::chain(10, false).unwrap();
        assert_eq!(open.num_edges(), 9);
        // Periodic wrap sits in the odd matching for even length.
        let colors = g.edge_colors().unwrap();
        let wrap_idx = g.edges().iter().position(|&e| e == (9, 0)).unwrap();
        assert!(colors[1].contains(&wrap_idx));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(LatticeGraph::build_square_lattice(1, 4, true).is_err());
        assert!(LatticeGraph::chain(1, false).is_err());
        let base = LatticeGraph::build_square_lattice(2, 2, true).unwrap();
        assert!(LatticeGraph::build_wheel_spokes(&base, 99).is_err());
        assert!(LatticeGraph::from_edges(3, vec![(0, 0)], "loop").is_err());
    }
}
