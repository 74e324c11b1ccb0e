//! Trotter circuit description.
//!
//! One step realizes the unitary
//!
//! ```text
//! U(t) = [ prod_{<ij>} exp(-i dt Z_i Z_j) ] * [ prod_j exp(-i dt h(t) X_j) ]
//! ```
//!
//! read as an operator product: acting on a state, the transverse-field layer
//! is applied first, then the coupling layer with its edges in the graph's
//! application order. The field is sampled at the 1-based step index, so a
//! run of T steps uses h(1), ..., h(T).

use crate::error::{Error, Result};
use crate::model::lattice::LatticeGraph;

/// Transverse field as a function of the step index.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSchedule {
    Constant(f64),
    /// h(t) = amplitude * cos(2 pi * t * dt / period).
    Cosine { amplitude: f64, period: f64 },
}

impl FieldSchedule {
    pub fn value(&self, step_1based: usize, dt: f64) -> f64 {
        match *self {
            FieldSchedule::Constant(h) => h,
            FieldSchedule::Cosine { amplitude, period } => {
                amplitude * (2.0 * std::f64::consts::PI * step_1based as f64 * dt / period).cos()
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, FieldSchedule::Constant(_))
    }
}

#[derive(Debug, Clone)]
pub struct TrotterCircuit {
    pub graph: LatticeGraph,
    pub dt: f64,
    pub field: FieldSchedule,
    pub num_steps: usize,
}

impl TrotterCircuit {
    pub fn new(
        graph: LatticeGraph,
        dt: f64,
        field: FieldSchedule,
        num_steps: usize,
    ) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        if let FieldSchedule::Cosine { period, .. } = field {
            if !(period > 0.0) {
                return Err(Error::invalid("cosine schedule needs a positive period"));
            }
        }
        Ok(TrotterCircuit { graph, dt, field, num_steps })
    }

    pub fn n_sites(&self) -> usize {
        self.graph.num_sites()
    }

    /// Field value during step `s` (1-based).
    pub fn h_at(&self, step_1based: usize) -> f64 {
        self.field.value(step_1based, self.dt)
    }

    /// Edges in the order their ZZ rotations are applied within a layer.
    pub fn ordered_edges(&self) -> Vec<(usize, usize)> {
        self.graph
            .application_order()
            .into_iter()
            .map(|i| self.graph.edges()[i])
            .collect()
    }

    /// Noisy-location count for per-step-per-site noise: N * num_steps.
    pub fn site_step_locations(&self) -> usize {
        self.n_sites() * self.num_steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_ignores_step() {
        let f = FieldSchedule::Constant(1.5);
        assert_eq!(f.value(1, 0.1), 1.5);
        assert_eq!(f.value(77, 0.1), 1.5);
    }

    #[test]
    fn cosine_field_tracks_step_times_dt() {
        // amplitude -2, period 4 pi: h(t) = -2 cos(0.5 * t * dt)
        let f = FieldSchedule::Cosine { amplitude: -2.0, period: 4.0 * std::f64::consts::PI };
        let dt = 0.1;
        for t in [1usize, 5, 20, 100] {
            let want = -2.0 * (0.5 * t as f64 * dt).cos();
            assert!((f.value(t, dt) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_nonpositive_dt() {
        let g = LatticeGraph::chain(4, false).unwrap();
        assert!(TrotterCircuit::new(g.clone(), 0.0, FieldSchedule::Constant(1.0), 5).is_err());
        assert!(TrotterCircuit::new(g, -0.1, FieldSchedule::Constant(1.0), 5).is_err());
    }
}
