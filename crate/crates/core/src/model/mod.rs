//! Model construction: lattices, circuits, noise channels, observables.

pub mod circuit;
pub mod floquet;
pub mod lattice;
pub mod noise;
pub mod observable;

pub use circuit::{FieldSchedule, TrotterCircuit};
pub use floquet::floquet_hamiltonian_expansion;
pub use lattice::LatticeGraph;
pub use noise::{Cadence, KrausTerm, NoiseChannel};
pub use observable::ObservableSpec;
