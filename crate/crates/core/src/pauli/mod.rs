//! Pauli-string algebra.
//!
//! A string on n <= 64 sites is stored as two bit masks plus a power of i:
//! `i^phase * X^x * Z^z`, where bit j of `x` (resp. `z`) means an X (resp. Z)
//! factor on site j. A site carrying both bits is a Y up to phase; with
//! `phase = popcount(x & z) mod 4` the string is exactly the Hermitian tensor
//! product of {I, X, Y, Z} factors, which is the canonical form used
//! everywhere a real coefficient is expected.

pub mod dense;
pub mod operator;
pub mod string;
pub mod transform;

pub use dense::DenseOperator;
pub use operator::PauliOperator;
pub use string::{PauliKind, PauliString};
pub use transform::{
    dense_to_pauli_in_place, hermitian_coeffs, pauli_index, pauli_to_dense_in_place,
    split_pauli_index, weight_of_index, RelevantBasis,
};
