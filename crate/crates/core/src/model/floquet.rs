//! Effective Hamiltonian of one Trotter step, as a power series in dt.
//!
//! Writing one step U = exp(-i dt H_zz) exp(-i dt H_x), there is an H_F with
//! U = exp(-i dt H_F) whose expansion follows from the product formula for
//! exponentials:
//!
//! ```text
//! H_F = H_zz + H_x - (i dt/2)[H_zz, H_x]
//!       - (dt^2/12) ( [H_zz, [H_zz, H_x]] - [H_x, [H_zz, H_x]] ) + O(dt^3)
//! ```
//!
//! Every bracket is evaluated exactly in Pauli algebra, so the truncation
//! order is the only approximation. Each commutator extends strings by at
//! most one lattice neighborhood, so order-n strings have length O(n).

use crate::error::{Error, Result};
use crate::model::circuit::TrotterCircuit;
use crate::pauli::PauliOperator;

/// H_F through the requested order (0, 1 or 2) in dt.
pub fn floquet_hamiltonian_expansion(
    circuit: &TrotterCircuit,
    order: usize,
) -> Result<PauliOperator> {
    if order > 2 {
        return Err(Error::invalid(format!(
            "expansion implemented through order 2, got {order}"
        )));
    }
    let h = match circuit.field {
        crate::model::circuit::FieldSchedule::Constant(h) => h,
        _ => {
            return Err(Error::incompatible(
                "effective-Hamiltonian expansion needs a constant field",
            ))
        }
    };
    let n = circuit.n_sites();
    let dt = circuit.dt;

    let mut h_zz = PauliOperator::zero(n);
    for &(a, b) in circuit.graph.edges() {
        h_zz.add_hermitian_term(0, (1 << a) | (1 << b), 1.0);
    }
    let mut h_x = PauliOperator::zero(n);
    for j in 0..n {
        h_x.add_hermitian_term(1 << j, 0, h);
    }

    let mut total = h_zz.clone();
    total.add_assign(&h_x);
    if order == 0 {
        return Ok(total);
    }

    // c1 = i [H_zz, H_x] is Hermitian; -(i dt/2)[H_zz,H_x] = -(dt/2) c1.
    let c1 = PauliOperator::commutator_i(&h_zz, &h_x);
    let mut first = c1.clone();
    first.scale((-dt / 2.0).into());
    total.add_assign(&first);
    if order == 1 {
        return Ok(total);
    }

    // [A, [H_zz, H_x]] = -i [A, c1], so the dt^2 bracket combination becomes
    // (dt^2/12) ( i[H_zz, c1] - i[H_x, c1] ).
    let mut second = PauliOperator::commutator_i(&h_zz, &c1);
    let mut second_x = PauliOperator::commutator_i(&h_x, &c1);
    second_x.scale((-1.0).into());
    second.add_assign(&second_x);
    second.scale((dt * dt / 12.0).into());
    total.add_assign(&second);
    total.prune(1e-14);
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::circuit::FieldSchedule;
    use crate::model::lattice::LatticeGraph;
    use crate::pauli::DenseOperator;
    use num_complex::Complex64;

    fn two_layer_step(circuit: &TrotterCircuit) -> DenseOperator {
        // Dense U = exp(-i dt H_zz) * exp(-i dt H_x) for oracle comparisons.
        let n = circuit.n_sites();
        let mut h_zz = PauliOperator::zero(n);
        for &(a, b) in circuit.graph.edges() {
            h_zz.add_hermitian_term(0, (1 << a) | (1 << b), 1.0);
        }
        let mut h_x = PauliOperator::zero(n);
        for j in 0..n {
            h_x.add_hermitian_term(1 << j, 0, circuit.h_at(1));
        }
        let uzz = h_zz.to_dense().matexp(Complex64::new(0.0, -circuit.dt));
        let ux = h_x.to_dense().matexp(Complex64::new(0.0, -circuit.dt));
        uzz.matmul(&ux)
    }

    fn defect(circuit: &TrotterCircuit, order: usize) -> f64 {
        let hf = floquet_hamiltonian_expansion(circuit, order).unwrap();
        let want = two_layer_step(circuit);
        let got = hf.to_dense().matexp(Complex64::new(0.0, -circuit.dt));
        want.max_abs_diff(&got)
    }

    fn chain_circuit(dt: f64, h: f64) -> TrotterCircuit {
        let g = LatticeGraph::chain(3, true).unwrap();
        TrotterCircuit::new(g, dt, FieldSchedule::Constant(h), 1).unwrap()
    }

    #[test]
    fn truncation_error_shrinks_at_the_right_power_of_dt() {
        for order in 0..=2usize {
            let d1 = defect(&chain_circuit(0.1, 1.3), order);
            let d2 = defect(&chain_circuit(0.05, 1.3), order);
            let slope = (d1 / d2).log2();
            let want = (order + 2) as f64;
            assert!(
                (slope - want).abs() < 0.3,
                "order {order}: slope {slope}, expected ~{want}"
            );
        }
    }

    #[test]
    fn first_order_on_two_sites_gives_mixed_yz_strings() {
        let g = LatticeGraph::chain(2, false).unwrap();
        let dt = 0.15;
        let h = 3.0;
        let circuit = TrotterCircuit::new(g, dt, FieldSchedule::Constant(h), 1).unwrap();
        let hf = floquet_hamiltonian_expansion(&circuit, 1).unwrap();
        // -(dt/2) i[Z0 Z1, h(X0+X1)] = h dt (Y0 Z1 + Z0 Y1)
        let y0z1 = hf.coefficient(0b01, 0b11);
        let z0y1 = hf.coefficient(0b10, 0b11);
        assert!((y0z1.re - h * dt).abs() < 1e-12, "{y0z1}");
        assert!((z0y1.re - h * dt).abs() < 1e-12, "{z0y1}");
    }

    #[test]
    fn second_order_strings_stay_short_on_a_chain() {
        let g = LatticeGraph::chain(6, true).unwrap();
        let circuit = TrotterCircuit::new(g, 0.1, FieldSchedule::Constant(1.0), 1).unwrap();
        let hf = floquet_hamiltonian_expansion(&circuit, 2).unwrap();
        let max_weight = hf.terms().map(|(p, _)| p.weight()).max().unwrap();
        assert!(max_weight <= 3, "got weight {max_weight}");
        assert!(hf.is_hermitian(1e-12));
    }

    #[test]
    fn refuses_time_dependent_fields_and_high_orders() {
        let g = LatticeGraph::chain(3, false).unwrap();
        let c = TrotterCircuit::new(
            g.clone(),
            0.1,
            FieldSchedule::Cosine { amplitude: 1.0, period: 6.0 },
            1,
        )
        .unwrap();
        assert!(floquet_hamiltonian_expansion(&c, 1).is_err());
        let c2 = TrotterCircuit::new(g, 0.1, FieldSchedule::Constant(1.0), 1).unwrap();
        assert!(floquet_hamiltonian_expansion(&c2, 3).is_err());
    }
}
