//! High-level quench drivers: one circuit, one initial product state, a set
//! of observables recorded after every Trotter step (step 0 is the initial
//! state).
//!
//! The density driver defers each step's one-qubit channel into the next
//! step's rotation pass (the channel commutes with every other site's
//! rotation, and on its own site the two fuse into one sweep). Observables
//! at a step with a deferred channel are corrected in the Heisenberg
//! picture: a product channel just multiplies each Pauli string's
//! expectation by the product of its per-letter transfer eigenvalues.

use num_complex::Complex64;

use crate::engines::density::{ChannelMix, DensityMatrix};
use crate::engines::kernels::ZzPhaseTable;
use crate::engines::result::QuenchResult;
use crate::engines::statevector::{
    sym_from_weight_histogram, ProductState, StateVector,
};
use crate::error::{Error, Result};
use crate::model::circuit::TrotterCircuit;
use crate::model::noise::{Cadence, NoiseChannel};
use crate::model::observable::ObservableSpec;
use crate::pauli::operator::PauliOperator;
use crate::pauli::string::{PauliKind, PauliString};
use crate::pauli::transform::RelevantBasis;

/// Observables regrouped so that all symmetrized weights in one basis share
/// a single basis rotation / product sweep.
#[derive(Debug, Clone)]
pub struct ObservablePlan {
    n_sites: usize,
    labels: Vec<String>,
    sym: Vec<(usize, RelevantBasis, usize)>, // (slot, basis, k)
    parity: Vec<usize>,
    singles: Vec<(usize, usize, PauliKind)>,
    customs: Vec<(usize, PauliOperator)>,
}

impl ObservablePlan {
    pub fn build(n_sites: usize, specs: &[ObservableSpec]) -> Result<Self> {
        let mut plan = ObservablePlan {
            n_sites,
            labels: Vec::with_capacity(specs.len()),
            sym: Vec::new(),
            parity: Vec::new(),
            singles: Vec::new(),
            customs: Vec::new(),
        };
        for (slot, spec) in specs.iter().enumerate() {
            spec.validate(n_sites)?;
            plan.labels.push(spec.label());
            match spec {
                ObservableSpec::SymmetrizedWeightK { k, basis } => {
                    plan.sym.push((slot, RelevantBasis::from_kind(*basis)?, *k));
                }
                ObservableSpec::GlobalParity => plan.parity.push(slot),
                ObservableSpec::SitePauli { site, kind } => {
                    plan.singles.push((slot, *site, *kind));
                }
                ObservableSpec::Custom(op) => plan.customs.push((slot, op.clone())),
            }
        }
        Ok(plan)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn ks_for(&self, basis: RelevantBasis) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = self
            .sym
            .iter()
            .filter(|(_, b, _)| *b == basis)
            .map(|&(slot, _, k)| (slot, k))
            .collect();
        if basis == RelevantBasis::XType {
            v.extend(self.parity.iter().map(|&slot| (slot, self.n_sites)));
        }
        v
    }
}

/// Transfer eigenvalue of one Pauli letter under a one-qubit channel.
fn letter_factor(f: &[f64; 4], kind: PauliKind) -> f64 {
    match kind {
        PauliKind::I => f[0],
        PauliKind::X => f[1],
        PauliKind::Y => f[2],
        PauliKind::Z => f[3],
    }
}

fn string_factor(f: &[f64; 4], x: u64, z: u64) -> f64 {
    let nx = (x & !z).count_ones() as i32;
    let ny = (x & z).count_ones() as i32;
    let nz = (z & !x).count_ones() as i32;
    f[1].powi(nx) * f[2].powi(ny) * f[3].powi(nz)
}

pub fn eval_on_statevector(
    state: &StateVector,
    plan: &ObservablePlan,
    work: &mut Vec<Complex64>,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0f64; plan.len()];
    for basis in [RelevantBasis::XType, RelevantBasis::YType, RelevantBasis::ZType] {
        let slots = plan.ks_for(basis);
        if slots.is_empty() {
            continue;
        }
        let hist = state.outcome_weight_histogram_with(basis, work);
        let ks: Vec<usize> = slots.iter().map(|&(_, k)| k).collect();
        let vals = sym_from_weight_histogram(&hist, state.n_sites(), &ks);
        for ((slot, _), v) in slots.iter().zip(vals.iter()) {
            out[*slot] = *v;
        }
    }
    for &(slot, site, kind) in &plan.singles {
        let p = PauliString::from_letters(&[(site, kind)]);
        out[slot] = state.pauli_expectation(&p).re;
    }
    for (slot, op) in &plan.customs {
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, coeff) in op.terms() {
            acc += coeff * state.pauli_expectation(&p);
        }
        out[*slot] = acc.re;
    }
    Ok(out)
}

/// `deferred` carries the transfer eigenvalues of a one-qubit channel that
/// logically follows the current state; expectations are corrected by the
/// adjoint action instead of materializing the channel.
pub fn eval_on_density(
    rho: &DensityMatrix,
    plan: &ObservablePlan,
    deferred: Option<&[f64; 4]>,
) -> Result<Vec<f64>> {
    let ident = [1.0f64; 4];
    let f = deferred.unwrap_or(&ident);
    let mut out = vec![0.0f64; plan.len()];
    for basis in [RelevantBasis::XType, RelevantBasis::ZType] {
        let slots: Vec<(usize, usize)> = plan
            .sym
            .iter()
            .filter(|(_, b, _)| *b == basis)
            .map(|&(slot, _, k)| (slot, k))
            .collect();
        if slots.is_empty() {
            continue;
        }
        let ks: Vec<usize> = slots.iter().map(|&(_, k)| k).collect();
        let vals = rho.sym_expectations(basis, &ks)?;
        let base = match basis {
            RelevantBasis::XType => f[1],
            RelevantBasis::ZType => f[3],
            RelevantBasis::YType => unreachable!(),
        };
        for ((slot, k), v) in slots.iter().zip(vals.iter()) {
            out[*slot] = v * base.powi(*k as i32);
        }
    }
    if plan.sym.iter().any(|(_, b, _)| *b == RelevantBasis::YType) {
        return Err(Error::invalid(
            "Y-basis symmetrized observables are not supported on the density engine",
        ));
    }
    if !plan.parity.is_empty() {
        let v = rho.expectation(&ObservableSpec::GlobalParity)?
            * f[1].powi(plan.n_sites as i32);
        for &slot in &plan.parity {
            out[slot] = v;
        }
    }
    for &(slot, site, kind) in &plan.singles {
        let p = PauliString::from_letters(&[(site, kind)]);
        out[slot] = rho.pauli_expectation(&p).re * letter_factor(f, kind);
    }
    for (slot, op) in &plan.customs {
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, coeff) in op.terms() {
            acc += coeff * rho.pauli_expectation(&p) * string_factor(f, p.x, p.z);
        }
        out[*slot] = acc.re;
    }
    Ok(out)
}

/// Noiseless quench on the pure-state engine.
pub fn run_statevector_quench(
    circuit: &TrotterCircuit,
    init: ProductState,
    observables: &[ObservableSpec],
) -> Result<QuenchResult> {
    let plan = ObservablePlan::build(circuit.n_sites(), observables)?;
    let mut state = StateVector::new_product(circuit.n_sites(), init)?;
    let table = ZzPhaseTable::build(circuit.n_sites(), &circuit.ordered_edges());
    let lut = table.phase_lut(circuit.dt);
    let mut work = Vec::new();
    let mut result = QuenchResult::new("statevector", plan.labels().to_vec(), false);
    result.push_step(0, &eval_on_statevector(&state, &plan, &mut work)?, None);
    for step in 1..=circuit.num_steps {
        let theta = circuit.dt * circuit.h_at(step);
        state.apply_x_layer(theta);
        state.apply_zz_layer(&table, &lut);
        result.push_step(step, &eval_on_statevector(&state, &plan, &mut work)?, None);
    }
    let drift = (state.norm_sqr() - 1.0).abs();
    let gates = circuit.site_step_locations() + circuit.num_steps * circuit.ordered_edges().len();
    if drift > 1e-8 * (gates as f64 / 1000.0).max(1.0) {
        return Err(Error::Numerical(format!("norm drifted by {drift}")));
    }
    Ok(result)
}

/// Noisy (or noiseless, with `channel = None`) quench on the mixed-state
/// engine. Returns the recorded series and the final density matrix.
pub fn run_density_quench(
    circuit: &TrotterCircuit,
    channel: Option<&NoiseChannel>,
    init: ProductState,
    observables: &[ObservableSpec],
) -> Result<(QuenchResult, DensityMatrix)> {
    let plan = ObservablePlan::build(circuit.n_sites(), observables)?;
    let mut rho = DensityMatrix::new_product(circuit.n_sites(), init)?;
    let table = ZzPhaseTable::build(circuit.n_sites(), &circuit.ordered_edges());
    let lut = table.diff_phase_lut(circuit.dt);
    let mut result = QuenchResult::new("density", plan.labels().to_vec(), false);
    result.push_step(0, &eval_on_density(&rho, &plan, None)?, None);

    enum Mode {
        Unitary,
        SitePerStep { mix: ChannelMix, eigs: [f64; 4] },
        EdgePerStep { eigs: [f64; 16] },
        EdgePerGate { eigs: [f64; 16] },
    }
    let mode = match channel {
        None => Mode::Unitary,
        Some(ch) => match (ch.cadence, ch.arity()) {
            (Cadence::PerStep, 1) => {
                let eigs = ch.transfer_eigenvalues_1();
                Mode::SitePerStep { mix: ChannelMix::from_eigenvalues(eigs), eigs }
            }
            (Cadence::PerStep, 2) => Mode::EdgePerStep { eigs: ch.transfer_eigenvalues_2() },
            (Cadence::PerTwoQubitGate, 2) => {
                Mode::EdgePerGate { eigs: ch.transfer_eigenvalues_2() }
            }
            (cadence, arity) => {
                return Err(Error::incompatible(format!(
                    "cadence {cadence:?} with arity {arity} is not supported"
                )))
            }
        },
    };

    let edges = circuit.ordered_edges();
    let mut pending = false;
    for step in 1..=circuit.num_steps {
        let theta = circuit.dt * circuit.h_at(step);
        match &mode {
            Mode::Unitary => {
                rho.apply_x_layer(theta);
                rho.apply_zz_layer(&table, &lut);
                result.push_step(step, &eval_on_density(&rho, &plan, None)?, None);
            }
            Mode::SitePerStep { mix, eigs } => {
                let pre = if pending { Some(*mix) } else { None };
                for j in 0..circuit.n_sites() {
                    rho.fused_site_pass(j, pre, Some(theta), None);
                }
                rho.apply_zz_layer(&table, &lut);
                result.push_step(step, &eval_on_density(&rho, &plan, Some(eigs))?, None);
                pending = true;
            }
            Mode::EdgePerStep { eigs } => {
                rho.apply_x_layer(theta);
                rho.apply_zz_layer(&table, &lut);
                for &(a, b) in &edges {
                    rho.apply_edge_channel(a, b, eigs);
                }
                result.push_step(step, &eval_on_density(&rho, &plan, None)?, None);
            }
            Mode::EdgePerGate { eigs } => {
                rho.apply_x_layer(theta);
                for &(a, b) in &edges {
                    rho.apply_zz_edge(a, b, circuit.dt);
                    rho.apply_edge_channel(a, b, eigs);
                }
                result.push_step(step, &eval_on_density(&rho, &plan, None)?, None);
            }
        }
        rho.check_trace()?;
    }
    if pending {
        if let Mode::SitePerStep { mix, .. } = &mode {
            rho.apply_mix_all_sites(*mix);
            rho.check_trace()?;
        }
    }
    Ok((result, rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::circuit::FieldSchedule;
    use crate::model::lattice::LatticeGraph;
    use approx::assert_abs_diff_eq;

    fn chain(n: usize, steps: usize) -> TrotterCircuit {
        let g = LatticeGraph::chain(n, false).unwrap();
        TrotterCircuit::new(g, 0.15, FieldSchedule::Constant(3.0), steps).unwrap()
    }

    fn standard_obs(n: usize) -> Vec<ObservableSpec> {
        let mut custom = PauliOperator::zero(n);
        custom.add_hermitian_term(0b11, 0, 1.0);
        custom.add_hermitian_term(0, 0b110, 0.5);
        vec![
            ObservableSpec::SymmetrizedWeightK { k: 1, basis: PauliKind::X },
            ObservableSpec::SymmetrizedWeightK { k: 2, basis: PauliKind::X },
            ObservableSpec::SymmetrizedWeightK { k: 2, basis: PauliKind::Z },
            ObservableSpec::GlobalParity,
            ObservableSpec::SitePauli { site: 0, kind: PauliKind::X },
            ObservableSpec::Custom(custom),
        ]
    }

    #[test]
    fn statevector_and_density_agree_without_noise() {
        for graph in [
            LatticeGraph::chain(6, false).unwrap(),
            LatticeGraph::build_square_lattice(2, 3, true).unwrap(),
        ] {
            let circuit = TrotterCircuit::new(graph, 0.15, FieldSchedule::Constant(3.0), 10).unwrap();
            let obs = standard_obs(circuit.n_sites());
            let sv = run_statevector_quench(&circuit, ProductState::PlusX, &obs).unwrap();
            let (dm, _) = run_density_quench(&circuit, None, ProductState::PlusX, &obs).unwrap();
            for label in sv.observables.iter() {
                let a = sv.series(label).unwrap();
                let b = dm.series(label).unwrap();
                for (s, (x, y)) in a.iter().zip(b.iter()).enumerate() {
                    assert!(
                        (x - y).abs() < 1e-10,
                        "{label} step {s}: statevector {x} density {y}"
                    );
                }
            }
        }
    }

    #[test]
    fn fused_channel_driver_matches_unfused_stepping() {
        let circuit = chain(5, 7);
        let channel = NoiseChannel::depolarizing_1q(0.01).unwrap();
        let obs = standard_obs(5);
        let (fast, rho_fast) =
            run_density_quench(&circuit, Some(&channel), ProductState::PlusX, &obs).unwrap();

        // Reference: explicit channel pass each step, no deferral.
        let plan = ObservablePlan::build(5, &obs).unwrap();
        let table = ZzPhaseTable::build(5, &circuit.ordered_edges());
        let lut = table.diff_phase_lut(circuit.dt);
        let mix = ChannelMix::from_eigenvalues(channel.transfer_eigenvalues_1());
        let mut rho = DensityMatrix::new_product(5, ProductState::PlusX).unwrap();
        let mut slow_rows = vec![eval_on_density(&rho, &plan, None).unwrap()];
        for step in 1..=circuit.num_steps {
            rho.apply_x_layer(circuit.dt * circuit.h_at(step));
            rho.apply_zz_layer(&table, &lut);
            rho.apply_mix_all_sites(mix);
            slow_rows.push(eval_on_density(&rho, &plan, None).unwrap());
        }
        for (s, row) in slow_rows.iter().enumerate() {
            for (o, want) in row.iter().enumerate() {
                let got = fast.values[o][s];
                assert_abs_diff_eq!(got, *want, epsilon = 1e-12);
            }
        }
        let diff: f64 = rho_fast
            .a
            .iter()
            .zip(rho.a.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-13);
    }

    #[test]
    fn per_step_edge_channel_matches_dense_oracle() {
        let n = 3;
        let circuit = chain(n, 2);
        let channel = NoiseChannel::h1_1_two_qubit(2.0 * circuit.dt).unwrap().with_epsilon(5.0);
        let obs = vec![ObservableSpec::SymmetrizedWeightK { k: 1, basis: PauliKind::X }];
        let (res, _) =
            run_density_quench(&circuit, Some(&channel), ProductState::PlusX, &obs).unwrap();

        // Dense reference.
        let mut hx = PauliOperator::zero(n);
        for j in 0..n {
            hx.add_hermitian_term(1 << j, 0, circuit.h_at(1));
        }
        let mut hzz = PauliOperator::zero(n);
        for (a, b) in circuit.ordered_edges() {
            hzz.add_hermitian_term(0, (1 << a) | (1 << b), 1.0);
        }
        let ux = hx.to_dense().matexp(Complex64::new(0.0, -circuit.dt));
        let uzz = hzz.to_dense().matexp(Complex64::new(0.0, -circuit.dt));
        let u = uzz.matmul(&ux);
        let state = StateVector::new_product(n, ProductState::PlusX).unwrap();
        let mut rho = DensityMatrix::from_statevector(&state);
        let mut dense = crate::pauli::dense::DenseOperator::zeros(n);
        dense.a.copy_from_slice(&rho.a);
        let plan = ObservablePlan::build(n, &obs).unwrap();
        for step in 1..=2usize {
            dense = u.matmul(&dense).matmul(&u.dagger());
            for (a, b) in circuit.ordered_edges() {
                dense = channel.apply_to_dense(&dense, (a, Some(b)));
            }
            rho.a.copy_from_slice(&dense.a);
            let want = eval_on_density(&rho, &plan, None).unwrap()[0];
            assert_abs_diff_eq!(res.values[0][step], want, epsilon = 1e-11);
        }
    }

    #[test]
    fn parity_decays_geometrically_under_depolarizing() {
        let n = 4;
        let eps = 0.02;
        let circuit = chain(n, 6);
        let channel = NoiseChannel::depolarizing_1q(eps).unwrap();
        let obs = vec![ObservableSpec::GlobalParity];
        let (res, _) =
            run_density_quench(&circuit, Some(&channel), ProductState::PlusX, &obs).unwrap();
        let p = res.series("parity_x").unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-12);
        let ratio = (1.0 - eps).powi(n as i32);
        for t in 1..p.len() {
            assert_abs_diff_eq!(p[t] / p[t - 1], ratio, epsilon = 1e-12);
            assert!(p[t] < p[t - 1]);
        }
    }

    #[test]
    fn cosine_schedule_samples_the_field_at_integer_steps() {
        let n = 3;
        let dt = 0.15;
        let g = LatticeGraph::chain(n, false).unwrap();
        let sched = FieldSchedule::Cosine { amplitude: -2.0, period: 4.0 * std::f64::consts::PI };
        let circuit = TrotterCircuit::new(g, dt, sched, 2).unwrap();
        let sv = run_statevector_quench(
            &circuit,
            ProductState::PlusX,
            &[ObservableSpec::SitePauli { site: 1, kind: PauliKind::X }],
        )
        .unwrap();

        let mut hzz = PauliOperator::zero(n);
        for (a, b) in circuit.ordered_edges() {
            hzz.add_hermitian_term(0, (1 << a) | (1 << b), 1.0);
        }
        let uzz = hzz.to_dense().matexp(Complex64::new(0.0, -dt));
        let mut state = StateVector::new_product(n, ProductState::PlusX).unwrap();
        for step in 1..=2usize {
            let h = -2.0 * (0.5 * step as f64 * dt).cos();
            let mut hx = PauliOperator::zero(n);
            for j in 0..n {
                hx.add_hermitian_term(1 << j, 0, h);
            }
            let ux = hx.to_dense().matexp(Complex64::new(0.0, -dt));
            let u = uzz.matmul(&ux);
            let mut next = vec![Complex64::new(0.0, 0.0); state.dim()];
            for r in 0..state.dim() {
                for c in 0..state.dim() {
                    next[r] += u.get(r, c) * state.amps[c];
                }
            }
            state.amps = next;
            let p = PauliString::from_letters(&[(1, PauliKind::X)]);
            let want = state.pauli_expectation(&p).re;
            assert_abs_diff_eq!(sv.values[0][step], want, epsilon = 1e-12);
        }
    }

    #[test]
    fn y_basis_symmetrized_rejected_on_density() {
        let circuit = chain(3, 1);
        let obs = vec![ObservableSpec::SymmetrizedWeightK { k: 1, basis: PauliKind::Y }];
        assert!(run_density_quench(&circuit, None, ProductState::PlusX, &obs).is_err());
        // Supported on the statevector engine.
        assert!(run_statevector_quench(&circuit, ProductState::PlusX, &obs).is_ok());
    }

    #[test]
    fn step_zero_is_recorded() {
        let circuit = chain(3, 2);
        let sv = run_statevector_quench(
            &circuit,
            ProductState::PlusX,
            &[ObservableSpec::SymmetrizedWeightK { k: 1, basis: PauliKind::X }],
        )
        .unwrap();
        assert_eq!(sv.steps, vec![0, 1, 2]);
        assert_abs_diff_eq!(sv.values[0][0], 1.0, epsilon = 1e-12);
    }
}
