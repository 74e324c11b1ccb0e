//! Insertion-sum drivers.
//!
//! Writing the per-location channel as (1 - c eps) id + eps E with
//! E[rho] = sum_u w_u K_u rho K_u, a run over M = L * T locations expands as
//!
//! ```text
//! <O>_noisy = sum_n eps^n (1 - c eps)^(M - n) D_n
//! ```
//!
//! where D_n sums the bare insertion diagrams: E applied at an ordered set of
//! n locations, everything else ideal. D_0 is the noiseless value; D_1 is one
//! inserted Kraus operator summed over every location, measurable circuit by
//! circuit or by randomized sampling; the series coefficients follow by
//! inclusion-exclusion, Sigma_1 = D_1 - c M D_0 first among them.
//!
//! Two evaluation routes coexist. The statevector route re-evolves the ideal
//! circuit once per insertion and scales to large systems one diagram at a
//! time. The density route rides accumulator matrices along a single noisy
//! evolution: sigma_t = A_t[sigma_{t-1}] + E[rho_t] yields the whole noisy
//! D_1(t) series in one pass (A_t is the full noisy step; E commutes with the
//! same-slot channel because both are diagonal in the Pauli basis), and a
//! second accumulator extends the same recursion to ordered pairs for D_2.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::engines::density::{ChannelMix, DensityMatrix};
use crate::engines::kernels::ZzPhaseTable;
use crate::engines::statevector::{ProductState, StateVector};
use crate::error::{Error, Result};
use crate::model::circuit::TrotterCircuit;
use crate::model::noise::{Cadence, NoiseChannel};
use crate::model::observable::ObservableSpec;
use crate::pauli::string::{PauliKind, PauliString};
use crate::sigma::{mitigate_exp, mitigate_lin, randomized_insertion_schedule, ErrorInsertion,
    SigmaReport};

/// One entry per error location within a single noise slot: sites for
/// one-qubit channels, coupling edges for two-qubit ones.
pub fn insertion_supports(
    circuit: &TrotterCircuit,
    channel: &NoiseChannel,
) -> Vec<(usize, Option<usize>)> {
    if channel.arity() == 1 {
        (0..circuit.n_sites()).map(|j| (j, None)).collect()
    } else {
        circuit
            .ordered_edges()
            .into_iter()
            .map(|(a, b)| (a, Some(b)))
            .collect()
    }
}

/// Sequential pure-state stepping shared by the insertion walkers.
struct SvStepper<'a> {
    circuit: &'a TrotterCircuit,
    table: ZzPhaseTable,
    lut: Vec<Complex64>,
}

impl<'a> SvStepper<'a> {
    fn new(circuit: &'a TrotterCircuit) -> Self {
        let table = ZzPhaseTable::build(circuit.n_sites(), &circuit.ordered_edges());
        let lut = table.phase_lut(circuit.dt);
        SvStepper { circuit, table, lut }
    }

    fn advance(&self, psi: &mut StateVector, step: usize) {
        psi.apply_x_layer(self.circuit.dt * self.circuit.h_at(step));
        psi.apply_zz_layer(&self.table, &self.lut);
    }

    /// Applies steps `after_step + 1 ..= num_steps`.
    fn finish(&self, psi: &mut StateVector, after_step: usize) {
        for step in after_step + 1..=self.circuit.num_steps {
            self.advance(psi, step);
        }
    }
}

/// D_1 at the final time by exhaustive ideal re-evolution: one run per
/// (location, Kraus term) with the operator inserted into its noise slot,
/// weighted by w_u and summed. Slots follow each full step, or each coupling
/// gate under the per-gate cadence.
pub fn measure_d1(
    circuit: &TrotterCircuit,
    channel: &NoiseChannel,
    init: ProductState,
    obs: &ObservableSpec,
) -> Result<f64> {
    obs.validate(circuit.n_sites())?;
    match channel.cadence {
        Cadence::PerStep => measure_d1_per_step(circuit, channel, init, obs),
        Cadence::PerTwoQubitGate => measure_d1_per_gate(circuit, channel, init, obs),
    }
}

fn measure_d1_per_step(
    circuit: &TrotterCircuit,
    channel: &NoiseChannel,
    init: ProductState,
    obs: &ObservableSpec,
) -> Result<f64> {
    let supports = insertion_supports(circuit, channel);
    let tasks: Vec<(usize, usize, f64)> = supports
        .iter()
        .enumerate()
        .flat_map(|(si, _)| {
            channel
                .kraus
                .iter()
                .enumerate()
                .map(move |(u, term)| (si, u, term.weight))
        })
        .collect();
    let stepper = SvStepper::new(circuit);
    let mut psi = StateVector::new_product(circuit.n_sites(), init)?;
    let mut total = 0.0;
    for step in 1..=circuit.num_steps {
        stepper.advance(&mut psi, step);
        let vals = tasks
            .par_iter()
            .map(|&(si, u, _)| {
                let mut branch = psi.clone();
                branch.apply_pauli(&channel.kraus_string(u, supports[si]));
                stepper.finish(&mut branch, step);
                branch.expectation(obs)
            })
            .collect::<Result<Vec<f64>>>()?;
        for (&(_, _, w), v) in tasks.iter().zip(vals.iter()) {
            total += w * v;
        }
    }
    Ok(total)
}

fn measure_d1_per_gate(
    circuit: &TrotterCircuit,
    channel: &NoiseChannel,
    init: ProductState,
    obs: &ObservableSpec,
) -> Result<f64> {
    let edges = circuit.ordered_edges();
    let stepper = SvStepper::new(circuit);
    let mut psi = StateVector::new_product(circuit.n_sites(), init)?;
    let mut total = 0.0;
    for step in 1..=circuit.num_steps {
        psi.apply_x_layer(circuit.dt * circuit.h_at(step));
        for (g, &(a, b)) in edges.iter().enumerate() {
            psi.apply_zz_edge(a, b, circuit.dt);
            let vals = channel
                .kraus
                .par_iter()
                .enumerate()
                .map(|(u, _)| {
                    let mut branch = psi.clone();
                    branch.apply_pauli(&channel.kraus_string(u, (a, Some(b))));
                    for &(a2, b2) in &edges[g + 1..] {
                        branch.apply_zz_edge(a2, b2, circuit.dt);
                    }
                    stepper.finish(&mut branch, step);
                    branch.expectation(obs)
                })
                .collect::<Result<Vec<f64>>>()?;
            for (term, v) in channel.kraus.iter().zip(vals.iter()) {
                total += term.weight * v;
            }
        }
    }
    Ok(total)
}

/// D_2 at the final time: every ordered pair of distinct locations (earlier
/// slot first; within one slot, lower site first, the same slot twice being
/// excluded) with independent Kraus choices. Exhaustive, so guarded by a
/// pair-count budget; per-step one-site channels only.
pub fn measure_d2(
    circuit: &TrotterCircuit,
    channel: &NoiseChannel,
    init: ProductState,
    obs: &ObservableSpec,
) -> Result<f64> {
    if channel.arity() != 1 || channel.cadence != Cadence::PerStep {
        return Err(Error::incompatible(
            "pair sums are implemented for per-step one-site channels",
        ));
    }
    obs.validate(circuit.n_sites())?;
    let supports = insertion_supports(circuit, channel);
    let l = supports.len();
    let m = l * circuit.num_steps;
    let k = channel.kraus.len();
    let workload = m * (m - 1) / 2 * k * k;
    if workload > 200_000 {
        return Err(Error::invalid(format!(
            "pair enumeration over {m} locations ({workload} diagrams) exceeds the budget"
        )));
    }
    let stepper = SvStepper::new(circuit);
    let mut psi = StateVector::new_product(circuit.n_sites(), init)?;
    let mut total = 0.0;
    for s1 in 1..=circuit.num_steps {
        stepper.advance(&mut psi, s1);
        let firsts: Vec<(usize, usize, f64)> = (0..l)
            .flat_map(|j1| {
                channel
                    .kraus
                    .iter()
                    .enumerate()
                    .map(move |(u1, t1)| (j1, u1, t1.weight))
            })
            .collect();
        let sums = firsts
            .par_iter()
            .map(|&(j1, u1, w1)| {
                let mut after_first = psi.clone();
                after_first.apply_pauli(&channel.kraus_string(u1, supports[j1]));
                let mut acc = 0.0;
                let mut second = |state: &StateVector, j2: usize, u2: usize, w2: f64, s2: usize|
                 -> Result<()> {
                    let mut branch = state.clone();
                    branch.apply_pauli(&channel.kraus_string(u2, supports[j2]));
                    stepper.finish(&mut branch, s2);
                    acc += w1 * w2 * branch.expectation(obs)?;
                    Ok(())
                };
                for j2 in j1 + 1..l {
                    for (u2, t2) in channel.kraus.iter().enumerate() {
                        second(&after_first, j2, u2, t2.weight, s1)?;
                    }
                }
                let mut cursor = after_first;
                for s2 in s1 + 1..=circuit.num_steps {
                    stepper.advance(&mut cursor, s2);
                    for j2 in 0..l {
                        for (u2, t2) in channel.kraus.iter().enumerate() {
                            second(&cursor, j2, u2, t2.weight, s2)?;
                        }
                    }
                }
                Ok(acc)
            })
            .collect::<Result<Vec<f64>>>()?;
        total += sums.iter().sum::<f64>();
    }
    Ok(total)
}

/// Every D_n at once by branching each noise slot over identity and all Kraus
/// operators: (1 + K)^M ideal trajectories, so tiny systems only. Returns
/// out[n] = D_n for n = 0..=M.
pub fn enumerate_sectors(
    circuit: &TrotterCircuit,
    channel: &NoiseChannel,
    init: ProductState,
    obs: &ObservableSpec,
) -> Result<Vec<f64>> {
    if channel.cadence != Cadence::PerStep {
        return Err(Error::incompatible(
            "sector enumeration is implemented for per-step channels",
        ));
    }
    obs.validate(circuit.n_sites())?;
    let supports = insertion_supports(circuit, channel);
    let m = supports.len() * circuit.num_steps;
    let leaves = ((channel.kraus.len() + 1) as f64).powi(m as i32);
    if !(leaves <= 2e6) {
        return Err(Error::invalid(format!(
            "sector enumeration over {m} locations needs {leaves:.1e} trajectories"
        )));
    }
    let stepper = SvStepper::new(circuit);
    let mut out = vec![0.0f64; m + 1];
    let psi = StateVector::new_product(circuit.n_sites(), init)?;
    sector_walk(
        &stepper, &supports, channel, obs, &mut out,
        psi, 0, supports.len(), 0, 1.0,
    )?;
    Ok(out)
}

/// Invariant: `psi` sits after step `step` with slot locations before `slot`
/// already branched. Kraus branches clone; the identity branch moves on.
#[allow(clippy::too_many_arguments)]
fn sector_walk(
    stepper: &SvStepper,
    supports: &[(usize, Option<usize>)],
    channel: &NoiseChannel,
    obs: &ObservableSpec,
    out: &mut [f64],
    mut psi: StateVector,
    step: usize,
    slot: usize,
    inserted: usize,
    weight: f64,
) -> Result<()> {
    if slot == supports.len() {
        if step == stepper.circuit.num_steps {
            out[inserted] += weight * psi.expectation(obs)?;
            return Ok(());
        }
        stepper.advance(&mut psi, step + 1);
        return sector_walk(
            stepper, supports, channel, obs, out, psi, step + 1, 0, inserted, weight,
        );
    }
    for (u, term) in channel.kraus.iter().enumerate() {
        let mut branch = psi.clone();
        branch.apply_pauli(&channel.kraus_string(u, supports[slot]));
        sector_walk(
            stepper, supports, channel, obs, out,
            branch, step, slot + 1, inserted + 1, weight * term.weight,
        )?;
    }
    sector_walk(
        stepper, supports, channel, obs, out, psi, step, slot + 1, inserted, weight,
    )
}

/// Recombines bare sectors into the noisy expectation value,
/// sum_n eps^n (1 - c eps)^(M - n) d[n] with M = d.len() - 1.
pub fn sectors_to_noisy(d: &[f64], epsilon: f64, c: f64) -> f64 {
    let m = d.len() - 1;
    let idw = 1.0 - c * epsilon;
    d.iter()
        .enumerate()
        .map(|(n, dn)| epsilon.powi(n as i32) * idw.powi((m - n) as i32) * dn)
        .sum()
}

/// First series coefficient from the sector sums; `m` is the location count.
pub fn sigma1_from(d0: f64, d1: f64, c: f64, m: f64) -> f64 {
    d1 - c * m * d0
}

/// Second series coefficient.
pub fn sigma2_from(d0: f64, d1: f64, d2: f64, c: f64, m: f64) -> f64 {
    d2 - c * (m - 1.0) * d1 + c * c * m * (m - 1.0) / 2.0 * d0
}

/// Time series of the noisy expectation and its first (optionally second)
/// insertion sums, all from one noisy density-matrix evolution.
#[derive(Debug, Clone)]
pub struct NoisySigmaSeries {
    pub steps: Vec<usize>,
    /// Noisy <O>(t).
    pub d0: Vec<f64>,
    /// Single-insertion sum over all slots up to t, noisy elsewhere.
    pub d1: Vec<f64>,
    pub sigma1: Vec<f64>,
    pub d2: Option<Vec<f64>>,
    pub sigma2: Option<Vec<f64>>,
    pub epsilon: f64,
    pub locations_per_step: usize,
    /// c = total Kraus weight of the channel.
    pub identity_coefficient: f64,
}

enum ChannelKind {
    Site { mix: ChannelMix, wi: f64, wx: f64, wy: f64, wz: f64 },
    EdgeStep { eigs: Box<[f64; 16]> },
    EdgeGate { eigs: Box<[f64; 16]> },
}

fn site_letter_weights(channel: &NoiseChannel) -> (f64, f64, f64, f64) {
    let mut w = (0.0, 0.0, 0.0, 0.0);
    for k in &channel.kraus {
        match k.letters.0 {
            PauliKind::I => w.0 += k.weight,
            PauliKind::X => w.1 += k.weight,
            PauliKind::Y => w.2 += k.weight,
            PauliKind::Z => w.3 += k.weight,
        }
    }
    w
}

/// E applied to `src`, accumulated into `into`, for a one-site channel
/// summed over all sites.
fn add_site_error(
    src: &DensityMatrix,
    n: usize,
    (wi, wx, wy, wz): (f64, f64, f64, f64),
    into: &mut DensityMatrix,
) {
    for j in 0..n {
        src.accumulate_site_error_part(j, wx, wy, wz, into);
    }
    if wi != 0.0 {
        src.accumulate_conjugation(&PauliString::hermitian(0, 0), n as f64 * wi, into);
    }
}

/// E for an edge channel summed over all edges.
fn add_edge_error(
    src: &DensityMatrix,
    channel: &NoiseChannel,
    edges: &[(usize, usize)],
    into: &mut DensityMatrix,
) {
    for &(a, b) in edges {
        for (u, term) in channel.kraus.iter().enumerate() {
            src.accumulate_conjugation(&channel.kraus_string(u, (a, Some(b))), term.weight, into);
        }
    }
}

/// Same-slot ordered pairs sum_{j1 < j2} E_{j1} E_{j2} via one intermediate
/// buffer per outer site.
fn add_site_pair_error(
    src: &DensityMatrix,
    n: usize,
    (wx, wy, wz): (f64, f64, f64),
    scratch: &mut DensityMatrix,
    into: &mut DensityMatrix,
) {
    for j2 in 1..n {
        scratch.a.fill(Complex64::new(0.0, 0.0));
        src.accumulate_site_error_part(j2, wx, wy, wz, scratch);
        for j1 in 0..j2 {
            scratch.accumulate_site_error_part(j1, wx, wy, wz, into);
        }
    }
}

/// Runs one noisy evolution with the channel applied in place (no deferral)
/// while accumulator matrices collect the insertion series:
///
/// ```text
/// sigma_t = A_t[sigma_{t-1}] + E[rho_t]
/// tau_t   = A_t[tau_{t-1}] + E[A_t[sigma_{t-1}]] + F[rho_t]
/// ```
///
/// with F the same-step ordered-pair part. Under the per-gate cadence the
/// E term is assembled gate by gate so each insertion sees exactly the gates
/// that follow it. Second order is wired for per-step one-site channels on
/// at most 8 sites.
pub fn noisy_sigma_series(
    circuit: &TrotterCircuit,
    channel: &NoiseChannel,
    init: ProductState,
    obs: &ObservableSpec,
    order2: bool,
) -> Result<NoisySigmaSeries> {
    let n = circuit.n_sites();
    obs.validate(n)?;
    let edges = circuit.ordered_edges();
    let table = ZzPhaseTable::build(n, &edges);
    let lut = table.diff_phase_lut(circuit.dt);

    let kind = match (channel.cadence, channel.arity()) {
        (Cadence::PerStep, 1) => {
            let w = site_letter_weights(channel);
            ChannelKind::Site {
                mix: ChannelMix::from_eigenvalues(channel.transfer_eigenvalues_1()),
                wi: w.0,
                wx: w.1,
                wy: w.2,
                wz: w.3,
            }
        }
        (Cadence::PerStep, 2) => {
            ChannelKind::EdgeStep { eigs: Box::new(channel.transfer_eigenvalues_2()) }
        }
        (Cadence::PerTwoQubitGate, 2) => {
            ChannelKind::EdgeGate { eigs: Box::new(channel.transfer_eigenvalues_2()) }
        }
        (cadence, arity) => {
            return Err(Error::incompatible(format!(
                "cadence {cadence:?} with arity {arity} is not supported"
            )))
        }
    };
    if order2 {
        match &kind {
            ChannelKind::Site { wi, .. } => {
                if *wi != 0.0 {
                    return Err(Error::incompatible(
                        "pair accumulation assumes no identity Kraus letter",
                    ));
                }
                if n > 8 {
                    return Err(Error::invalid(format!(
                        "second-order accumulation is budgeted for at most 8 sites, got {n}"
                    )));
                }
            }
            _ => {
                return Err(Error::incompatible(
                    "second order is wired for per-step one-site channels",
                ))
            }
        }
    }
    let locations_per_step = match kind {
        ChannelKind::Site { .. } => n,
        _ => edges.len(),
    };
    let c = channel.c_total();

    let mut rho = DensityMatrix::new_product(n, init)?;
    let mut sig = rho.zeros_like();
    let mut tau = if order2 { Some(rho.zeros_like()) } else { None };
    let mut scratch = rho.zeros_like();

    let t_max = circuit.num_steps;
    let mut d0 = Vec::with_capacity(t_max + 1);
    let mut d1 = Vec::with_capacity(t_max + 1);
    let mut d2 = tau.as_ref().map(|_| Vec::with_capacity(t_max + 1));
    d0.push(rho.expectation(obs)?);
    d1.push(0.0);
    if let Some(v) = d2.as_mut() {
        v.push(0.0);
    }

    for step in 1..=t_max {
        let theta = circuit.dt * circuit.h_at(step);
        match &kind {
            ChannelKind::Site { mix, wi, wx, wy, wz } => {
                let weights = (*wi, *wx, *wy, *wz);
                let full = |m: &mut DensityMatrix| {
                    m.apply_x_layer(theta);
                    m.apply_zz_layer(&table, &lut);
                    m.apply_mix_all_sites(*mix);
                };
                if let Some(tau) = tau.as_mut() {
                    full(tau);
                }
                full(&mut sig);
                if let Some(tau) = tau.as_mut() {
                    add_site_error(&sig, n, weights, tau);
                }
                full(&mut rho);
                if let Some(tau) = tau.as_mut() {
                    add_site_pair_error(&rho, n, (*wx, *wy, *wz), &mut scratch, tau);
                }
                add_site_error(&rho, n, weights, &mut sig);
            }
            ChannelKind::EdgeStep { eigs } => {
                let full = |m: &mut DensityMatrix| {
                    m.apply_x_layer(theta);
                    m.apply_zz_layer(&table, &lut);
                    for &(a, b) in &edges {
                        m.apply_edge_channel(a, b, eigs);
                    }
                };
                full(&mut sig);
                full(&mut rho);
                add_edge_error(&rho, channel, &edges, &mut sig);
            }
            ChannelKind::EdgeGate { eigs } => {
                sig.apply_x_layer(theta);
                rho.apply_x_layer(theta);
                scratch.a.fill(Complex64::new(0.0, 0.0));
                for &(a, b) in &edges {
                    sig.apply_zz_edge(a, b, circuit.dt);
                    sig.apply_edge_channel(a, b, eigs);
                    scratch.apply_zz_edge(a, b, circuit.dt);
                    scratch.apply_edge_channel(a, b, eigs);
                    rho.apply_zz_edge(a, b, circuit.dt);
                    rho.apply_edge_channel(a, b, eigs);
                    for (u, term) in channel.kraus.iter().enumerate() {
                        rho.accumulate_conjugation(
                            &channel.kraus_string(u, (a, Some(b))),
                            term.weight,
                            &mut scratch,
                        );
                    }
                }
                for (s, v) in sig.a.iter_mut().zip(scratch.a.iter()) {
                    *s += v;
                }
            }
        }
        d0.push(rho.expectation(obs)?);
        d1.push(sig.expectation(obs)?);
        if let (Some(v), Some(tau)) = (d2.as_mut(), tau.as_ref()) {
            v.push(tau.expectation(obs)?);
        }
    }

    let l = locations_per_step as f64;
    let sigma1: Vec<f64> = d0
        .iter()
        .zip(d1.iter())
        .enumerate()
        .map(|(t, (d0t, d1t))| sigma1_from(*d0t, *d1t, c, l * t as f64))
        .collect();
    let sigma2 = d2.as_ref().map(|d2v| {
        d0.iter()
            .zip(d1.iter())
            .zip(d2v.iter())
            .enumerate()
            .map(|(t, ((d0t, d1t), d2t))| sigma2_from(*d0t, *d1t, *d2t, c, l * t as f64))
            .collect()
    });
    Ok(NoisySigmaSeries {
        steps: (0..=t_max).collect(),
        d0,
        d1,
        sigma1,
        d2,
        sigma2,
        epsilon: channel.epsilon,
        locations_per_step,
        identity_coefficient: c,
    })
}

/// Full mitigation summary at the final time of one noisy evolution.
pub fn sigma_report(
    circuit: &TrotterCircuit,
    channel: &NoiseChannel,
    init: ProductState,
    obs: &ObservableSpec,
    order2: bool,
) -> Result<SigmaReport> {
    let series = noisy_sigma_series(circuit, channel, init, obs, order2)?;
    let t = circuit.num_steps;
    let d0 = *series.d0.last().unwrap();
    let d1 = *series.d1.last().unwrap();
    let sigma1 = *series.sigma1.last().unwrap();
    let m = (series.locations_per_step * t) as f64;
    let eps = channel.epsilon;
    let safe_div = |num: f64, den: f64| if den == 0.0 { 0.0 } else { num / den };
    Ok(SigmaReport {
        d0,
        d1,
        d2: series.d2.as_ref().map(|v| *v.last().unwrap()),
        sigma1,
        sigma2: series.sigma2.as_ref().map(|v| *v.last().unwrap()),
        epsilon: eps,
        n_loc: series.locations_per_step,
        t,
        sigma1_over_sigma0: safe_div(sigma1, d0),
        rho: safe_div(-sigma1, d0 * m),
        lin: mitigate_lin(d0, sigma1, eps),
        exp: mitigate_exp(d0, sigma1, eps, 1.0).ok(),
        stderr_d0: None,
        stderr_d1: None,
    })
}

/// Monte-Carlo D_1 on the ideal circuit: insertions drawn from the
/// randomized schedule (uniform slot and location, Kraus index by weight),
/// each shot re-evolved with its single insertion and scored as
/// c * M * <O>. Returns (mean, standard error). The draw sequence is fixed
/// by the seed; evaluation order never changes the result.
pub fn randomized_d1_estimate(
    circuit: &TrotterCircuit,
    channel: &NoiseChannel,
    init: ProductState,
    obs: &ObservableSpec,
    draws: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if draws < 2 {
        return Err(Error::invalid("need at least two draws for a standard error"));
    }
    obs.validate(circuit.n_sites())?;
    let t = circuit.num_steps;
    if t == 0 {
        return Err(Error::invalid("randomized insertion needs at least one step"));
    }
    let supports = insertion_supports(circuit, channel);
    let c = channel.c_total();
    let m = (supports.len() * t) as f64;
    let rng = ChaCha12Rng::seed_from_u64(seed);
    let insertions: Vec<ErrorInsertion> =
        randomized_insertion_schedule(t, supports, channel, rng)?
            .take(draws)
            .collect();
    let mut by_step: Vec<Vec<usize>> = vec![Vec::new(); t + 1];
    for (i, ins) in insertions.iter().enumerate() {
        by_step[ins.step].push(i);
    }
    let per_gate = channel.cadence == Cadence::PerTwoQubitGate;
    let edges = circuit.ordered_edges();
    let stepper = SvStepper::new(circuit);
    let mut psi = StateVector::new_product(circuit.n_sites(), init)?;
    let mut vals = vec![0.0f64; draws];
    for step in 1..=t {
        // psi sits after step - 1; each shot replays step with its insertion.
        let batch = &by_step[step];
        if !batch.is_empty() {
            let theta = circuit.dt * circuit.h_at(step);
            let results = batch
                .par_iter()
                .map(|&i| {
                    let ins = &insertions[i];
                    let mut branch = psi.clone();
                    if per_gate {
                        branch.apply_x_layer(theta);
                        let g = edges
                            .iter()
                            .position(|&(a, b)| (a, Some(b)) == ins.support)
                            .expect("support is one of the coupling edges");
                        for &(a, b) in &edges[..=g] {
                            branch.apply_zz_edge(a, b, circuit.dt);
                        }
                        branch.apply_pauli(&channel.kraus_string(ins.kraus, ins.support));
                        for &(a, b) in &edges[g + 1..] {
                            branch.apply_zz_edge(a, b, circuit.dt);
                        }
                    } else {
                        stepper.advance(&mut branch, step);
                        branch.apply_pauli(&channel.kraus_string(ins.kraus, ins.support));
                    }
                    stepper.finish(&mut branch, step);
                    branch.expectation(obs)
                })
                .collect::<Result<Vec<f64>>>()?;
            for (&i, v) in batch.iter().zip(results.iter()) {
                vals[i] = c * m * v;
            }
        }
        stepper.advance(&mut psi, step);
    }
    let mean = vals.iter().sum::<f64>() / draws as f64;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (draws as f64 - 1.0);
    Ok((mean, (var / draws as f64).sqrt()))
}
