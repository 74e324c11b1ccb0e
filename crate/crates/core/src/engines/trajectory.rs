//! Stochastic unraveling of a Pauli channel into pure-state trajectories.
//!
//! Each trajectory evolves a statevector through the circuit; after every
//! noise location it draws one branch of the channel (identity with the
//! leftover probability) and applies that Pauli outright. Averages over
//! trajectories converge to the density-matrix evolution. Every trajectory
//! owns an independent ChaCha stream selected by (seed, trajectory index), so
//! results do not depend on scheduling or thread count.

use rayon::prelude::*;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::engines::kernels::ZzPhaseTable;
use crate::engines::quench::{eval_on_statevector, ObservablePlan};
use crate::engines::result::QuenchResult;
use crate::engines::statevector::{ProductState, StateVector};
use crate::error::{Error, Result};
use crate::model::circuit::TrotterCircuit;
use crate::model::noise::{Cadence, NoiseChannel};
use crate::model::observable::ObservableSpec;
use crate::pauli::string::{PauliKind, PauliString};

/// One sampled error: which step, which site(s), which Pauli letters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorEvent {
    pub step: u32,
    pub sites: (u8, Option<u8>),
    pub letters: (PauliKind, Option<PauliKind>),
}

/// The sampled error records of a whole batch, in trajectory order.
#[derive(Debug, Clone)]
pub struct TrajectoryBatch {
    pub seed: u64,
    pub num_trajectories: usize,
    pub events: Vec<Vec<ErrorEvent>>,
}

struct BranchTable {
    /// Cumulative branch probabilities (already scaled by epsilon).
    cum: Vec<f64>,
    letters: Vec<(PauliKind, Option<PauliKind>)>,
    total: f64,
}

impl BranchTable {
    fn build(channel: &NoiseChannel) -> Result<Self> {
        channel.validate_physical()?;
        let mut cum = Vec::with_capacity(channel.kraus.len());
        let mut letters = Vec::with_capacity(channel.kraus.len());
        let mut acc = 0.0f64;
        for term in &channel.kraus {
            acc += channel.epsilon * term.weight;
            cum.push(acc);
            letters.push(term.letters);
        }
        Ok(BranchTable { cum, letters, total: acc })
    }

    /// Draws a branch; None means "no error". Always consumes exactly one
    /// uniform variate so the stream layout is fixed.
    fn sample(&self, rng: &mut ChaCha12Rng) -> Option<usize> {
        let u: f64 = rng.gen();
        if u >= self.total {
            return None;
        }
        Some(self.cum.partition_point(|&c| c <= u))
    }
}

fn letter_is_identity(l: (PauliKind, Option<PauliKind>)) -> bool {
    l.0 == PauliKind::I && l.1.map_or(true, |b| b == PauliKind::I)
}

fn string_for(letters: (PauliKind, Option<PauliKind>), sites: (usize, Option<usize>)) -> PauliString {
    let mut v = vec![(sites.0, letters.0)];
    if let (Some(s), Some(l)) = (sites.1, letters.1) {
        v.push((s, l));
    }
    PauliString::from_letters(&v)
}

struct TrajectoryOutput {
    /// values[step][obs]
    values: Vec<Vec<f64>>,
    events: Vec<ErrorEvent>,
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    circuit: &TrotterCircuit,
    table: &ZzPhaseTable,
    lut: &[num_complex::Complex64],
    branches: &BranchTable,
    cadence: Cadence,
    arity: usize,
    init: ProductState,
    plan: &ObservablePlan,
    seed: u64,
    index: u64,
) -> Result<TrajectoryOutput> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut state = StateVector::new_product(circuit.n_sites(), init)?;
    let mut work = Vec::new();
    let mut values = Vec::with_capacity(circuit.num_steps + 1);
    let mut events = Vec::new();
    values.push(eval_on_statevector(&state, plan, &mut work)?);

    let edges = circuit.ordered_edges();
    for step in 1..=circuit.num_steps {
        let theta = circuit.dt * circuit.h_at(step);
        state.apply_x_layer(theta);
        match cadence {
            Cadence::PerStep => {
                state.apply_zz_layer(table, lut);
                if arity == 1 {
                    for site in 0..circuit.n_sites() {
                        if let Some(b) = branches.sample(&mut rng) {
                            let letters = branches.letters[b];
                            if !letter_is_identity(letters) {
                                state.apply_pauli(&string_for(letters, (site, None)));
                                events.push(ErrorEvent {
                                    step: step as u32,
                                    sites: (site as u8, None),
                                    letters,
                                });
                            }
                        }
                    }
                } else {
                    for &(a, b) in &edges {
                        if let Some(k) = branches.sample(&mut rng) {
                            let letters = branches.letters[k];
                            if !letter_is_identity(letters) {
                                state.apply_pauli(&string_for(letters, (a, Some(b))));
                                events.push(ErrorEvent {
                                    step: step as u32,
                                    sites: (a as u8, Some(b as u8)),
                                    letters,
                                });
                            }
                        }
                    }
                }
            }
            Cadence::PerTwoQubitGate => {
                for &(a, b) in &edges {
                    state.apply_zz_edge(a, b, circuit.dt);
                    if let Some(k) = branches.sample(&mut rng) {
                        let letters = branches.letters[k];
                        if !letter_is_identity(letters) {
                            state.apply_pauli(&string_for(letters, (a, Some(b))));
                            events.push(ErrorEvent {
                                step: step as u32,
                                sites: (a as u8, Some(b as u8)),
                                letters,
                            });
                        }
                    }
                }
            }
        }
        values.push(eval_on_statevector(&state, plan, &mut work)?);
    }
    Ok(TrajectoryOutput { values, events })
}

/// Averaged trajectory quench. Standard errors are the sample standard
/// deviation over trajectories divided by sqrt(num_trajectories).
pub fn run_trajectory_quench(
    circuit: &TrotterCircuit,
    channel: &NoiseChannel,
    init: ProductState,
    observables: &[ObservableSpec],
    num_trajectories: usize,
    seed: u64,
) -> Result<(QuenchResult, TrajectoryBatch)> {
    if num_trajectories == 0 {
        return Err(Error::invalid("need at least one trajectory"));
    }
    let arity = channel.arity();
    if channel.cadence == Cadence::PerTwoQubitGate && circuit.ordered_edges().is_empty() {
        return Err(Error::invalid("per-gate cadence on an edgeless lattice"));
    }
    let plan = ObservablePlan::build(circuit.n_sites(), observables)?;
    let table = ZzPhaseTable::build(circuit.n_sites(), &circuit.ordered_edges());
    let lut = table.phase_lut(circuit.dt);
    let branches = BranchTable::build(channel)?;

    // Fixed-size chunks keep the reduction order independent of threading.
    const CHUNK: usize = 16;
    let chunk_starts: Vec<usize> = (0..num_trajectories).step_by(CHUNK).collect();
    let chunk_results: Vec<Result<Vec<TrajectoryOutput>>> = chunk_starts
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK).min(num_trajectories);
            (start..end)
                .map(|idx| {
                    run_one(
                        circuit,
                        &table,
                        &lut,
                        &branches,
                        channel.cadence,
                        arity,
                        init,
                        &plan,
                        seed,
                        idx as u64,
                    )
                })
                .collect()
        })
        .collect();

    let n_obs = plan.len();
    let n_steps = circuit.num_steps + 1;
    let mut sum = vec![vec![0.0f64; n_steps]; n_obs];
    let mut sum_sq = vec![vec![0.0f64; n_steps]; n_obs];
    let mut events = Vec::with_capacity(num_trajectories);
    for chunk in chunk_results {
        for out in chunk? {
            for (s, row) in out.values.iter().enumerate() {
                for (o, &v) in row.iter().enumerate() {
                    sum[o][s] += v;
                    sum_sq[o][s] += v * v;
                }
            }
            events.push(out.events);
        }
    }

    let t = num_trajectories as f64;
    let mut result = QuenchResult::new("trajectories", plan.labels().to_vec(), true);
    for s in 0..n_steps {
        let mut vals = Vec::with_capacity(n_obs);
        let mut errs = Vec::with_capacity(n_obs);
        for o in 0..n_obs {
            let mean = sum[o][s] / t;
            vals.push(mean);
            let se = if num_trajectories > 1 {
                let var = ((sum_sq[o][s] - sum[o][s] * sum[o][s] / t) / (t - 1.0)).max(0.0);
                (var / t).sqrt()
            } else {
                0.0
            };
            errs.push(se);
        }
        result.push_step(s, &vals, Some(&errs));
    }
    let batch = TrajectoryBatch { seed, num_trajectories, events };
    Ok((result, batch))
}
