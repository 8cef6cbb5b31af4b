//! Program execution: seeded sampling of one run, and exhaustive
//! enumeration of all measurement branches with exact probabilities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuits::MeasurementRecord;
use crate::error::{Error, Result};
use crate::ir::{HybridProgram, Step, Unroller};
use crate::params::InstanceParams;
use crate::simulator::StateVector;

/// Execution limits.
#[derive(Debug, Clone, Copy)]
pub struct SimulatorConfig {
    /// Largest statevector the engine will allocate (2^max_qubits
    /// amplitudes). The default of 20 covers moduli up to 8 bits.
    pub max_qubits: u32,
    /// Statevector norm drift tolerated at observation points.
    pub norm_tolerance: f64,
    /// Branches below this cumulative probability are pruned during
    /// enumeration.
    pub prune_threshold: f64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self {
            max_qubits: 20,
            norm_tolerance: 1e-6,
            prune_threshold: 1e-15,
        }
    }
}

/// Result of one execution (or one enumerated branch).
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: MeasurementRecord,
    /// Readout value assembled from the record: j = sum_l theta_l 2^l.
    pub readout: u64,
    /// Exact branch probability; only present in enumeration mode.
    pub probability: Option<f64>,
}

/// One enumerated branch with its final state.
#[derive(Debug, Clone)]
pub struct Branch {
    pub record: MeasurementRecord,
    pub probability: f64,
    pub state: StateVector,
}

fn check_capacity(program: &HybridProgram, config: &SimulatorConfig) -> Result<u32> {
    let q = program.layout().total_qubits() as u32;
    if q > config.max_qubits {
        return Err(Error::Capacity(format!(
            "program needs {q} qubits, simulator capacity is {} (gate counting handles larger widths)",
            config.max_qubits
        )));
    }
    Ok(q)
}

fn check_norm(state: &StateVector, config: &SimulatorConfig) -> Result<()> {
    let drift = (state.norm_sqr() - 1.0).abs();
    if drift > config.norm_tolerance {
        return Err(Error::Internal(format!(
            "statevector norm drifted by {drift:.3e}"
        )));
    }
    Ok(())
}

/// Runs the program once with projective sampling. Measurement outcomes
/// are drawn from a counter-based deterministic generator (ChaCha8 seeded
/// with `seed`), so identical (program, params, seed) triples produce
/// identical outcomes on every platform. The drawn uniform is compared
/// strictly against the |1> probability.
pub fn run_sampled(
    program: &HybridProgram,
    params: &InstanceParams,
    seed: u64,
) -> Result<RunOutcome> {
    run_sampled_with(program, params, seed, &SimulatorConfig::default()).map(|(o, _)| o)
}

/// [`run_sampled`] with explicit limits; also returns the final state.
pub fn run_sampled_with(
    program: &HybridProgram,
    params: &InstanceParams,
    seed: u64,
    config: &SimulatorConfig,
) -> Result<(RunOutcome, StateVector)> {
    let q = check_capacity(program, config)?;
    let mut state = StateVector::new(q);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unroller = Unroller::new(program, params)?;
    while let Some(step) = unroller.next_step()? {
        match step {
            Step::Gate(event) => state.apply(&event)?,
            Step::Measure { qubit, .. } => {
                check_norm(&state, config)?;
                let p1 = state.prob_one(qubit);
                let bit = rng.gen::<f64>() < p1;
                state.project(qubit, bit)?;
                unroller.record_outcome(bit)?;
            }
            Step::Reset { qubit } => {
                let p1 = state.prob_one(qubit);
                let bit = rng.gen::<f64>() < p1;
                state.project(qubit, bit)?;
                if bit {
                    state.apply(&crate::ir::GateEvent::X { target: qubit })?;
                }
            }
        }
    }
    check_norm(&state, config)?;
    let record = MeasurementRecord::new(unroller.theta().to_vec());
    let readout = record.readout();
    Ok((
        RunOutcome {
            record,
            readout,
            probability: None,
        },
        state,
    ))
}

/// Depth-first exploration of both outcomes at every measurement, carrying
/// exact branch probabilities. Branches whose cumulative probability falls
/// below the prune threshold are dropped; the surviving probabilities sum
/// to 1 within the pruned mass.
pub fn enumerate_branches(
    program: &HybridProgram,
    params: &InstanceParams,
    max_branches: usize,
) -> Result<Vec<(MeasurementRecord, f64)>> {
    let branches = enumerate_branches_full(program, params, max_branches, &SimulatorConfig::default())?;
    Ok(branches
        .into_iter()
        .map(|b| (b.record, b.probability))
        .collect())
}

/// [`enumerate_branches`] keeping each branch's final state.
pub fn enumerate_branches_full(
    program: &HybridProgram,
    params: &InstanceParams,
    max_branches: usize,
    config: &SimulatorConfig,
) -> Result<Vec<Branch>> {
    let q = check_capacity(program, config)?;
    let t = program.theta_len();
    if t >= 40 || (1usize << t) > max_branches {
        return Err(Error::Capacity(format!(
            "2^{t} branches exceed the budget of {max_branches}"
        )));
    }

    struct Node<'a> {
        unroller: Unroller<'a>,
        state: StateVector,
        probability: f64,
    }

    let mut stack = vec![Node {
        unroller: Unroller::new(program, params)?,
        state: StateVector::new(q),
        probability: 1.0,
    }];
    let mut out = Vec::new();

    while let Some(mut node) = stack.pop() {
        loop {
            match node.unroller.next_step()? {
                None => {
                    check_norm(&node.state, config)?;
                    if out.len() >= max_branches {
                        return Err(Error::Capacity(format!(
                            "enumeration produced more than {max_branches} branches"
                        )));
                    }
                    out.push(Branch {
                        record: MeasurementRecord::new(node.unroller.theta().to_vec()),
                        probability: node.probability,
                        state: node.state,
                    });
                    break;
                }
                Some(Step::Gate(event)) => node.state.apply(&event)?,
                Some(Step::Measure { qubit, .. }) => {
                    check_norm(&node.state, config)?;
                    let p1 = node.state.prob_one(qubit);
                    let p0 = 1.0 - p1;
                    let take_one = node.probability * p1 >= config.prune_threshold;
                    let take_zero = node.probability * p0 >= config.prune_threshold;
                    if take_one && take_zero {
                        let mut fork = Node {
                            unroller: node.unroller.clone(),
                            state: node.state.clone(),
                            probability: node.probability * p1,
                        };
                        fork.unroller.record_outcome(true)?;
                        fork.state.project(qubit, true)?;
                        stack.push(fork);
                    }
                    if take_zero {
                        node.unroller.record_outcome(false)?;
                        node.state.project(qubit, false)?;
                        node.probability *= p0;
                    } else if take_one {
                        node.unroller.record_outcome(true)?;
                        node.state.project(qubit, true)?;
                        node.probability *= p1;
                    } else {
                        break; // both branches below threshold
                    }
                }
                Some(Step::Reset { qubit }) => {
                    let p1 = node.state.prob_one(qubit);
                    let p0 = 1.0 - p1;
                    let take_one = node.probability * p1 >= config.prune_threshold;
                    let take_zero = node.probability * p0 >= config.prune_threshold;
                    if take_one && take_zero {
                        let mut fork = Node {
                            unroller: node.unroller.clone(),
                            state: node.state.clone(),
                            probability: node.probability * p1,
                        };
                        fork.state.project(qubit, true)?;
                        fork.state
                            .apply(&crate::ir::GateEvent::X { target: qubit })?;
                        stack.push(fork);
                    }
                    if take_zero {
                        node.state.project(qubit, false)?;
                        node.probability *= p0;
                    } else if take_one {
                        node.state.project(qubit, true)?;
                        node.state
                            .apply(&crate::ir::GateEvent::X { target: qubit })?;
                        node.probability *= p1;
                    } else {
                        break;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Collapses branch probabilities into a readout distribution over
/// j = 0..2^t.
pub fn readout_distribution(t: u32, branches: &[(MeasurementRecord, f64)]) -> Vec<f64> {
    let mut dist = vec![0.0; 1usize << t];
    for (record, p) in branches {
        dist[record.readout() as usize] += p;
    }
    dist
}
