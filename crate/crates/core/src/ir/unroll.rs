//! Streaming evaluation of a program against bound parameters. The
//! unroller walks the tree with an explicit frame stack, so memory use is
//! bounded by IR depth, never by the number of emitted gates. It is
//! resumable and cloneable, which lets the branch enumerator fork execution
//! at measurement points.

use crate::error::{Error, Result};
use crate::ir::expr::EvalEnv;
use crate::ir::{HybridProgram, IntExpr, IrNode, LoopVar};
use crate::params::InstanceParams;

/// A concrete gate application produced by unrolling. Angles are evaluated,
/// qubit indices resolved and range-checked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateEvent {
    H { target: usize },
    X { target: usize },
    Phase { target: usize, angle: f64 },
    CPhase { control: usize, target: usize, angle: f64 },
    CCPhase { c0: usize, c1: usize, target: usize, angle: f64 },
    Cnot { control: usize, target: usize },
    CSwap { control: usize, a: usize, b: usize },
}

impl GateEvent {
    /// Number of qubits the gate touches.
    pub fn arity(&self) -> usize {
        match self {
            GateEvent::H { .. } | GateEvent::X { .. } | GateEvent::Phase { .. } => 1,
            GateEvent::CPhase { .. } | GateEvent::Cnot { .. } => 2,
            GateEvent::CCPhase { .. } | GateEvent::CSwap { .. } => 3,
        }
    }

    /// The phase angle, for phase-family gates.
    pub fn angle(&self) -> Option<f64> {
        match self {
            GateEvent::Phase { angle, .. }
            | GateEvent::CPhase { angle, .. }
            | GateEvent::CCPhase { angle, .. } => Some(*angle),
            _ => None,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            GateEvent::H { target } | GateEvent::X { target } | GateEvent::Phase { target, .. } => {
                vec![target]
            }
            GateEvent::CPhase { control, target, .. } | GateEvent::Cnot { control, target } => {
                vec![control, target]
            }
            GateEvent::CCPhase { c0, c1, target, .. } => vec![c0, c1, target],
            GateEvent::CSwap { control, a, b } => vec![control, a, b],
        }
    }
}

/// One step of execution handed to the driver of an [`Unroller`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Gate(GateEvent),
    /// The program measures `qubit` into record position `index`. The
    /// caller must report the outcome via [`Unroller::record_outcome`]
    /// before pulling the next step.
    Measure { qubit: usize, index: usize },
    Reset { qubit: usize },
}

#[derive(Debug, Clone)]
enum Frame<'a> {
    Seq { nodes: &'a [IrNode], pos: usize },
    Loop {
        var: LoopVar,
        bound: i128,
        reversed: bool,
        body: &'a [IrNode],
        done: i128,
        active: bool,
    },
}

/// Resumable streaming evaluator for one program under one parameter
/// binding. Cloning captures the full execution state.
#[derive(Debug, Clone)]
pub struct Unroller<'a> {
    program: &'a HybridProgram,
    params: &'a InstanceParams,
    frames: Vec<Frame<'a>>,
    loops: Vec<(u32, i128)>,
    theta: Vec<u8>,
    slots: Vec<i128>,
    awaiting: Option<usize>,
    finished: bool,
}

impl<'a> Unroller<'a> {
    pub fn new(program: &'a HybridProgram, params: &'a InstanceParams) -> Result<Self> {
        params.validate_for(program)?;
        Ok(Self {
            program,
            params,
            frames: vec![Frame::Seq {
                nodes: program.body(),
                pos: 0,
            }],
            loops: Vec::new(),
            theta: vec![0; program.theta_len() as usize],
            slots: vec![0; program.int_slots() as usize],
            awaiting: None,
            finished: false,
        })
    }

    /// The measurement record accumulated so far.
    pub fn theta(&self) -> &[u8] {
        &self.theta
    }

    /// Value of a classical integer slot.
    pub fn slot(&self, id: u32) -> Option<i128> {
        self.slots.get(id as usize).copied()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Report the outcome of the pending measurement.
    pub fn record_outcome(&mut self, bit: bool) -> Result<()> {
        let index = self.awaiting.take().ok_or_else(|| {
            Error::Internal("record_outcome called with no pending measurement".into())
        })?;
        self.theta[index] = bit as u8;
        Ok(())
    }

    fn env(&self) -> EvalEnv<'_> {
        EvalEnv {
            params: self.params,
            loops: &self.loops,
            theta: &self.theta,
            slots: &self.slots,
        }
    }

    fn eval_qubit(&self, e: &IntExpr) -> Result<usize> {
        let v = e.eval(&self.env())?;
        let total = self.program.layout().total_qubits();
        usize::try_from(v)
            .ok()
            .filter(|&q| q < total)
            .ok_or_else(|| {
                Error::MalformedProgram(format!("qubit index {v} out of range 0..{total}"))
            })
    }

    /// Advances to the next gate, measurement or reset. Returns `None` when
    /// the program has finished.
    pub fn next_step(&mut self) -> Result<Option<Step>> {
        if self.awaiting.is_some() {
            return Err(Error::Internal(
                "next_step called before the pending measurement outcome was recorded".into(),
            ));
        }
        loop {
            let Some(frame) = self.frames.last_mut() else {
                self.finished = true;
                return Ok(None);
            };
            match frame {
                Frame::Loop {
                    var,
                    bound,
                    reversed,
                    body,
                    done,
                    active,
                } => {
                    if *done >= *bound {
                        if *active {
                            let id = var.id;
                            let popped = self.loops.pop();
                            debug_assert_eq!(popped.map(|(i, _)| i), Some(id));
                        }
                        self.frames.pop();
                        continue;
                    }
                    let value = if *reversed { *bound - 1 - *done } else { *done };
                    let id = var.id;
                    let body = *body;
                    if *active {
                        // rebind for the next iteration
                        if let Some(last) = self.loops.last_mut() {
                            debug_assert_eq!(last.0, id);
                            last.1 = value;
                        }
                    } else {
                        *active = true;
                        self.loops.push((id, value));
                    }
                    *done += 1;
                    self.frames.push(Frame::Seq { nodes: body, pos: 0 });
                }
                Frame::Seq { nodes, pos } => {
                    if *pos >= nodes.len() {
                        self.frames.pop();
                        continue;
                    }
                    let node = &nodes[*pos];
                    *pos += 1;
                    match node {
                        IrNode::Gate(g) => {
                            if g.qubits.len() != g.kind.arity() {
                                return Err(Error::MalformedProgram(format!(
                                    "{} gate with {} operands",
                                    g.kind.name(),
                                    g.qubits.len()
                                )));
                            }
                            let angle = match (&g.angle, g.kind.has_angle()) {
                                (Some(a), true) => Some(a.eval(&self.env())?),
                                (None, false) => None,
                                _ => {
                                    return Err(Error::MalformedProgram(format!(
                                        "{} gate with wrong angle arity",
                                        g.kind.name()
                                    )))
                                }
                            };
                            let mut q = [0usize; 3];
                            for (slot, e) in q.iter_mut().zip(&g.qubits) {
                                *slot = self.eval_qubit(e)?;
                            }
                            let qs = &g.qubits;
                            if qs.len() >= 2 {
                                let resolved = &q[..qs.len()];
                                let mut sorted = resolved.to_vec();
                                sorted.sort_unstable();
                                sorted.dedup();
                                if sorted.len() != resolved.len() {
                                    return Err(Error::MalformedProgram(format!(
                                        "{} gate with repeated qubit operands {resolved:?}",
                                        g.kind.name()
                                    )));
                                }
                            }
                            let event = match g.kind {
                                super::GateKind::H => GateEvent::H { target: q[0] },
                                super::GateKind::X => GateEvent::X { target: q[0] },
                                super::GateKind::PhaseShift => GateEvent::Phase {
                                    target: q[0],
                                    angle: angle.unwrap(),
                                },
                                super::GateKind::ControlledPhase => GateEvent::CPhase {
                                    control: q[0],
                                    target: q[1],
                                    angle: angle.unwrap(),
                                },
                                super::GateKind::DoublyControlledPhase => GateEvent::CCPhase {
                                    c0: q[0],
                                    c1: q[1],
                                    target: q[2],
                                    angle: angle.unwrap(),
                                },
                                super::GateKind::Cnot => GateEvent::Cnot {
                                    control: q[0],
                                    target: q[1],
                                },
                                super::GateKind::ControlledSwap => GateEvent::CSwap {
                                    control: q[0],
                                    a: q[1],
                                    b: q[2],
                                },
                            };
                            return Ok(Some(Step::Gate(event)));
                        }
                        IrNode::Measure { qubit, index } => {
                            let q = self.eval_qubit(qubit)?;
                            let idx = index.eval(&self.env())?;
                            let idx = usize::try_from(idx)
                                .ok()
                                .filter(|&i| i < self.theta.len())
                                .ok_or_else(|| {
                                    Error::MalformedProgram(format!(
                                        "measurement record index {idx} out of range"
                                    ))
                                })?;
                            self.awaiting = Some(idx);
                            return Ok(Some(Step::Measure { qubit: q, index: idx }));
                        }
                        IrNode::Reset { qubit } => {
                            let q = self.eval_qubit(qubit)?;
                            return Ok(Some(Step::Reset { qubit: q }));
                        }
                        IrNode::ForLoop {
                            var,
                            bound,
                            reversed,
                            body,
                        } => {
                            let b = bound.eval(&self.env())?;
                            if b < 0 {
                                return Err(Error::MalformedProgram(format!(
                                    "negative loop bound {b}"
                                )));
                            }
                            self.frames.push(Frame::Loop {
                                var: *var,
                                bound: b,
                                reversed: *reversed,
                                body,
                                done: 0,
                                active: false,
                            });
                        }
                        IrNode::If {
                            cond,
                            then_body,
                            else_body,
                        } => {
                            let branch = if cond.eval(&self.env())? {
                                then_body
                            } else {
                                else_body
                            };
                            self.frames.push(Frame::Seq {
                                nodes: branch,
                                pos: 0,
                            });
                        }
                        IrNode::Assign { slot, value } => {
                            let v = value.eval(&self.env())?;
                            let slot = *slot as usize;
                            if slot >= self.slots.len() {
                                return Err(Error::MalformedProgram(format!(
                                    "classical slot {slot} not declared"
                                )));
                            }
                            self.slots[slot] = v;
                        }
                    }
                }
            }
        }
    }
}

/// Callback interface for streaming consumers. The measure callback
/// supplies the outcome bit, which enables both sampling and exhaustive
/// branch enumeration on the same machinery.
pub trait Visitor {
    fn gate(&mut self, event: &GateEvent) -> Result<()>;
    fn measure(&mut self, qubit: usize, index: usize) -> Result<bool>;
    fn reset(&mut self, qubit: usize) -> Result<()>;
}

/// Evaluates loops, branches and expressions with the bound parameters,
/// handing each concrete event to `visitor` in program order without ever
/// materializing the full gate list.
pub fn stream_unroll(
    program: &HybridProgram,
    params: &InstanceParams,
    visitor: &mut dyn Visitor,
) -> Result<()> {
    let mut unroller = Unroller::new(program, params)?;
    while let Some(step) = unroller.next_step()? {
        match step {
            Step::Gate(event) => visitor.gate(&event)?,
            Step::Measure { qubit, index } => {
                let bit = visitor.measure(qubit, index)?;
                unroller.record_outcome(bit)?;
            }
            Step::Reset { qubit } => visitor.reset(qubit)?,
        }
    }
    Ok(())
}

/// Visitor that tallies events and discards them; measurement outcomes are
/// reported as a fixed bit (0 unless configured otherwise).
#[derive(Debug, Default, Clone)]
pub struct CountingVisitor {
    pub gates: u64,
    pub measurements: u64,
    pub resets: u64,
    pub measure_bit: bool,
    /// Highest qubit index seen, if any event occurred.
    pub max_qubit: Option<usize>,
}

impl Visitor for CountingVisitor {
    fn gate(&mut self, event: &GateEvent) -> Result<()> {
        self.gates += 1;
        let m = event.qubits().into_iter().max();
        self.max_qubit = self.max_qubit.max(m);
        Ok(())
    }

    fn measure(&mut self, qubit: usize, _index: usize) -> Result<bool> {
        self.measurements += 1;
        self.max_qubit = self.max_qubit.max(Some(qubit));
        Ok(self.measure_bit)
    }

    fn reset(&mut self, qubit: usize) -> Result<()> {
        self.resets += 1;
        self.max_qubit = self.max_qubit.max(Some(qubit));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{BoolExpr, GateKind, IntExpr, IrNode, LoopVar};
    use crate::params::{ElisionPlan, InstanceParams, IterationPlan, OptimizationFlags};

    fn tiny_params(n: u32, t: u32) -> InstanceParams {
        assert!(n >= 2);
        InstanceParams {
            modulus: (1u64 << n) - 1,
            base: 2,
            plan: ElisionPlan {
                powers: vec![1; t as usize],
                inverse_powers: vec![1; t as usize],
                iterations: (0..t).map(|_| IterationPlan::keep_all(n as usize)).collect(),
                first_iteration_as_addition: false,
                flags: OptimizationFlags::none(),
            },
        }
    }

    #[test]
    fn loop_body_runs_bound_times() {
        let n = 4u32;
        let t = 2 * n;
        let var = LoopVar { id: 0, name: "k" };
        let body = vec![IrNode::h(IntExpr::Loop(var))];
        let program = HybridProgram::new(
            n,
            t,
            vec![IrNode::ForLoop {
                var,
                bound: IntExpr::c(t as i128),
                reversed: false,
                body,
            }],
            t,
            0,
        );
        let params = tiny_params(n, t);
        let mut v = CountingVisitor::default();
        stream_unroll(&program, &params, &mut v).unwrap();
        assert_eq!(v.gates, 8);
    }

    #[test]
    fn false_branch_emits_nothing() {
        let n = 4u32;
        let program = HybridProgram::new(
            n,
            1,
            vec![IrNode::If {
                cond: BoolExpr::Const(false),
                then_body: vec![IrNode::h(IntExpr::c(0)), IrNode::h(IntExpr::c(1))],
                else_body: vec![],
            }],
            1,
            0,
        );
        let params = tiny_params(n, 1);
        let mut v = CountingVisitor::default();
        stream_unroll(&program, &params, &mut v).unwrap();
        assert_eq!(v.gates, 0);
    }

    #[test]
    fn reversed_loop_iterates_backwards() {
        let var = LoopVar { id: 3, name: "j" };
        let program = HybridProgram::new(
            4,
            1,
            vec![IrNode::ForLoop {
                var,
                bound: IntExpr::c(3),
                reversed: true,
                body: vec![IrNode::h(IntExpr::Loop(var))],
            }],
            1,
            0,
        );
        let params = tiny_params(4, 1);
        let mut targets = Vec::new();
        let mut u = Unroller::new(&program, &params).unwrap();
        while let Some(step) = u.next_step().unwrap() {
            if let Step::Gate(GateEvent::H { target }) = step {
                targets.push(target);
            }
        }
        assert_eq!(targets, vec![2, 1, 0]);
    }

    #[test]
    fn out_of_range_qubit_is_malformed() {
        let program = HybridProgram::new(2, 1, vec![IrNode::h(IntExpr::c(99))], 1, 0);
        let params = tiny_params(2, 1);
        let mut v = CountingVisitor::default();
        let err = stream_unroll(&program, &params, &mut v).unwrap_err();
        assert!(matches!(err, crate::error::Error::MalformedProgram(_)));
    }

    #[test]
    fn wrong_power_table_length_is_missing_parameter() {
        let program = HybridProgram::new(4, 8, vec![], 8, 0);
        let mut params = tiny_params(4, 8);
        params.plan.powers.pop();
        let err = Unroller::new(&program, &params).unwrap_err();
        assert!(matches!(err, crate::error::Error::MissingParameter(_)));
    }

    #[test]
    fn gate_arity_mismatch_is_malformed() {
        let program = HybridProgram::new(
            4,
            1,
            vec![IrNode::gate(
                GateKind::Cnot,
                vec![IntExpr::c(0), IntExpr::c(1), IntExpr::c(2)],
                None,
            )],
            1,
            0,
        );
        let params = tiny_params(4, 1);
        let mut v = CountingVisitor::default();
        assert!(stream_unroll(&program, &params, &mut v).is_err());
    }

    #[test]
    fn unroll_is_deterministic() {
        // two identical drives produce identical event streams
        let var = LoopVar { id: 0, name: "k" };
        let inner = LoopVar { id: 1, name: "j" };
        let program = HybridProgram::new(
            2,
            4,
            vec![IrNode::ForLoop {
                var,
                bound: IntExpr::c(4),
                reversed: false,
                body: vec![
                    IrNode::ForLoop {
                        var: inner,
                        bound: IntExpr::Loop(var),
                        reversed: true,
                        body: vec![IrNode::cnot(IntExpr::Loop(inner), IntExpr::Loop(var).add(IntExpr::c(1)))],
                    },
                    IrNode::Measure {
                        qubit: IntExpr::c(0),
                        index: IntExpr::Loop(var),
                    },
                    IrNode::Assign {
                        slot: 0,
                        value: IntExpr::Slot(0).add(IntExpr::Theta(Box::new(IntExpr::Loop(var)))),
                    },
                ],
            }],
            4,
            1,
        );
        let params = tiny_params(2, 4);
        let collect = || {
            let mut events = Vec::new();
            let mut u = Unroller::new(&program, &params).unwrap();
            while let Some(step) = u.next_step().unwrap() {
                events.push(format!("{step:?}"));
                if matches!(step, Step::Measure { .. }) {
                    u.record_outcome(true).unwrap();
                }
            }
            (events, u.slot(0).unwrap())
        };
        let (e1, s1) = collect();
        let (e2, s2) = collect();
        assert_eq!(e1, e2);
        assert_eq!(s1, s2);
        assert_eq!(s1, 4); // four measurements, all recorded as 1
    }
}
