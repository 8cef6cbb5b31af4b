//! Structured hybrid program representation. A program is an ordered tree
//! of gates, mid-circuit measurements, resets, counted loops, conditionals
//! over classical expressions and classical assignments. The node count
//! depends only on structural constants, never on the modulus, the base or
//! the bit width: scale enters through loop bounds and expressions.
//!
//! Qubit indexing is little-endian throughout: qubit 0 of a register is the
//! least significant bit of the value it holds.

mod dump;
mod expr;
pub(crate) mod unroll;
mod validate;

pub use expr::{AngleExpr, BoolExpr, IntExpr, LoopVar};
pub use unroll::{stream_unroll, CountingVisitor, GateEvent, Step, Unroller, Visitor};
pub use validate::Diagnostic;

/// Gate vocabulary. Phase-family gates carry an angle expression; the rest
/// are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    H,
    X,
    PhaseShift,
    ControlledPhase,
    DoublyControlledPhase,
    Cnot,
    ControlledSwap,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::H | GateKind::X | GateKind::PhaseShift => 1,
            GateKind::ControlledPhase | GateKind::Cnot => 2,
            GateKind::DoublyControlledPhase | GateKind::ControlledSwap => 3,
        }
    }

    pub fn has_angle(self) -> bool {
        matches!(
            self,
            GateKind::PhaseShift | GateKind::ControlledPhase | GateKind::DoublyControlledPhase
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::PhaseShift => "phase",
            GateKind::ControlledPhase => "cphase",
            GateKind::DoublyControlledPhase => "ccphase",
            GateKind::Cnot => "cnot",
            GateKind::ControlledSwap => "cswap",
        }
    }
}

/// A gate node: kind, operand qubit expressions, optional angle.
/// For controlled gates the controls come first in `qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateNode {
    pub kind: GateKind,
    pub qubits: Vec<IntExpr>,
    pub angle: Option<AngleExpr>,
}

/// One node of the program tree.
#[derive(Debug, Clone, PartialEq)]
pub enum IrNode {
    Gate(GateNode),
    /// Measure `qubit` into measurement record position `index`.
    Measure { qubit: IntExpr, index: IntExpr },
    Reset { qubit: IntExpr },
    /// Counted loop: the variable runs 0..bound, or bound-1..=0 when
    /// `reversed` (used by structural adjoints).
    ForLoop {
        var: LoopVar,
        bound: IntExpr,
        reversed: bool,
        body: Vec<IrNode>,
    },
    If {
        cond: BoolExpr,
        then_body: Vec<IrNode>,
        else_body: Vec<IrNode>,
    },
    /// Classical integer assignment `slot = value`.
    Assign { slot: u32, value: IntExpr },
}

impl IrNode {
    pub fn gate(kind: GateKind, qubits: Vec<IntExpr>, angle: Option<AngleExpr>) -> Self {
        IrNode::Gate(GateNode { kind, qubits, angle })
    }

    pub fn h(q: IntExpr) -> Self {
        Self::gate(GateKind::H, vec![q], None)
    }

    pub fn x(q: IntExpr) -> Self {
        Self::gate(GateKind::X, vec![q], None)
    }

    pub fn phase(q: IntExpr, angle: AngleExpr) -> Self {
        Self::gate(GateKind::PhaseShift, vec![q], Some(angle))
    }

    pub fn cphase(control: IntExpr, target: IntExpr, angle: AngleExpr) -> Self {
        Self::gate(GateKind::ControlledPhase, vec![control, target], Some(angle))
    }

    pub fn ccphase(c0: IntExpr, c1: IntExpr, target: IntExpr, angle: AngleExpr) -> Self {
        Self::gate(
            GateKind::DoublyControlledPhase,
            vec![c0, c1, target],
            Some(angle),
        )
    }

    pub fn cnot(control: IntExpr, target: IntExpr) -> Self {
        Self::gate(GateKind::Cnot, vec![control, target], None)
    }

    pub fn cswap(control: IntExpr, a: IntExpr, b: IntExpr) -> Self {
        Self::gate(GateKind::ControlledSwap, vec![control, a, b], None)
    }
}

/// Counts nodes structurally: loop bodies count once, never unrolled.
pub fn count_nodes(nodes: &[IrNode]) -> usize {
    nodes
        .iter()
        .map(|n| match n {
            IrNode::ForLoop { body, .. } => 1 + count_nodes(body),
            IrNode::If {
                then_body,
                else_body,
                ..
            } => 1 + count_nodes(then_body) + count_nodes(else_body),
            _ => 1,
        })
        .sum()
}

/// Structural adjoint of a unitary fragment: nodes reversed, angles
/// negated, loops iterated in the opposite direction, branch conditions
/// untouched. Panics on measurement, reset and assignment nodes, which
/// have no adjoint.
pub fn adjoint_fragment(nodes: &[IrNode]) -> Vec<IrNode> {
    nodes.iter().rev().map(adjoint_node).collect()
}

fn adjoint_node(node: &IrNode) -> IrNode {
    match node {
        IrNode::Gate(g) => IrNode::Gate(GateNode {
            kind: g.kind,
            qubits: g.qubits.clone(),
            angle: g.angle.as_ref().map(AngleExpr::negated),
        }),
        IrNode::ForLoop {
            var,
            bound,
            reversed,
            body,
        } => IrNode::ForLoop {
            var: *var,
            bound: bound.clone(),
            reversed: !reversed,
            body: adjoint_fragment(body),
        },
        IrNode::If {
            cond,
            then_body,
            else_body,
        } => IrNode::If {
            cond: cond.clone(),
            then_body: adjoint_fragment(then_body),
            else_body: adjoint_fragment(else_body),
        },
        IrNode::Measure { .. } | IrNode::Reset { .. } | IrNode::Assign { .. } => {
            panic!("adjoint of a non-unitary node")
        }
    }
}

/// The three-register split of the 2n+3 qubits: n target qubits, one
/// estimation qubit and n+2 auxiliary qubits (an n+1-qubit accumulator
/// plus one comparison ancilla). Registers are disjoint by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    bit_width: u32,
}

impl RegisterLayout {
    pub fn new(bit_width: u32) -> Self {
        assert!(bit_width >= 1, "bit width must be at least 1");
        Self { bit_width }
    }

    pub fn bit_width(&self) -> u32 {
        self.bit_width
    }

    /// Target register qubits (little-endian), indices 0..n.
    pub fn target(&self) -> std::ops::Range<usize> {
        0..self.bit_width as usize
    }

    /// Accumulator register, n+1 qubits (one overflow bit).
    pub fn accumulator(&self) -> std::ops::Range<usize> {
        let n = self.bit_width as usize;
        n..2 * n + 1
    }

    /// Comparison ancilla for the modular adder.
    pub fn ancilla(&self) -> usize {
        2 * self.bit_width as usize + 1
    }

    /// All auxiliary qubits: accumulator plus ancilla.
    pub fn auxiliary(&self) -> std::ops::Range<usize> {
        let n = self.bit_width as usize;
        n..2 * n + 2
    }

    /// The single estimation qubit.
    pub fn estimation(&self) -> usize {
        2 * self.bit_width as usize + 2
    }

    pub fn total_qubits(&self) -> usize {
        2 * self.bit_width as usize + 3
    }
}

/// An immutable hybrid program, built once per bit width.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridProgram {
    bit_width: u32,
    iterations: u32,
    layout: RegisterLayout,
    body: Vec<IrNode>,
    theta_len: u32,
    int_slots: u32,
}

impl HybridProgram {
    /// Assembles a program. `theta_len` declares the measurement record
    /// length; `int_slots` the number of classical integer slots (all
    /// zero-initialized at unroll time).
    pub fn new(
        bit_width: u32,
        iterations: u32,
        body: Vec<IrNode>,
        theta_len: u32,
        int_slots: u32,
    ) -> Self {
        Self {
            bit_width,
            iterations,
            layout: RegisterLayout::new(bit_width),
            body,
            theta_len,
            int_slots,
        }
    }

    pub fn bit_width(&self) -> u32 {
        self.bit_width
    }

    /// Number of estimation iterations t.
    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn body(&self) -> &[IrNode] {
        &self.body
    }

    pub fn theta_len(&self) -> u32 {
        self.theta_len
    }

    pub fn int_slots(&self) -> u32 {
        self.int_slots
    }

    /// Declared runtime parameter slots, for display purposes.
    pub fn param_slots(&self) -> &'static [&'static str] {
        &[
            "modulus",
            "base",
            "powers",
            "inverse_powers",
            "plan.keep_fwd",
            "plan.keep_inv",
            "plan.overflow_fwd",
            "plan.overflow_inv",
            "plan.first_iteration_as_addition",
        ]
    }

    /// Total IR nodes, counted structurally (loop bodies once).
    pub fn node_count(&self) -> usize {
        count_nodes(&self.body)
    }

    /// Static well-formedness diagnostics; empty means well-formed.
    pub fn validate(&self) -> Vec<Diagnostic> {
        validate::validate(self)
    }

    /// Stable text dump of the tree, one node per line, indented by depth.
    pub fn dump(&self) -> String {
        dump::dump(self)
    }
}
