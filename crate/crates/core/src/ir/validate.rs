//! Static well-formedness checks. Qubit ranges are checked by interval
//! analysis over loop-variable ranges where the bounds are statically
//! decidable; classical references are checked against the declared record
//! length and slot count; gate arity against the gate kind.

use std::fmt;

use crate::ir::expr::{AngleExpr, BoolExpr, IntExpr};
use crate::ir::{HybridProgram, IrNode};

/// One validation finding. An empty diagnostic list means well-formed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

type Interval = (i128, i128);

struct Checker<'a> {
    program: &'a HybridProgram,
    vars: Vec<(u32, Interval)>,
    out: Vec<Diagnostic>,
}

pub(super) fn validate(program: &HybridProgram) -> Vec<Diagnostic> {
    let mut checker = Checker {
        program,
        vars: Vec::new(),
        out: Vec::new(),
    };
    checker.check_nodes(program.body());
    checker.out
}

impl<'a> Checker<'a> {
    fn report(&mut self, message: String) {
        self.out.push(Diagnostic { message });
    }

    /// Interval of an integer expression, or `None` when it depends on
    /// runtime values we cannot bound statically.
    fn interval(&self, e: &IntExpr) -> Option<Interval> {
        let n = self.program.bit_width() as i128;
        match e {
            IntExpr::Const(v) => Some((*v, *v)),
            IntExpr::Loop(var) => self
                .vars
                .iter()
                .rev()
                .find(|(id, _)| *id == var.id)
                .map(|(_, iv)| *iv),
            // N is an n-bit value.
            IntExpr::Modulus => Some((1 << (n - 1), (1 << n) - 1)),
            // a and all table entries are reduced mod N.
            IntExpr::Base | IntExpr::Power(_) | IntExpr::InversePower(_) => {
                Some((0, (1 << n) - 1))
            }
            IntExpr::Theta(_) => Some((0, 1)),
            IntExpr::Slot(_) => None,
            IntExpr::Add(a, b) => {
                let (al, ah) = self.interval(a)?;
                let (bl, bh) = self.interval(b)?;
                Some((al.checked_add(bl)?, ah.checked_add(bh)?))
            }
            IntExpr::Sub(a, b) => {
                let (al, ah) = self.interval(a)?;
                let (bl, bh) = self.interval(b)?;
                Some((al.checked_sub(bh)?, ah.checked_sub(bl)?))
            }
            IntExpr::Mul(a, b) => {
                let (al, ah) = self.interval(a)?;
                let (bl, bh) = self.interval(b)?;
                let corners = [
                    al.checked_mul(bl)?,
                    al.checked_mul(bh)?,
                    ah.checked_mul(bl)?,
                    ah.checked_mul(bh)?,
                ];
                Some((*corners.iter().min()?, *corners.iter().max()?))
            }
            IntExpr::Pow2(e) => {
                let (lo, hi) = self.interval(e)?;
                if lo < 0 || hi > 100 {
                    return None;
                }
                Some((1 << lo.min(100), 1 << hi))
            }
            IntExpr::Mod(_, m) => {
                let (ml, mh) = self.interval(m)?;
                if ml <= 0 {
                    return None;
                }
                Some((0, mh - 1))
            }
        }
    }

    fn check_qubit(&mut self, e: &IntExpr, role: &str) {
        self.scan_int(e);
        if let Some((lo, hi)) = self.interval(e) {
            let total = self.program.layout().total_qubits() as i128;
            if lo < 0 || hi >= total {
                self.report(format!(
                    "{role} qubit expression {e} may evaluate outside 0..{total} (range {lo}..={hi})"
                ));
            }
        }
    }

    /// Recursively checks classical references inside an integer expression.
    fn scan_int(&mut self, e: &IntExpr) {
        match e {
            IntExpr::Const(_) | IntExpr::Modulus | IntExpr::Base => {}
            IntExpr::Loop(var) => {
                if !self.vars.iter().any(|(id, _)| *id == var.id) {
                    self.report(format!("loop variable {} used out of scope", var.name));
                }
            }
            IntExpr::Power(i) | IntExpr::InversePower(i) => {
                self.scan_int(i);
                let t = self.program.iterations() as i128;
                if let Some((lo, hi)) = self.interval(i) {
                    if lo < 0 || hi >= t {
                        self.report(format!(
                            "power table index {i} may evaluate outside 0..{t}"
                        ));
                    }
                }
            }
            IntExpr::Slot(id) => {
                if *id >= self.program.int_slots() {
                    self.report(format!(
                        "def-before-use: classical slot {id} is not declared (program has {})",
                        self.program.int_slots()
                    ));
                }
            }
            IntExpr::Theta(i) => {
                self.scan_int(i);
                let t = self.program.theta_len() as i128;
                if let Some((lo, hi)) = self.interval(i) {
                    if lo < 0 || hi >= t {
                        self.report(format!(
                            "def-before-use: measurement bit index {i} outside declared record 0..{t}"
                        ));
                    }
                }
            }
            IntExpr::Add(a, b) | IntExpr::Sub(a, b) | IntExpr::Mul(a, b) | IntExpr::Mod(a, b) => {
                self.scan_int(a);
                self.scan_int(b);
            }
            IntExpr::Pow2(e) => self.scan_int(e),
        }
    }

    fn scan_bool(&mut self, e: &BoolExpr) {
        match e {
            BoolExpr::Const(_) | BoolExpr::FirstIterationAddition => {}
            BoolExpr::KeepAdder { iter, adder, .. }
            | BoolExpr::OverflowNeeded { iter, adder, .. } => {
                self.scan_int(iter);
                self.scan_int(adder);
                let t = self.program.iterations() as i128;
                let n = self.program.bit_width() as i128;
                if let Some((lo, hi)) = self.interval(iter) {
                    if lo < 0 || hi >= t {
                        self.report(format!("plan iteration index {iter} outside 0..{t}"));
                    }
                }
                if let Some((lo, hi)) = self.interval(adder) {
                    if lo < 0 || hi >= n {
                        self.report(format!("plan adder index {adder} outside 0..{n}"));
                    }
                }
            }
            BoolExpr::Eq(a, b) => {
                self.scan_int(a);
                self.scan_int(b);
            }
            BoolExpr::And(a, b) => {
                self.scan_bool(a);
                self.scan_bool(b);
            }
            BoolExpr::Not(a) => self.scan_bool(a),
        }
    }

    fn scan_angle(&mut self, e: &AngleExpr) {
        match e {
            AngleExpr::TwoPiOverPow2 { exponent, .. } => self.scan_int(exponent),
            AngleExpr::FourierValue { value, bit, .. } => {
                self.scan_int(value);
                self.scan_int(bit);
            }
            AngleExpr::FeedForward { slot, exponent, .. } => {
                if *slot >= self.program.int_slots() {
                    self.report(format!(
                        "def-before-use: classical slot {slot} is not declared (program has {})",
                        self.program.int_slots()
                    ));
                }
                self.scan_int(exponent);
            }
        }
    }

    fn check_nodes(&mut self, nodes: &[IrNode]) {
        for node in nodes {
            match node {
                IrNode::Gate(g) => {
                    if g.qubits.len() != g.kind.arity() {
                        self.report(format!(
                            "arity: {} gate has {} qubit operands, expected {}",
                            g.kind.name(),
                            g.qubits.len(),
                            g.kind.arity()
                        ));
                    }
                    match (&g.angle, g.kind.has_angle()) {
                        (Some(a), true) => self.scan_angle(a),
                        (None, false) => {}
                        (Some(_), false) => {
                            self.report(format!("{} gate carries an angle", g.kind.name()))
                        }
                        (None, true) => {
                            self.report(format!("{} gate is missing its angle", g.kind.name()))
                        }
                    }
                    for q in &g.qubits {
                        self.check_qubit(q, g.kind.name());
                    }
                }
                IrNode::Measure { qubit, index } => {
                    self.check_qubit(qubit, "measure");
                    self.scan_int(index);
                    let t = self.program.theta_len() as i128;
                    if let Some((lo, hi)) = self.interval(index) {
                        if lo < 0 || hi >= t {
                            self.report(format!(
                                "def-before-use: measurement record index {index} outside declared record 0..{t}"
                            ));
                        }
                    }
                }
                IrNode::Reset { qubit } => self.check_qubit(qubit, "reset"),
                IrNode::ForLoop { var, bound, body, .. } => {
                    self.scan_int(bound);
                    let range = match self.interval(bound) {
                        Some((_, hi)) if hi > 0 => (0, hi - 1),
                        _ => (0, 0),
                    };
                    self.vars.push((var.id, range));
                    self.check_nodes(body);
                    self.vars.pop();
                }
                IrNode::If {
                    cond,
                    then_body,
                    else_body,
                } => {
                    self.scan_bool(cond);
                    self.check_nodes(then_body);
                    self.check_nodes(else_body);
                }
                IrNode::Assign { slot, value } => {
                    if *slot >= self.program.int_slots() {
                        self.report(format!(
                            "def-before-use: assignment to undeclared classical slot {slot}"
                        ));
                    }
                    self.scan_int(value);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{GateKind, GateNode, LoopVar};

    #[test]
    fn well_formed_program_has_no_diagnostics() {
        let var = LoopVar { id: 0, name: "j" };
        let program = HybridProgram::new(
            4,
            8,
            vec![IrNode::ForLoop {
                var,
                bound: IntExpr::c(8),
                reversed: false,
                body: vec![
                    IrNode::h(IntExpr::c(10)),
                    IrNode::Measure {
                        qubit: IntExpr::c(10),
                        index: IntExpr::Loop(var),
                    },
                    IrNode::Assign {
                        slot: 0,
                        value: IntExpr::Slot(0).add(IntExpr::Theta(Box::new(IntExpr::Loop(var)))),
                    },
                ],
            }],
            8,
            1,
        );
        assert_eq!(program.validate(), vec![]);
    }

    #[test]
    fn undeclared_classical_bit_is_reported() {
        let program = HybridProgram::new(
            4,
            2,
            vec![IrNode::Assign {
                slot: 0,
                value: IntExpr::Theta(Box::new(IntExpr::c(5))),
            }],
            2,
            1,
        );
        let diags = program.validate();
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("def-before-use"));
    }

    #[test]
    fn wrong_arity_is_reported() {
        // a "controlled phase" with four operands
        let program = HybridProgram::new(
            4,
            1,
            vec![IrNode::Gate(GateNode {
                kind: GateKind::ControlledPhase,
                qubits: vec![IntExpr::c(0), IntExpr::c(1), IntExpr::c(2), IntExpr::c(3)],
                angle: Some(AngleExpr::TwoPiOverPow2 {
                    exponent: Box::new(IntExpr::c(1)),
                    negated: false,
                }),
            })],
            1,
            0,
        );
        let diags = program.validate();
        assert!(diags.iter().any(|d| d.message.starts_with("arity:")));
    }

    #[test]
    fn out_of_range_qubit_is_reported() {
        let program = HybridProgram::new(4, 1, vec![IrNode::h(IntExpr::c(42))], 1, 0);
        let diags = program.validate();
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("outside"));
    }
}
