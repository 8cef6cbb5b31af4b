//! Text dump of the program tree: one node per line, indented by depth.
//! The format is stable across runs so it can back golden-file tests.

use std::fmt::Write;

use crate::ir::{HybridProgram, IrNode};

pub(super) fn dump(program: &HybridProgram) -> String {
    let mut out = String::new();
    let layout = program.layout();
    writeln!(
        out,
        "program n={} t={} qubits={} nodes={}",
        program.bit_width(),
        program.iterations(),
        layout.total_qubits(),
        program.node_count()
    )
    .unwrap();
    writeln!(
        out,
        "registers target={:?} accumulator={:?} ancilla={} estimation={}",
        layout.target(),
        layout.accumulator(),
        layout.ancilla(),
        layout.estimation()
    )
    .unwrap();
    writeln!(out, "params {}", program.param_slots().join(" ")).unwrap();
    dump_nodes(&mut out, program.body(), 0);
    out
}

fn dump_nodes(out: &mut String, nodes: &[IrNode], depth: usize) {
    for node in nodes {
        let pad = "  ".repeat(depth);
        match node {
            IrNode::Gate(g) => {
                let qubits = g
                    .qubits
                    .iter()
                    .map(|q| format!("q[{q}]"))
                    .collect::<Vec<_>>()
                    .join(" ");
                match &g.angle {
                    Some(a) => writeln!(out, "{pad}{} {qubits} angle={a}", g.kind.name()).unwrap(),
                    None => writeln!(out, "{pad}{} {qubits}", g.kind.name()).unwrap(),
                }
            }
            IrNode::Measure { qubit, index } => {
                writeln!(out, "{pad}measure q[{qubit}] -> theta[{index}]").unwrap()
            }
            IrNode::Reset { qubit } => writeln!(out, "{pad}reset q[{qubit}]").unwrap(),
            IrNode::ForLoop {
                var,
                bound,
                reversed,
                body,
            } => {
                let dir = if *reversed { " rev" } else { "" };
                writeln!(out, "{pad}for {} in 0..{bound}{dir}:", var.name).unwrap();
                dump_nodes(out, body, depth + 1);
            }
            IrNode::If {
                cond,
                then_body,
                else_body,
            } => {
                writeln!(out, "{pad}if {cond}:").unwrap();
                dump_nodes(out, then_body, depth + 1);
                if !else_body.is_empty() {
                    writeln!(out, "{pad}else:").unwrap();
                    dump_nodes(out, else_body, depth + 1);
                }
            }
            IrNode::Assign { slot, value } => {
                writeln!(out, "{pad}s{slot} = {value}").unwrap()
            }
        }
    }
}
