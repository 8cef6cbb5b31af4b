//! IR builders for every subroutine of the phase-estimation circuit:
//! swap-free QFT, Fourier-basis constant adders (plain, controlled, doubly
//! controlled), the modular Fourier adder with overflow detection and
//! correction, the controlled modular multiplier, the controlled modular
//! multiplication unitary, and the full single-estimation-qubit program
//! with semiclassical feed-forward.
//!
//! Conventions, used consistently everywhere:
//!
//! * Registers are little-endian: qubit j of a register carries bit j.
//! * The swap-free QFT maps |x> to a product state where register qubit j
//!   holds (|0> + exp(2*pi*i * x / 2^(j+1)) |1>) / sqrt(2). Adding a
//!   constant v in this basis is one phase gate per qubit with angle
//!   2*pi * v / 2^(j+1).
//! * Estimation iterations run from the highest power down: iteration k
//!   applies the controlled multiplication by powers[t-1-k], so the bit
//!   measured at iteration k has weight 2^k in the phase readout
//!   j = sum_k theta_k * 2^k.

use crate::ir::{
    adjoint_fragment, AngleExpr, BoolExpr, HybridProgram, IntExpr, IrNode, LoopVar,
};
use crate::params::OptimizationFlags;

/// Allocates loop variables with program-unique ids.
#[derive(Debug, Default)]
pub struct BuildCtx {
    next_var: u32,
}

impl BuildCtx {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(&mut self, name: &'static str) -> LoopVar {
        let id = self.next_var;
        self.next_var += 1;
        LoopVar { id, name }
    }
}

/// A contiguous run of qubits, little-endian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Register {
    pub base: usize,
    pub size: usize,
}

impl Register {
    pub fn new(base: usize, size: usize) -> Self {
        assert!(size >= 1);
        Self { base, size }
    }

    /// Qubit expression `base + offset`.
    pub fn qubit(&self, offset: IntExpr) -> IntExpr {
        IntExpr::c(self.base as i128).add(offset)
    }

    pub fn qubit_at(&self, i: usize) -> IntExpr {
        assert!(i < self.size);
        IntExpr::c((self.base + i) as i128)
    }

    pub fn msb(&self) -> IntExpr {
        self.qubit_at(self.size - 1)
    }
}

/// Which encoding a register currently holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Computational,
    Fourier,
}

/// A register together with its tracked basis. Builders that need the
/// Fourier basis assert the flag; QFT and inverse QFT toggle it.
#[derive(Debug, Clone, Copy)]
pub struct FourierRegister {
    reg: Register,
    basis: Basis,
}

impl FourierRegister {
    /// A register in the computational basis.
    pub fn new(base: usize, size: usize) -> Self {
        Self {
            reg: Register::new(base, size),
            basis: Basis::Computational,
        }
    }

    pub fn register(&self) -> Register {
        self.reg
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    fn assert_basis(&self, want: Basis, who: &str) {
        assert!(
            self.basis == want,
            "{who} requires the register in {want:?} basis, found {:?}",
            self.basis
        );
    }
}

/// Raw swap-free QFT ladder on `size` qubits at `base`; `inverse` emits the
/// exact adjoint. No basis bookkeeping: used as a building block.
fn qft_fragment(ctx: &mut BuildCtx, reg: Register, inverse: bool) -> Vec<IrNode> {
    let j = ctx.var("j");
    let i = ctx.var("i");
    let ladder = vec![IrNode::ForLoop {
        var: j,
        bound: IntExpr::c(reg.size as i128),
        reversed: true,
        body: vec![
            IrNode::h(reg.qubit(IntExpr::Loop(j))),
            IrNode::ForLoop {
                var: i,
                bound: IntExpr::Loop(j),
                reversed: true,
                body: vec![IrNode::cphase(
                    reg.qubit(IntExpr::Loop(i)),
                    reg.qubit(IntExpr::Loop(j)),
                    AngleExpr::TwoPiOverPow2 {
                        exponent: Box::new(
                            IntExpr::Loop(j).sub(IntExpr::Loop(i)).add(IntExpr::c(1)),
                        ),
                        negated: false,
                    },
                )],
            },
        ],
    }];
    if inverse {
        adjoint_fragment(&ladder)
    } else {
        ladder
    }
}

/// Swap-free QFT. Emits the H + controlled-phase ladder only, so the bit
/// conventions of the arithmetic subroutines hold; `include_swaps` appends
/// the qubit-reversal network (each swap as three CNOTs) for callers that
/// want the textbook output order.
pub fn build_qft(ctx: &mut BuildCtx, reg: &mut FourierRegister, include_swaps: bool) -> Vec<IrNode> {
    reg.assert_basis(Basis::Computational, "build_qft");
    let mut nodes = qft_fragment(ctx, reg.reg, false);
    if include_swaps {
        nodes.extend(swap_network(ctx, reg.reg));
    }
    reg.basis = Basis::Fourier;
    nodes
}

/// Inverse of [`build_qft`].
pub fn build_inverse_qft(
    ctx: &mut BuildCtx,
    reg: &mut FourierRegister,
    include_swaps: bool,
) -> Vec<IrNode> {
    reg.assert_basis(Basis::Fourier, "build_inverse_qft");
    let mut nodes = Vec::new();
    if include_swaps {
        nodes.extend(swap_network(ctx, reg.reg));
    }
    nodes.extend(qft_fragment(ctx, reg.reg, true));
    reg.basis = Basis::Computational;
    nodes
}

fn swap_network(ctx: &mut BuildCtx, reg: Register) -> Vec<IrNode> {
    let i = ctx.var("i");
    let lo = reg.qubit(IntExpr::Loop(i));
    let hi = reg.qubit(
        IntExpr::c(reg.size as i128 - 1).sub(IntExpr::Loop(i)),
    );
    vec![IrNode::ForLoop {
        var: i,
        bound: IntExpr::c((reg.size / 2) as i128),
        reversed: false,
        body: vec![
            IrNode::cnot(lo.clone(), hi.clone()),
            IrNode::cnot(hi.clone(), lo.clone()),
            IrNode::cnot(lo, hi),
        ],
    }]
}

/// Phase-basis addition of a constant: one aggregated phase gate per
/// register qubit, with up to two controls. `negate` subtracts instead.
/// The value is an expression evaluated at unroll time, which is how the
/// instance dependence stays a runtime binding.
pub fn build_fourier_add_const(
    ctx: &mut BuildCtx,
    reg: &FourierRegister,
    value: IntExpr,
    controls: &[IntExpr],
    negate: bool,
) -> Vec<IrNode> {
    reg.assert_basis(Basis::Fourier, "build_fourier_add_const");
    fourier_add_raw(ctx, reg.reg, value, controls, negate)
}

fn fourier_add_raw(
    ctx: &mut BuildCtx,
    reg: Register,
    value: IntExpr,
    controls: &[IntExpr],
    negate: bool,
) -> Vec<IrNode> {
    assert!(controls.len() <= 2, "at most two controls supported");
    let q = ctx.var("q");
    let angle = AngleExpr::FourierValue {
        value: Box::new(value),
        bit: Box::new(IntExpr::Loop(q)),
        negated: negate,
    };
    let target = reg.qubit(IntExpr::Loop(q));
    let gate = match controls {
        [] => IrNode::phase(target, angle),
        [c] => IrNode::cphase(c.clone(), target, angle),
        [c0, c1] => IrNode::ccphase(c0.clone(), c1.clone(), target, angle),
        _ => unreachable!(),
    };
    vec![IrNode::ForLoop {
        var: q,
        bound: IntExpr::c(reg.size as i128),
        reversed: false,
        body: vec![gate],
    }]
}

/// Modular Fourier addition with overflow detection and correction: adds
/// `value` into the register modulo `modulus`, restoring the ancilla to
/// |0>. On entry the register must hold a computational value below the
/// modulus (in Fourier encoding) and the ancilla must be |0>.
///
/// When `elide` evaluates true at unroll time only the plain controlled
/// addition is emitted; the planner guarantees the sum cannot cross the
/// modulus in that case.
#[allow(clippy::too_many_arguments)]
pub fn build_fourier_add_mod(
    ctx: &mut BuildCtx,
    reg: &FourierRegister,
    value: IntExpr,
    modulus: IntExpr,
    ancilla: IntExpr,
    controls: &[IntExpr],
    elide: BoolExpr,
) -> Vec<IrNode> {
    reg.assert_basis(Basis::Fourier, "build_fourier_add_mod");
    let r = reg.reg;
    let msb = r.msb();

    let plain = fourier_add_raw(ctx, r, value.clone(), controls, false);

    let mut full = Vec::new();
    // add value; subtract modulus
    full.extend(fourier_add_raw(ctx, r, value.clone(), controls, false));
    full.extend(fourier_add_raw(ctx, r, modulus.clone(), &[], true));
    // expose the sign bit and copy it into the ancilla
    full.extend(qft_fragment(ctx, r, true));
    full.push(IrNode::cnot(msb.clone(), ancilla.clone()));
    full.extend(qft_fragment(ctx, r, false));
    // conditional add-back, then undo the trial addition
    full.extend(fourier_add_raw(ctx, r, modulus, std::slice::from_ref(&ancilla), false));
    full.extend(fourier_add_raw(ctx, r, value.clone(), controls, true));
    // uncompute the ancilla from the (now non-negative) difference
    full.extend(qft_fragment(ctx, r, true));
    full.push(IrNode::x(msb.clone()));
    full.push(IrNode::cnot(msb.clone(), ancilla));
    full.push(IrNode::x(msb));
    full.extend(qft_fragment(ctx, r, false));
    // redo the addition
    full.extend(fourier_add_raw(ctx, r, value, controls, false));

    vec![IrNode::If {
        cond: elide,
        then_body: plain,
        else_body: full,
    }]
}

/// Controlled modular multiplication accumulator: adds `multiplier * x`
/// into the accumulator modulo N when `control` is set, one doubly
/// controlled modular addition of (2^j * multiplier mod N) per bit j of x.
/// Each addition sits behind the plan's keep flag and carries the plan's
/// overflow-elision flag; `plan_iter` selects the plan slice and `inverse`
/// the forward or uncomputation flag tables.
#[allow(clippy::too_many_arguments)]
pub fn build_controlled_mult_mod(
    ctx: &mut BuildCtx,
    control: IntExpr,
    x: Register,
    acc: &mut FourierRegister,
    ancilla: IntExpr,
    multiplier: IntExpr,
    modulus: IntExpr,
    plan_iter: IntExpr,
    inverse: bool,
) -> Vec<IrNode> {
    acc.assert_basis(Basis::Computational, "build_controlled_mult_mod");
    assert_eq!(acc.reg.size, x.size + 1, "accumulator needs one extra bit");
    let j = ctx.var("j");
    let keep = BoolExpr::KeepAdder {
        iter: Box::new(plan_iter.clone()),
        adder: Box::new(IntExpr::Loop(j)),
        inverse,
    };
    let elide = BoolExpr::OverflowNeeded {
        iter: Box::new(plan_iter),
        adder: Box::new(IntExpr::Loop(j)),
        inverse,
    }
    .not();
    // addend for bit j: 2^j * multiplier mod N
    let addend = IntExpr::Loop(j)
        .pow2()
        .mul(multiplier)
        .modulo(modulus.clone());

    let mut nodes = qft_fragment(ctx, acc.reg, false);
    let mut fr = *acc;
    fr.basis = Basis::Fourier;
    let adder = build_fourier_add_mod(
        ctx,
        &fr,
        addend,
        modulus,
        ancilla,
        &[control, x.qubit(IntExpr::Loop(j))],
        elide,
    );
    nodes.push(IrNode::ForLoop {
        var: j,
        bound: IntExpr::c(x.size as i128),
        reversed: false,
        body: vec![IrNode::If {
            cond: keep,
            then_body: adder,
            else_body: vec![],
        }],
    });
    nodes.extend(qft_fragment(ctx, acc.reg, true));
    nodes
}

/// Controlled modular multiplication acting in place on the target:
/// multiply-accumulate into the cleared accumulator, controlled swap of
/// target and accumulator, then the gate-reversed angle-negated adjoint of
/// the multiplier for the inverse value uncomputes the accumulator.
/// Requires the accumulator and ancilla in |0> and x below the modulus.
#[allow(clippy::too_many_arguments)]
pub fn build_controlled_ua(
    ctx: &mut BuildCtx,
    control: IntExpr,
    target: Register,
    acc: &mut FourierRegister,
    ancilla: IntExpr,
    multiplier: IntExpr,
    inverse_multiplier: IntExpr,
    modulus: IntExpr,
    plan_iter: IntExpr,
) -> Vec<IrNode> {
    let mut nodes = build_controlled_mult_mod(
        ctx,
        control.clone(),
        target,
        acc,
        ancilla.clone(),
        multiplier,
        modulus.clone(),
        plan_iter.clone(),
        false,
    );
    let s = ctx.var("s");
    nodes.push(IrNode::ForLoop {
        var: s,
        bound: IntExpr::c(target.size as i128),
        reversed: false,
        body: vec![IrNode::cswap(
            control.clone(),
            target.qubit(IntExpr::Loop(s)),
            acc.register().qubit(IntExpr::Loop(s)),
        )],
    });
    let uncompute = build_controlled_mult_mod(
        ctx,
        control,
        target,
        acc,
        ancilla,
        inverse_multiplier,
        modulus,
        plan_iter,
        true,
    );
    nodes.extend(adjoint_fragment(&uncompute));
    nodes
}

/// Classical slot holding the running phase readout.
pub const READOUT_SLOT: u32 = 0;

/// Builds the full phase-estimation program for bit width `n` with `t`
/// estimation iterations.
///
/// The target register is prepared in |1>, then each iteration: H on the
/// estimation qubit; the controlled multiplication by powers[t-1-k] (the
/// first iteration switches to a controlled Fourier addition of that power
/// minus one when the bound plan enables it); the feed-forward correction
/// phase -2*pi * (sum of earlier bits weighted 2^l) / 2^(k+1); H; measure;
/// reset.
///
/// The structure is identical for every flag assignment: the optimizations
/// act entirely through bound parameters, so `flags` does not influence
/// construction.
pub fn build_qpe_program(n: u32, t: u32, _flags: OptimizationFlags) -> HybridProgram {
    assert!(n >= 1, "bit width must be positive");
    assert!(t >= 1, "iteration count must be positive");
    let mut ctx = BuildCtx::new();
    let layout = crate::ir::RegisterLayout::new(n);
    let target = Register::new(layout.target().start, n as usize);
    let est = IntExpr::c(layout.estimation() as i128);
    let ancilla = IntExpr::c(layout.ancilla() as i128);

    let k = ctx.var("k");
    // table index for the power applied at iteration k
    let power_index = IntExpr::c(t as i128 - 1).sub(IntExpr::Loop(k));

    // First-iteration branch: the target holds exactly |1>, so a controlled
    // addition of (power - 1) on the target register realizes the
    // multiplication without touching the accumulator.
    let mut target_fr = FourierRegister::new(target.base, target.size);
    let mut first_add = build_qft(&mut ctx, &mut target_fr, false);
    first_add.extend(build_fourier_add_const(
        &mut ctx,
        &target_fr,
        IntExpr::Power(Box::new(power_index.clone())).sub(IntExpr::c(1)),
        std::slice::from_ref(&est),
        false,
    ));
    first_add.extend(build_inverse_qft(&mut ctx, &mut target_fr, false));

    let mut acc = FourierRegister::new(layout.accumulator().start, n as usize + 1);
    let controlled_mult = build_controlled_ua(
        &mut ctx,
        est.clone(),
        target,
        &mut acc,
        ancilla,
        IntExpr::Power(Box::new(power_index.clone())),
        IntExpr::InversePower(Box::new(power_index)),
        IntExpr::Modulus,
        IntExpr::Loop(k),
    );

    let body = vec![
        IrNode::x(target.qubit_at(0)),
        IrNode::ForLoop {
            var: k,
            bound: IntExpr::c(t as i128),
            reversed: false,
            body: vec![
                IrNode::h(est.clone()),
                IrNode::If {
                    cond: BoolExpr::FirstIterationAddition
                        .and(BoolExpr::eq(IntExpr::Loop(k), IntExpr::c(0))),
                    then_body: first_add,
                    else_body: controlled_mult,
                },
                IrNode::phase(
                    est.clone(),
                    AngleExpr::FeedForward {
                        slot: READOUT_SLOT,
                        exponent: Box::new(IntExpr::Loop(k).add(IntExpr::c(1))),
                        negated: true,
                    },
                ),
                IrNode::h(est.clone()),
                IrNode::Measure {
                    qubit: est.clone(),
                    index: IntExpr::Loop(k),
                },
                IrNode::Assign {
                    slot: READOUT_SLOT,
                    value: IntExpr::Slot(READOUT_SLOT).add(
                        IntExpr::Theta(Box::new(IntExpr::Loop(k)))
                            .mul(IntExpr::Loop(k).pow2()),
                    ),
                },
                IrNode::Reset { qubit: est },
            ],
        },
    ];
    HybridProgram::new(n, t, body, t, 1)
}

/// Ordered record of estimation-qubit measurements. Bit l was produced by
/// the l-th measurement and has weight 2^l in the assembled readout.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MeasurementRecord {
    theta: Vec<u8>,
}

impl MeasurementRecord {
    pub fn new(theta: Vec<u8>) -> Self {
        debug_assert!(theta.iter().all(|&b| b <= 1));
        Self { theta }
    }

    pub fn theta(&self) -> &[u8] {
        &self.theta
    }

    /// Iteration count t.
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// The phase readout j = sum_l theta_l * 2^l.
    pub fn readout(&self) -> u64 {
        self.theta
            .iter()
            .enumerate()
            .map(|(l, &b)| (b as u64) << l)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{stream_unroll, Visitor};
    use crate::params::{ElisionPlan, InstanceParams, IterationPlan};

    /// Counts gate events per kind name.
    #[derive(Default)]
    struct KindCounter {
        h: u64,
        cphase: u64,
        total: u64,
    }

    impl Visitor for KindCounter {
        fn gate(&mut self, event: &crate::ir::GateEvent) -> crate::error::Result<()> {
            self.total += 1;
            match event {
                crate::ir::GateEvent::H { .. } => self.h += 1,
                crate::ir::GateEvent::CPhase { .. } => self.cphase += 1,
                _ => {}
            }
            Ok(())
        }

        fn measure(&mut self, _q: usize, _i: usize) -> crate::error::Result<bool> {
            Ok(false)
        }

        fn reset(&mut self, _q: usize) -> crate::error::Result<()> {
            Ok(())
        }
    }

    fn params_for(n: u32, t: u32) -> InstanceParams {
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

    fn count_fragment(n: u32, t: u32, nodes: Vec<IrNode>) -> KindCounter {
        let program = HybridProgram::new(n, t, nodes, t, 1);
        assert_eq!(program.validate(), vec![]);
        let params = params_for(n, t);
        let mut counter = KindCounter::default();
        stream_unroll(&program, &params, &mut counter).unwrap();
        counter
    }

    #[test]
    fn qft_on_one_qubit_is_a_single_h() {
        let mut ctx = BuildCtx::new();
        let mut reg = FourierRegister::new(0, 1);
        let nodes = build_qft(&mut ctx, &mut reg, false);
        let c = count_fragment(2, 1, nodes);
        assert_eq!(c.total, 1);
        assert_eq!(c.h, 1);
    }

    #[test]
    fn qft_ladder_gate_count() {
        // m qubits -> m(m+1)/2 gates without swaps
        for m in 1..=5usize {
            let mut ctx = BuildCtx::new();
            let mut reg = FourierRegister::new(0, m);
            let nodes = build_qft(&mut ctx, &mut reg, false);
            let c = count_fragment(4, 1, nodes);
            assert_eq!(c.total as usize, m * (m + 1) / 2);
            assert_eq!(c.h as usize, m);
        }
    }

    #[test]
    fn basis_flag_round_trip() {
        let mut ctx = BuildCtx::new();
        let mut reg = FourierRegister::new(0, 3);
        assert_eq!(reg.basis(), Basis::Computational);
        let _ = build_qft(&mut ctx, &mut reg, false);
        assert_eq!(reg.basis(), Basis::Fourier);
        let _ = build_inverse_qft(&mut ctx, &mut reg, false);
        assert_eq!(reg.basis(), Basis::Computational);
    }

    #[test]
    #[should_panic(expected = "requires the register in Fourier")]
    fn adder_asserts_fourier_basis() {
        let mut ctx = BuildCtx::new();
        let reg = FourierRegister::new(0, 3);
        let _ = build_fourier_add_const(&mut ctx, &reg, IntExpr::c(1), &[], false);
    }

    #[test]
    fn qpe_program_node_count_is_independent_of_bit_width() {
        let flags = OptimizationFlags::all();
        let counts: Vec<usize> = [4u32, 8, 16, 32]
            .iter()
            .map(|&n| build_qpe_program(n, 2 * n, flags).node_count())
            .collect();
        assert!(counts.windows(2).all(|w| w[0] == w[1]), "counts: {counts:?}");
    }

    #[test]
    fn qpe_program_is_well_formed_and_stays_in_range() {
        let n = 4u32;
        let t = 8u32;
        let program = build_qpe_program(n, t, OptimizationFlags::none());
        assert_eq!(program.validate(), vec![]);
        let params = crate::optimizer::bind_instance(7, 15, t, OptimizationFlags::none()).unwrap();
        let mut v = crate::ir::unroll::CountingVisitor::default();
        stream_unroll(&program, &params, &mut v).unwrap();
        assert!(v.max_qubit.unwrap() < 2 * n as usize + 3);
        assert_eq!(v.measurements, t as u64);
        assert_eq!(v.resets, t as u64);
    }

    #[test]
    fn qpe_program_has_t_multiplication_blocks() {
        // one controlled multiplication block per iteration: count the
        // controlled swaps, n per block, none elsewhere
        let n = 4u32;
        let t = 8u32;
        let program = build_qpe_program(n, t, OptimizationFlags::none());
        let params = crate::optimizer::bind_instance(7, 15, t, OptimizationFlags::none()).unwrap();

        #[derive(Default)]
        struct SwapCounter(u64);
        impl Visitor for SwapCounter {
            fn gate(&mut self, event: &crate::ir::GateEvent) -> crate::error::Result<()> {
                if matches!(event, crate::ir::GateEvent::CSwap { .. }) {
                    self.0 += 1;
                }
                Ok(())
            }
            fn measure(&mut self, _q: usize, _i: usize) -> crate::error::Result<bool> {
                Ok(false)
            }
            fn reset(&mut self, _q: usize) -> crate::error::Result<()> {
                Ok(())
            }
        }
        let mut v = SwapCounter::default();
        stream_unroll(&program, &params, &mut v).unwrap();
        assert_eq!(v.0, (n * t) as u64);
    }

    #[test]
    fn measurement_record_readout_weights() {
        let r = MeasurementRecord::new(vec![1, 0, 1, 1]);
        assert_eq!(r.readout(), 0b1101);
        assert_eq!(r.len(), 4);
    }
}
