//! Closed-form expressions evaluated at unroll time. Integer expressions
//! produce qubit indices, loop bounds, table lookups and classical values;
//! boolean expressions gate If-nodes on plan flags; angle expressions
//! produce phase-gate angles from loop variables, bound parameters and
//! previously measured bits.

use std::fmt;

use crate::error::{Error, Result};
use crate::params::InstanceParams;

/// A loop variable. Ids are unique within one program; the name is only
/// used by the text dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoopVar {
    pub id: u32,
    pub name: &'static str,
}

/// Evaluation environment: bound instance parameters plus the mutable
/// classical state of one unroll (active loop variables, measured bits,
/// integer slots).
#[derive(Debug)]
pub(crate) struct EvalEnv<'a> {
    pub params: &'a InstanceParams,
    pub loops: &'a [(u32, i128)],
    pub theta: &'a [u8],
    pub slots: &'a [i128],
}

/// Integer-valued expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntExpr {
    Const(i128),
    Loop(LoopVar),
    /// The bound modulus N.
    Modulus,
    /// The bound base a.
    Base,
    /// Power-table lookup: a^(2^index) mod N.
    Power(Box<IntExpr>),
    /// Inverse power-table lookup.
    InversePower(Box<IntExpr>),
    /// Classical integer slot.
    Slot(u32),
    /// Measured bit theta[index].
    Theta(Box<IntExpr>),
    Add(Box<IntExpr>, Box<IntExpr>),
    Sub(Box<IntExpr>, Box<IntExpr>),
    Mul(Box<IntExpr>, Box<IntExpr>),
    /// 2^e for e >= 0.
    Pow2(Box<IntExpr>),
    /// Euclidean remainder, divisor must be positive.
    Mod(Box<IntExpr>, Box<IntExpr>),
}

#[allow(clippy::should_implement_trait)] // builder methods, not arithmetic
impl IntExpr {
    pub fn c(v: i128) -> Self {
        IntExpr::Const(v)
    }

    pub fn add(self, rhs: IntExpr) -> Self {
        IntExpr::Add(Box::new(self), Box::new(rhs))
    }

    pub fn sub(self, rhs: IntExpr) -> Self {
        IntExpr::Sub(Box::new(self), Box::new(rhs))
    }

    pub fn mul(self, rhs: IntExpr) -> Self {
        IntExpr::Mul(Box::new(self), Box::new(rhs))
    }

    pub fn modulo(self, rhs: IntExpr) -> Self {
        IntExpr::Mod(Box::new(self), Box::new(rhs))
    }

    pub fn pow2(self) -> Self {
        IntExpr::Pow2(Box::new(self))
    }

    pub(crate) fn eval(&self, env: &EvalEnv) -> Result<i128> {
        let malformed = |msg: String| Error::MalformedProgram(msg);
        match self {
            IntExpr::Const(v) => Ok(*v),
            IntExpr::Loop(var) => env
                .loops
                .iter()
                .rev()
                .find(|(id, _)| *id == var.id)
                .map(|(_, v)| *v)
                .ok_or_else(|| malformed(format!("loop variable {} not in scope", var.name))),
            IntExpr::Modulus => Ok(env.params.modulus as i128),
            IntExpr::Base => Ok(env.params.base as i128),
            IntExpr::Power(idx) | IntExpr::InversePower(idx) => {
                let table = match self {
                    IntExpr::Power(_) => &env.params.plan.powers,
                    _ => &env.params.plan.inverse_powers,
                };
                let k = idx.eval(env)?;
                usize::try_from(k)
                    .ok()
                    .and_then(|k| table.get(k))
                    .map(|&v| v as i128)
                    .ok_or_else(|| malformed(format!("power table index {k} out of range")))
            }
            IntExpr::Slot(id) => env
                .slots
                .get(*id as usize)
                .copied()
                .ok_or_else(|| malformed(format!("classical slot {id} not declared"))),
            IntExpr::Theta(idx) => {
                let k = idx.eval(env)?;
                usize::try_from(k)
                    .ok()
                    .and_then(|k| env.theta.get(k))
                    .map(|&b| b as i128)
                    .ok_or_else(|| malformed(format!("theta index {k} out of range")))
            }
            IntExpr::Add(a, b) => a
                .eval(env)?
                .checked_add(b.eval(env)?)
                .ok_or_else(|| malformed("integer overflow in +".into())),
            IntExpr::Sub(a, b) => a
                .eval(env)?
                .checked_sub(b.eval(env)?)
                .ok_or_else(|| malformed("integer overflow in -".into())),
            IntExpr::Mul(a, b) => a
                .eval(env)?
                .checked_mul(b.eval(env)?)
                .ok_or_else(|| malformed("integer overflow in *".into())),
            IntExpr::Pow2(e) => {
                let e = e.eval(env)?;
                if !(0..=100).contains(&e) {
                    return Err(malformed(format!("2^{e} out of supported range")));
                }
                Ok(1i128 << e)
            }
            IntExpr::Mod(a, m) => {
                let m = m.eval(env)?;
                if m <= 0 {
                    return Err(malformed(format!("modulus {m} in expression must be > 0")));
                }
                Ok(a.eval(env)?.rem_euclid(m))
            }
        }
    }
}

impl fmt::Display for IntExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntExpr::Const(v) => write!(f, "{v}"),
            IntExpr::Loop(var) => write!(f, "{}", var.name),
            IntExpr::Modulus => write!(f, "N"),
            IntExpr::Base => write!(f, "a"),
            IntExpr::Power(i) => write!(f, "pow[{i}]"),
            IntExpr::InversePower(i) => write!(f, "ipow[{i}]"),
            IntExpr::Slot(i) => write!(f, "s{i}"),
            IntExpr::Theta(i) => write!(f, "theta[{i}]"),
            IntExpr::Add(a, b) => write!(f, "({a} + {b})"),
            IntExpr::Sub(a, b) => write!(f, "({a} - {b})"),
            IntExpr::Mul(a, b) => write!(f, "({a} * {b})"),
            IntExpr::Pow2(e) => write!(f, "2^{e}"),
            IntExpr::Mod(a, m) => write!(f, "({a} mod {m})"),
        }
    }
}

/// Boolean expression over plan flags and integer comparisons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolExpr {
    Const(bool),
    /// The plan's first-iteration-as-addition flag.
    FirstIterationAddition,
    /// Keep flag for adder `adder` of iteration `iter`.
    KeepAdder {
        iter: Box<IntExpr>,
        adder: Box<IntExpr>,
        inverse: bool,
    },
    /// Overflow-check-needed flag for adder `adder` of iteration `iter`.
    OverflowNeeded {
        iter: Box<IntExpr>,
        adder: Box<IntExpr>,
        inverse: bool,
    },
    Eq(Box<IntExpr>, Box<IntExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Not(Box<BoolExpr>),
}

#[allow(clippy::should_implement_trait)] // builder methods, not operators
impl BoolExpr {
    pub fn and(self, rhs: BoolExpr) -> Self {
        BoolExpr::And(Box::new(self), Box::new(rhs))
    }

    pub fn not(self) -> Self {
        BoolExpr::Not(Box::new(self))
    }

    pub fn eq(a: IntExpr, b: IntExpr) -> Self {
        BoolExpr::Eq(Box::new(a), Box::new(b))
    }

    pub(crate) fn eval(&self, env: &EvalEnv) -> Result<bool> {
        match self {
            BoolExpr::Const(b) => Ok(*b),
            BoolExpr::FirstIterationAddition => Ok(env.params.plan.first_iteration_as_addition),
            BoolExpr::KeepAdder { iter, adder, inverse }
            | BoolExpr::OverflowNeeded { iter, adder, inverse } => {
                let i = iter.eval(env)?;
                let j = adder.eval(env)?;
                let slice = usize::try_from(i)
                    .ok()
                    .and_then(|i| env.params.plan.iterations.get(i))
                    .ok_or_else(|| {
                        Error::MalformedProgram(format!("plan iteration index {i} out of range"))
                    })?;
                let flags = match (self, inverse) {
                    (BoolExpr::KeepAdder { .. }, false) => &slice.keep_fwd,
                    (BoolExpr::KeepAdder { .. }, true) => &slice.keep_inv,
                    (_, false) => &slice.overflow_fwd,
                    (_, true) => &slice.overflow_inv,
                };
                usize::try_from(j)
                    .ok()
                    .and_then(|j| flags.get(j))
                    .copied()
                    .ok_or_else(|| {
                        Error::MalformedProgram(format!("plan adder index {j} out of range"))
                    })
            }
            BoolExpr::Eq(a, b) => Ok(a.eval(env)? == b.eval(env)?),
            BoolExpr::And(a, b) => Ok(a.eval(env)? && b.eval(env)?),
            BoolExpr::Not(a) => Ok(!a.eval(env)?),
        }
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolExpr::Const(b) => write!(f, "{b}"),
            BoolExpr::FirstIterationAddition => write!(f, "first_add"),
            BoolExpr::KeepAdder { iter, adder, inverse } => {
                write!(f, "keep_{}[{iter}][{adder}]", if *inverse { "inv" } else { "fwd" })
            }
            BoolExpr::OverflowNeeded { iter, adder, inverse } => {
                write!(f, "ovf_{}[{iter}][{adder}]", if *inverse { "inv" } else { "fwd" })
            }
            BoolExpr::Eq(a, b) => write!(f, "{a} == {b}"),
            BoolExpr::And(a, b) => write!(f, "({a} && {b})"),
            BoolExpr::Not(a) => write!(f, "!({a})"),
        }
    }
}

/// Angle expression for phase-family gates, in radians at unroll time.
/// Values are reduced modulo the relevant power of two in exact integer
/// arithmetic before the floating-point division.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AngleExpr {
    /// +-2*pi / 2^exponent (the QFT ladder angles).
    TwoPiOverPow2 { exponent: Box<IntExpr>, negated: bool },
    /// +-2*pi * (value mod 2^(bit+1)) / 2^(bit+1): the aggregated phase a
    /// Fourier-basis constant adder applies to register qubit `bit`.
    FourierValue {
        value: Box<IntExpr>,
        bit: Box<IntExpr>,
        negated: bool,
    },
    /// +-2*pi * (slot mod 2^exponent) / 2^exponent: measurement feed-forward.
    FeedForward {
        slot: u32,
        exponent: Box<IntExpr>,
        negated: bool,
    },
}

const MAX_POW2: i128 = 100;

impl AngleExpr {
    /// The adjoint angle (sign flipped).
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        match &mut out {
            AngleExpr::TwoPiOverPow2 { negated, .. }
            | AngleExpr::FourierValue { negated, .. }
            | AngleExpr::FeedForward { negated, .. } => *negated = !*negated,
        }
        out
    }

    pub(crate) fn eval(&self, env: &EvalEnv) -> Result<f64> {
        let tau = std::f64::consts::TAU;
        let check_exp = |e: i128| -> Result<i128> {
            if (1..=MAX_POW2).contains(&e) {
                Ok(e)
            } else {
                Err(Error::MalformedProgram(format!(
                    "angle denominator 2^{e} out of supported range"
                )))
            }
        };
        match self {
            AngleExpr::TwoPiOverPow2 { exponent, negated } => {
                let e = check_exp(exponent.eval(env)?)?;
                let angle = tau / (1i128 << e) as f64;
                Ok(if *negated { -angle } else { angle })
            }
            AngleExpr::FourierValue { value, bit, negated } => {
                let b = bit.eval(env)?;
                let e = check_exp(b + 1)?;
                let m = 1i128 << e;
                let v = value.eval(env)?.rem_euclid(m);
                let angle = tau * (v as f64) / (m as f64);
                Ok(if *negated { -angle } else { angle })
            }
            AngleExpr::FeedForward { slot, exponent, negated } => {
                let e = check_exp(exponent.eval(env)?)?;
                let m = 1i128 << e;
                let v = env
                    .slots
                    .get(*slot as usize)
                    .copied()
                    .ok_or_else(|| {
                        Error::MalformedProgram(format!("classical slot {slot} not declared"))
                    })?
                    .rem_euclid(m);
                let angle = tau * (v as f64) / (m as f64);
                Ok(if *negated { -angle } else { angle })
            }
        }
    }
}

impl fmt::Display for AngleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = |n: bool| if n { "-" } else { "" };
        match self {
            AngleExpr::TwoPiOverPow2 { exponent, negated } => {
                write!(f, "{}2pi/2^{exponent}", sign(*negated))
            }
            AngleExpr::FourierValue { value, bit, negated } => {
                write!(f, "{}2pi*({value})/2^({bit}+1)", sign(*negated))
            }
            AngleExpr::FeedForward { slot, exponent, negated } => {
                write!(f, "{}2pi*s{slot}/2^{exponent}", sign(*negated))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{ElisionPlan, InstanceParams, IterationPlan, OptimizationFlags};

    fn dummy_params() -> InstanceParams {
        InstanceParams {
            modulus: 15,
            base: 7,
            plan: ElisionPlan {
                powers: vec![7, 4, 1, 1],
                inverse_powers: vec![13, 4, 1, 1],
                iterations: (0..4).map(|_| IterationPlan::keep_all(4)).collect(),
                first_iteration_as_addition: true,
                flags: OptimizationFlags::all(),
            },
        }
    }

    #[test]
    fn int_expr_arithmetic() {
        let params = dummy_params();
        let k = LoopVar { id: 0, name: "k" };
        let env = EvalEnv {
            params: &params,
            loops: &[(0, 3)],
            theta: &[1, 0, 1],
            slots: &[5],
        };
        let e = IntExpr::Loop(k).mul(IntExpr::c(2)).add(IntExpr::c(1));
        assert_eq!(e.eval(&env).unwrap(), 7);
        assert_eq!(IntExpr::Modulus.eval(&env).unwrap(), 15);
        assert_eq!(IntExpr::Power(Box::new(IntExpr::c(1))).eval(&env).unwrap(), 4);
        assert_eq!(IntExpr::Theta(Box::new(IntExpr::c(2))).eval(&env).unwrap(), 1);
        assert_eq!(IntExpr::Slot(0).eval(&env).unwrap(), 5);
        assert_eq!(IntExpr::c(-7).modulo(IntExpr::c(5)).eval(&env).unwrap(), 3);
        assert_eq!(IntExpr::c(5).pow2().eval(&env).unwrap(), 32);
    }

    #[test]
    fn out_of_range_lookups_are_malformed() {
        let params = dummy_params();
        let env = EvalEnv {
            params: &params,
            loops: &[],
            theta: &[0; 4],
            slots: &[0],
        };
        assert!(IntExpr::Power(Box::new(IntExpr::c(9))).eval(&env).is_err());
        assert!(IntExpr::Theta(Box::new(IntExpr::c(-1))).eval(&env).is_err());
        assert!(IntExpr::Slot(3).eval(&env).is_err());
        assert!(IntExpr::c(200).pow2().eval(&env).is_err());
    }

    #[test]
    fn fourier_angle_reduces_value_first() {
        let params = dummy_params();
        let env = EvalEnv {
            params: &params,
            loops: &[],
            theta: &[],
            slots: &[],
        };
        // value 5 on bit 1: 5 mod 4 = 1 -> 2pi/4
        let a = AngleExpr::FourierValue {
            value: Box::new(IntExpr::c(5)),
            bit: Box::new(IntExpr::c(1)),
            negated: false,
        };
        assert!((a.eval(&env).unwrap() - std::f64::consts::TAU / 4.0).abs() < 1e-15);
        assert!((a.negated().eval(&env).unwrap() + std::f64::consts::TAU / 4.0).abs() < 1e-15);
    }

    #[test]
    fn feed_forward_reads_slot() {
        let params = dummy_params();
        let env = EvalEnv {
            params: &params,
            loops: &[],
            theta: &[],
            slots: &[3],
        };
        let a = AngleExpr::FeedForward {
            slot: 0,
            exponent: Box::new(IntExpr::c(3)),
            negated: true,
        };
        // -2pi * 3/8
        assert!((a.eval(&env).unwrap() + std::f64::consts::TAU * 3.0 / 8.0).abs() < 1e-15);
    }
}
