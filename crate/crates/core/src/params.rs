//! Runtime parameter bindings for a compiled program: the instance values
//! (N, a), the precomputed power tables, and the per-iteration elision plan.
//! A program is built once per bit width; everything in this module can be
//! rebound per instance without touching the program.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir::HybridProgram;

/// Toggles for the instance-specific optimizations. All four are
/// independent; all-false reproduces the unoptimized circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizationFlags {
    /// Bind the table of powers a^(2^k) mod N so each estimation iteration
    /// applies a single controlled multiplication. The compiled program
    /// always consumes the bound table, so this flag does not change the
    /// emitted gate sequence; it is kept so configurations can name it.
    pub use_precomputed_powers: bool,
    /// Replace the first controlled multiplication (target still |1>) by a
    /// controlled Fourier-basis addition on the target register.
    pub first_iteration_as_addition: bool,
    /// Skip doubly-controlled adders whose control bit is zero across every
    /// value reachable in the control register.
    pub elide_adders_by_or_mask: bool,
    /// Downgrade modular adders to plain adders while no reachable value can
    /// overflow (or underflow) the modulus.
    pub elide_overflow_checks: bool,
}

impl OptimizationFlags {
    pub fn all() -> Self {
        Self {
            use_precomputed_powers: true,
            first_iteration_as_addition: true,
            elide_adders_by_or_mask: true,
            elide_overflow_checks: true,
        }
    }

    pub fn none() -> Self {
        Self {
            use_precomputed_powers: false,
            first_iteration_as_addition: false,
            elide_adders_by_or_mask: false,
            elide_overflow_checks: false,
        }
    }
}

impl Default for OptimizationFlags {
    fn default() -> Self {
        Self::all()
    }
}

impl std::fmt::Display for OptimizationFlags {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if *self == Self::all() {
            return write!(f, "all");
        }
        if *self == Self::none() {
            return write!(f, "none");
        }
        let mut names = Vec::new();
        if self.use_precomputed_powers {
            names.push("precomputed-powers");
        }
        if self.first_iteration_as_addition {
            names.push("first-addition");
        }
        if self.elide_adders_by_or_mask {
            names.push("or-mask");
        }
        if self.elide_overflow_checks {
            names.push("overflow");
        }
        write!(f, "{}", names.join("+"))
    }
}

/// Per-iteration elision decisions for one controlled multiplication pair
/// (the forward multiplier and its uncomputing inverse).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationPlan {
    /// Bitwise OR of every value reachable in the multiplier's control
    /// register at this iteration.
    pub or_mask: u64,
    /// Keep flag per adder of the forward multiplier; adder j is emitted
    /// only when true.
    pub keep_fwd: Vec<bool>,
    /// Keep flags for the inverse multiplier.
    pub keep_inv: Vec<bool>,
    /// Whether adder j of the forward multiplier needs the overflow check
    /// and correction block; false downgrades it to a plain Fourier adder.
    pub overflow_fwd: Vec<bool>,
    /// Overflow (underflow) flags for the inverse multiplier.
    pub overflow_inv: Vec<bool>,
}

impl IterationPlan {
    /// Plan slice that keeps every adder and every overflow check.
    pub fn keep_all(n: usize) -> Self {
        Self {
            or_mask: if n >= 64 { u64::MAX } else { (1u64 << n) - 1 },
            keep_fwd: vec![true; n],
            keep_inv: vec![true; n],
            overflow_fwd: vec![true; n],
            overflow_inv: vec![true; n],
        }
    }
}

/// The full runtime plan for one (N, a) instance: power tables plus one
/// [`IterationPlan`] per estimation iteration, in execution order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElisionPlan {
    /// a^(2^k) mod N for k = 0..t-1.
    pub powers: Vec<u64>,
    /// (a^(2^k))^-1 mod N, matching `powers`.
    pub inverse_powers: Vec<u64>,
    /// Iteration i of the program applies `powers[t-1-i]`; the plan slice
    /// for that multiplication is `iterations[i]`.
    pub iterations: Vec<IterationPlan>,
    /// Run the first iteration as a controlled addition on the target.
    pub first_iteration_as_addition: bool,
    /// The flag set this plan was built from.
    pub flags: OptimizationFlags,
}

impl ElisionPlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("bad plan JSON: {e}")))
    }
}

/// Everything a program needs at run time: the instance values and the plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceParams {
    pub modulus: u64,
    pub base: u64,
    pub plan: ElisionPlan,
}

impl InstanceParams {
    /// Checks that the binding is complete and consistent for `program`:
    /// table lengths match the iteration count, per-adder flag vectors match
    /// the bit width, and values fit in the registers.
    pub fn validate_for(&self, program: &HybridProgram) -> Result<()> {
        let n = program.bit_width() as usize;
        let t = program.iterations() as usize;
        if self.modulus < 2 {
            return Err(Error::InvalidArgument(format!(
                "modulus {} too small",
                self.modulus
            )));
        }
        if crate::number_theory::bit_width(self.modulus) != program.bit_width() {
            return Err(Error::InvalidArgument(format!(
                "modulus {} is not a {}-bit value",
                self.modulus,
                program.bit_width()
            )));
        }
        if self.plan.powers.len() != t {
            return Err(Error::MissingParameter(format!(
                "power table has {} entries, program needs {t}",
                self.plan.powers.len()
            )));
        }
        if self.plan.inverse_powers.len() != t {
            return Err(Error::MissingParameter(format!(
                "inverse power table has {} entries, program needs {t}",
                self.plan.inverse_powers.len()
            )));
        }
        if self.plan.iterations.len() != t {
            return Err(Error::MissingParameter(format!(
                "plan has {} iteration slices, program needs {t}",
                self.plan.iterations.len()
            )));
        }
        for (k, (&p, &ip)) in self
            .plan
            .powers
            .iter()
            .zip(&self.plan.inverse_powers)
            .enumerate()
        {
            if p >= self.modulus || ip >= self.modulus {
                return Err(Error::InvalidArgument(format!(
                    "power table entry {k} out of range"
                )));
            }
            if crate::number_theory::mod_mul(p, ip, self.modulus) != 1 {
                return Err(Error::InvalidArgument(format!(
                    "powers[{k}] * inverse_powers[{k}] != 1 mod N"
                )));
            }
        }
        for (i, it) in self.plan.iterations.iter().enumerate() {
            for (name, v) in [
                ("keep_fwd", &it.keep_fwd),
                ("keep_inv", &it.keep_inv),
                ("overflow_fwd", &it.overflow_fwd),
                ("overflow_inv", &it.overflow_inv),
            ] {
                if v.len() != n {
                    return Err(Error::MissingParameter(format!(
                        "iteration {i}: {name} has {} flags, program needs {n}",
                        v.len()
                    )));
                }
            }
        }
        Ok(())
    }
}
