//! Instance-specific planning. Given (a, N) this module precomputes the
//! power tables and derives, per estimation iteration, which doubly
//! controlled adders can be skipped (the control bit is zero across every
//! reachable control-register value) and which modular adders can drop
//! their overflow check (no reachable partial sum crosses the modulus).
//! The decisions are delivered as runtime parameters consumed by the
//! program's If-nodes; the compiled structure never changes.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::number_theory::{bit_width, gcd, mod_inverse, mod_mul};
use crate::params::{ElisionPlan, InstanceParams, IterationPlan, OptimizationFlags};

/// Exact residues that can appear in a register at a given circuit point.
pub type ReachableSet = BTreeSet<u64>;

/// Exact-set bookkeeping is abandoned beyond this many residues; all
/// remaining decisions then fall back conservatively to "keep everything".
pub const DEFAULT_SET_CAP: usize = 1 << 16;

/// Tables of a^(2^k) mod N and their inverses, k = 0..t-1, by repeated
/// squaring.
pub fn precompute_powers(a: u64, n: u64, t: u32) -> Result<(Vec<u64>, Vec<u64>)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("modulus {n} too small")));
    }
    if t < 1 {
        return Err(Error::InvalidArgument("need at least one iteration".into()));
    }
    if gcd(a % n, n) != 1 {
        return Err(Error::InvalidArgument(format!(
            "gcd({a}, {n}) != 1; no power table exists"
        )));
    }
    let mut powers = Vec::with_capacity(t as usize);
    let mut p = a % n;
    for _ in 0..t {
        powers.push(p);
        p = mod_mul(p, p, n);
    }
    let inverse_powers = powers
        .iter()
        .map(|&p| mod_inverse(p, n))
        .collect::<Result<Vec<_>>>()?;
    Ok((powers, inverse_powers))
}

/// The residues {a^j mod N : 0 <= j < 2^k}, computed incrementally: the set
/// at k+1 is the set at k united with itself scaled by a^(2^k). Saturates
/// at the multiplicative order of a.
pub fn reachable_values(a: u64, n: u64, k: u32) -> Result<ReachableSet> {
    if gcd(a % n, n) != 1 {
        return Err(Error::InvalidArgument(format!("gcd({a}, {n}) != 1")));
    }
    let mut set = ReachableSet::from([1u64 % n]);
    let mut power = a % n;
    for _ in 0..k {
        let scaled: Vec<u64> = set.iter().map(|&x| mod_mul(x, power, n)).collect();
        let before = set.len();
        set.extend(scaled);
        if set.len() == before {
            break; // fixed point: the full cyclic group generated by a
        }
        power = mod_mul(power, power, n);
    }
    Ok(set)
}

/// Bitwise OR of all residues in the set; every adder controlled on a bit
/// outside this mask can never fire.
pub fn or_mask(values: &ReachableSet, n_bits: u32) -> u64 {
    let mask = values.iter().fold(0u64, |m, &v| m | v);
    debug_assert!(
        n_bits >= 64 || mask < (1u64 << n_bits),
        "reachable value wider than the register"
    );
    mask
}

fn keep_flags(enable: bool, mask: u64, n: usize) -> Vec<bool> {
    (0..n)
        .map(|j| !enable || j == 0 || mask & (1u64 << j) != 0)
        .collect()
}

/// Walks the forward multiplier classically, tracking the set of values
/// the accumulator can hold: sums of every subset of the addends that can
/// fire. An adder keeps its overflow machinery as soon as one tracked
/// value plus its addend would cross the modulus; adders that cannot fire
/// (their control bit is zero on every reachable value) contribute
/// nothing. Tracking stops growing at `cap` values; all later flags stay
/// conservatively enabled.
fn overflow_flags_forward(
    reach: &ReachableSet,
    multiplier: u64,
    modulus: u64,
    keep: &[bool],
    cap: usize,
) -> Vec<bool> {
    let n = keep.len();
    let fire_mask = reach.iter().fold(0u64, |m, &v| m | v);
    let mut acc_set = ReachableSet::from([0u64]);
    let mut needed = vec![false; n];
    let mut capped = false;
    for j in 0..n {
        if !keep[j] || fire_mask & (1u64 << j) == 0 {
            continue;
        }
        if capped {
            needed[j] = true;
            continue;
        }
        let addend = mod_mul((1u64 << j) % modulus, multiplier, modulus);
        let max = *acc_set.iter().next_back().expect("set never empty");
        needed[j] = max + addend >= modulus;
        let shifted: Vec<u64> = acc_set.iter().map(|&a| (a + addend) % modulus).collect();
        acc_set.extend(shifted);
        if acc_set.len() > cap {
            capped = true;
        }
    }
    needed
}

/// Same bookkeeping for the uncomputing inverse multiplier, which runs the
/// adders in reverse order as modular subtractions. The accumulator starts
/// on the set of pre-swap target values; a subtraction that could borrow
/// below zero on any tracked value needs the correction machinery.
fn overflow_flags_inverse(
    reach: &ReachableSet,
    multiplier: u64,
    inverse_multiplier: u64,
    modulus: u64,
    keep: &[bool],
    cap: usize,
) -> Vec<bool> {
    let n = keep.len();
    let fire_mask = reach
        .iter()
        .fold(0u64, |m, &x| m | mod_mul(x, multiplier, modulus));
    let mut acc_set: ReachableSet = reach.clone();
    let mut needed = vec![false; n];
    let mut capped = false;
    for j in (0..n).rev() {
        if !keep[j] || fire_mask & (1u64 << j) == 0 {
            continue;
        }
        if capped {
            needed[j] = true;
            continue;
        }
        let subtrahend = mod_mul((1u64 << j) % modulus, inverse_multiplier, modulus);
        let min = *acc_set.iter().next().expect("set never empty");
        needed[j] = min < subtrahend;
        let shifted: Vec<u64> = acc_set
            .iter()
            .map(|&a| (a + modulus - subtrahend) % modulus)
            .collect();
        acc_set.extend(shifted);
        if acc_set.len() > cap {
            capped = true;
        }
    }
    needed
}

/// Builds the full runtime plan for one instance. Reachable sets are
/// tracked in execution order: iteration i applies powers[t-1-i], so the
/// control register before iteration i holds products of the previously
/// applied powers. Tracking is exact up to [`DEFAULT_SET_CAP`] residues;
/// beyond the cap every remaining flag stays conservatively enabled.
pub fn build_plan(
    a: u64,
    n_modulus: u64,
    n_bits: u32,
    t: u32,
    flags: OptimizationFlags,
) -> Result<ElisionPlan> {
    build_plan_with_cap(a, n_modulus, n_bits, t, flags, DEFAULT_SET_CAP)
}

/// [`build_plan`] with an explicit cap on the tracked set size.
pub fn build_plan_with_cap(
    a: u64,
    n_modulus: u64,
    n_bits: u32,
    t: u32,
    flags: OptimizationFlags,
    set_cap: usize,
) -> Result<ElisionPlan> {
    if bit_width(n_modulus) != n_bits {
        return Err(Error::InvalidArgument(format!(
            "{n_modulus} is not an {n_bits}-bit modulus"
        )));
    }
    let (powers, inverse_powers) = precompute_powers(a, n_modulus, t)?;
    let n = n_bits as usize;
    let plan_needed = flags.elide_adders_by_or_mask || flags.elide_overflow_checks;

    let mut iterations = Vec::with_capacity(t as usize);
    let mut reach = ReachableSet::from([1u64 % n_modulus]);
    let mut saturated_value: Option<u64> = None; // or-mask once the set stops growing
    let mut capped = false;

    for i in 0..t as usize {
        let multiplier = powers[t as usize - 1 - i];
        let inverse_multiplier = inverse_powers[t as usize - 1 - i];

        if !plan_needed || capped {
            iterations.push(IterationPlan::keep_all(n));
        } else {
            let mask = or_mask(&reach, n_bits);
            let keep_fwd = keep_flags(flags.elide_adders_by_or_mask, mask, n);
            // control register of the uncomputation holds the products
            let post: ReachableSet = reach
                .iter()
                .map(|&x| mod_mul(x, multiplier, n_modulus))
                .collect();
            let keep_inv =
                keep_flags(flags.elide_adders_by_or_mask, or_mask(&post, n_bits), n);
            let (overflow_fwd, overflow_inv) = if flags.elide_overflow_checks {
                (
                    overflow_flags_forward(&reach, multiplier, n_modulus, &keep_fwd, set_cap),
                    overflow_flags_inverse(
                        &reach,
                        multiplier,
                        inverse_multiplier,
                        n_modulus,
                        &keep_inv,
                        set_cap,
                    ),
                )
            } else {
                (vec![true; n], vec![true; n])
            };
            iterations.push(IterationPlan {
                or_mask: mask,
                keep_fwd,
                keep_inv,
                overflow_fwd,
                overflow_inv,
            });
        }

        // advance the reachable set past this iteration
        if plan_needed && !capped && saturated_value != Some(multiplier) {
            let scaled: Vec<u64> = reach
                .iter()
                .map(|&x| mod_mul(x, multiplier, n_modulus))
                .collect();
            let before = reach.len();
            reach.extend(scaled);
            if reach.len() == before {
                saturated_value = Some(multiplier);
            } else {
                saturated_value = None;
            }
            if reach.len() > set_cap {
                capped = true;
            }
        }
    }

    Ok(ElisionPlan {
        powers,
        inverse_powers,
        iterations,
        first_iteration_as_addition: flags.first_iteration_as_addition,
        flags,
    })
}

/// Convenience wrapper: full parameter binding for one instance.
pub fn bind_instance(
    a: u64,
    n_modulus: u64,
    t: u32,
    flags: OptimizationFlags,
) -> Result<InstanceParams> {
    let plan = build_plan(a, n_modulus, bit_width(n_modulus), t, flags)?;
    Ok(InstanceParams {
        modulus: n_modulus,
        base: a % n_modulus,
        plan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number_theory::brute_force_order;

    #[test]
    fn precomputed_powers_by_repeated_squaring() {
        let (p, ip) = precompute_powers(7, 15, 4).unwrap();
        assert_eq!(p, vec![7, 4, 1, 1]);
        assert_eq!(ip, vec![13, 4, 1, 1]);
        let (p, _) = precompute_powers(2, 15, 4).unwrap();
        assert_eq!(p, vec![2, 4, 1, 1]);
        assert!(precompute_powers(6, 15, 4).is_err());
    }

    #[test]
    fn power_table_squaring_invariant() {
        let (p, ip) = precompute_powers(11, 35, 8).unwrap();
        for k in 0..7 {
            assert_eq!(p[k + 1], mod_mul(p[k], p[k], 35));
            assert_eq!(mod_mul(p[k], ip[k], 35), 1);
        }
    }

    #[test]
    fn reachable_values_examples() {
        assert_eq!(
            reachable_values(7, 15, 0).unwrap(),
            ReachableSet::from([1])
        );
        assert_eq!(
            reachable_values(7, 15, 2).unwrap(),
            ReachableSet::from([1, 7, 4, 13])
        );
        // saturates at the order of a
        assert_eq!(
            reachable_values(7, 15, 5).unwrap(),
            ReachableSet::from([1, 7, 4, 13])
        );
    }

    #[test]
    fn reachable_cardinality_is_min_of_pow2_and_order() {
        for n in [15u64, 21, 33, 35] {
            for a in 2..n {
                if gcd(a, n) != 1 {
                    continue;
                }
                let order = brute_force_order(a, n).unwrap();
                for k in 0..7u32 {
                    let set = reachable_values(a, n, k).unwrap();
                    assert_eq!(
                        set.len() as u64,
                        (1u64 << k).min(order),
                        "a={a} n={n} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn or_mask_examples() {
        assert_eq!(or_mask(&ReachableSet::from([1, 7]), 4), 0b0111);
        assert_eq!(or_mask(&ReachableSet::from([1]), 4), 0b0001);
        assert_eq!(or_mask(&ReachableSet::from([1, 7, 4, 13]), 4), 0b1111);
    }

    #[test]
    fn all_false_flags_keep_everything() {
        let plan = build_plan(7, 15, 4, 8, OptimizationFlags::none()).unwrap();
        assert!(!plan.first_iteration_as_addition);
        for it in &plan.iterations {
            assert!(it.keep_fwd.iter().all(|&b| b));
            assert!(it.keep_inv.iter().all(|&b| b));
            assert!(it.overflow_fwd.iter().all(|&b| b));
            assert!(it.overflow_inv.iter().all(|&b| b));
        }
    }

    #[test]
    fn keep_flag_invariant_follows_or_mask() {
        let plan = build_plan(7, 15, 4, 8, OptimizationFlags::all()).unwrap();
        for it in &plan.iterations {
            for j in 0..4 {
                if j == 0 || it.or_mask & (1 << j) != 0 {
                    assert!(it.keep_fwd[j]);
                }
            }
        }
    }

    #[test]
    fn a2_collapses_early_iterations_mod_15() {
        // 2 has order 4 mod 15, so every power 2^(2^k) with k >= 2 is 1 and
        // the control register stays {1} through the early iterations:
        // every adder except the first is skipped there.
        let t = 8u32;
        let plan = build_plan(2, 15, 4, t, OptimizationFlags::all()).unwrap();
        assert!(plan.first_iteration_as_addition);
        let first = &plan.iterations[1]; // iteration after the addition
        assert_eq!(first.or_mask, 0b0001);
        assert_eq!(first.keep_fwd, vec![true, false, false, false]);
    }

    #[test]
    fn plan_is_a_pure_function_of_its_inputs() {
        let p1 = build_plan(8, 21, 5, 10, OptimizationFlags::all()).unwrap();
        let p2 = build_plan(8, 21, 5, 10, OptimizationFlags::all()).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn plan_json_round_trip() {
        let plan = build_plan(7, 15, 4, 8, OptimizationFlags::all()).unwrap();
        let json = plan.to_json();
        assert_eq!(ElisionPlan::from_json(&json).unwrap(), plan);
    }

    #[test]
    fn capped_tracking_falls_back_to_keep_all() {
        // With a cap of one residue the very first extension overflows it,
        // so every later slice conservatively keeps everything.
        let full = build_plan_with_cap(2, 21, 5, 8, OptimizationFlags::all(), 1 << 16).unwrap();
        let capped = build_plan_with_cap(2, 21, 5, 8, OptimizationFlags::all(), 1).unwrap();
        assert_eq!(full.iterations[0], capped.iterations[0]);
        assert!(full.iterations[1].keep_fwd.iter().any(|&b| !b));
        for it in &capped.iterations[1..] {
            assert!(it.keep_fwd.iter().all(|&b| b));
            assert!(it.overflow_fwd.iter().all(|&b| b));
        }
    }

    #[test]
    fn bind_instance_validates_against_program() {
        let program = crate::circuits::build_qpe_program(4, 8, OptimizationFlags::all());
        let params = bind_instance(7, 15, 8, OptimizationFlags::all()).unwrap();
        assert!(params.validate_for(&program).is_ok());
    }
}
