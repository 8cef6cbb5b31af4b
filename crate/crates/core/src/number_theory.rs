//! Exact integer arithmetic used by the classical driver and the optimizer:
//! gcd, modular exponentiation, modular inverse, and continued-fraction
//! order extraction. All multiplications go through u128 intermediates so
//! moduli up to 64 bits never overflow.

use crate::error::{Error, Result};

/// Greatest common divisor by Euclid's algorithm. `gcd(x, 0) = x`.
pub fn gcd(mut x: u64, mut y: u64) -> u64 {
    while y != 0 {
        let r = x % y;
        x = y;
        y = r;
    }
    x
}

/// `(a * b) mod m` without overflow.
#[inline]
pub fn mod_mul(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `base^exponent mod modulus` by square-and-multiply.
pub fn mod_exp(base: u64, mut exponent: u64, modulus: u64) -> Result<u64> {
    if modulus < 2 {
        return Err(Error::InvalidArgument(format!(
            "modulus must be >= 2, got {modulus}"
        )));
    }
    let mut result = 1u64;
    let mut b = base % modulus;
    while exponent > 0 {
        if exponent & 1 == 1 {
            result = mod_mul(result, b, modulus);
        }
        b = mod_mul(b, b, modulus);
        exponent >>= 1;
    }
    Ok(result)
}

/// Modular inverse by extended Euclid. Errors when gcd(a, modulus) != 1,
/// which signals the caller that the gcd shortcut applies instead.
pub fn mod_inverse(a: u64, modulus: u64) -> Result<u64> {
    if modulus < 2 {
        return Err(Error::InvalidArgument(format!(
            "modulus must be >= 2, got {modulus}"
        )));
    }
    let (mut r0, mut r1) = (modulus as i128, (a % modulus) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return Err(Error::NoInverse { value: a, modulus });
    }
    Ok(s0.rem_euclid(modulus as i128) as u64)
}

/// One convergent p/q of a continued-fraction expansion.
///
/// `numerator / denominator` is always in lowest terms, and denominators
/// strictly increase along the sequence returned by [`convergents`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Convergent {
    pub numerator: u64,
    pub denominator: u64,
}

/// Continued-fraction convergents of the exact rational `num / den`.
///
/// Works entirely in integer arithmetic; the trailing convergent equals
/// `num / den` reduced to lowest terms.
pub fn convergents(mut num: u64, mut den: u64) -> Vec<Convergent> {
    assert!(den > 0, "denominator must be positive");
    let mut out = Vec::new();
    // h/k recurrences seeded with h_-1/k_-1 = 1/0 and h_0/k_0 = a_0/1.
    let (mut h_prev, mut k_prev) = (1u128, 0u128);
    let (mut h, mut k) = (0u128, 1u128); // placeholder, set by first term
    let mut first = true;
    while den != 0 {
        let a = num / den;
        let r = num % den;
        if first {
            h = a as u128;
            k = 1;
            first = false;
        } else {
            let h_next = a as u128 * h + h_prev;
            let k_next = a as u128 * k + k_prev;
            h_prev = h;
            k_prev = k;
            h = h_next;
            k = k_next;
        }
        out.push(Convergent {
            numerator: h as u64,
            denominator: k as u64,
        });
        num = den;
        den = r;
    }
    if out.is_empty() {
        out.push(Convergent {
            numerator: 0,
            denominator: 1,
        });
    }
    out
}

/// Extracts a candidate multiplicative order from a phase-estimation
/// readout `j` of `t` bits.
///
/// Expands j/2^t in continued fractions and returns the smallest convergent
/// denominator `q < N` with `a^q = 1 (mod N)`. When a denominator fails the
/// check, `2q` is also tried before moving on: even orders are frequently
/// read out as r/2 when the numerator of the true fraction is even.
/// Returns `None` for `j = 0` and when no denominator passes.
pub fn candidate_order(j: u64, t: u32, n: u64, a: u64) -> Option<u64> {
    assert!(t > 0 && t < 64, "iteration count out of range");
    assert!(j < (1u64 << t), "j must be < 2^t");
    if j == 0 {
        return None;
    }
    let order_ok = |q: u64| -> bool {
        q >= 1 && q < n && mod_exp(a % n, q, n).map(|v| v == 1).unwrap_or(false)
    };
    for c in convergents(j, 1u64 << t) {
        let q = c.denominator;
        if q == 0 || q >= n {
            continue;
        }
        if order_ok(q) {
            return Some(q);
        }
        if 2 * q < n && order_ok(2 * q) {
            return Some(2 * q);
        }
    }
    None
}

/// Smallest r >= 1 with a^r = 1 (mod n), by iterated multiplication.
///
/// Test oracle; not used on the factoring path.
pub fn brute_force_order(a: u64, n: u64) -> Result<u64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("modulus {n} too small")));
    }
    if gcd(a % n, n) != 1 {
        return Err(Error::InvalidArgument(format!(
            "gcd({a}, {n}) != 1, order undefined"
        )));
    }
    let a = a % n;
    let mut acc = a;
    let mut r = 1u64;
    while acc != 1 {
        acc = mod_mul(acc, a, n);
        r += 1;
    }
    Ok(r)
}

/// Number of bits of `n` (bit width of the modulus).
pub fn bit_width(n: u64) -> u32 {
    64 - n.leading_zeros()
}

/// True when `n = b^k` for some integers b >= 2, k >= 2.
pub fn is_perfect_power(n: u64) -> bool {
    if n < 4 {
        return false;
    }
    for k in 2..=bit_width(n) {
        let mut lo = 2u64;
        let mut hi = 1u64 << (bit_width(n) / k + 1);
        while lo <= hi {
            let mid = lo + (hi - lo) / 2;
            match mid.checked_pow(k).map(|p| p.cmp(&n)) {
                Some(std::cmp::Ordering::Equal) => return true,
                Some(std::cmp::Ordering::Less) => lo = mid + 1,
                _ => hi = mid - 1,
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gcd_small_cases() {
        assert_eq!(gcd(15, 6), 3);
        assert_eq!(gcd(21, 14), 7);
        assert_eq!(gcd(42, 0), 42);
        assert_eq!(gcd(0, 42), 42);
    }

    #[test]
    fn mod_exp_matches_repeated_multiplication() {
        // 7^4 mod 15: 7, 4, 13, 1
        assert_eq!(mod_exp(7, 4, 15).unwrap(), 1);
        assert_eq!(mod_exp(2, 4, 15).unwrap(), 1); // 16 mod 15
        assert_eq!(mod_exp(9, 0, 21).unwrap(), 1); // empty product
        let mut acc = 1u64;
        for e in 0..12 {
            assert_eq!(mod_exp(11, e, 35).unwrap(), acc);
            acc = mod_mul(acc, 11, 35);
        }
    }

    #[test]
    fn mod_exp_rejects_small_modulus() {
        assert!(mod_exp(3, 5, 1).is_err());
        assert!(mod_exp(3, 5, 0).is_err());
    }

    #[test]
    fn mod_inverse_cases() {
        assert_eq!(mod_inverse(7, 15).unwrap(), 13); // 7*13 = 91 = 6*15+1
        assert_eq!(mod_inverse(2, 15).unwrap(), 8); // 16 mod 15 = 1
        assert_eq!(mod_inverse(1, 97).unwrap(), 1);
        assert!(matches!(
            mod_inverse(6, 9),
            Err(Error::NoInverse { value: 6, modulus: 9 })
        ));
    }

    #[test]
    fn convergents_of_known_fraction() {
        // 355/113 expands as [3; 7, 16] -> 3/1, 22/7, 355/113
        let c = convergents(355, 113);
        assert_eq!(c[0], Convergent { numerator: 3, denominator: 1 });
        assert_eq!(c[1], Convergent { numerator: 22, denominator: 7 });
        assert_eq!(c[2], Convergent { numerator: 355, denominator: 113 });
    }

    #[test]
    fn candidate_order_examples() {
        // 192/256 = 3/4; the denominator 4 is the order of 7 mod 15.
        assert_eq!(candidate_order(192, 8, 15, 7), Some(4));
        // Zero phase carries no information.
        assert_eq!(candidate_order(0, 8, 15, 7), None);
        // 128/256 = 1/2; denominator 2 fails (7^2 = 4), doubling recovers 4.
        assert_eq!(candidate_order(128, 8, 15, 7), Some(4));
    }

    #[test]
    fn brute_force_order_examples() {
        assert_eq!(brute_force_order(7, 15).unwrap(), 4);
        assert_eq!(brute_force_order(4, 15).unwrap(), 2);
        assert_eq!(brute_force_order(2, 15).unwrap(), 4);
        assert!(brute_force_order(6, 15).is_err());
    }

    #[test]
    fn bit_width_cases() {
        assert_eq!(bit_width(15), 4);
        assert_eq!(bit_width(16), 5);
        assert_eq!(bit_width(21), 5);
        assert_eq!(bit_width(35), 6);
    }

    #[test]
    fn perfect_power_detection() {
        assert!(is_perfect_power(25));
        assert!(is_perfect_power(27));
        assert!(is_perfect_power(64));
        assert!(!is_perfect_power(15));
        assert!(!is_perfect_power(21));
        assert!(!is_perfect_power(2));
    }

    proptest! {
        #[test]
        fn gcd_commutes_and_is_idempotent(x in 0u64..1 << 40, y in 0u64..1 << 40) {
            prop_assert_eq!(gcd(x, y), gcd(y, x));
            prop_assert_eq!(gcd(x, x), x);
        }

        #[test]
        fn inverse_multiplies_to_one(m in 3u64..1 << 30, a in 2u64..1 << 30) {
            prop_assume!(gcd(a % m, m) == 1 && a % m != 0);
            let inv = mod_inverse(a, m).unwrap();
            prop_assert_eq!(mod_mul(a % m, inv, m), 1);
        }

        #[test]
        fn convergent_invariants(num in 1u64..1 << 20, den in 1u64..1 << 20) {
            let cs = convergents(num, den);
            let mut last_den = 0u64;
            for c in &cs {
                prop_assert_eq!(gcd(c.numerator, c.denominator), 1);
                prop_assert!(c.denominator >= last_den);
                if c.denominator == last_den {
                    // only the leading integer part may repeat denominator 1
                    prop_assert_eq!(c.denominator, 1);
                }
                last_den = c.denominator;
            }
            let last = cs.last().unwrap();
            let g = gcd(num, den);
            prop_assert_eq!(last.numerator, num / g);
            prop_assert_eq!(last.denominator, den / g);
        }

        #[test]
        fn candidate_order_result_is_an_order_witness(j in 0u64..256, a in 2u64..15) {
            prop_assume!(gcd(a, 15) == 1);
            if let Some(q) = candidate_order(j, 8, 15, a) {
                prop_assert_eq!(mod_exp(a, q, 15).unwrap(), 1);
                prop_assert!(q < 15);
            }
        }

    }

    #[test]
    fn candidate_order_recovers_exact_dyadic_orders() {
        // Moduli whose multiplicative orders all divide 2^t, so that
        // j = k * 2^t / r represents k/r exactly for every coprime k < r.
        let t = 8u32;
        for n in [15u64, 17] {
            for a in 2..n {
                if gcd(a, n) != 1 {
                    continue;
                }
                let r = brute_force_order(a, n).unwrap();
                assert_eq!((1u64 << t) % r, 0, "order of {a} mod {n} is not dyadic");
                if r == 1 {
                    continue;
                }
                for k in 1..r {
                    if gcd(k, r) != 1 {
                        continue;
                    }
                    let j = k * ((1u64 << t) / r);
                    assert_eq!(candidate_order(j, t, n, a), Some(r), "a={a} n={n} k={k}");
                }
            }
        }
    }
}
