//! Independent reference implementations backing the test suites. Nothing
//! here touches the program representation, the circuit builders or the
//! simulator kernels: phase estimation is modeled directly on dense
//! arrays with classical modular arithmetic, so these functions can serve
//! as oracles for the compiled-circuit path.

use num_complex::Complex64;

use crate::number_theory::{bit_width, brute_force_order, mod_exp, mod_mul};

/// Exact readout distribution of textbook phase estimation with a full
/// t-qubit estimation register: the target starts in |1>, each estimation
/// qubit k controls the basis permutation x -> a^(2^k) * x mod N, and the
/// estimation register is read out through an inverse Fourier transform.
/// Implemented as dense linear algebra over basis indices.
pub fn full_register_qpe_distribution(n_modulus: u64, a: u64, t: u32) -> Vec<f64> {
    assert!(t <= 12, "oracle is dense in 2^t");
    let n = bit_width(n_modulus) as usize;
    let dim_e = 1usize << t;
    let dim_x = 1usize << n;

    // uniform estimation register tensored with target |1>
    let mut state = vec![Complex64::new(0.0, 0.0); dim_e * dim_x];
    let amp = 1.0 / (dim_e as f64).sqrt();
    for e in 0..dim_e {
        state[e * dim_x + 1] = Complex64::new(amp, 0.0);
    }

    // controlled multiplication permutations
    for k in 0..t {
        let p = mod_exp(a, 1u64 << k, n_modulus).expect("valid modulus");
        let mut next = vec![Complex64::new(0.0, 0.0); dim_e * dim_x];
        for e in 0..dim_e {
            for x in 0..dim_x {
                let src = state[e * dim_x + x];
                if src == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let dst_x = if e & (1 << k) != 0 && (x as u64) < n_modulus {
                    mod_mul(x as u64, p, n_modulus) as usize
                } else {
                    x
                };
                next[e * dim_x + dst_x] += src;
            }
        }
        state = next;
    }

    // inverse Fourier transform on the estimation register, then the Born
    // rule marginal over the target
    let tau = std::f64::consts::TAU;
    let mut dist = vec![0.0; dim_e];
    let scale = 1.0 / (dim_e as f64).sqrt();
    for (j, slot) in dist.iter_mut().enumerate() {
        for x in 0..dim_x {
            let mut acc = Complex64::new(0.0, 0.0);
            for e in 0..dim_e {
                let phase = -tau * ((j * e) % dim_e) as f64 / dim_e as f64;
                acc += state[e * dim_x + x] * Complex64::from_polar(1.0, phase);
            }
            *slot += (acc * scale).norm_sqr();
        }
    }
    dist
}

/// The same distribution from the eigenphase decomposition: |1> is a
/// uniform mixture of the r order-r eigenvectors with eigenphases s/r, and
/// each contributes the squared Fejer kernel centered at 2^t * s / r.
pub fn eigenphase_qpe_distribution(n_modulus: u64, a: u64, t: u32) -> Vec<f64> {
    assert!(t <= 16);
    let r = brute_force_order(a, n_modulus).expect("a must be coprime to N");
    let dim = 1usize << t;
    let tau = std::f64::consts::TAU;
    let mut dist = vec![0.0; dim];
    for s in 0..r {
        for (j, slot) in dist.iter_mut().enumerate() {
            let omega = s as f64 / r as f64 - j as f64 / dim as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..dim {
                acc += Complex64::from_polar(1.0, tau * omega * m as f64);
            }
            *slot += acc.norm_sqr() / (dim * dim) as f64 / r as f64;
        }
    }
    dist
}
