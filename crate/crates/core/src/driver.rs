//! The end-to-end factoring loop: choose a base, take the gcd shortcut
//! when it applies, otherwise run the compiled phase-estimation program to
//! find a candidate order and extract factors from a nontrivial square
//! root. The program is cached per bit width; only the parameter binding
//! changes between bases.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, OnceLock, RwLock};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuits::build_qpe_program;
use crate::error::{Error, Result};
use crate::ir::HybridProgram;
use crate::number_theory::{bit_width, candidate_order, gcd, is_perfect_power, mod_exp};
use crate::optimizer::bind_instance;
use crate::params::OptimizationFlags;
use crate::simulator::run_sampled;

/// Compiled-program cache keyed by bit width. Reads are concurrent;
/// insertion takes the write lock. A hit never reconstructs.
#[derive(Debug, Default)]
pub struct ProgramCache {
    entries: RwLock<HashMap<u32, CacheEntry>>,
    builds: AtomicU32,
}

#[derive(Debug, Clone)]
struct CacheEntry {
    program: Arc<HybridProgram>,
    construction: Duration,
}

impl ProgramCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the program for (n, t) and the construction time spent by
    /// THIS call: zero on a cache hit.
    pub fn get_or_build(&self, n: u32, t: u32) -> (Arc<HybridProgram>, Duration) {
        if let Some(entry) = self.lookup(n, t) {
            return (entry.program, Duration::ZERO);
        }
        let start = Instant::now();
        let program = Arc::new(build_qpe_program(n, t, OptimizationFlags::all()));
        let construction = start.elapsed();
        self.builds.fetch_add(1, Ordering::Relaxed);
        let mut map = self.entries.write().expect("cache lock poisoned");
        map.insert(
            n,
            CacheEntry {
                program: Arc::clone(&program),
                construction,
            },
        );
        (program, construction)
    }

    fn lookup(&self, n: u32, t: u32) -> Option<CacheEntry> {
        let map = self.entries.read().expect("cache lock poisoned");
        map.get(&n)
            .filter(|e| e.program.iterations() == t)
            .cloned()
    }

    /// How often a program was actually constructed.
    pub fn builds(&self) -> u32 {
        self.builds.load(Ordering::Relaxed)
    }

    /// Recorded construction time for bit width n, if cached.
    pub fn construction_time(&self, n: u32) -> Option<Duration> {
        let map = self.entries.read().expect("cache lock poisoned");
        map.get(&n).map(|e| e.construction)
    }
}

fn process_cache() -> &'static ProgramCache {
    static CACHE: OnceLock<ProgramCache> = OnceLock::new();
    CACHE.get_or_init(ProgramCache::new)
}

/// One phase-estimation attempt: the raw readout and the extracted
/// candidate order.
#[derive(Debug, Clone, Copy)]
pub struct OrderEstimate {
    pub readout: u64,
    pub candidate: Option<u64>,
}

/// Runs the cached program for one base and extracts a candidate order
/// from the measured phase.
pub fn find_candidate_order(
    n_modulus: u64,
    a: u64,
    t: u32,
    flags: OptimizationFlags,
    seed: u64,
    cache: &ProgramCache,
) -> Result<Option<u64>> {
    find_candidate_order_traced(n_modulus, a, t, flags, seed, cache).map(|e| e.candidate)
}

/// [`find_candidate_order`] also exposing the raw readout.
pub fn find_candidate_order_traced(
    n_modulus: u64,
    a: u64,
    t: u32,
    flags: OptimizationFlags,
    seed: u64,
    cache: &ProgramCache,
) -> Result<OrderEstimate> {
    if a < 2 || a >= n_modulus - 1 {
        return Err(Error::InvalidArgument(format!(
            "base {a} outside 2..{}",
            n_modulus - 1
        )));
    }
    if gcd(a, n_modulus) != 1 {
        return Err(Error::InvalidArgument(format!(
            "gcd({a}, {n_modulus}) != 1: take the gcd shortcut instead"
        )));
    }
    let n = bit_width(n_modulus);
    let (program, _) = cache.get_or_build(n, t);
    let params = bind_instance(a, n_modulus, t, flags)?;
    let outcome = run_sampled(&program, &params, seed)?;
    Ok(OrderEstimate {
        readout: outcome.readout,
        candidate: candidate_order(outcome.readout, t, n_modulus, a),
    })
}

/// How one attempt of the factoring loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptOutcome {
    /// gcd(N, a) > 1 revealed a factor without the quantum subroutine.
    GcdShortcut,
    /// An even candidate order with a nontrivial root produced the factors.
    Factored,
    /// The readout yielded no usable candidate order.
    NoOrder,
    /// The candidate order was odd.
    OddOrder,
    /// a^(r/2) was a trivial square root of 1.
    TrivialRoot,
    /// Defensive: the candidate failed verification.
    BadCandidate,
}

/// Record of one loop attempt.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AttemptTrace {
    pub a: u64,
    pub shortcut: bool,
    pub readout: Option<u64>,
    pub candidate: Option<u64>,
    pub outcome: AttemptOutcome,
}

/// A successful factorization with its full attempt history.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FactoringResult {
    pub n: u64,
    pub p: u64,
    pub q: u64,
    pub attempts: Vec<AttemptTrace>,
    pub seed: u64,
}

/// Uniform draw of the base from [2, N-2].
pub fn draw_base(rng: &mut ChaCha8Rng, n_modulus: u64) -> u64 {
    rng.gen_range(2..=n_modulus - 2)
}

fn validate_modulus(n: u64) -> Result<()> {
    if n < 15 {
        return Err(Error::InvalidArgument(format!(
            "modulus {n} below the supported minimum of 15"
        )));
    }
    if n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("modulus {n} is even")));
    }
    if is_perfect_power(n) {
        return Err(Error::InvalidArgument(format!(
            "modulus {n} is a perfect power, not a product of two distinct primes"
        )));
    }
    Ok(())
}

/// Factors an odd composite N (promised to be a product of two distinct
/// primes) using the process-wide program cache and t = 2n iterations.
pub fn shors_algorithm(
    n: u64,
    seed: u64,
    flags: OptimizationFlags,
    max_attempts: u32,
) -> Result<FactoringResult> {
    shors_algorithm_with(n, seed, flags, max_attempts, None, process_cache())
}

/// [`shors_algorithm`] with an explicit iteration count and cache.
pub fn shors_algorithm_with(
    n: u64,
    seed: u64,
    flags: OptimizationFlags,
    max_attempts: u32,
    t: Option<u32>,
    cache: &ProgramCache,
) -> Result<FactoringResult> {
    validate_modulus(n)?;
    let t = t.unwrap_or(2 * bit_width(n));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = Vec::new();

    while (attempts.len() as u32) < max_attempts {
        let a = draw_base(&mut rng, n);
        let g = gcd(n, a);
        if g != 1 {
            attempts.push(AttemptTrace {
                a,
                shortcut: true,
                readout: None,
                candidate: None,
                outcome: AttemptOutcome::GcdShortcut,
            });
            let (p, q) = normalize(g, n / g);
            return Ok(FactoringResult { n, p, q, attempts, seed });
        }

        let run_seed = rng.gen::<u64>();
        let estimate = find_candidate_order_traced(n, a, t, flags, run_seed, cache)?;
        let mut trace = AttemptTrace {
            a,
            shortcut: false,
            readout: Some(estimate.readout),
            candidate: estimate.candidate,
            outcome: AttemptOutcome::NoOrder,
        };

        let Some(r) = estimate.candidate else {
            attempts.push(trace);
            continue;
        };
        if mod_exp(a, r, n)? != 1 {
            // cannot happen by candidate_order's contract; defense in depth
            trace.outcome = AttemptOutcome::BadCandidate;
            attempts.push(trace);
            continue;
        }
        if r % 2 != 0 {
            trace.outcome = AttemptOutcome::OddOrder;
            attempts.push(trace);
            continue;
        }
        let root = mod_exp(a, r / 2, n)?;
        if root == 1 || root == n - 1 {
            trace.outcome = AttemptOutcome::TrivialRoot;
            attempts.push(trace);
            continue;
        }
        let (p, q) = normalize(gcd(n, root - 1), gcd(n, root + 1));
        if p <= 1 || q <= 1 || p * q != n {
            trace.outcome = AttemptOutcome::BadCandidate;
            attempts.push(trace);
            continue;
        }
        trace.outcome = AttemptOutcome::Factored;
        attempts.push(trace);
        return Ok(FactoringResult { n, p, q, attempts, seed });
    }
    Err(Error::AttemptsExhausted { attempts })
}

fn normalize(p: u64, q: u64) -> (u64, u64) {
    if p <= q {
        (p, q)
    } else {
        (q, p)
    }
}
