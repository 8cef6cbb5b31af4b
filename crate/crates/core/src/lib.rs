//! Hybrid classical-quantum compilation and simulation of the factoring
//! algorithm's order-finding workflow.
//!
//! The crate builds a structured program representation whose size is
//! independent of the modulus bit width ([`circuits::build_qpe_program`]),
//! binds instance parameters and optimization decisions at run time
//! ([`optimizer::build_plan`]) without touching the program, executes it on
//! a dense statevector simulator with measurement feed-forward
//! ([`simulator`]), and drives the full factoring loop ([`driver`]). The
//! [`bench`] module counts gates by streaming the bound program and times
//! program construction across bit widths.

pub mod bench;
pub mod circuits;
pub mod driver;
pub mod error;
pub mod ir;
pub mod number_theory;
pub mod optimizer;
pub mod params;
pub mod simulator;
pub mod testing;

pub use bench::{bench_construction, bench_ratio, count_gates, BenchRecord, GateCounts};
pub use circuits::{build_qpe_program, MeasurementRecord};
pub use driver::{
    find_candidate_order, shors_algorithm, shors_algorithm_with, FactoringResult, ProgramCache,
};
pub use error::{Error, Result};
pub use ir::HybridProgram;
pub use optimizer::{bind_instance, build_plan};
pub use params::{ElisionPlan, InstanceParams, OptimizationFlags};
pub use simulator::{enumerate_branches, run_sampled, RunOutcome, StateVector};
