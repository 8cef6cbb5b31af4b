//! Dense statevector execution engine: gate application, projective
//! mid-circuit measurement with seeded sampling, qubit reset, and an
//! exhaustive branch enumerator producing exact outcome distributions.

mod run;

pub use run::{
    enumerate_branches, enumerate_branches_full, readout_distribution, run_sampled,
    run_sampled_with, Branch, RunOutcome, SimulatorConfig,
};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ir::GateEvent;

/// 2^q complex amplitudes in little-endian basis order: bit i of the basis
/// index is the state of qubit i.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    qubits: u32,
}

impl StateVector {
    /// All qubits in |0>.
    pub fn new(qubits: u32) -> Self {
        Self::basis(qubits, 0)
    }

    /// Computational basis state |index>.
    pub fn basis(qubits: u32, index: usize) -> Self {
        assert!(qubits <= 30, "statevector would not fit in memory");
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { amps, qubits }
    }

    /// Builds a state from raw amplitudes; must have power-of-two length
    /// and unit norm within 1e-9.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidArgument(
                "amplitude count must be a power of two".into(),
            ));
        }
        let qubits = amps.len().trailing_zeros();
        let state = Self { amps, qubits };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "state norm^2 = {norm}, expected 1"
            )));
        }
        Ok(state)
    }

    pub fn qubits(&self) -> u32 {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// |<self|other>|^2.
    pub fn fidelity(&self, other: &Self) -> f64 {
        assert_eq!(self.qubits, other.qubits);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }

    fn check_qubit(&self, q: usize) -> Result<usize> {
        if q < self.qubits as usize {
            Ok(1usize << q)
        } else {
            Err(Error::MalformedProgram(format!(
                "qubit {q} out of range for {}-qubit state",
                self.qubits
            )))
        }
    }

    /// Applies one concrete gate in place. Norm is preserved to machine
    /// precision per gate.
    pub fn apply(&mut self, event: &GateEvent) -> Result<()> {
        match *event {
            GateEvent::H { target } => {
                let tb = self.check_qubit(target)?;
                let s = std::f64::consts::FRAC_1_SQRT_2;
                for i in 0..self.amps.len() {
                    if i & tb == 0 {
                        let a = self.amps[i];
                        let b = self.amps[i | tb];
                        self.amps[i] = (a + b) * s;
                        self.amps[i | tb] = (a - b) * s;
                    }
                }
            }
            GateEvent::X { target } => {
                let tb = self.check_qubit(target)?;
                for i in 0..self.amps.len() {
                    if i & tb == 0 {
                        self.amps.swap(i, i | tb);
                    }
                }
            }
            GateEvent::Phase { target, angle } => {
                let tb = self.check_qubit(target)?;
                self.phase_on_mask(tb, angle);
            }
            GateEvent::CPhase { control, target, angle } => {
                let mask = self.check_qubit(control)? | self.check_qubit(target)?;
                self.phase_on_mask(mask, angle);
            }
            GateEvent::CCPhase { c0, c1, target, angle } => {
                let mask =
                    self.check_qubit(c0)? | self.check_qubit(c1)? | self.check_qubit(target)?;
                self.phase_on_mask(mask, angle);
            }
            GateEvent::Cnot { control, target } => {
                let cb = self.check_qubit(control)?;
                let tb = self.check_qubit(target)?;
                for i in 0..self.amps.len() {
                    if i & cb != 0 && i & tb == 0 {
                        self.amps.swap(i, i | tb);
                    }
                }
            }
            GateEvent::CSwap { control, a, b } => {
                let cb = self.check_qubit(control)?;
                let ab = self.check_qubit(a)?;
                let bb = self.check_qubit(b)?;
                for i in 0..self.amps.len() {
                    if i & cb != 0 && i & ab != 0 && i & bb == 0 {
                        self.amps.swap(i, i ^ ab ^ bb);
                    }
                }
            }
        }
        Ok(())
    }

    fn phase_on_mask(&mut self, mask: usize, angle: f64) {
        let factor = Complex64::from_polar(1.0, angle);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp *= factor;
            }
        }
    }

    /// Probability of reading |1> on `qubit`.
    pub fn prob_one(&self, qubit: usize) -> f64 {
        let qb = 1usize << qubit;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & qb != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Probability that the qubits selected by `mask` read exactly the
    /// corresponding bits of `value`.
    pub fn prob_mask(&self, mask: usize, value: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == value & mask)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projects `qubit` onto `outcome` and renormalizes. Returns the prior
    /// probability of that outcome; projecting onto a zero-probability
    /// outcome is an internal-consistency error.
    pub fn project(&mut self, qubit: usize, outcome: bool) -> Result<f64> {
        let qb = 1usize << qubit;
        let want = if outcome { qb } else { 0 };
        let p: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & qb == want)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        if p <= 0.0 {
            return Err(Error::Internal(format!(
                "projection of qubit {qubit} onto {} has zero probability",
                outcome as u8
            )));
        }
        let scale = 1.0 / p.sqrt();
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & qb == want {
                *amp *= scale;
            } else {
                *amp = Complex64::new(0.0, 0.0);
            }
        }
        Ok(p)
    }
}
