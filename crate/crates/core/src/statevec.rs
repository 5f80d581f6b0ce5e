//! Dense statevector engine.
//!
//! Holds the full 2^n amplitude vector of an n-qubit register and applies
//! single-qubit gates, controlled-phase, and X/Z-basis measurements with
//! sampled or forced outcomes. Qubit k is bit k of the basis index, so the
//! least-significant bit is qubit 0.

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use crate::error::{Error, Result};

/// Smallest branch probability a forced measurement outcome may have.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-12;

/// Hard cap on register width; the dense representation is not meant for
/// more than a couple dozen qubits.
pub const MAX_QUBITS: usize = 24;

/// Reduce an angle in radians to the canonical interval [0, 2π).
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta % TAU;
    if t < 0.0 {
        t + TAU
    } else {
        t
    }
}

/// Single- and two-qubit gates. Rotation angles are canonicalized to
/// [0, 2π) when the matrix is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    I,
    X,
    Z,
    H,
    Rx(f64),
    Ry(f64),
    Rz(f64),
    Cz,
}

impl Gate {
    pub fn is_single_qubit(&self) -> bool {
        !matches!(self, Gate::Cz)
    }

    /// 2x2 unitary for single-qubit gates; `None` for CZ.
    ///
    /// RZ uses the symmetric diag(e^{-iθ/2}, e^{+iθ/2}) form, so intermediate
    /// amplitudes carry the same phases a by-hand expansion produces.
    pub fn single_qubit_matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let m = match self {
            Gate::I => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
            Gate::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
            Gate::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
            Gate::H => [
                [c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)],
                [c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)],
            ],
            Gate::Rx(theta) => {
                let half = normalize_angle(*theta) / 2.0;
                let (cos, sin) = (half.cos(), half.sin());
                [[c(cos, 0.0), c(0.0, -sin)], [c(0.0, -sin), c(cos, 0.0)]]
            }
            Gate::Ry(theta) => {
                let half = normalize_angle(*theta) / 2.0;
                let (cos, sin) = (half.cos(), half.sin());
                [[c(cos, 0.0), c(-sin, 0.0)], [c(sin, 0.0), c(cos, 0.0)]]
            }
            Gate::Rz(theta) => {
                let half = normalize_angle(*theta) / 2.0;
                [
                    [Complex64::from_polar(1.0, -half), c(0.0, 0.0)],
                    [c(0.0, 0.0), Complex64::from_polar(1.0, half)],
                ]
            }
            Gate::Cz => return None,
        };
        Some(m)
    }
}

/// 4x4 matrix of the controlled-phase gate, basis order |00⟩,|01⟩,|10⟩,|11⟩.
pub fn cz_matrix() -> [[Complex64; 4]; 4] {
    let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(if i == 3 { -1.0 } else { 1.0 }, 0.0);
    }
    m
}

/// Measurement basis. X-basis outcomes map 0 ↔ |+⟩ and 1 ↔ |−⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Z,
    X,
}

/// How a measurement outcome is chosen: sampled from the Born distribution
/// with a dedicated seed, or forced to a given bit for replay.
#[derive(Debug, Clone, Copy)]
pub enum OutcomePolicy {
    Sample(u64),
    Forced(u8),
}

/// Dense complex amplitude vector over `num_qubits` qubits.
#[derive(Debug, Clone)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// Allocate |0…0⟩ on `num_qubits` qubits.
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidArity(
                "statevector needs at least one qubit".into(),
            ));
        }
        if num_qubits > MAX_QUBITS {
            return Err(Error::InvalidArity(format!(
                "dense simulation caps at {MAX_QUBITS} qubits, got {num_qubits}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    /// Build a state from an explicit amplitude vector.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::DimensionError(format!(
                "amplitude count {len} is not a power of two ≥ 2"
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalized(format!(
                "squared norm is {norm}, expected 1"
            )));
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    /// Single qubit α|0⟩ + β|1⟩.
    pub fn qubit(alpha: Complex64, beta: Complex64) -> Result<Self> {
        Self::from_amplitudes(vec![alpha, beta])
    }

    pub fn zero() -> Self {
        Self::new(1).expect("1-qubit state")
    }

    pub fn one() -> Self {
        Self {
            num_qubits: 1,
            amps: vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        }
    }

    pub fn plus() -> Self {
        Self {
            num_qubits: 1,
            amps: vec![
                Complex64::new(FRAC_1_SQRT_2, 0.0),
                Complex64::new(FRAC_1_SQRT_2, 0.0),
            ],
        }
    }

    pub fn minus() -> Self {
        Self {
            num_qubits: 1,
            amps: vec![
                Complex64::new(FRAC_1_SQRT_2, 0.0),
                Complex64::new(-FRAC_1_SQRT_2, 0.0),
            ],
        }
    }

    /// |+_ω⟩ = R_Z(ω)|+⟩, the phase-rotated plus state.
    pub fn plus_with_phase(omega: f64) -> Self {
        let mut s = Self::plus();
        s.apply_1q(Gate::Rz(omega), 0).expect("in range");
        s
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Tensor product; `self` keeps the low qubit indices, `other` is appended above.
    pub fn tensor(&self, other: &Self) -> Self {
        let n = self.num_qubits + other.num_qubits;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        for (hi, oa) in other.amps.iter().enumerate() {
            if oa.norm_sqr() == 0.0 {
                continue;
            }
            let base = hi << self.num_qubits;
            for (lo, sa) in self.amps.iter().enumerate() {
                amps[base | lo] = sa * oa;
            }
        }
        Self {
            num_qubits: n,
            amps,
        }
    }

    fn check_target(&self, target: usize) -> Result<()> {
        if target >= self.num_qubits {
            return Err(Error::IndexError(format!(
                "qubit {target} out of range for {}-qubit state",
                self.num_qubits
            )));
        }
        Ok(())
    }

    /// Apply a single-qubit gate to `target`.
    pub fn apply_1q(&mut self, gate: Gate, target: usize) -> Result<()> {
        self.check_target(target)?;
        let m = gate.single_qubit_matrix().ok_or_else(|| {
            Error::ArityError("two-qubit gate passed to single-qubit application".into())
        })?;
        let step = 1 << target;
        for block in (0..self.amps.len()).step_by(2 * step) {
            for offset in 0..step {
                let j = block + offset;
                let k = j | step;
                let a = self.amps[j];
                let b = self.amps[k];
                self.amps[j] = m[0][0] * a + m[0][1] * b;
                self.amps[k] = m[1][0] * a + m[1][1] * b;
            }
        }
        Ok(())
    }

    /// Controlled-phase between qubits `a` and `b`; symmetric in its arguments.
    pub fn apply_cz(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_target(a)?;
        self.check_target(b)?;
        if a == b {
            return Err(Error::IndexError(
                "controlled-phase needs two distinct qubits".into(),
            ));
        }
        let mask = (1usize << a) | (1 << b);
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            if idx & mask == mask {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    /// Swap qubits `a` and `b` conditioned on `control` being 1.
    pub fn apply_cswap(&mut self, control: usize, a: usize, b: usize) -> Result<()> {
        self.check_target(control)?;
        self.check_target(a)?;
        self.check_target(b)?;
        if control == a || control == b || a == b {
            return Err(Error::IndexError(
                "controlled-swap needs three distinct qubits".into(),
            ));
        }
        let (ca, cb, cc) = (1usize << a, 1 << b, 1 << control);
        for idx in 0..self.amps.len() {
            // visit each swapped pair once: a-bit set, b-bit clear
            if idx & cc == cc && idx & ca == ca && idx & cb == 0 {
                let partner = (idx & !ca) | cb;
                self.amps.swap(idx, partner);
            }
        }
        Ok(())
    }

    /// Probabilities (p0, p1) of measuring `target` in `basis` without
    /// disturbing the state.
    pub fn branch_probabilities(&self, target: usize, basis: Basis) -> Result<(f64, f64)> {
        self.check_target(target)?;
        let step = 1 << target;
        let mut p0 = 0.0;
        let mut p1 = 0.0;
        match basis {
            Basis::Z => {
                for (idx, amp) in self.amps.iter().enumerate() {
                    if idx & step == 0 {
                        p0 += amp.norm_sqr();
                    } else {
                        p1 += amp.norm_sqr();
                    }
                }
            }
            Basis::X => {
                for block in (0..self.amps.len()).step_by(2 * step) {
                    for offset in 0..step {
                        let j = block + offset;
                        let k = j | step;
                        let plus = (self.amps[j] + self.amps[k]) * FRAC_1_SQRT_2;
                        let minus = (self.amps[j] - self.amps[k]) * FRAC_1_SQRT_2;
                        p0 += plus.norm_sqr();
                        p1 += minus.norm_sqr();
                    }
                }
            }
        }
        Ok((p0, p1))
    }

    /// Measure `target` in `basis`, collapse, and return the outcome bit.
    ///
    /// The measured qubit stays in the register, left in the outcome state
    /// (|0⟩/|1⟩ for Z, |+⟩/|−⟩ for X); the rest is renormalized.
    pub fn measure(&mut self, target: usize, basis: Basis, policy: OutcomePolicy) -> Result<u8> {
        let (p0, p1) = self.branch_probabilities(target, basis)?;
        let outcome = match policy {
            OutcomePolicy::Forced(bit) => {
                let bit = (bit != 0) as u8;
                let p = if bit == 0 { p0 } else { p1 };
                if p < MIN_BRANCH_PROBABILITY {
                    return Err(Error::ImpossibleOutcome(format!(
                        "forced outcome {bit} has probability {p:.3e}"
                    )));
                }
                bit
            }
            OutcomePolicy::Sample(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let u: f64 = rng.random();
                if u < p0 / (p0 + p1) {
                    0
                } else {
                    1
                }
            }
        };
        if basis == Basis::X {
            self.apply_1q(Gate::H, target)?;
        }
        let step = 1 << target;
        let p = if outcome == 0 { p0 } else { p1 };
        let scale = 1.0 / p.sqrt();
        let want = if outcome == 0 { 0 } else { step };
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            if idx & step == want {
                *amp *= scale;
            } else {
                *amp = Complex64::new(0.0, 0.0);
            }
        }
        if basis == Basis::X {
            self.apply_1q(Gate::H, target)?;
        }
        Ok(outcome)
    }

    /// Remove a qubit known to be in the product state `collapsed` (for
    /// example right after measuring it), returning the state of the rest.
    pub fn factor_out(&self, target: usize, collapsed: &Statevector) -> Result<Statevector> {
        self.check_target(target)?;
        if collapsed.num_qubits != 1 {
            return Err(Error::DimensionError(
                "factored qubit must be a single-qubit state".into(),
            ));
        }
        if self.num_qubits < 2 {
            return Err(Error::DimensionError(
                "cannot factor the only qubit out".into(),
            ));
        }
        let n_out = self.num_qubits - 1;
        let low_mask = (1usize << target) - 1;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_out];
        for (out_idx, out) in amps.iter_mut().enumerate() {
            let lo = out_idx & low_mask;
            let hi = (out_idx & !low_mask) << 1;
            for bit in 0..2usize {
                let full = hi | (bit << target) | lo;
                *out += collapsed.amps[bit].conj() * self.amps[full];
            }
        }
        Statevector::from_amplitudes(amps)
    }

    /// Phase-invariant overlap |⟨self|other⟩|².
    pub fn fidelity_up_to_phase(&self, other: &Self) -> Result<f64> {
        Ok(self.inner_product(other)?.norm_sqr())
    }

    /// ⟨self|other⟩.
    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionError(format!(
                "{}-qubit state vs {}-qubit state",
                self.num_qubits, other.num_qubits
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}
