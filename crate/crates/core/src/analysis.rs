//! Cost model, scheme comparison table, the three-qubit feed-forward
//! demonstration circuit, and swap-test fingerprint verification.
//!
//! Costs are measured per shared state: distributing shares once and reusing
//! them across m secrets drives the distribution cost n·|q|/m toward zero,
//! and each party's angle costs (2+m)/m multiplications per state since only
//! the randomizer changes between runs. The demonstration circuit runs the
//! three-party reconstruction with classical feed-forward and then inverts
//! the preparation, so its final register reads 0 on every shot.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::statevec::{Basis, Gate, OutcomePolicy, Statevector};

/// Scale parameters of one deployment: n parties, m shared states, |q| bits
/// per share, and abstract unit costs for addition and multiplication.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CostModel {
    pub parties: usize,
    pub shared_states: usize,
    pub share_bits: u32,
    pub add_unit: f64,
    pub mul_unit: f64,
}

impl CostModel {
    pub fn new(parties: usize, shared_states: usize, share_bits: u32) -> Result<Self> {
        if parties < 2 {
            return Err(Error::InvalidArity(format!(
                "need at least two parties, got {parties}"
            )));
        }
        if shared_states == 0 {
            return Err(Error::InvalidArity("need at least one shared state".into()));
        }
        if share_bits < 2 {
            return Err(Error::InvalidArity(format!(
                "share size {share_bits} bits cannot hold a prime > 2"
            )));
        }
        Ok(Self {
            parties,
            shared_states,
            share_bits,
            add_unit: 1.0,
            mul_unit: 1.0,
        })
    }
}

/// Bits of share material distributed per shared state: n·|q|/m.
pub fn distribution_cost(model: &CostModel) -> f64 {
    model.parties as f64 * model.share_bits as f64 / model.shared_states as f64
}

/// Classical arithmetic per shared state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComputationCost {
    /// Additions per shared state: one θ per non-combining shareholder.
    pub additions_per_state: u64,
    /// Multiplications per party angle per shared state: (2+m)/m.
    pub multiplications_per_angle: f64,
    /// Exact totals over the whole m-state run, all parties included.
    pub total_additions: u64,
    pub total_multiplications: u64,
}

/// Per-state and total arithmetic counts for an m-state run: the first
/// encoding of each party angle costs three multiplications, each reuse
/// under a fresh randomizer costs one, and every round adds one addition.
pub fn computation_cost(model: &CostModel) -> ComputationCost {
    let n = model.parties as u64;
    let m = model.shared_states as u64;
    ComputationCost {
        additions_per_state: n - 1,
        multiplications_per_angle: (2 + m) as f64 / m as f64,
        total_additions: (n - 1) * m,
        total_multiplications: (2 + m) * (n + 1),
    }
}

/// One row of the scheme comparison.
#[derive(Debug, Clone, Serialize)]
pub struct CostRow {
    pub scheme: &'static str,
    pub distribution_class: &'static str,
    pub computation_class: &'static str,
    pub share_reuse: bool,
    /// Exact desk-scale numbers, given only for this protocol.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_distribution: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_computation: Option<ComputationCost>,
}

/// The four-row comparison: this protocol against the unrestricted,
/// basic SSR and bivariate classical reconstruction schemes.
pub fn comparison_table(model: &CostModel) -> Vec<CostRow> {
    vec![
        CostRow {
            scheme: "proposed",
            distribution_class: "O(1)",
            computation_class: "O(n)T_a + O(1)T_m",
            share_reuse: true,
            exact_distribution: Some(distribution_cost(model)),
            exact_computation: Some(computation_cost(model)),
        },
        CostRow {
            scheme: "unrestricted",
            distribution_class: "O(|q|n^2)",
            computation_class: "O(n)T_a + O(n^3)T_m",
            share_reuse: false,
            exact_distribution: None,
            exact_computation: None,
        },
        CostRow {
            scheme: "basic SSR",
            distribution_class: "O(|q|n)",
            computation_class: "O(n)T_a + O(n^3)T_m",
            share_reuse: false,
            exact_distribution: None,
            exact_computation: None,
        },
        CostRow {
            scheme: "bivariate",
            distribution_class: "O(|q|n^2)",
            computation_class: "O(n)T_a + O(n^4)T_m",
            share_reuse: false,
            exact_distribution: None,
            exact_computation: None,
        },
    ]
}

/// Run the three-party demonstration circuit once. Returns (c0, c1, c2).
///
/// q0 carries the secret (prepared with H, R_Z(π/3), R_Y(π/2), then
/// encrypted with R_X(2π/3)); q1 and q2 carry the masks |+_{π/6}⟩ and
/// |+_π⟩. Each measurement feeds the conditional correction forward, and a
/// final R_X(π/3) plus the inverted preparation (R_Y(−π/2), R_Z(−π/3), H)
/// maps the recovered state back to |0⟩, so c2 is 0 whenever the
/// reconstruction worked.
fn experiment_shot(seeds: [u64; 3]) -> Result<(u8, u8, u8)> {
    let mut state = Statevector::new(3)?;
    // preparations
    state.apply_1q(Gate::H, 0)?;
    state.apply_1q(Gate::Rz(PI / 3.0), 0)?;
    state.apply_1q(Gate::Ry(PI / 2.0), 0)?;
    state.apply_1q(Gate::H, 1)?;
    state.apply_1q(Gate::Rz(PI / 6.0), 1)?;
    state.apply_1q(Gate::H, 2)?;
    state.apply_1q(Gate::Rz(PI), 2)?;
    // encryption
    state.apply_1q(Gate::Rx(2.0 * PI / 3.0), 0)?;

    // first round
    state.apply_cz(0, 1)?;
    state.apply_1q(Gate::H, 0)?;
    let c0 = state.measure(0, Basis::Z, OutcomePolicy::Sample(seeds[0]))?;
    if c0 == 1 {
        state.apply_1q(Gate::X, 1)?;
        state.apply_1q(Gate::H, 1)?;
        state.apply_1q(Gate::Rx(PI / 2.0), 1)?;
    } else {
        state.apply_1q(Gate::H, 1)?;
        state.apply_1q(Gate::Rx(PI / 6.0), 1)?;
    }

    // second round
    state.apply_cz(1, 2)?;
    state.apply_1q(Gate::H, 1)?;
    let c1 = state.measure(1, Basis::Z, OutcomePolicy::Sample(seeds[1]))?;
    if c1 == 1 {
        state.apply_1q(Gate::X, 2)?;
        state.apply_1q(Gate::H, 2)?;
        state.apply_1q(Gate::Rx(5.0 * PI / 3.0), 2)?;
    } else {
        state.apply_1q(Gate::H, 2)?;
        state.apply_1q(Gate::Rx(-PI / 3.0), 2)?;
    }

    // final rotation and verification
    state.apply_1q(Gate::Rx(PI / 3.0), 2)?;
    state.apply_1q(Gate::Ry(-PI / 2.0), 2)?;
    state.apply_1q(Gate::Rz(-PI / 3.0), 2)?;
    state.apply_1q(Gate::H, 2)?;
    let c2 = state.measure(2, Basis::Z, OutcomePolicy::Sample(seeds[2]))?;
    Ok((c0, c1, c2))
}

/// Shot histogram of the demonstration circuit, keyed "c2c1c0".
pub fn run_experiment(shots: u32, seed: u64) -> Result<BTreeMap<String, u64>> {
    if shots == 0 {
        return Err(Error::InvalidArity("need at least one shot".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let (c0, c1, c2) = experiment_shot([rng.random(), rng.random(), rng.random()])?;
        *counts.entry(format!("{c2}{c1}{c0}")).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Exact per-branch numbers for the demonstration circuit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExperimentBranch {
    pub c0: u8,
    pub c1: u8,
    /// Joint probability of reaching this (c0, c1) branch.
    pub probability: f64,
    /// Amplitude magnitude of the c2 = 1 outcome before the last measurement.
    pub c2_one_amplitude: f64,
}

/// Enumerate all four (c0, c1) branches, with the probability of each and
/// the pre-measurement amplitude of the failing c2 = 1 outcome.
pub fn experiment_branches() -> Result<Vec<ExperimentBranch>> {
    let mut branches = Vec::with_capacity(4);
    for c0 in 0..2u8 {
        for c1 in 0..2u8 {
            let mut state = Statevector::new(3)?;
            state.apply_1q(Gate::H, 0)?;
            state.apply_1q(Gate::Rz(PI / 3.0), 0)?;
            state.apply_1q(Gate::Ry(PI / 2.0), 0)?;
            state.apply_1q(Gate::H, 1)?;
            state.apply_1q(Gate::Rz(PI / 6.0), 1)?;
            state.apply_1q(Gate::H, 2)?;
            state.apply_1q(Gate::Rz(PI), 2)?;
            state.apply_1q(Gate::Rx(2.0 * PI / 3.0), 0)?;

            state.apply_cz(0, 1)?;
            state.apply_1q(Gate::H, 0)?;
            let (p0, p1) = state.branch_probabilities(0, Basis::Z)?;
            let prob_c0 = if c0 == 0 { p0 } else { p1 };
            state.measure(0, Basis::Z, OutcomePolicy::Forced(c0))?;
            if c0 == 1 {
                state.apply_1q(Gate::X, 1)?;
            }
            state.apply_1q(Gate::H, 1)?;
            state.apply_1q(Gate::Rx(if c0 == 1 { PI / 2.0 } else { PI / 6.0 }), 1)?;

            state.apply_cz(1, 2)?;
            state.apply_1q(Gate::H, 1)?;
            let (p0, p1) = state.branch_probabilities(1, Basis::Z)?;
            let prob_c1 = if c1 == 0 { p0 } else { p1 };
            state.measure(1, Basis::Z, OutcomePolicy::Forced(c1))?;
            if c1 == 1 {
                state.apply_1q(Gate::X, 2)?;
            }
            state.apply_1q(Gate::H, 2)?;
            state.apply_1q(Gate::Rx(if c1 == 1 { 5.0 * PI / 3.0 } else { -PI / 3.0 }), 2)?;

            state.apply_1q(Gate::Rx(PI / 3.0), 2)?;
            state.apply_1q(Gate::Ry(-PI / 2.0), 2)?;
            state.apply_1q(Gate::Rz(-PI / 3.0), 2)?;
            state.apply_1q(Gate::H, 2)?;
            let (_, p_fail) = state.branch_probabilities(2, Basis::Z)?;
            branches.push(ExperimentBranch {
                c0,
                c1,
                probability: prob_c0 * prob_c1,
                c2_one_amplitude: p_fail.sqrt(),
            });
        }
    }
    Ok(branches)
}

/// Estimate |⟨a|b⟩|² with the three-qubit swap test: the ancilla reads 0
/// with probability (1 + |⟨a|b⟩|²)/2, and the estimate 2·P̂(0) − 1 is
/// clipped to [0, 1].
pub fn swap_test_verify(a: &Statevector, b: &Statevector, shots: u32, seed: u64) -> Result<f64> {
    if a.num_qubits() != 1 || b.num_qubits() != 1 {
        return Err(Error::DimensionError(
            "swap test compares single-qubit states".into(),
        ));
    }
    if shots == 0 {
        return Err(Error::InvalidArity("need at least one shot".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zeros = 0u64;
    for _ in 0..shots {
        // ancilla = qubit 0, inputs on qubits 1 and 2
        let mut state = Statevector::zero().tensor(a).tensor(b);
        state.apply_1q(Gate::H, 0)?;
        state.apply_cswap(0, 1, 2)?;
        state.apply_1q(Gate::H, 0)?;
        if state.measure(0, Basis::Z, OutcomePolicy::Sample(rng.random()))? == 0 {
            zeros += 1;
        }
    }
    let p_zero = zeros as f64 / shots as f64;
    Ok((2.0 * p_zero - 1.0).clamp(0.0, 1.0))
}
