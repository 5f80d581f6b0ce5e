//! Executable adversary scenarios with quantitative leakage metrics.
//!
//! Each scenario exercises one thing a dishonest party can actually do and
//! reports how much that buys them: trace distances and Helstrom guess
//! probabilities for state discrimination, the fidelity of the adversary's
//! best reconstruction, and the channel report when the attack touches the
//! channel. A guess probability of 1/2 means coin-flipping; 1 means the
//! states are perfectly distinguishable. Single copies of the stripped
//! states are partially distinguishable (guess probability above 1/2); what
//! keeps shares safe across runs is the fresh randomizer, exercised by the
//! multi-secret transcript checks.

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocol::{self, RunSpec, Transcript};
use crate::shares::{self, ShareConfig};
use crate::statevec::{Basis, Gate, OutcomePolicy, Statevector};

/// The adversary models of the protocol's threat analysis.
#[derive(Debug, Clone, PartialEq)]
pub enum AttackScenario {
    /// An outsider intercepts every channel qubit and resends.
    ExternalInterceptResend,
    /// The combiner publishes fake measurement results to strip the masks
    /// off the shareholders' qubits.
    CombinerFakeResults(Vec<u8>),
    /// All shareholders pool their angles against an honest combiner.
    CollusionI,
    /// Everyone except shareholder `honest_index` colludes with the combiner.
    CollusionII { honest_index: usize },
}

/// Quantified outcome of one attack simulation.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LeakageReport {
    /// Trace distances between the candidate states the adversary must tell
    /// apart (pairwise, in index order).
    pub trace_distances: Vec<f64>,
    /// Single-copy Helstrom guess probabilities, (1 + TD)/2 per pair.
    pub guess_probabilities: Vec<f64>,
    /// Fidelity of the adversary's best reconstruction of their target state.
    pub best_guess_fidelity: f64,
    /// Sampled P(outcome 0) of a Z-basis measurement on each stripped state;
    /// 1/2 means the measurement reveals nothing.
    pub z_statistics: Vec<f64>,
    /// Channel verification outcome, for attacks the decoys can see.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<crate::channel::ChannelReport>,
}

/// 2x2 Hermitian eigenvalues via the characteristic polynomial.
fn hermitian_eigenvalues(m: [[Complex64; 2]; 2]) -> (f64, f64) {
    let tr = m[0][0].re + m[1][1].re;
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).re;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 + disc, tr / 2.0 - disc)
}

/// Trace distance between two single-qubit pure states, by eigendecomposing
/// the density-matrix difference.
pub fn trace_distance(a: &Statevector, b: &Statevector) -> Result<f64> {
    if a.num_qubits() != 1 || b.num_qubits() != 1 {
        return Err(Error::DimensionError(
            "trace distance expects single-qubit states".into(),
        ));
    }
    let mut diff = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in diff.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = a.amplitudes()[i] * a.amplitudes()[j].conj()
                - b.amplitudes()[i] * b.amplitudes()[j].conj();
        }
    }
    let (l1, l2) = hermitian_eigenvalues(diff);
    Ok((l1.abs() + l2.abs()) / 2.0)
}

/// Distinguishability of the stripped states |+_φ⟩ and |+_φ′⟩: trace
/// distance and the single-copy Helstrom guess probability (1 + TD)/2.
/// For pure states the trace distance equals |sin((φ − φ′)/2)|.
pub fn helstrom_distinguishability(phi: f64, phi_prime: f64) -> (f64, f64) {
    let a = Statevector::plus_with_phase(phi);
    let b = Statevector::plus_with_phase(phi_prime);
    let td = trace_distance(&a, &b).expect("single qubits");
    (td, (1.0 + td) / 2.0)
}

/// P̂(outcome 0) of Z-basis measurements on fresh copies of `state`.
fn z_statistic(state: &Statevector, shots: u32, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zeros = 0u32;
    for _ in 0..shots {
        let mut copy = state.clone();
        let m = copy
            .measure(0, Basis::Z, OutcomePolicy::Sample(rng.random()))
            .expect("in range");
        if m == 0 {
            zeros += 1;
        }
    }
    zeros as f64 / shots as f64
}

/// The combiner publishes fake measurement results m′, manipulating each
/// shareholder into announcing θ′ = (−1)^{m′+1}ω + φ; applying R_Z(θ′)X^{m′}
/// to the received mask qubit then strips the mask, leaving R_Z(φ)|+⟩.
///
/// Returns the stripped states and a report: `best_guess_fidelity` is the
/// minimum fidelity against the analytic R_Z(φ)|+⟩ (the stripping is exact,
/// so it reads 1), the pairwise Helstrom metrics quantify how well the
/// combiner can tell the stripped states apart, and the Z statistics show
/// the one measurement the combiner can make reveals nothing.
pub fn combiner_fake_attack(
    config: &ShareConfig,
    fake_bits: &[u8],
    seed: u64,
) -> Result<(Vec<Statevector>, LeakageReport)> {
    let rounds = config.shareholder_shares.len();
    if fake_bits.len() != rounds {
        return Err(Error::DimensionError(format!(
            "{} fake bits for {rounds} shareholders",
            fake_bits.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stripped = Vec::with_capacity(rounds);
    let mut min_fidelity = 1.0f64;
    let mut z_stats = Vec::with_capacity(rounds);
    for (i, &fake) in fake_bits.iter().enumerate() {
        let mask: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let phi = shares::encode_angle(config.randomizer, config.shareholder_shares[i], config.q)?;
        let theta_prime = shares::response_angle(fake, mask, phi);

        let mut qubit = protocol::shareholder_prepare(mask);
        if fake == 1 {
            qubit.apply_1q(Gate::X, 0)?;
        }
        qubit.apply_1q(Gate::Rz(theta_prime), 0)?;

        let expected = Statevector::plus_with_phase(phi);
        min_fidelity = min_fidelity.min(qubit.fidelity_up_to_phase(&expected)?);
        z_stats.push(z_statistic(&qubit, 10_000, rng.random()));
        stripped.push(qubit);
    }

    let mut trace_distances = Vec::new();
    let mut guess_probabilities = Vec::new();
    for i in 0..stripped.len() {
        for j in (i + 1)..stripped.len() {
            let td = trace_distance(&stripped[i], &stripped[j])?;
            trace_distances.push(td);
            guess_probabilities.push((1.0 + td) / 2.0);
        }
    }
    let report = LeakageReport {
        trace_distances,
        guess_probabilities,
        best_guess_fidelity: min_fidelity,
        z_statistics: z_stats,
        detection: None,
    };
    Ok((stripped, report))
}

/// All shareholders pool their angles and rotate the intercepted encrypted
/// state by φ_A + Σφ_i = −φ_C (mod 2π): their best guess misses the secret
/// by the combiner's hidden angle, with fidelity |⟨ψ|R_X(−φ_C)|ψ⟩|², which
/// reaches 1 only when φ_C vanishes.
pub fn collusion_one(config: &ShareConfig, psi: &Statevector) -> Result<LeakageReport> {
    if psi.num_qubits() != 1 {
        return Err(Error::DimensionError("secret state must be one qubit".into()));
    }
    let phi_dealer = shares::encode_angle(config.randomizer, config.dealer_secret, config.q)?;
    let mut best = psi.clone();
    best.apply_1q(Gate::Rx(phi_dealer), 0)?;
    for &k in &config.shareholder_shares {
        let phi = shares::encode_angle(config.randomizer, k, config.q)?;
        best.apply_1q(Gate::Rx(phi), 0)?;
    }
    let fidelity = best.fidelity_up_to_phase(psi)?;
    let td = trace_distance(&best, psi)?;
    Ok(LeakageReport {
        trace_distances: vec![td],
        guess_probabilities: vec![(1.0 + td) / 2.0],
        best_guess_fidelity: fidelity,
        z_statistics: vec![],
        detection: None,
    })
}

/// Dishonest shareholders hand their angles to the combiner, reducing the
/// run to a three-party game against the single honest shareholder: the
/// combiner strips that one mask exactly as in the fake-results attack, and
/// the report carries the Helstrom bound over every candidate share pair.
pub fn collusion_two(
    config: &ShareConfig,
    honest_index: usize,
    seed: u64,
) -> Result<LeakageReport> {
    let rounds = config.shareholder_shares.len();
    if honest_index == 0 || honest_index > rounds {
        return Err(Error::IndexError(format!(
            "honest shareholder {honest_index} outside 1..={rounds}"
        )));
    }
    let honest_share = config.shareholder_shares[honest_index - 1];
    let reduced = ShareConfig::with_shares(
        config.dealer_secret,
        vec![honest_share],
        config.q,
        config.randomizer,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fake = rng.random_range(0..2u8);
    let (_, mut report) = combiner_fake_attack(&reduced, &[fake], rng.random())?;

    // what the stripped state could be, over every candidate share value
    report.trace_distances.clear();
    report.guess_probabilities.clear();
    for k in 0..config.q {
        for k_prime in (k + 1)..config.q {
            let phi = shares::encode_angle(config.randomizer, k, config.q)?;
            let phi_prime = shares::encode_angle(config.randomizer, k_prime, config.q)?;
            let (td, guess) = helstrom_distinguishability(phi, phi_prime);
            report.trace_distances.push(td);
            report.guess_probabilities.push(guess);
        }
    }
    Ok(report)
}

/// How a scenario ended: an external attack yields a (normally aborted)
/// protocol transcript, the internal ones a leakage report.
#[derive(Debug)]
pub enum ScenarioOutcome {
    Channel(Box<Transcript>),
    Leakage(LeakageReport),
}

/// Run one scenario against a protocol configuration.
pub fn run_scenario(
    spec: &RunSpec,
    scenario: &AttackScenario,
    seed: u64,
) -> Result<ScenarioOutcome> {
    match scenario {
        AttackScenario::ExternalInterceptResend => {
            let mut attacked = spec.clone();
            attacked.eavesdropper = Some(protocol::Eavesdropper::InterceptResend);
            Ok(ScenarioOutcome::Channel(Box::new(protocol::run_protocol(
                &attacked,
            )?)))
        }
        AttackScenario::CombinerFakeResults(bits) => {
            let (_, report) = combiner_fake_attack(&spec.shares, bits, seed)?;
            Ok(ScenarioOutcome::Leakage(report))
        }
        AttackScenario::CollusionI => Ok(ScenarioOutcome::Leakage(collusion_one(
            &spec.shares,
            &spec.secret,
        )?)),
        AttackScenario::CollusionII { honest_index } => Ok(ScenarioOutcome::Leakage(
            collusion_two(&spec.shares, *honest_index, seed)?,
        )),
    }
}
