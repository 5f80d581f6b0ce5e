//! Graph- and cluster-state construction, stabilizer verification, and the
//! lazy two-particle chain step.
//!
//! A cluster state is built by preparing one qubit per vertex and applying a
//! controlled-phase across each edge. The lazy step defers entanglement: it
//! entangles the running data qubit with one fresh mask qubit at a time,
//! measures, and hands a single qubit to the next round. `eager_equals_lazy`
//! checks that this is indistinguishable from entangling the whole chain up
//! front, which is what lets chain length scale without a 2^n statevector.

use crate::error::{Error, Result};
use crate::statevec::{Basis, Gate, OutcomePolicy, Statevector};

/// Undirected graph with vertices 0..n; vertex k maps to qubit k.
#[derive(Debug, Clone)]
pub struct ClusterGraph {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl ClusterGraph {
    /// Build a graph, rejecting self-loops, duplicate edges and stray indices.
    pub fn new(vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if vertices == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut seen = std::collections::HashSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {a}")));
            }
            if a >= vertices || b >= vertices {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for {vertices} vertices"
                )));
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    key.0, key.1
                )));
            }
            normalized.push(key);
        }
        Ok(Self {
            vertices,
            edges: normalized,
        })
    }

    /// The path 0–1–…–(n−1) used by the reconstruction protocol.
    pub fn path(vertices: usize) -> Result<Self> {
        let edges: Vec<_> = (1..vertices).map(|v| (v - 1, v)).collect();
        Self::new(vertices, &edges)
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbors of `vertex`, ascending.
    pub fn neighbors(&self, vertex: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == vertex {
                    Some(b)
                } else if b == vertex {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }
}

/// Tensor the node states in vertex order, then apply one CZ per edge.
///
/// CZ gates commute, so the edge order never matters.
pub fn build_cluster(graph: &ClusterGraph, node_states: &[Statevector]) -> Result<Statevector> {
    if node_states.len() != graph.vertices() {
        return Err(Error::DimensionError(format!(
            "{} node states for {} vertices",
            node_states.len(),
            graph.vertices()
        )));
    }
    for (v, state) in node_states.iter().enumerate() {
        if state.num_qubits() != 1 {
            return Err(Error::DimensionError(format!(
                "node state {v} is not a single qubit"
            )));
        }
        if (state.norm_sqr() - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(format!("node state {v}")));
        }
    }
    let mut state = node_states[0].clone();
    for node in &node_states[1..] {
        state = state.tensor(node);
    }
    for &(a, b) in graph.edges() {
        state.apply_cz(a, b)?;
    }
    Ok(state)
}

/// Residual ‖K_a|C⟩ − |C⟩‖ of each vertex stabilizer K_a = X_a ⊗ Z_{N(a)}.
///
/// All residuals vanish on a canonical (all-|+⟩) cluster state; any other
/// input just reports nonzero residuals.
pub fn verify_stabilizers(graph: &ClusterGraph, state: &Statevector) -> Result<Vec<f64>> {
    if state.num_qubits() != graph.vertices() {
        return Err(Error::DimensionError(format!(
            "{}-qubit state for {} vertices",
            state.num_qubits(),
            graph.vertices()
        )));
    }
    let mut residuals = Vec::with_capacity(graph.vertices());
    for anchor in 0..graph.vertices() {
        let mut transformed = state.clone();
        transformed.apply_1q(Gate::X, anchor)?;
        for neighbor in graph.neighbors(anchor) {
            transformed.apply_1q(Gate::Z, neighbor)?;
        }
        let residual: f64 = transformed
            .amplitudes()
            .iter()
            .zip(state.amplitudes())
            .map(|(t, s)| (t - s).norm_sqr())
            .sum::<f64>()
            .sqrt();
        residuals.push(residual);
    }
    Ok(residuals)
}

/// Entangle `input` with a received `neighbor` qubit via CZ, then measure the
/// input in the {|+_θ⟩, |−_θ⟩} basis (realized as R_Z(−θ) followed by an
/// X-basis measurement). Returns the outcome and the collapsed neighbor qubit.
pub fn entangle_measure(
    input: &Statevector,
    neighbor: &Statevector,
    measure_angle: f64,
    policy: OutcomePolicy,
) -> Result<(u8, Statevector)> {
    if input.num_qubits() != 1 || neighbor.num_qubits() != 1 {
        return Err(Error::DimensionError(
            "chain step works on single-qubit states".into(),
        ));
    }
    let mut pair = input.tensor(neighbor);
    pair.apply_cz(0, 1)?;
    if measure_angle != 0.0 {
        pair.apply_1q(Gate::Rz(-measure_angle), 0)?;
    }
    let outcome = pair.measure(0, Basis::X, policy)?;
    let collapsed = if outcome == 0 {
        Statevector::plus()
    } else {
        Statevector::minus()
    };
    let output = pair.factor_out(0, &collapsed)?;
    Ok((outcome, output))
}

/// One lazy chain step with a freshly prepared mask qubit R_Z(ω)|+⟩.
///
/// The output equals R_Z(ω)·X^m·H·R_Z(−θ)·input up to a global phase. The
/// sign on θ follows from requiring agreement with the eager pipeline; see
/// `eager_equals_lazy`.
pub fn lazy_step(
    input: &Statevector,
    mask: f64,
    measure_angle: f64,
    policy: OutcomePolicy,
) -> Result<(u8, Statevector)> {
    entangle_measure(
        input,
        &Statevector::plus_with_phase(mask),
        measure_angle,
        policy,
    )
}

/// Outcome of comparing the eager and lazy chain pipelines on one instance.
#[derive(Debug, Clone)]
pub struct PipelineComparison {
    /// Fidelity between the two final data-qubit states.
    pub fidelity: f64,
    /// Per-round branch probabilities (eager, lazy) of the forced outcomes.
    pub branch_probabilities: Vec<(f64, f64)>,
    /// Joint probability of the whole outcome pattern under each pipeline.
    pub joint_probability: (f64, f64),
}

impl PipelineComparison {
    pub fn equivalent(&self, fidelity_tol: f64, probability_tol: f64) -> bool {
        (self.fidelity - 1.0).abs() < fidelity_tol
            && (self.joint_probability.0 - self.joint_probability.1).abs() < probability_tol
            && self
                .branch_probabilities
                .iter()
                .all(|(e, l)| (e - l).abs() < probability_tol)
    }
}

/// Run one measurement chain eagerly (every CZ up front, then measure left to
/// right in the {|+_θ⟩, |−_θ⟩} bases) and lazily (repeated `lazy_step`), and
/// compare the final data-qubit states and outcome probabilities.
///
/// Deferring entanglement commutes because each basis rotation R_Z(−θ_i) is
/// diagonal and each CZ touches only qubits later measurements act on. Note
/// this holds for the bare chain: the protocol's X^m and R_X(θ)H corrections
/// are not diagonal, so a live run may entangle the next qubit only after
/// the previous round's corrections; the protocol engines do exactly that.
pub fn compare_eager_lazy(
    input: &Statevector,
    masks: &[f64],
    measure_angles: &[f64],
    outcomes: &[u8],
) -> Result<PipelineComparison> {
    if masks.len() != measure_angles.len() || masks.len() != outcomes.len() {
        return Err(Error::DimensionError(format!(
            "masks ({}), measure angles ({}) and outcomes ({}) must align",
            masks.len(),
            measure_angles.len(),
            outcomes.len()
        )));
    }
    if input.num_qubits() != 1 {
        return Err(Error::DimensionError("chain input must be one qubit".into()));
    }
    let rounds = masks.len();

    // Eager: full chain first, measurements afterwards.
    let graph = ClusterGraph::path(rounds + 1)?;
    let mut nodes = vec![input.clone()];
    nodes.extend(masks.iter().map(|&w| Statevector::plus_with_phase(w)));
    let mut eager = build_cluster(&graph, &nodes)?;
    let mut eager_probs = Vec::with_capacity(rounds);
    let mut eager_joint = 1.0;
    for i in 0..rounds {
        if measure_angles[i] != 0.0 {
            eager.apply_1q(Gate::Rz(-measure_angles[i]), i)?;
        }
        let (p0, p1) = eager.branch_probabilities(i, Basis::X)?;
        let p = if outcomes[i] == 0 { p0 } else { p1 };
        eager_probs.push(p);
        eager_joint *= p;
        eager.measure(i, Basis::X, OutcomePolicy::Forced(outcomes[i]))?;
    }
    // Strip the measured qubits (each sits in |+⟩ or |−⟩).
    let mut eager_final = eager;
    for &outcome in outcomes {
        let collapsed = if outcome == 0 {
            Statevector::plus()
        } else {
            Statevector::minus()
        };
        eager_final = eager_final.factor_out(0, &collapsed)?;
    }

    // Lazy: one two-qubit step per round.
    let mut lazy = input.clone();
    let mut lazy_probs = Vec::with_capacity(rounds);
    let mut lazy_joint = 1.0;
    for i in 0..rounds {
        let mut pair = lazy.tensor(&Statevector::plus_with_phase(masks[i]));
        pair.apply_cz(0, 1)?;
        if measure_angles[i] != 0.0 {
            pair.apply_1q(Gate::Rz(-measure_angles[i]), 0)?;
        }
        let (p0, p1) = pair.branch_probabilities(0, Basis::X)?;
        let p = if outcomes[i] == 0 { p0 } else { p1 };
        lazy_probs.push(p);
        lazy_joint *= p;
        let (m, next) = lazy_step(
            &lazy,
            masks[i],
            measure_angles[i],
            OutcomePolicy::Forced(outcomes[i]),
        )?;
        debug_assert_eq!(m, outcomes[i]);
        lazy = next;
    }

    Ok(PipelineComparison {
        fidelity: eager_final.fidelity_up_to_phase(&lazy)?,
        branch_probabilities: eager_probs.into_iter().zip(lazy_probs).collect(),
        joint_probability: (eager_joint, lazy_joint),
    })
}

/// True when the eager and lazy pipelines agree on final state (fidelity 1
/// within 1e-9) and on every outcome probability (within 1e-12).
pub fn eager_equals_lazy(
    input: &Statevector,
    masks: &[f64],
    measure_angles: &[f64],
    outcomes: &[u8],
) -> Result<bool> {
    Ok(compare_eager_lazy(input, masks, measure_angles, outcomes)?.equivalent(1e-9, 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn three_path_plus_cluster_matches_expansion() {
        // (1/√2)(|+⟩|0⟩|+⟩ + |−⟩|1⟩|−⟩)
        let graph = ClusterGraph::path(3).unwrap();
        let nodes = vec![Statevector::plus(); 3];
        let cluster = build_cluster(&graph, &nodes).unwrap();

        let plus = Statevector::plus();
        let minus = Statevector::minus();
        let mut expected = vec![c(0.0, 0.0); 8];
        for b0 in 0..2usize {
            for b2 in 0..2usize {
                let idx0 = b0 | (b2 << 2); // middle qubit 0
                expected[idx0] += c(FRAC_1_SQRT_2, 0.0)
                    * plus.amplitudes()[b0]
                    * plus.amplitudes()[b2];
                let idx1 = b0 | 0b010 | (b2 << 2); // middle qubit 1
                expected[idx1] += c(FRAC_1_SQRT_2, 0.0)
                    * minus.amplitudes()[b0]
                    * minus.amplitudes()[b2];
            }
        }
        for (a, e) in cluster.amplitudes().iter().zip(&expected) {
            assert!((a - e).norm() < 1e-12);
        }
    }

    #[test]
    fn single_vertex_cluster_is_the_node_state() {
        let graph = ClusterGraph::new(1, &[]).unwrap();
        let cluster = build_cluster(&graph, &[Statevector::zero()]).unwrap();
        assert_eq!(cluster.amplitudes()[0], c(1.0, 0.0));
        assert_eq!(cluster.amplitudes()[1], c(0.0, 0.0));
    }

    #[test]
    fn node_count_mismatch_is_rejected() {
        let graph = ClusterGraph::path(3).unwrap();
        let err = build_cluster(&graph, &[Statevector::plus()]);
        assert!(matches!(err, Err(Error::DimensionError(_))));
    }

    #[test]
    fn graph_validation_rejects_degenerate_edges() {
        assert!(matches!(
            ClusterGraph::new(3, &[(1, 1)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            ClusterGraph::new(3, &[(0, 1), (1, 0)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            ClusterGraph::new(2, &[(0, 5)]),
            Err(Error::InvalidGraph(_))
        ));
    }

    #[test]
    fn canonical_path_cluster_fixes_all_stabilizers() {
        let graph = ClusterGraph::path(3).unwrap();
        let cluster = build_cluster(&graph, &vec![Statevector::plus(); 3]).unwrap();
        let residuals = verify_stabilizers(&graph, &cluster).unwrap();
        assert_eq!(residuals.len(), 3);
        for r in residuals {
            assert!(r < 1e-12, "residual {r}");
        }
    }

    #[test]
    fn ground_state_breaks_the_first_stabilizer() {
        // X₁Z₂I₃ |000⟩ = |100⟩, residual ‖|100⟩−|000⟩‖ = √2
        let graph = ClusterGraph::path(3).unwrap();
        let state = Statevector::new(3).unwrap();
        let residuals = verify_stabilizers(&graph, &state).unwrap();
        assert!((residuals[0] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn random_graph_clusters_fix_all_stabilizers() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(2..=6usize);
            let mut edges = Vec::new();
            for a in 0..n {
                for b in (a + 1)..n {
                    if rng.random_bool(0.5) {
                        edges.push((a, b));
                    }
                }
            }
            let graph = ClusterGraph::new(n, &edges).unwrap();
            let cluster = build_cluster(&graph, &vec![Statevector::plus(); n]).unwrap();
            for r in verify_stabilizers(&graph, &cluster).unwrap() {
                assert!(r < 1e-12);
            }
        }
    }

    #[test]
    fn cz_edge_order_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let edges = [(0, 1), (1, 2), (2, 3), (0, 3), (1, 3)];
        let graph = ClusterGraph::new(4, &edges).unwrap();
        let nodes: Vec<_> = (0..4)
            .map(|_| Statevector::plus_with_phase(rng.random_range(0.0..TAU)))
            .collect();
        let reference = build_cluster(&graph, &nodes).unwrap();
        let mut shuffled = edges;
        shuffled.reverse();
        shuffled.swap(0, 2);
        let graph2 = ClusterGraph::new(4, &shuffled).unwrap();
        let other = build_cluster(&graph2, &nodes).unwrap();
        // exact equality: CZ only flips signs, no rounding differences
        assert_eq!(reference.amplitudes(), other.amplitudes());
    }

    // Independent 2x2 route for the lazy-step postcondition
    // R_Z(ω)·X^m·H·R_Z(−θ)|φ⟩, without angle canonicalization.
    fn lazy_oracle(input: &Statevector, mask: f64, theta: f64, m: u8) -> Vec<Complex64> {
        let rz = |w: f64| {
            [
                [Complex64::from_polar(1.0, -w / 2.0), c(0.0, 0.0)],
                [c(0.0, 0.0), Complex64::from_polar(1.0, w / 2.0)],
            ]
        };
        let h = [
            [c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)],
            [c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)],
        ];
        let x = [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
        let apply = |m: &[[Complex64; 2]; 2], v: [Complex64; 2]| {
            [
                m[0][0] * v[0] + m[0][1] * v[1],
                m[1][0] * v[0] + m[1][1] * v[1],
            ]
        };
        let mut v = [input.amplitudes()[0], input.amplitudes()[1]];
        v = apply(&rz(-theta), v);
        v = apply(&h, v);
        if m == 1 {
            v = apply(&x, v);
        }
        v = apply(&rz(mask), v);
        v.to_vec()
    }

    #[test]
    fn lazy_step_output_matches_algebraic_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let alpha = rng.random_range(0.0..TAU);
            let beta = rng.random_range(0.0..TAU);
            let input = Statevector::qubit(
                Complex64::from_polar((alpha / 2.0).cos(), 0.0),
                Complex64::from_polar((alpha / 2.0).sin(), beta),
            )
            .unwrap();
            let mask = rng.random_range(0.0..TAU);
            let theta = rng.random_range(0.0..TAU);
            let m = rng.random_range(0..2u8);

            let step = lazy_step(&input, mask, theta, OutcomePolicy::Forced(m));
            let (got_m, output) = match step {
                Ok(v) => v,
                // a forced branch can be impossible for special inputs
                Err(Error::ImpossibleOutcome(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            assert_eq!(got_m, m);
            assert!((output.norm_sqr() - 1.0).abs() < 1e-12);

            let oracle = Statevector::from_amplitudes(lazy_oracle(&input, mask, theta, m))
                .unwrap();
            let f = output.fidelity_up_to_phase(&oracle).unwrap();
            assert!((f - 1.0).abs() < 1e-9, "fidelity {f}");
        }
    }

    #[test]
    fn lazy_step_on_demo_input_reproduces_masked_hadamard() {
        // input |Ψ⟩, ω = π/6, θ = 0, forced 0 → output ∝ R_Z(π/6)H|Ψ⟩
        let r3 = 3f64.sqrt();
        let input = Statevector::qubit(c(0.25, -0.75), c(r3 / 4.0, -r3 / 4.0)).unwrap();
        let (m, output) = lazy_step(&input, PI / 6.0, 0.0, OutcomePolicy::Forced(0)).unwrap();
        assert_eq!(m, 0);
        let oracle = Statevector::from_amplitudes(lazy_oracle(&input, PI / 6.0, 0.0, 0)).unwrap();
        assert!((output.fidelity_up_to_phase(&oracle).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trivial_lazy_step_passes_plus_through() {
        let (m, output) = lazy_step(&Statevector::plus(), 0.0, 0.0, OutcomePolicy::Forced(0)).unwrap();
        assert_eq!(m, 0);
        // H|+⟩ = |0⟩
        let f = output.fidelity_up_to_phase(&Statevector::zero()).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lazy_step_branches_are_equally_likely() {
        let mut pair = Statevector::zero().tensor(&Statevector::plus());
        pair.apply_cz(0, 1).unwrap();
        let (p0, p1) = pair.branch_probabilities(0, Basis::X).unwrap();
        assert!((p0 - 0.5).abs() < 1e-12);
        assert!((p1 - 0.5).abs() < 1e-12);
        for m in 0..2u8 {
            let (_, out) = lazy_step(&Statevector::zero(), 0.0, 0.0, OutcomePolicy::Forced(m)).unwrap();
            assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn demo_configuration_pipelines_agree() {
        // the worked configuration: encrypted secret, masks (π/6, π),
        // protocol measurement basis (θ = 0), outcomes (0, 1)
        let r3 = 3f64.sqrt();
        let input = Statevector::qubit(c(0.25, -0.75), c(r3 / 4.0, -r3 / 4.0)).unwrap();
        let masks = [PI / 6.0, PI];
        assert!(eager_equals_lazy(&input, &masks, &[0.0, 0.0], &[0, 1]).unwrap());
    }

    #[test]
    fn two_node_chain_agrees_over_input_and_mask_grid() {
        for i in 0..8 {
            let alpha = TAU * i as f64 / 8.0;
            let input = Statevector::qubit(
                c((alpha / 2.0).cos(), 0.0),
                c((alpha / 2.0).sin() * 0.6, (alpha / 2.0).sin() * 0.8),
            )
            .unwrap();
            for j in 0..8 {
                let mask = TAU * j as f64 / 8.0;
                assert!(eager_equals_lazy(&input, &[mask], &[0.9], &[0]).unwrap());
            }
        }
    }

    #[test]
    fn all_zero_angles_chain_is_identity() {
        let input = Statevector::qubit(c(0.8, 0.0), c(0.0, 0.6)).unwrap();
        assert!(eager_equals_lazy(&input, &[0.0, 0.0, 0.0], &[0.0; 3], &[0, 0, 0]).unwrap());
    }

    #[test]
    fn random_path_instances_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let rounds = rng.random_range(1..=7usize);
            let alpha: f64 = rng.random_range(0.0..TAU);
            let beta: f64 = rng.random_range(0.0..TAU);
            let input = Statevector::qubit(
                c((alpha / 2.0).cos(), 0.0),
                Complex64::from_polar((alpha / 2.0).sin(), beta),
            )
            .unwrap();
            let masks: Vec<f64> = (0..rounds).map(|_| rng.random_range(0.0..TAU)).collect();
            let angles: Vec<f64> = (0..rounds).map(|_| rng.random_range(0.0..TAU)).collect();
            let outcomes: Vec<u8> = (0..rounds).map(|_| rng.random_range(0..2u8)).collect();
            let cmp = compare_eager_lazy(&input, &masks, &angles, &outcomes).unwrap();
            assert!(cmp.equivalent(1e-9, 1e-12), "{cmp:?}");
        }
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let input = Statevector::plus();
        assert!(matches!(
            eager_equals_lazy(&input, &[0.1], &[0.2, 0.3], &[0]),
            Err(Error::DimensionError(_))
        ));
    }
}
