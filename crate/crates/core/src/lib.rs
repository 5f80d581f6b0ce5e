//! Cluster-state quantum secret reconstruction.
//!
//! A dealer hides a secret qubit behind an R_X rotation derived from her
//! share of a classical secret; shareholders contribute masked qubits; the
//! combiner chains measurement rounds over a one-dimensional cluster state
//! until the rotations cancel and the secret state reappears. This crate
//! simulates the whole flow: the statevector engine, cluster-state
//! machinery, share arithmetic, the decoy-protected channel, the protocol
//! orchestration with replayable transcripts, executable attack scenarios,
//! and the cost model with a hardware-style demonstration circuit.

pub mod analysis;
pub mod attacks;
pub mod channel;
pub mod cluster;
pub mod error;
pub mod protocol;
pub mod selftest;
pub mod shares;
pub mod statevec;

pub use error::{Error, Result};
pub use statevec::{Basis, Gate, OutcomePolicy, Statevector};
