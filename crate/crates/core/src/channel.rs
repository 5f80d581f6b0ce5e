//! Simulated quantum channel with decoy-state eavesdropping detection.
//!
//! A transmission interleaves the payload qubit with decoys drawn uniformly
//! from the four conjugate-basis states |0⟩, |1⟩, |+⟩, |−⟩ at seed-determined
//! positions. The sender keeps a preparation record; the receiver learns the
//! decoy positions and bases only when the record is handed over for
//! verification, so an eavesdropper model only ever sees the qubits in
//! flight. Measuring each decoy in its preparation basis flags any
//! intercept-resend disturbance with probability 1/4 per decoy.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::{Basis, OutcomePolicy, Statevector};

/// The four decoy preparations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoyState {
    Zero,
    One,
    Plus,
    Minus,
}

impl DecoyState {
    pub fn prepare(self) -> Statevector {
        match self {
            DecoyState::Zero => Statevector::zero(),
            DecoyState::One => Statevector::one(),
            DecoyState::Plus => Statevector::plus(),
            DecoyState::Minus => Statevector::minus(),
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            DecoyState::Zero | DecoyState::One => Basis::Z,
            DecoyState::Plus | DecoyState::Minus => Basis::X,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            DecoyState::Zero | DecoyState::Plus => 0,
            DecoyState::One | DecoyState::Minus => 1,
        }
    }

    fn from_index(i: u8) -> Self {
        match i % 4 {
            0 => DecoyState::Zero,
            1 => DecoyState::One,
            2 => DecoyState::Plus,
            _ => DecoyState::Minus,
        }
    }
}

/// Qubits in flight: what an eavesdropper can touch.
#[derive(Debug, Clone)]
pub struct Transmission {
    slots: Vec<Statevector>,
    permutation_seed: u64,
}

impl Transmission {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn permutation_seed(&self) -> u64 {
        self.permutation_seed
    }

    pub fn slots(&self) -> &[Statevector] {
        &self.slots
    }
}

/// What each slot held at preparation time. Stays with the sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotEntry {
    Payload,
    Decoy(DecoyState),
}

/// The sender's private bookkeeping for one transmission.
#[derive(Debug, Clone)]
pub struct PreparationRecord {
    entries: Vec<SlotEntry>,
}

impl PreparationRecord {
    pub fn entries(&self) -> &[SlotEntry] {
        &self.entries
    }

    pub fn payload_position(&self) -> usize {
        self.entries
            .iter()
            .position(|e| matches!(e, SlotEntry::Payload))
            .expect("record always holds one payload")
    }
}

/// Result of verifying the decoys of one transmission.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChannelReport {
    pub decoys_checked: usize,
    pub errors: usize,
    pub error_rate: f64,
    pub verdict: ChannelVerdict,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ChannelVerdict {
    Clean,
    Abort,
}

/// Interleave `payload` with `decoy_count` uniformly drawn decoys at a
/// seed-determined position, returning the qubits in flight and the sender's
/// preparation record.
pub fn send_with_decoys(
    payload: Statevector,
    decoy_count: usize,
    seed: u64,
) -> (Transmission, PreparationRecord) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots = Vec::with_capacity(decoy_count + 1);
    let mut entries = Vec::with_capacity(decoy_count + 1);
    for _ in 0..decoy_count {
        let decoy = DecoyState::from_index(rng.random_range(0..4u8));
        slots.push(decoy.prepare());
        entries.push(SlotEntry::Decoy(decoy));
    }
    let position = rng.random_range(0..=decoy_count);
    slots.insert(position, payload);
    entries.insert(position, SlotEntry::Payload);
    (
        Transmission {
            slots,
            permutation_seed: seed,
        },
        PreparationRecord { entries },
    )
}

/// Intercept-resend: measure every slot in a uniformly random basis and send
/// the collapsed qubit onward. Payload and decoys are disturbed alike; the
/// attacker never sees the preparation record.
pub fn eavesdrop_intercept_resend(mut t: Transmission, seed: u64) -> Transmission {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for slot in &mut t.slots {
        let basis = if rng.random_bool(0.5) { Basis::Z } else { Basis::X };
        slot.measure(0, basis, OutcomePolicy::Sample(rng.random()))
            .expect("single-qubit slot");
    }
    t
}

/// Measure each decoy in its preparation basis and compare with the prepared
/// bit; the payload slot is extracted unmeasured. Aborts when the observed
/// error rate exceeds `threshold`.
pub fn detect(
    t: Transmission,
    record: &PreparationRecord,
    threshold: f64,
    seed: u64,
) -> Result<(ChannelReport, Statevector)> {
    if t.len() != record.entries.len() {
        return Err(Error::ProtocolViolation(format!(
            "record covers {} slots but transmission has {}",
            record.entries.len(),
            t.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut payload = None;
    let mut checked = 0usize;
    let mut errors = 0usize;
    for (slot, entry) in t.slots.into_iter().zip(&record.entries) {
        match entry {
            SlotEntry::Payload => payload = Some(slot),
            SlotEntry::Decoy(decoy) => {
                let mut qubit = slot;
                let outcome = qubit.measure(0, decoy.basis(), OutcomePolicy::Sample(rng.random()))?;
                checked += 1;
                if outcome != decoy.bit() {
                    errors += 1;
                }
            }
        }
    }
    let error_rate = if checked == 0 {
        0.0
    } else {
        errors as f64 / checked as f64
    };
    let verdict = if error_rate > threshold {
        ChannelVerdict::Abort
    } else {
        ChannelVerdict::Clean
    };
    Ok((
        ChannelReport {
            decoys_checked: checked,
            errors,
            error_rate,
            verdict,
        },
        payload.ok_or_else(|| Error::ProtocolViolation("record lists no payload slot".into()))?,
    ))
}
