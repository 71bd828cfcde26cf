//! Reference protocols the randomized secure sum is compared against.
//!
//! * The ring secure sum: the initiator adds a random offset to its input and
//!   passes the running total around a one-way ring. Any party's two ring
//!   neighbours can subtract what they forwarded from what they received and
//!   obtain that party's input.
//! * The single-mask variant: one data packet and one mask per party, i.e.
//!   the anonymizer protocol with `t_pk = 1`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::config::ProtocolConfig;
use crate::error::{ConfigError, DrssError, LeakageError};
use crate::leakage::leakage_exact;
use crate::protocol::{run_drss, PartyId, RunTranscript, SecretInput};
use crate::residue::Residue;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RingOpCounts {
    pub additions: usize,
    pub messages: usize,
    pub subtractions: usize,
}

/// Every message of one ring execution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RingTranscript {
    /// Ring order; `order[0]` is the initiator.
    pub order: Vec<PartyId>,
    pub inputs: Vec<SecretInput>,
    pub initiator_random: Residue,
    /// `incoming[p]` is the running total held by the party at ring position
    /// `p` before it adds its own input: `R + sum of predecessors' inputs`.
    /// For the initiator that is `R` itself, which never leaves it.
    pub incoming: Vec<Residue>,
    /// Total returned to the initiator by the last party.
    pub closing: Residue,
    pub announced_sum: Residue,
    pub op_counts: RingOpCounts,
}

impl RingTranscript {
    pub fn position_of(&self, party: PartyId) -> Option<usize> {
        self.order.iter().position(|&p| p == party)
    }

    /// Value sent by the party at position `p` to its successor.
    pub fn outgoing(&self, p: usize) -> Residue {
        if p + 1 < self.incoming.len() {
            self.incoming[p + 1]
        } else {
            self.closing
        }
    }

    pub fn input_of(&self, party: PartyId) -> Option<Residue> {
        self.inputs.iter().find(|i| i.party_id == party).map(|i| i.value)
    }
}

/// Runs the ring secure sum over a random ring order.
pub fn run_ring_sum<R: Rng + ?Sized>(inputs: &[SecretInput], rng: &mut R) -> RingTranscript {
    assert!(inputs.len() >= 2, "ring sum needs at least two parties");
    let mut order: Vec<PartyId> = inputs.iter().map(|i| i.party_id).collect();
    order.shuffle(rng);
    let value = |party: PartyId| inputs.iter().find(|i| i.party_id == party).map(|i| i.value).unwrap();

    let r: Residue = rng.random();
    let mut counts = RingOpCounts::default();
    let mut incoming = Vec::with_capacity(order.len());
    let mut running = r;
    for &party in &order {
        incoming.push(running);
        running += value(party);
        counts.additions += 1;
        counts.messages += 1;
    }
    let closing = running;
    counts.subtractions += 1;
    RingTranscript {
        order,
        inputs: inputs.to_vec(),
        initiator_random: r,
        incoming,
        closing,
        announced_sum: closing - r,
        op_counts: counts,
    }
}

/// Recovers `target`'s input from what its ring predecessor sent it and what
/// its successor received from it.
///
/// For the initiator the predecessor sees the closing total and the successor
/// sees `R + x`; their difference is the sum of everyone else, which the
/// announced sum turns into `x`.
pub fn ring_neighbor_attack(transcript: &RingTranscript, target: PartyId) -> Option<Residue> {
    let p = transcript.position_of(target)?;
    let sent = transcript.outgoing(p);
    if p == 0 {
        Some(transcript.announced_sum - (transcript.closing - sent))
    } else {
        Some(sent - transcript.incoming[p])
    }
}

/// Runs the anonymizer protocol with a single segment and mask per party.
pub fn run_single_mask(inputs: &[SecretInput], m: usize, m_x: usize, seed: u64) -> Result<RunTranscript, DrssError> {
    if inputs.len() < 2 {
        return Err(ConfigError::TooFewParties { n: inputs.len() }.into());
    }
    let config = ProtocolConfig::relaxed(inputs.len(), m, 1, m_x, seed)?;
    run_drss(&config, inputs)
}

/// Probability that `l` of `m` colluding anonymizers hold both packets of a
/// single-mask party: `l(l-1) / (m(m-1))`.
pub fn single_mask_compromise_exact(l: usize, m: usize) -> Result<f64, LeakageError> {
    leakage_exact(l, m, 1)
}
