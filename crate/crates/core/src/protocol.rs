//! The distributed randomized secure sum.
//!
//! Each party splits its input into `t_pk` additive segments, hides every
//! segment under a fresh mask and sends the masked segment and the mask as
//! two separate packets to two different anonymizers. Anonymizers forward
//! masked segments to the data pool and masks to the random number pool.
//! The trusted third party subtracts the mask total from the data total,
//! which leaves the sum of the inputs.

use rand::Rng;
use serde::Serialize;

use crate::assignment::{plan_assignment, AnonymizerId, AssignmentPlan};
use crate::config::ProtocolConfig;
use crate::error::DrssError;
use crate::residue::Residue;
use crate::rng::{stream, StreamTag};

pub type PartyId = usize;

/// One party's private value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SecretInput {
    pub party_id: PartyId,
    pub value: Residue,
}

impl SecretInput {
    pub fn new(party_id: PartyId, value: impl Into<Residue>) -> Self {
        SecretInput {
            party_id,
            value: value.into(),
        }
    }
}

/// Builds one input per party from plain values, party ids in order.
pub fn inputs_from_values<I>(values: I) -> Vec<SecretInput>
where
    I: IntoIterator,
    I::Item: Into<Residue>,
{
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| SecretInput::new(i, v))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PacketKind {
    /// Segment plus mask, routed to the data pool.
    MaskedData,
    /// The mask itself, routed to the random number pool.
    Mask,
}

impl PacketKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PacketKind::MaskedData => "masked-data",
            PacketKind::Mask => "mask",
        }
    }
}

/// Identity of a packet within a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PacketKey {
    pub party: PartyId,
    pub index: usize,
    pub kind: PacketKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Packet {
    pub party_id: PartyId,
    pub index: usize,
    pub kind: PacketKind,
    pub payload: Residue,
}

impl Packet {
    pub fn key(&self) -> PacketKey {
        PacketKey {
            party: self.party_id,
            index: self.index,
            kind: self.kind,
        }
    }
}

/// Running totals of the two pools.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PoolState {
    pub data_total: Residue,
    pub mask_total: Residue,
    pub packets_seen: usize,
}

/// Work done by each role during a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    /// Segments produced plus masks drawn, over all parties.
    pub party_ops: usize,
    /// Packets sent from parties to anonymizers.
    pub party_sends: usize,
    pub anonymizer_forwards: usize,
    pub pool_additions: usize,
    pub ttp_ops: usize,
}

/// Complete record of one protocol execution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunTranscript {
    pub config: ProtocolConfig,
    pub inputs: Vec<SecretInput>,
    pub packets: Vec<Packet>,
    pub plan: AssignmentPlan,
    pub pools: PoolState,
    pub ttp_result: Residue,
    pub op_counts: OpCounts,
}

impl RunTranscript {
    /// The true sum of the inputs, for checking `ttp_result`.
    pub fn expected_sum(&self) -> Residue {
        self.inputs.iter().map(|i| i.value).sum()
    }

    pub fn input_of(&self, party: PartyId) -> Option<Residue> {
        self.inputs.iter().find(|i| i.party_id == party).map(|i| i.value)
    }

    /// Packets of one party, each with the anonymizer that received it.
    pub fn packets_of(&self, party: PartyId) -> impl Iterator<Item = (&Packet, Option<AnonymizerId>)> + '_ {
        self.packets
            .iter()
            .filter(move |p| p.party_id == party)
            .map(|p| (p, self.plan.anonymizer_for(p.key())))
    }
}

/// Splits `value` into `t_pk` residues summing to it.
///
/// The first `t_pk - 1` segments are uniform; the last one balances the sum.
pub fn split_secret<R: Rng + ?Sized>(value: Residue, t_pk: usize, rng: &mut R) -> Vec<Residue> {
    assert!(t_pk >= 1, "t_pk must be positive");
    let mut segments: Vec<Residue> = (1..t_pk).map(|_| rng.random()).collect();
    let partial: Residue = segments.iter().sum();
    segments.push(value - partial);
    segments
}

/// Draws `t_pk` uniform masks.
pub fn generate_masks<R: Rng + ?Sized>(t_pk: usize, rng: &mut R) -> Vec<Residue> {
    assert!(t_pk >= 1, "t_pk must be positive");
    (0..t_pk).map(|_| rng.random()).collect()
}

/// The two streams a party draws its randomness from.
pub fn party_split_stream(seed: u64, party: PartyId) -> crate::rng::StreamRng {
    stream(seed, StreamTag::Split, party as u64)
}

pub fn party_mask_stream(seed: u64, party: PartyId) -> crate::rng::StreamRng {
    stream(seed, StreamTag::Mask, party as u64)
}

/// Emits a masked segment and a mask packet per segment index.
pub fn build_packets(input: &SecretInput, segments: &[Residue], masks: &[Residue]) -> Result<Vec<Packet>, DrssError> {
    if segments.len() != masks.len() {
        return Err(DrssError::LengthMismatch {
            expected: segments.len(),
            segments: segments.len(),
            masks: masks.len(),
        });
    }
    Ok(segments
        .iter()
        .zip(masks)
        .enumerate()
        .flat_map(|(index, (&d, &r))| {
            [
                Packet {
                    party_id: input.party_id,
                    index,
                    kind: PacketKind::MaskedData,
                    payload: d + r,
                },
                Packet {
                    party_id: input.party_id,
                    index,
                    kind: PacketKind::Mask,
                    payload: r,
                },
            ]
        })
        .collect())
}

/// Routes every packet through its anonymizer into the matching pool.
pub fn deliver_and_accumulate(
    packets: &[Packet],
    plan: &AssignmentPlan,
    mut pools: PoolState,
    counts: &mut OpCounts,
) -> Result<PoolState, DrssError> {
    let mut queues: Vec<Vec<&Packet>> = Vec::new();
    for p in packets {
        let a = plan.anonymizer_for(p.key()).ok_or(DrssError::UnassignedPacket {
            party: p.party_id,
            index: p.index,
            kind: p.kind.as_str(),
        })?;
        if queues.len() <= a {
            queues.resize_with(a + 1, Vec::new);
        }
        queues[a].push(p);
    }
    for p in queues.into_iter().flatten() {
        counts.anonymizer_forwards += 1;
        match p.kind {
            PacketKind::MaskedData => pools.data_total += p.payload,
            PacketKind::Mask => pools.mask_total += p.payload,
        }
        counts.pool_additions += 1;
        pools.packets_seen += 1;
    }
    Ok(pools)
}

/// Computes the secure sum from the pool totals: one subtraction.
pub fn ttp_finalize(pools: &PoolState, expected_packets: usize, counts: &mut OpCounts) -> Result<Residue, DrssError> {
    if pools.packets_seen != expected_packets {
        return Err(DrssError::ProtocolIncomplete {
            seen: pools.packets_seen,
            expected: expected_packets,
        });
    }
    counts.ttp_ops += 1;
    Ok(pools.data_total - pools.mask_total)
}

fn check_inputs(config: &ProtocolConfig, inputs: &[SecretInput]) -> Result<(), DrssError> {
    if inputs.len() != config.n() {
        return Err(DrssError::InputCount {
            expected: config.n(),
            got: inputs.len(),
        });
    }
    let mut seen = vec![false; config.n()];
    for i in inputs {
        if i.party_id >= config.n() || std::mem::replace(&mut seen[i.party_id], true) {
            return Err(DrssError::BadParty { party: i.party_id });
        }
    }
    Ok(())
}

/// Executes one full protocol run. The transcript depends only on the
/// configuration (including its seed) and the inputs.
pub fn run_drss(config: &ProtocolConfig, inputs: &[SecretInput]) -> Result<RunTranscript, DrssError> {
    check_inputs(config, inputs)?;
    let t_pk = config.t_pk();
    let mut counts = OpCounts::default();
    let mut packets = Vec::with_capacity(config.total_packets());
    for input in inputs {
        let segments = split_secret(
            input.value,
            t_pk,
            &mut party_split_stream(config.seed(), input.party_id),
        );
        let masks = generate_masks(t_pk, &mut party_mask_stream(config.seed(), input.party_id));
        counts.party_ops += segments.len() + masks.len();
        let built = build_packets(input, &segments, &masks)?;
        counts.party_sends += built.len();
        packets.extend(built);
    }

    let plan = plan_assignment(config, &mut stream(config.seed(), StreamTag::Plan, 0))?;
    let pools = deliver_and_accumulate(&packets, &plan, PoolState::default(), &mut counts)?;
    let ttp_result = ttp_finalize(&pools, config.total_packets(), &mut counts)?;

    Ok(RunTranscript {
        config: config.clone(),
        inputs: inputs.to_vec(),
        packets,
        plan,
        pools,
        ttp_result,
        op_counts: counts,
    })
}

/// Uniform inputs below `2^bits` for every party, drawn from the input stream.
pub fn synthetic_inputs(n: usize, bits: u32, seed: u64) -> Vec<SecretInput> {
    let mut rng = stream(seed, StreamTag::Inputs, 0);
    let mask = if bits >= 64 { u64::MAX } else { (1u64 << bits) - 1 };
    (0..n)
        .map(|i| SecretInput::new(i, rng.random::<u64>() & mask))
        .collect()
}
