//! Constrained mapping of packets onto anonymizers.
//!
//! Parties are visited in random order. Each draws its `2 * t_pk` anonymizers
//! uniformly without replacement from those that still have capacity. When a
//! party finds fewer than `2 * t_pk` anonymizers with room left the attempt is
//! abandoned and sampling restarts, up to [`MAX_SAMPLING_ATTEMPTS`] times.
//! After that a deterministic least-loaded pass builds the plan. Because that
//! pass keeps all loads within one of each other it succeeds whenever
//! `m >= 2 * t_pk` and `m * m_x >= 2 * n * t_pk`.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::Serialize;

use crate::config::ProtocolConfig;
use crate::error::ConfigError;
use crate::protocol::{PacketKey, PacketKind};

pub type AnonymizerId = usize;

pub const MAX_SAMPLING_ATTEMPTS: u32 = 32;

/// How a plan was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PlanRoute {
    /// Random sampling succeeded on the given attempt (1-based).
    Sampled { attempt: u32 },
    /// All sampling attempts dead-ended; the least-loaded pass was used.
    Repaired,
}

/// Destination anonymizer of every packet in a run.
///
/// Slots are laid out party by party; within a party, slot `2 * j` holds the
/// masked segment `j` and slot `2 * j + 1` its mask.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AssignmentPlan {
    n: usize,
    t_pk: usize,
    targets: Vec<AnonymizerId>,
    route: PlanRoute,
}

/// A broken plan invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanViolation {
    WrongSize {
        expected: usize,
        got: usize,
    },
    OutOfRange {
        key: PacketKey,
        anonymizer: AnonymizerId,
    },
    Repeated {
        party: usize,
        anonymizer: AnonymizerId,
    },
    OverCapacity {
        anonymizer: AnonymizerId,
        load: usize,
        m_x: usize,
    },
}

impl fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanViolation::WrongSize { expected, got } => {
                write!(f, "plan covers {got} packets, expected {expected}")
            }
            PlanViolation::OutOfRange { key, anonymizer } => {
                write!(f, "packet {key:?} sent to nonexistent anonymizer {anonymizer}")
            }
            PlanViolation::Repeated { party, anonymizer } => {
                write!(f, "anonymizer {anonymizer} receives two packets of party {party}")
            }
            PlanViolation::OverCapacity { anonymizer, load, m_x } => {
                write!(f, "anonymizer {anonymizer} receives {load} packets, limit {m_x}")
            }
        }
    }
}

impl AssignmentPlan {
    fn slot(&self, key: PacketKey) -> Option<usize> {
        (key.party < self.n && key.index < self.t_pk).then(|| {
            key.party * 2 * self.t_pk
                + 2 * key.index
                + match key.kind {
                    PacketKind::MaskedData => 0,
                    PacketKind::Mask => 1,
                }
        })
    }

    fn key_of(&self, slot: usize) -> PacketKey {
        let per_party = 2 * self.t_pk;
        let within = slot % per_party;
        PacketKey {
            party: slot / per_party,
            index: within / 2,
            kind: if within.is_multiple_of(2) {
                PacketKind::MaskedData
            } else {
                PacketKind::Mask
            },
        }
    }

    /// Anonymizer receiving the packet, if the packet belongs to this plan.
    pub fn anonymizer_for(&self, key: PacketKey) -> Option<AnonymizerId> {
        self.slot(key).and_then(|s| self.targets.get(s).copied())
    }

    /// The anonymizers holding one party's packets, in slot order.
    pub fn party_anonymizers(&self, party: usize) -> &[AnonymizerId] {
        let per_party = 2 * self.t_pk;
        &self.targets[party * per_party..(party + 1) * per_party]
    }

    pub fn iter(&self) -> impl Iterator<Item = (PacketKey, AnonymizerId)> + '_ {
        self.targets.iter().enumerate().map(|(s, &a)| (self.key_of(s), a))
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn route(&self) -> PlanRoute {
        self.route
    }

    /// Number of packets each of the `m` anonymizers receives.
    pub fn loads(&self, m: usize) -> Vec<usize> {
        let mut loads = vec![0; m];
        for &a in &self.targets {
            if a < m {
                loads[a] += 1;
            }
        }
        loads
    }

    pub fn max_load(&self, m: usize) -> usize {
        self.loads(m).into_iter().max().unwrap_or(0)
    }

    /// Checks totality, per-party distinctness and capacity against `config`.
    pub fn validate(&self, config: &ProtocolConfig) -> Result<(), PlanViolation> {
        let expected = config.total_packets();
        if self.n != config.n() || self.t_pk != config.t_pk() || self.targets.len() != expected {
            return Err(PlanViolation::WrongSize {
                expected,
                got: self.targets.len(),
            });
        }
        let m = config.m();
        if let Some((key, anonymizer)) = self.iter().find(|&(_, a)| a >= m) {
            return Err(PlanViolation::OutOfRange { key, anonymizer });
        }
        for party in 0..self.n {
            let mut seen = vec![false; m];
            for &a in self.party_anonymizers(party) {
                if std::mem::replace(&mut seen[a], true) {
                    return Err(PlanViolation::Repeated { party, anonymizer: a });
                }
            }
        }
        for (anonymizer, load) in self.loads(m).into_iter().enumerate() {
            if load > config.m_x() {
                return Err(PlanViolation::OverCapacity {
                    anonymizer,
                    load,
                    m_x: config.m_x(),
                });
            }
        }
        Ok(())
    }

    /// Packets grouped by receiving anonymizer, in slot order.
    pub fn by_anonymizer(&self) -> BTreeMap<AnonymizerId, Vec<PacketKey>> {
        let mut out: BTreeMap<AnonymizerId, Vec<PacketKey>> = BTreeMap::new();
        for (key, a) in self.iter() {
            out.entry(a).or_default().push(key);
        }
        out
    }
}

fn try_sample<R: Rng + ?Sized>(config: &ProtocolConfig, order: &[usize], rng: &mut R) -> Option<Vec<AnonymizerId>> {
    let per_party = config.packets_per_party();
    let mut loads = vec![0usize; config.m()];
    let mut targets = vec![usize::MAX; config.total_packets()];
    for &party in order {
        let eligible: Vec<AnonymizerId> = (0..config.m()).filter(|&a| loads[a] < config.m_x()).collect();
        if eligible.len() < per_party {
            return None;
        }
        let picks = index::sample(rng, eligible.len(), per_party);
        for (slot, pick) in picks.into_iter().enumerate() {
            let a = eligible[pick];
            loads[a] += 1;
            targets[party * per_party + slot] = a;
        }
    }
    Some(targets)
}

fn least_loaded(config: &ProtocolConfig) -> Vec<AnonymizerId> {
    let per_party = config.packets_per_party();
    let mut loads = vec![0usize; config.m()];
    let mut targets = Vec::with_capacity(config.total_packets());
    let mut ranked: Vec<AnonymizerId> = (0..config.m()).collect();
    for _ in 0..config.n() {
        ranked.sort_by_key(|&a| (loads[a], a));
        for &a in &ranked[..per_party] {
            loads[a] += 1;
            targets.push(a);
        }
    }
    targets
}

/// Maps every packet of a run onto an anonymizer.
pub fn plan_assignment<R: Rng + ?Sized>(config: &ProtocolConfig, rng: &mut R) -> Result<AssignmentPlan, ConfigError> {
    // Re-check in case the caller built the config through a looser path.
    ProtocolConfig::relaxed(config.n(), config.m(), config.t_pk(), config.m_x(), config.seed())?;

    let mut order: Vec<usize> = (0..config.n()).collect();
    for attempt in 1..=MAX_SAMPLING_ATTEMPTS {
        order.shuffle(rng);
        if let Some(targets) = try_sample(config, &order, rng) {
            return Ok(AssignmentPlan {
                n: config.n(),
                t_pk: config.t_pk(),
                targets,
                route: PlanRoute::Sampled { attempt },
            });
        }
    }
    Ok(AssignmentPlan {
        n: config.n(),
        t_pk: config.t_pk(),
        targets: least_loaded(config),
        route: PlanRoute::Repaired,
    })
}
