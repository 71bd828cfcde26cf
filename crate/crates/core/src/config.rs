//! Protocol parameters.
//!
//! `n` parties each send `2 * t_pk` packets (a masked segment and its mask per
//! segment index) through `m` anonymizers, none of which may accept more than
//! `m_x` packets in one run. A party's packets must reach pairwise distinct
//! anonymizers, so a configuration is feasible exactly when
//! `m >= 2 * t_pk` and `m * m_x >= 2 * n * t_pk`.

use serde::Serialize;

use crate::error::ConfigError;

pub const MIN_PARTIES: usize = 2;
pub const MIN_ANONYMIZERS: usize = 4;
pub const MIN_PACKETS_PER_PARTY: usize = 3;

/// Default number of parties.
pub const DEFAULT_PARTIES: usize = 10;
/// Default number of data packets per party.
pub const DEFAULT_PACKETS_PER_PARTY: usize = 3;

/// `m_x` when none is given: one party's worth of packets.
pub fn default_max_load(t_pk: usize) -> usize {
    2 * t_pk
}

/// Smallest feasible anonymizer count that also respects the minimum of 4.
///
/// `max(4, 2 * t_pk, ceil(2 * n * t_pk / m_x))`
pub fn default_anonymizers(n: usize, t_pk: usize, m_x: usize) -> usize {
    MIN_ANONYMIZERS.max(2 * t_pk).max((2 * n * t_pk).div_ceil(m_x.max(1)))
}

/// Validated parameters of one protocol run.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ProtocolConfig {
    n: usize,
    m: usize,
    t_pk: usize,
    m_x: usize,
    seed: u64,
}

impl ProtocolConfig {
    /// Builds a configuration that satisfies both the feasibility constraints
    /// and the simulation minimums (n >= 2, m >= 4, t_pk >= 3).
    pub fn new(n: usize, m: usize, t_pk: usize, m_x: usize, seed: u64) -> Result<Self, ConfigError> {
        if n < MIN_PARTIES {
            return Err(ConfigError::TooFewParties { n });
        }
        if t_pk < MIN_PACKETS_PER_PARTY {
            return Err(ConfigError::TooFewPackets { t_pk });
        }
        if m < MIN_ANONYMIZERS {
            return Err(ConfigError::TooFewAnonymizers { m });
        }
        Self::relaxed(n, m, t_pk, m_x, seed)
    }

    /// Builds a configuration checking only what the protocol needs to run:
    /// positive parameters and a feasible assignment.
    ///
    /// Used for analysis scenarios below the simulation minimums, such as a
    /// single target party or the one-segment baseline.
    pub fn relaxed(n: usize, m: usize, t_pk: usize, m_x: usize, seed: u64) -> Result<Self, ConfigError> {
        for (name, v) in [("n", n), ("m", m), ("t_pk", t_pk), ("m_x", m_x)] {
            if v == 0 {
                return Err(ConfigError::Zero { name });
            }
        }
        if m < 2 * t_pk {
            return Err(ConfigError::NotEnoughForDistinct { m, t_pk });
        }
        let required = 2 * n * t_pk;
        if m.checked_mul(m_x).is_none_or(|cap| cap < required) {
            return Err(ConfigError::InsufficientCapacity { m, m_x, required });
        }
        Ok(ProtocolConfig { n, m, t_pk, m_x, seed })
    }

    /// Default parameters: n = 10, t_pk = 3, m_x = 2 * t_pk and the smallest
    /// feasible m.
    pub fn defaults(seed: u64) -> Self {
        ConfigTemplate::new(DEFAULT_PARTIES, DEFAULT_PACKETS_PER_PARTY, seed)
            .resolve()
            .expect("defaults are feasible")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn t_pk(&self) -> usize {
        self.t_pk
    }

    pub fn m_x(&self) -> usize {
        self.m_x
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn modulus_bits(&self) -> u32 {
        crate::residue::MODULUS_BITS
    }

    /// Packets each party sends: a masked segment and a mask per index.
    pub fn packets_per_party(&self) -> usize {
        2 * self.t_pk
    }

    /// `n * 2 * t_pk`
    pub fn total_packets(&self) -> usize {
        self.n * self.packets_per_party()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ProtocolConfig { seed, ..self.clone() }
    }
}

/// How to treat an explicitly requested `m` that is infeasible.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AnonymizerPolicy {
    /// Reject the configuration.
    #[default]
    Strict,
    /// Raise `m` to the smallest feasible value and report the adjustment.
    RaiseToFeasible,
}

/// Parameters with optional `m` and `m_x`, resolved against the defaults.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigTemplate {
    pub n: usize,
    pub t_pk: usize,
    pub m: Option<usize>,
    pub m_x: Option<usize>,
    pub seed: u64,
    /// Apply only feasibility checks, not the simulation minimums.
    pub relaxed: bool,
}

/// A resolved template together with any change made to the requested `m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resolved {
    pub config: ProtocolConfig,
    pub requested_m: Option<usize>,
}

impl Resolved {
    pub fn m_adjusted(&self) -> bool {
        self.requested_m.is_some_and(|m| m != self.config.m())
    }
}

impl ConfigTemplate {
    pub fn new(n: usize, t_pk: usize, seed: u64) -> Self {
        ConfigTemplate {
            n,
            t_pk,
            m: None,
            m_x: None,
            seed,
            relaxed: false,
        }
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_m_x(mut self, m_x: usize) -> Self {
        self.m_x = Some(m_x);
        self
    }

    pub fn effective_m_x(&self) -> usize {
        self.m_x.unwrap_or_else(|| default_max_load(self.t_pk))
    }

    fn build(&self, m: usize) -> Result<ProtocolConfig, ConfigError> {
        let m_x = self.effective_m_x();
        if self.relaxed {
            ProtocolConfig::relaxed(self.n, m, self.t_pk, m_x, self.seed)
        } else {
            ProtocolConfig::new(self.n, m, self.t_pk, m_x, self.seed)
        }
    }

    pub fn resolve(&self) -> Result<ProtocolConfig, ConfigError> {
        self.resolve_with(AnonymizerPolicy::Strict).map(|r| r.config)
    }

    pub fn resolve_with(&self, policy: AnonymizerPolicy) -> Result<Resolved, ConfigError> {
        let m_x = self.effective_m_x();
        if m_x == 0 {
            return Err(ConfigError::Zero { name: "m_x" });
        }
        let floor = default_anonymizers(self.n, self.t_pk, m_x);
        let m = match (self.m, policy) {
            (None, _) => floor,
            (Some(m), AnonymizerPolicy::Strict) => m,
            (Some(m), AnonymizerPolicy::RaiseToFeasible) => m.max(floor),
        };
        Ok(Resolved {
            config: self.build(m)?,
            requested_m: self.m,
        })
    }
}
