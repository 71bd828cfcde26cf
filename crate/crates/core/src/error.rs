use thiserror::Error;

/// A parameter bundle that cannot drive a protocol run.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("n={n}: minimum number of parties are 2")]
    TooFewParties { n: usize },
    #[error("m={m}: minimum number of anonymizers are 4")]
    TooFewAnonymizers { m: usize },
    #[error("t_pk={t_pk}: packets per party minimum 3")]
    TooFewPackets { t_pk: usize },
    #[error("{name} must be positive")]
    Zero { name: &'static str },
    #[error(
        "m={m} < 2*t_pk={}: one party's packets cannot go to distinct anonymizers",
        2 * t_pk
    )]
    NotEnoughForDistinct { m: usize, t_pk: usize },
    #[error(
        "m={m} with m_x={m_x} accepts {} packets but n*2*t_pk={required} must be placed (need m >= {})",
        m * m_x,
        required.div_ceil(*m_x)
    )]
    InsufficientCapacity { m: usize, m_x: usize, required: usize },
    #[error("{0}")]
    Invalid(String),
}

impl ConfigError {
    /// Parameters are individually well formed but no assignment plan exists.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            ConfigError::NotEnoughForDistinct { .. } | ConfigError::InsufficientCapacity { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DrssError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("expected {expected} segments and masks, got {segments} segments and {masks} masks")]
    LengthMismatch {
        expected: usize,
        segments: usize,
        masks: usize,
    },
    #[error("expected one input per party ({expected}), got {got}")]
    InputCount { expected: usize, got: usize },
    #[error("party id {party} is out of range or repeated")]
    BadParty { party: usize },
    #[error("packet ({party}, {index}, {kind}) has no anonymizer in the plan")]
    UnassignedPacket {
        party: usize,
        index: usize,
        kind: &'static str,
    },
    #[error("pools saw {seen} packets, expected {expected}")]
    ProtocolIncomplete { seen: usize, expected: usize },
    #[error("reconstruction returned a value different from the true input of party {party}")]
    UnsoundReconstruction { party: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LeakageError {
    #[error("colluder count l={l} exceeds anonymizer count m={m}")]
    TooManyColluders { l: usize, m: usize },
    #[error("anonymizer count must be positive")]
    NoAnonymizers,
    #[error("randomization factor k must be positive")]
    ZeroK,
    #[error("colluder id {id} is outside [0, {m})")]
    ColluderOutOfRange { id: usize, m: usize },
    #[error("trials must be positive")]
    NoTrials,
    #[error(transparent)]
    Protocol(#[from] DrssError),
}
