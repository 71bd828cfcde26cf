//! Simulator and analysis toolkit for the distributed randomized secure sum.
//!
//! Parties split their private inputs into additively masked packets, send
//! them through anonymizers into a data pool and a random number pool, and a
//! trusted third party recovers the sum with one subtraction. The crate
//! executes that pipeline deterministically, measures how much a coalition of
//! anonymizers can learn, compares against ring-based baselines, and prices
//! runs with an abstract cost model for parameter sweeps.

pub mod assignment;
pub mod baselines;
pub mod config;
pub mod error;
pub mod leakage;
pub mod protocol;
pub mod residue;
pub mod rng;
pub mod simkernel;

pub use assignment::{plan_assignment, AnonymizerId, AssignmentPlan, PlanRoute, PlanViolation};
pub use config::{AnonymizerPolicy, ConfigTemplate, ProtocolConfig};
pub use error::{ConfigError, DrssError, LeakageError};
pub use leakage::{
    attempt_reconstruction, leakage_eq1, leakage_exact, leakage_monte_carlo, CollusionScenario, LeakageEstimate,
};
pub use protocol::{
    build_packets, deliver_and_accumulate, generate_masks, run_drss, split_secret, ttp_finalize, OpCounts, Packet,
    PacketKind, PartyId, PoolState, RunTranscript, SecretInput,
};
pub use residue::Residue;
pub use simkernel::{run_batch, simulate_makespan, sweep_parameter, BatchSummary, CostModel, RunMetrics, SweepSpec};
