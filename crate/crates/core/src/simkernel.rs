//! Deterministic cost model, batch runner and parameter sweeps.
//!
//! Wall-clock timings depend on the machine, so every run is also priced in
//! abstract cost units. The model assumes parties work concurrently, then
//! anonymizers forward concurrently, then the TTP performs its single
//! operation:
//!
//! ```text
//! party phase      = t_pk * c_split + t_pk * c_mask + 2 * t_pk * c_send
//! anonymizer phase = max_load * (c_fwd + c_pool)
//! makespan         = party phase + anonymizer phase + c_ttp
//! ```
//!
//! The best case is a perfectly balanced plan, `max_load = ceil(2 n t_pk / m)`;
//! the worst case is an anonymizer saturated at `max_load = min(m_x, n)`.

use std::time::Instant;

use serde::Serialize;

use crate::config::{AnonymizerPolicy, ConfigTemplate, ProtocolConfig};
use crate::error::{ConfigError, DrssError};
use crate::protocol::{run_drss, synthetic_inputs, RunTranscript};
use crate::rng::{derive_seed, StreamTag};

/// Batch size used when none is given.
pub const DEFAULT_BATCH_SIZE: usize = 500;

/// Synthetic inputs are uniform below `2^INPUT_BITS`.
pub const INPUT_BITS: u32 = 32;

/// Cost units charged per unit of work.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostModel {
    pub c_split: f64,
    pub c_mask: f64,
    pub c_send: f64,
    pub c_fwd: f64,
    pub c_pool: f64,
    pub c_ttp: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            c_split: 1.0,
            c_mask: 1.0,
            c_send: 1.0,
            c_fwd: 1.0,
            c_pool: 1.0,
            c_ttp: 1.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("c_split", self.c_split),
            ("c_mask", self.c_mask),
            ("c_send", self.c_send),
            ("c_fwd", self.c_fwd),
            ("c_pool", self.c_pool),
            ("c_ttp", self.c_ttp),
        ];
        match fields.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            Some((name, v)) => Err(ConfigError::Invalid(format!(
                "cost coefficient {name}={v} must be positive"
            ))),
            None => Ok(()),
        }
    }

    pub fn party_phase(&self, t_pk: usize) -> f64 {
        let t = t_pk as f64;
        t * self.c_split + t * self.c_mask + 2.0 * t * self.c_send
    }

    pub fn anonymizer_phase(&self, max_load: usize) -> f64 {
        max_load as f64 * (self.c_fwd + self.c_pool)
    }

    pub fn makespan(&self, t_pk: usize, max_load: usize) -> f64 {
        self.party_phase(t_pk) + self.anonymizer_phase(max_load) + self.c_ttp
    }

    /// Makespan with a perfectly balanced plan.
    pub fn best_case(&self, config: &ProtocolConfig) -> f64 {
        self.makespan(config.t_pk(), config.total_packets().div_ceil(config.m()))
    }

    /// Makespan with one anonymizer at its capacity limit.
    pub fn worst_case(&self, config: &ProtocolConfig) -> f64 {
        self.makespan(config.t_pk(), config.m_x().min(config.n()))
    }
}

/// Measurements of a single run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub messages_total: usize,
    pub max_load: usize,
    pub party_phase: f64,
    pub anonymizer_phase: f64,
    pub ttp_cost: f64,
    pub makespan: f64,
    pub ttp_ops: usize,
    /// Measured; never compared.
    pub wall_time: f64,
}

/// Prices a completed run.
pub fn simulate_makespan(transcript: &RunTranscript, model: &CostModel) -> RunMetrics {
    let config = &transcript.config;
    let max_load = transcript.plan.max_load(config.m());
    let party_phase = model.party_phase(config.t_pk());
    let anonymizer_phase = model.anonymizer_phase(max_load);
    let counts = &transcript.op_counts;
    RunMetrics {
        seed: config.seed(),
        messages_total: counts.party_sends + counts.anonymizer_forwards,
        max_load,
        party_phase,
        anonymizer_phase,
        ttp_cost: model.c_ttp * counts.ttp_ops as f64,
        makespan: party_phase + anonymizer_phase + model.c_ttp * counts.ttp_ops as f64,
        ttp_ops: counts.ttp_ops,
        wall_time: 0.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Stat {
        let (sum, count) = values.clone().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        Stat {
            mean: if count == 0 { 0.0 } else { sum / count as f64 },
            min: values.clone().fold(f64::INFINITY, f64::min),
            max: values.fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Aggregate of one batch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchSummary {
    pub config: ProtocolConfig,
    pub runs: usize,
    pub mean_makespan: f64,
    pub makespan: Stat,
    pub max_load: Stat,
    pub messages_total: Stat,
    pub ttp_ops: Stat,
    pub mean_wall_time: f64,
    pub wall_time: Stat,
    /// Every run reproduced the exact sum.
    pub all_correct: bool,
}

/// A batch together with its per-run metrics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Batch {
    pub summary: BatchSummary,
    pub records: Vec<RunMetrics>,
}

/// Runs `batch_size` independent protocol executions and prices each.
///
/// Run `i` uses the seed derived from `(config.seed, i)`; its inputs come
/// from that seed too.
pub fn execute_batch(config: &ProtocolConfig, batch_size: usize, model: &CostModel) -> Result<Batch, DrssError> {
    if batch_size == 0 {
        return Err(ConfigError::Zero { name: "batch_size" }.into());
    }
    model.validate()?;
    let mut records = Vec::with_capacity(batch_size);
    let mut all_correct = true;
    for i in 0..batch_size {
        let run_config = config.with_seed(derive_seed(config.seed(), StreamTag::BatchRun, i as u64));
        let inputs = synthetic_inputs(run_config.n(), INPUT_BITS, run_config.seed());
        let started = Instant::now();
        let transcript = run_drss(&run_config, &inputs)?;
        let wall_time = started.elapsed().as_secs_f64();
        all_correct &= transcript.ttp_result == transcript.expected_sum();
        records.push(RunMetrics {
            wall_time,
            ..simulate_makespan(&transcript, model)
        });
    }
    let stat = |f: fn(&RunMetrics) -> f64| Stat::of(records.iter().map(f));
    let makespan = stat(|r| r.makespan);
    let wall_time = stat(|r| r.wall_time);
    let summary = BatchSummary {
        config: config.clone(),
        runs: records.len(),
        mean_makespan: makespan.mean,
        makespan,
        max_load: stat(|r| r.max_load as f64),
        messages_total: stat(|r| r.messages_total as f64),
        ttp_ops: stat(|r| r.ttp_ops as f64),
        mean_wall_time: wall_time.mean,
        wall_time,
        all_correct,
    };
    Ok(Batch { summary, records })
}

pub fn run_batch(config: &ProtocolConfig, batch_size: usize, model: &CostModel) -> Result<BatchSummary, DrssError> {
    execute_batch(config, batch_size, model).map(|b| b.summary)
}

/// Parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepParam {
    Parties,
    PacketsPerParty,
    Anonymizers,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Parties => "n",
            SweepParam::PacketsPerParty => "t_pk",
            SweepParam::Anonymizers => "m",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "n" => Some(SweepParam::Parties),
            "t_pk" => Some(SweepParam::PacketsPerParty),
            "m" => Some(SweepParam::Anonymizers),
            _ => None,
        }
    }
}

/// A one-dimensional sweep over a base template.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub base: ConfigTemplate,
    pub param: SweepParam,
    pub values: Vec<usize>,
    /// What to do when a point's requested `m` is infeasible.
    pub policy: AnonymizerPolicy,
    pub batch_size: usize,
}

impl SweepSpec {
    /// The template for one value of the swept parameter.
    pub fn point(&self, value: usize) -> ConfigTemplate {
        let mut t = self.base.clone();
        match self.param {
            SweepParam::Parties => t.n = value,
            SweepParam::PacketsPerParty => t.t_pk = value,
            SweepParam::Anonymizers => t.m = Some(value),
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: usize,
    /// `m` asked for, when it differs from the `m` actually used.
    pub requested_m: Option<usize>,
    pub summary: BatchSummary,
}

impl SweepPoint {
    pub fn m_adjusted(&self) -> bool {
        self.requested_m.is_some()
    }
}

/// Infeasible sweep point.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("sweep point {param}={value}: {source}")]
pub struct SweepError {
    pub param: &'static str,
    pub value: usize,
    #[source]
    pub source: DrssError,
}

/// Runs one batch per swept value, in order. Every point is resolved before
/// any batch runs, so an infeasible point aborts the sweep without output.
pub fn sweep_parameter(spec: &SweepSpec, model: &CostModel) -> Result<Vec<SweepPoint>, SweepError> {
    let fail = |value, source| SweepError {
        param: spec.param.name(),
        value,
        source,
    };
    let resolved = spec
        .values
        .iter()
        .map(|&v| {
            spec.point(v)
                .resolve_with(spec.policy)
                .map(|r| (v, r))
                .map_err(|e| fail(v, e.into()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    resolved
        .into_iter()
        .map(|(value, r)| {
            let summary = run_batch(&r.config, spec.batch_size, model).map_err(|e| fail(value, e))?;
            let requested_m = if r.m_adjusted() { r.requested_m } else { None };
            Ok(SweepPoint {
                value,
                requested_m,
                summary,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::inputs_from_values;

    #[test]
    fn perfect_matching_has_unit_load() {
        let config = ProtocolConfig::relaxed(1, 6, 3, 6, 4).unwrap();
        let t = run_drss(&config, &inputs_from_values([9u64])).unwrap();
        let metrics = simulate_makespan(&t, &CostModel::default());
        assert_eq!(metrics.max_load, 1);
        assert_eq!(metrics.messages_total, 12);
        // 3 + 3 + 6 party work, 2 forwarding, 1 finalize.
        assert_eq!(metrics.makespan, 15.0);
    }

    #[test]
    fn more_parties_cost_more() {
        let model = CostModel::default();
        let make = |n| {
            let c = ConfigTemplate::new(n, 3, 1).with_m(6).with_m_x(12).resolve().unwrap();
            run_batch(&c, 20, &model).unwrap().mean_makespan
        };
        assert!(make(8) > make(2));
    }

    #[test]
    fn more_anonymizers_never_cost_more() {
        let model = CostModel::default();
        let make = |m| {
            let c = ConfigTemplate::new(3, 3, 1)
                .with_m(m)
                .resolve_with(AnonymizerPolicy::RaiseToFeasible)
                .unwrap()
                .config;
            run_batch(&c, 50, &model).unwrap().mean_makespan
        };
        assert!(make(8) <= make(5));
    }

    #[test]
    fn batch_of_one_is_the_run() {
        let config = ProtocolConfig::new(4, 8, 3, 6, 77).unwrap();
        let batch = execute_batch(&config, 1, &CostModel::default()).unwrap();
        let r = batch.records[0];
        assert_eq!(batch.summary.runs, 1);
        assert_eq!(batch.summary.mean_makespan, r.makespan);
        assert_eq!(batch.summary.makespan.min, r.makespan);
        assert_eq!(batch.summary.max_load.mean, r.max_load as f64);
        assert!(batch.summary.all_correct);
    }

    #[test]
    fn batch_is_deterministic() {
        let config = ProtocolConfig::new(5, 10, 3, 6, 3).unwrap();
        let a = execute_batch(&config, 30, &CostModel::default()).unwrap();
        let b = execute_batch(&config, 30, &CostModel::default()).unwrap();
        assert_eq!(a.summary.mean_makespan, b.summary.mean_makespan);
        let strip = |b: &Batch| {
            b.records
                .iter()
                .map(|r| RunMetrics { wall_time: 0.0, ..*r })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn batch_rejects_bad_inputs() {
        let config = ProtocolConfig::new(5, 10, 3, 6, 3).unwrap();
        assert!(run_batch(&config, 0, &CostModel::default()).is_err());
        let model = CostModel {
            c_fwd: 0.0,
            ..CostModel::default()
        };
        assert!(run_batch(&config, 1, &model).is_err());
    }

    #[test]
    fn best_and_worst_bound_observed() {
        let model = CostModel::default();
        let config = ProtocolConfig::new(7, 8, 3, 12, 0).unwrap();
        let s = run_batch(&config, 100, &model).unwrap();
        assert!(model.best_case(&config) <= s.makespan.min);
        assert!(s.makespan.max <= model.worst_case(&config));
    }

    #[test]
    fn strict_sweep_aborts_on_infeasible_point() {
        let spec = SweepSpec {
            base: ConfigTemplate::new(3, 3, 0),
            param: SweepParam::Anonymizers,
            values: vec![6, 5],
            policy: AnonymizerPolicy::Strict,
            batch_size: 2,
        };
        let e = sweep_parameter(&spec, &CostModel::default()).unwrap_err();
        assert_eq!(e.value, 5);
        assert!(e.to_string().contains("m=5 < 2*t_pk=6"), "{e}");
    }

    #[test]
    fn raising_sweep_flags_adjusted_points() {
        let spec = SweepSpec {
            base: ConfigTemplate::new(3, 3, 0),
            param: SweepParam::Anonymizers,
            values: vec![5, 6],
            policy: AnonymizerPolicy::RaiseToFeasible,
            batch_size: 2,
        };
        let points = sweep_parameter(&spec, &CostModel::default()).unwrap();
        assert_eq!(points[0].requested_m, Some(5));
        assert_eq!(points[0].summary.config.m(), 6);
        assert!(!points[1].m_adjusted());
    }
}
