//! Collusion leakage.
//!
//! A coalition of `l` out of `m` anonymizers learns a party's input exactly
//! when it holds all `2k` of that party's packets (`k = t_pk`). Missing even
//! one packet leaves the remainder uniformly distributed over Z_{2^64}.
//!
//! Two closed forms are offered. [`leakage_eq1`] treats the `2k` placements
//! as independent draws, `(l/m)^(2k)`. [`leakage_exact`] accounts for the
//! fact that a party's packets go to distinct anonymizers, giving the
//! hypergeometric `C(l, 2k) / C(m, 2k)`. The former bounds the latter from
//! above.

use std::collections::BTreeSet;

use num_rational::Ratio;
use rand::Rng;
use serde::Serialize;

use crate::assignment::AnonymizerId;
use crate::config::ProtocolConfig;
use crate::error::{DrssError, LeakageError};
use crate::protocol::{run_drss, PacketKind, PartyId, RunTranscript, SecretInput};
use crate::residue::Residue;
use crate::rng::{derive_seed, stream, StreamTag};

fn check_domain(l: usize, m: usize, k: usize) -> Result<(), LeakageError> {
    if m == 0 {
        return Err(LeakageError::NoAnonymizers);
    }
    if k == 0 {
        return Err(LeakageError::ZeroK);
    }
    if l > m {
        return Err(LeakageError::TooManyColluders { l, m });
    }
    Ok(())
}

/// `(l/m)^(2k)` as an exact fraction, `None` if it does not fit in `u128`.
pub fn eq1_ratio(l: usize, m: usize, k: usize) -> Result<Option<Ratio<u128>>, LeakageError> {
    check_domain(l, m, k)?;
    let e = u32::try_from(2 * k).ok();
    let num = e.and_then(|e| (l as u128).checked_pow(e));
    let den = e.and_then(|e| (m as u128).checked_pow(e));
    Ok(num.zip(den).map(|(n, d)| Ratio::new(n, d)))
}

/// `prod_{j<2k} (l-j)/(m-j)` as an exact fraction, `None` on overflow.
pub fn exact_ratio(l: usize, m: usize, k: usize) -> Result<Option<Ratio<u128>>, LeakageError> {
    check_domain(l, m, k)?;
    if l < 2 * k {
        return Ok(Some(Ratio::from_integer(0)));
    }
    let mut acc = Some(Ratio::from_integer(1u128));
    for j in 0..2 * k {
        // Reduce each step so the running fraction stays small.
        acc = acc.and_then(|a| {
            let f = Ratio::new((l - j) as u128, (m - j) as u128);
            let num = a.numer().checked_mul(*f.numer())?;
            let den = a.denom().checked_mul(*f.denom())?;
            Some(Ratio::new(num, den))
        });
    }
    Ok(acc)
}

const F64_EXACT: u128 = 1 << 53;

fn ratio_to_f64(r: &Ratio<u128>) -> f64 {
    let (n, d) = (*r.numer(), *r.denom());
    if n <= F64_EXACT && d <= F64_EXACT {
        n as f64 / d as f64
    } else {
        // Scale down to keep precision.
        let shift = (128 - d.leading_zeros()).saturating_sub(53);
        (n >> shift) as f64 / (d >> shift) as f64
    }
}

/// Compromise probability with independent packet placement, `(l/m)^(2k)`.
pub fn leakage_eq1(l: usize, m: usize, k: usize) -> Result<f64, LeakageError> {
    Ok(match eq1_ratio(l, m, k)? {
        Some(r) => ratio_to_f64(&r),
        None => (l as f64 / m as f64).powf(2.0 * k as f64),
    })
}

/// Compromise probability when a party's `2k` packets go to distinct
/// anonymizers, `C(l, 2k) / C(m, 2k)`. Exactly zero for `l < 2k`.
pub fn leakage_exact(l: usize, m: usize, k: usize) -> Result<f64, LeakageError> {
    if let Some(r) = exact_ratio(l, m, k)? {
        return Ok(ratio_to_f64(&r));
    }
    Ok((0..2 * k).map(|j| (l - j) as f64 / (m - j) as f64).product())
}

/// A coalition of anonymizers observing a protocol configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CollusionScenario {
    colluders: BTreeSet<AnonymizerId>,
    config: ProtocolConfig,
}

impl CollusionScenario {
    pub fn new(
        config: ProtocolConfig,
        colluders: impl IntoIterator<Item = AnonymizerId>,
    ) -> Result<Self, LeakageError> {
        let colluders: BTreeSet<_> = colluders.into_iter().collect();
        if let Some(&id) = colluders.iter().find(|&&id| id >= config.m()) {
            return Err(LeakageError::ColluderOutOfRange { id, m: config.m() });
        }
        Ok(CollusionScenario { colluders, config })
    }

    /// The first `l` anonymizers collude. By symmetry of the assignment any
    /// set of the same size behaves identically.
    pub fn first(config: ProtocolConfig, l: usize) -> Result<Self, LeakageError> {
        if l > config.m() {
            return Err(LeakageError::TooManyColluders { l, m: config.m() });
        }
        Self::new(config, 0..l)
    }

    pub fn colluders(&self) -> &BTreeSet<AnonymizerId> {
        &self.colluders
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn l(&self) -> usize {
        self.colluders.len()
    }
}

/// Analytic and empirical compromise probabilities for one scenario.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeakageEstimate {
    pub l: usize,
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub p_eq1: f64,
    pub p_exact: f64,
    pub p_empirical: f64,
    pub compromised: u64,
    pub trials: u64,
    pub std_error: f64,
}

/// Tries to recover `target`'s input from the packets the colluders hold.
///
/// Returns the input only if every one of the target's packets reached a
/// colluder; otherwise nothing can be inferred.
pub fn attempt_reconstruction(
    transcript: &RunTranscript,
    colluders: &BTreeSet<AnonymizerId>,
    target: PartyId,
) -> Option<Residue> {
    let mut held = 0;
    let mut value = Residue::ZERO;
    for (packet, anonymizer) in transcript.packets_of(target) {
        if !anonymizer.is_some_and(|a| colluders.contains(&a)) {
            return None;
        }
        held += 1;
        match packet.kind {
            PacketKind::MaskedData => value += packet.payload,
            PacketKind::Mask => value -= packet.payload,
        }
    }
    (held == transcript.config.packets_per_party()).then_some(value)
}

/// Outcome of attacking every party in one run.
fn compromised_in_run(scenario: &CollusionScenario, trial_seed: u64) -> Result<u64, DrssError> {
    let config = scenario.config.with_seed(trial_seed);
    let mut rng = stream(trial_seed, StreamTag::Inputs, 0);
    let inputs: Vec<SecretInput> = (0..config.n())
        .map(|i| SecretInput::new(i, rng.random::<u64>()))
        .collect();
    let transcript = run_drss(&config, &inputs)?;
    let mut hits = 0;
    for input in &inputs {
        if let Some(v) = attempt_reconstruction(&transcript, &scenario.colluders, input.party_id) {
            if v != input.value {
                return Err(DrssError::UnsoundReconstruction { party: input.party_id });
            }
            hits += 1;
        }
    }
    Ok(hits)
}

/// Estimates the per-party compromise probability over `trials` full runs.
///
/// Trial `i` uses a seed derived from `(seed, i)`, so the estimate is
/// reproducible and independent of evaluation order.
pub fn leakage_monte_carlo(
    scenario: &CollusionScenario,
    trials: u64,
    seed: u64,
) -> Result<LeakageEstimate, LeakageError> {
    if trials == 0 {
        return Err(LeakageError::NoTrials);
    }
    let (l, m, k, n) = (
        scenario.l(),
        scenario.config.m(),
        scenario.config.t_pk(),
        scenario.config.n(),
    );
    let mut compromised = 0u64;
    for i in 0..trials {
        compromised += compromised_in_run(scenario, derive_seed(seed, StreamTag::Trial, i))?;
    }
    let samples = (trials * n as u64) as f64;
    let p = compromised as f64 / samples;
    Ok(LeakageEstimate {
        l,
        m,
        k,
        n,
        p_eq1: leakage_eq1(l, m, k)?,
        p_exact: leakage_exact(l, m, k)?,
        p_empirical: p,
        compromised,
        trials,
        std_error: (p * (1.0 - p) / samples).sqrt(),
    })
}
