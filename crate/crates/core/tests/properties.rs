use std::collections::BTreeSet;

use drss_core::config::{default_anonymizers, ConfigTemplate};
use drss_core::leakage::{attempt_reconstruction, leakage_eq1, leakage_exact};
use drss_core::protocol::{party_mask_stream, run_drss, SecretInput};
use drss_core::{plan_assignment, ProtocolConfig, Residue};
use proptest::prelude::*;

/// Feasible configurations: m at or above the smallest feasible value.
fn feasible_config() -> impl Strategy<Value = ProtocolConfig> {
    (2usize..=20, 3usize..=6, 1usize..=40, 0usize..=6, any::<u64>()).prop_map(|(n, t_pk, m_x, extra, seed)| {
        let m = default_anonymizers(n, t_pk, m_x) + extra;
        ProtocolConfig::new(n, m, t_pk, m_x, seed).unwrap()
    })
}

fn with_inputs() -> impl Strategy<Value = (ProtocolConfig, Vec<u64>)> {
    feasible_config().prop_flat_map(|c| {
        let n = c.n();
        (Just(c), proptest::collection::vec(any::<u64>(), n))
    })
}

fn to_inputs(values: &[u64]) -> Vec<SecretInput> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| SecretInput::new(i, v))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ttp_result_is_the_modular_sum((config, values) in with_inputs()) {
        let t = run_drss(&config, &to_inputs(&values)).unwrap();
        let expected = (values.iter().map(|&v| v as u128).sum::<u128>() % (1u128 << 64)) as u64;
        prop_assert_eq!(t.ttp_result, Residue(expected));
        prop_assert_eq!(t.op_counts.ttp_ops, 1);
        prop_assert_eq!(t.pools.packets_seen, config.total_packets());
        prop_assert_eq!(t.op_counts.anonymizer_forwards, config.total_packets());
    }

    #[test]
    fn plans_respect_constraints(config in feasible_config()) {
        let plan = plan_assignment(&config, &mut drss_core::rng::stream(config.seed(), drss_core::rng::StreamTag::Plan, 0)).unwrap();
        prop_assert!(plan.validate(&config).is_ok());
    }

    #[test]
    fn transcript_is_deterministic((config, values) in with_inputs()) {
        let a = run_drss(&config, &to_inputs(&values)).unwrap();
        let b = run_drss(&config, &to_inputs(&values)).unwrap();
        prop_assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
    }

    #[test]
    fn reconstruction_iff_all_packets_held(
        (config, values) in with_inputs(),
        colluder_bits in any::<u64>(),
    ) {
        let t = run_drss(&config, &to_inputs(&values)).unwrap();
        let colluders: BTreeSet<usize> = (0..config.m()).filter(|a| colluder_bits >> (a % 64) & 1 == 1).collect();
        for (party, &value) in values.iter().enumerate() {
            let held = t.plan.party_anonymizers(party).iter().all(|a| colluders.contains(a));
            match attempt_reconstruction(&t, &colluders, party) {
                Some(v) => {
                    prop_assert!(held);
                    prop_assert_eq!(v, Residue(value));
                }
                None => prop_assert!(!held),
            }
        }
    }

    #[test]
    fn exact_never_exceeds_eq1(m in 1usize..=40, k in 1usize..=10, frac in 0.0f64..=1.0) {
        let l = ((m as f64) * frac).floor() as usize;
        let exact = leakage_exact(l, m, k).unwrap();
        let eq1 = leakage_eq1(l, m, k).unwrap();
        prop_assert!((0.0..=1.0).contains(&exact));
        prop_assert!(exact <= eq1 + 1e-15);
    }
}

#[test]
fn ttp_work_is_constant_in_n() {
    for n in 2..=20 {
        let config = ConfigTemplate::new(n, 3, n as u64).resolve().unwrap();
        let values: Vec<u64> = (0..n as u64).collect();
        let t = run_drss(&config, &to_inputs(&values)).unwrap();
        assert_eq!(t.op_counts.ttp_ops, 1);
    }
}

/// Masked payloads of two different constants look alike: both have a
/// balanced high bit.
#[test]
fn masked_payload_hides_segment() {
    let samples = 100_000;
    let freq = |d: u64, party| {
        let masks = drss_core::generate_masks(samples, &mut party_mask_stream(99, party));
        masks.iter().filter(|&&r| (Residue(d) + r).high_bit()).count() as f64 / samples as f64
    };
    let a = freq(0, 0);
    let b = freq(u64::MAX / 3, 1);
    assert!((a - b).abs() < 0.01, "{a} vs {b}");
    assert!((a - 0.5).abs() < 0.01);
}
