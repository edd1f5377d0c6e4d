use std::f64::consts::PI;

use proptest::prelude::*;
use qkd_core::qrl::{
    decode, encode, qrl_keygen, qrl_v1_learn, qrl_v2_learn, reward, LearnerConfig, QrlVersion,
};
use qkd_core::rng::generator;
use rand::Rng;

/// Best decoding angle on a dense grid, by brute force.
fn grid_oracle(theta1: f64) -> f64 {
    let received = encode(0, theta1, None);
    (0..=20_000)
        .map(|i| PI * i as f64 / 20_000.0)
        .map(|t| {
            let d = decode(&received, t).probabilities();
            (t, reward(d.p(0), d.p(1)).unwrap())
        })
        .fold(
            (0.0, f64::NEG_INFINITY),
            |b, x| if x.1 > b.1 { x } else { b },
        )
        .0
}

#[test]
fn bisection_converges_for_random_phases() {
    let cfg = LearnerConfig::for_version(QrlVersion::V1);
    let mut rng = generator(11);
    for trial in 0..100 {
        let theta1 = rng.random_range(0.0..=PI);
        let bit = u8::from(rng.random::<bool>());
        let r = qrl_v1_learn(bit, theta1, None, &cfg, trial).unwrap();
        for (k, rec) in r.episode_log.records.iter().enumerate() {
            let width = rec.n3 - rec.n1;
            assert!((width - PI / 2f64.powi(k as i32 + 1)).abs() < 1e-12);
        }
        assert_eq!(
            r.interval.width(),
            PI / 2f64.powi(r.episode_log.records.len() as i32)
        );
        assert!(
            (r.theta2_final - theta1).abs() < 0.01,
            "{theta1} {}",
            r.theta2_final
        );
        assert!((r.theta2_final - grid_oracle(theta1)).abs() < 0.01);
        assert_eq!(r.decoded_bit, bit);
    }
}

#[test]
fn bracket_search_finds_phase_in_most_trials() {
    let cfg = LearnerConfig::for_version(QrlVersion::V2);
    let mut rng = generator(12);
    let hits = (0..100)
        .filter(|&trial| {
            let theta1 = rng.random_range(0.0..=PI);
            let r = qrl_v2_learn(0, theta1, None, &cfg, trial).unwrap();
            (r.theta2_final - theta1).abs() < 0.1
        })
        .count();
    assert!(hits >= 95, "{hits}");
}

#[test]
fn noiseless_keygen_agrees() {
    let cfg = LearnerConfig {
        final_readout: qkd_core::state::Readout::Exact,
        ..LearnerConfig::for_version(QrlVersion::V1)
    };
    let t = qrl_keygen(QrlVersion::V1, 100, None, &cfg, 5).unwrap();
    assert_eq!(t.alice_bits, t.bob_bits);
    assert_eq!(t, qrl_keygen(QrlVersion::V1, 100, None, &cfg, 5).unwrap());
}

proptest! {
    #[test]
    fn reward_bounds(t1 in 0.0f64..PI, t2 in 0.0f64..PI) {
        let d = decode(&encode(1, t1, None), t2).probabilities();
        let r = reward(d.p(0), d.p(1)).unwrap();
        prop_assert!((0.5..=1.0 + 1e-12).contains(&r));
        let delta = t1 - t2;
        let at_peak = delta.abs() < 1e-9 || (delta.abs() - PI).abs() < 1e-9;
        prop_assert_eq!((r - 1.0).abs() < 1e-12, at_peak || (1.0 - delta.cos().abs()) < 1e-12);
    }

    #[test]
    fn intervals_stay_ordered(theta1 in 0.0f64..=PI, seed in any::<u64>(), v2 in any::<bool>()) {
        let version = if v2 { QrlVersion::V2 } else { QrlVersion::V1 };
        let cfg = LearnerConfig::for_version(version);
        let r = if v2 {
            qrl_v2_learn(1, theta1, None, &cfg, seed).unwrap()
        } else {
            qrl_v1_learn(1, theta1, None, &cfg, seed).unwrap()
        };
        let mut last = f64::INFINITY;
        for rec in &r.episode_log.records {
            prop_assert!(rec.n1 <= rec.n2 && rec.n2 <= rec.n3);
            prop_assert!(rec.n3 - rec.n1 <= last);
            prop_assert!((rec.delta_theta - (theta1 - rec.theta2)).abs() < 1e-12);
            last = rec.n3 - rec.n1;
        }
    }
}
