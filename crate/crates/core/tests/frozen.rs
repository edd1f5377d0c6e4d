//! Pinned outputs for fixed seeds. A change here means the random stream or the physics moved.

use qkd_core::baseline::{b92_run, bb84_run, B92Mode};
use qkd_core::metrics::evaluate;
use qkd_core::noise::{build_channel, ChannelKind};
use qkd_core::qrl::{qrl_v1_learn, qrl_v2_learn, LearnerConfig, QrlVersion};
use qkd_core::state::{sample_shots, DensityMatrix, Readout};

#[test]
fn bb84_noiseless_seed_42() {
    let t = bb84_run(64, None, false, Readout::default(), 42).unwrap();
    assert_eq!(
        t.alice_bits.to_string(),
        "0101110010011011010101101110100110100100100110110111111001110010"
    );
    assert_eq!(
        t.sifted_key.to_string(),
        "011000101010111100100011011011100110"
    );
}

#[test]
fn bb84_depolarized_with_eve_seed_7() {
    let dep = build_channel(ChannelKind::Depolarizing, 0.3).unwrap();
    let t = bb84_run(200, Some(&dep), true, Readout::default(), 7).unwrap();
    let m = evaluate(&t).unwrap();
    assert_eq!(m.qber_sifted, Some(23.0 / 88.0));
    assert_eq!(m.qber_all, 0.365);
    assert_eq!(m.sift_fraction, 0.44);
}

#[test]
fn b92_standard_seed_11() {
    let t = b92_run(200, None, Readout::default(), 11, B92Mode::Standard).unwrap();
    let m = evaluate(&t).unwrap();
    assert_eq!(t.sifted_key.len(), 48);
    assert_eq!(m.qber_sifted, Some(0.0));
    assert_eq!(m.raw.scalars.accuracy, 0.59);
}

#[test]
fn learners_seed_5() {
    let r = qrl_v1_learn(1, 1.0, None, &LearnerConfig::for_version(QrlVersion::V1), 5).unwrap();
    assert_eq!(r.episode_log.records.len(), 9);
    assert_eq!(r.decoded_bit, 1);
    assert!((r.theta2_final - 1.000_155_473_701_438_2).abs() < 1e-12);

    let r = qrl_v2_learn(0, 2.5, None, &LearnerConfig::for_version(QrlVersion::V2), 5).unwrap();
    assert_eq!(r.episode_log.records.len(), 9);
    assert_eq!(r.decoded_bit, 0);
    assert!((r.theta2_final - 2.500_047_774_035_573_8).abs() < 1e-12);
}

#[test]
fn shots_on_mixed_state_seed_3() {
    let rho = DensityMatrix::maximally_mixed(1).unwrap();
    let s = sample_shots(&rho.probabilities(), 1000, 3).unwrap();
    assert_eq!(s.counts, vec![526, 474]);
}
