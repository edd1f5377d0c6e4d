use qkd_core::baseline::{b92_run, bb84_run, estimate_qber, B92Mode, DEFAULT_THRESHOLD};
use qkd_core::noise::{build_channel, ChannelKind};
use qkd_core::state::Readout;
use qkd_core::transcript::Basis;

fn sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn bb84_sifting_and_noiseless_agreement() {
    let n = 10_000;
    let t = bb84_run(n, None, false, Readout::default(), 1).unwrap();
    assert!((t.sift_fraction() - 0.5).abs() < 3.0 * sigma(0.5, n));
    assert_eq!(t.sifted_key, t.sifted_alice());
    let r = estimate_qber(&t, 1.0, DEFAULT_THRESHOLD, 2).unwrap();
    assert_eq!(r.qber, 0.0);
    assert!(!r.aborted);
}

#[test]
fn intercept_resend_costs_a_quarter() {
    let t = bb84_run(10_000, None, true, Readout::default(), 3).unwrap();
    let r = estimate_qber(&t, 1.0, DEFAULT_THRESHOLD, 4).unwrap();
    assert!((r.qber - 0.25).abs() < 0.03, "{}", r.qber);
    assert!(r.aborted);
    let partial = estimate_qber(&t, 0.2, DEFAULT_THRESHOLD, 4).unwrap();
    assert!(partial.aborted);
}

#[test]
fn b92_standard_conclusive_rate() {
    let t = b92_run(10_000, None, Readout::default(), 5, B92Mode::Standard).unwrap();
    assert!(
        (t.sift_fraction() - 0.25).abs() < 0.02,
        "{}",
        t.sift_fraction()
    );
    assert_eq!(t.sifted_key, t.sifted_alice());
    // a wrong-basis measurement is inconclusive half the time
    let bases = t.bob_bases.as_ref().unwrap();
    let (mut wrong, mut inconclusive) = (0, 0);
    for ((&bit, basis), &conclusive) in t.alice_bits.iter().zip(bases).zip(&t.conclusive_mask) {
        if (bit == 1) != (*basis == Basis::Diagonal) {
            wrong += 1;
            inconclusive += usize::from(!conclusive);
        }
    }
    let frac = inconclusive as f64 / wrong as f64;
    assert!((frac - 0.5).abs() < 0.03, "{frac}");
}

#[test]
fn full_bit_flip_errors_every_rectilinear_match() {
    let ch = build_channel(ChannelKind::BitFlip, 1.0).unwrap();
    let t = bb84_run(4000, Some(&ch), false, Readout::default(), 6).unwrap();
    let a = t.alice_bases.as_ref().unwrap();
    let b = t.bob_bases.as_ref().unwrap();
    let idx: Vec<usize> = (0..t.len())
        .filter(|&i| a[i] == Basis::Rectilinear && b[i] == Basis::Rectilinear)
        .collect();
    let errors = idx
        .iter()
        .filter(|&&i| t.alice_bits[i] != t.bob_bits[i])
        .count();
    assert_eq!(errors, idx.len());
}

#[test]
fn transcripts_are_deterministic() {
    let ch = build_channel(ChannelKind::Depolarizing, 0.3).unwrap();
    let a = bb84_run(500, Some(&ch), true, Readout::Sampled { shots: 16 }, 77).unwrap();
    assert_eq!(
        a,
        bb84_run(500, Some(&ch), true, Readout::Sampled { shots: 16 }, 77).unwrap()
    );
    let a = b92_run(
        500,
        Some(&ch),
        Readout::Sampled { shots: 16 },
        77,
        B92Mode::Paper,
    )
    .unwrap();
    assert_eq!(
        a,
        b92_run(
            500,
            Some(&ch),
            Readout::Sampled { shots: 16 },
            77,
            B92Mode::Paper
        )
        .unwrap()
    );
}
