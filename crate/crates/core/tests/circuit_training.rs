mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use qkd_core::baseline::B92Mode;
use qkd_core::noise::{build_channel, ChannelKind};
use qkd_core::qnn::{
    apply_pqc, loss_mse, mse_gradient, optimize_derivative_free, optimize_gradient, qnn_b92_run,
    qnn_bb84_run, residuals, train, Ansatz, ErrorRule, PqcMode, PqcParams, TrainingConfig,
    TrainingSample,
};
use qkd_core::rng::generator;
use qkd_core::state::{DensityMatrix, Readout};
use rand::Rng;

fn mixed_batch(seed: u64) -> Vec<TrainingSample> {
    let mut rng = generator(seed);
    (0..12)
        .map(|_| {
            let a: [f64; 2] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let b: [f64; 2] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let norm = (a[0] * a[0] + a[1] * a[1] + b[0] * b[0] + b[1] * b[1]).sqrt();
            let amp = [
                nalgebra::Complex::new(a[0] / norm, a[1] / norm),
                nalgebra::Complex::new(b[0] / norm, b[1] / norm),
            ];
            TrainingSample {
                bit: u8::from(rng.random::<bool>()),
                state: DensityMatrix::from_pure(&amp).unwrap(),
                rule: ErrorRule::Direct,
            }
        })
        .collect()
}

#[test]
fn parameter_shift_matches_finite_differences() {
    let ansatz = Ansatz::Zyz { layers: 2 };
    let batch = mixed_batch(1);
    let mut rng = generator(2);
    let loss = |t: &[f64]| {
        let r = residuals(ansatz, t, &batch).unwrap();
        r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64
    };
    for _ in 0..20 {
        let theta: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let (_, g) = mse_gradient(
            &mut |t: &[f64]| residuals(ansatz, t, &batch).unwrap(),
            &theta,
        )
        .unwrap();
        for k in 0..6 {
            let h = 1e-5;
            let mut p = theta.clone();
            let mut m = theta.clone();
            p[k] += h;
            m[k] -= h;
            let fd = (loss(&p) - loss(&m)) / (2.0 * h);
            assert!((g[k] - fd).abs() < 1e-4, "{k}: {} vs {fd}", g[k]);
        }
    }
}

#[test]
fn gradient_vanishes_at_a_minimum() {
    let batch: Vec<TrainingSample> = (0..2u8)
        .map(|bit| TrainingSample {
            bit,
            state: DensityMatrix::basis(1, usize::from(bit)).unwrap(),
            rule: ErrorRule::Direct,
        })
        .collect();
    let (loss, g) = mse_gradient(
        &mut |t: &[f64]| residuals(Ansatz::default(), t, &batch).unwrap(),
        &[0.0, 0.0, 0.0],
    )
    .unwrap();
    assert_eq!(loss, 0.0);
    assert!(g.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-9);
}

#[test]
fn gradient_step_descends() {
    let batch = mixed_batch(3);
    let cfg = TrainingConfig {
        learning_rate: 0.05,
        max_iterations: 1,
        ..TrainingConfig::default()
    };
    let t = optimize_gradient(
        |t: &[f64]| residuals(Ansatz::default(), t, &batch).unwrap(),
        &[0.3, 1.2, 2.0],
        &cfg,
    )
    .unwrap();
    assert_eq!(t.entries.len(), 2);
    assert!(t.entries[1].loss < t.entries[0].loss);
}

#[test]
fn bb84_objective_from_random_start() {
    // sifted BB84 states are |0> and |1>; zero angles decode them perfectly
    let batch: Vec<TrainingSample> = (0..20)
        .map(|i| TrainingSample {
            bit: (i % 2) as u8,
            state: DensityMatrix::basis(1, i % 2).unwrap(),
            rule: ErrorRule::Direct,
        })
        .collect();
    let zero = PqcParams::zeros(Ansatz::default());
    assert_eq!(loss_mse(&zero, &batch).unwrap(), 0.0);
    let cfg = TrainingConfig {
        max_iterations: 50,
        ..TrainingConfig::default()
    };
    let mut rng = generator(4);
    for _ in 0..10 {
        let start: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let t = optimize_derivative_free(
            |x| {
                loss_mse(
                    &PqcParams::new(Ansatz::default(), x.to_vec()).unwrap(),
                    &batch,
                )
                .unwrap()
            },
            &start,
            &cfg,
        )
        .unwrap();
        assert!(t.entries.len() <= 51);
        assert!(t.best_loss < 1e-3, "{start:?} -> {}", t.best_loss);
    }
}

#[test]
fn training_is_reproducible() {
    let batch = mixed_batch(5);
    let start = PqcParams::new(Ansatz::default(), vec![1.0, 2.0, 3.0]).unwrap();
    for optimizer in [
        qkd_core::qnn::OptimizerKind::DerivativeFree,
        qkd_core::qnn::OptimizerKind::GradientDescent,
    ] {
        let cfg = TrainingConfig {
            optimizer,
            ..TrainingConfig::default()
        };
        assert_eq!(
            train(&start, &batch, &cfg).unwrap(),
            train(&start, &batch, &cfg).unwrap()
        );
    }
}

#[test]
fn full_flip_is_not_recoverable_after_decoding() {
    // the circuit sits after Bob's basis choice, so one unitary cannot undo an
    // X that acts before a random Hadamard
    let ch = build_channel(ChannelKind::BitFlip, 1.0).unwrap();
    let cfg = TrainingConfig {
        samples: 3,
        key_bits: 60,
        ..TrainingConfig::default()
    };
    let run = qnn_bb84_run(&PqcMode::Train, &cfg, Some(&ch), Readout::default()).unwrap();
    let acc = run.summary.key.accuracy.mean;
    assert!((0.3..=0.7).contains(&acc), "{acc}");
}

#[test]
fn paper_mode_b92_sits_near_chance() {
    let cfg = TrainingConfig {
        samples: 4,
        ..TrainingConfig::default()
    };
    let run = qnn_b92_run(
        &PqcMode::Train,
        &cfg,
        None,
        Readout::default(),
        B92Mode::Paper,
    )
    .unwrap();
    let acc = run.summary.key.accuracy.mean;
    assert!((0.4..=0.6).contains(&acc), "{acc}");
}

#[test]
fn standard_b92_training_keeps_conclusive_outcomes() {
    let ch = build_channel(ChannelKind::AmplitudeDamping, 0.3).unwrap();
    let cfg = TrainingConfig {
        samples: 4,
        key_bits: 200,
        ..TrainingConfig::default()
    };
    let run_with = |mode: &PqcMode| {
        qnn_b92_run(mode, &cfg, Some(&ch), Readout::default(), B92Mode::Standard).unwrap()
    };
    let frozen = run_with(&PqcMode::Frozen(PqcParams::zeros(Ansatz::default())));
    let trained = run_with(&PqcMode::Train);
    let (before, after) = (
        frozen.summary.sift_fraction.mean,
        trained.summary.sift_fraction.mean,
    );
    assert!(after >= before, "{after} < {before}");
    assert_eq!(trained.summary.key.accuracy.mean, 1.0);
}

proptest! {
    #[test]
    fn pqc_keeps_states_valid(rho in common::density(1), t in prop::collection::vec(-7.0f64..7.0, 6)) {
        let p = PqcParams::new(Ansatz::Zyz { layers: 2 }, t).unwrap();
        prop_assert!(apply_pqc(&rho, &p).unwrap().validate(1e-12).is_ok());
        prop_assert!(p.thetas().iter().all(|x| (0.0..2.0 * PI).contains(x)));
    }

    #[test]
    fn pqc_then_inverse_is_identity(rho in common::density(1), t in prop::collection::vec(-7.0f64..7.0, 3)) {
        let p = PqcParams::new(Ansatz::default(), t).unwrap();
        let back = apply_pqc(&apply_pqc(&rho, &p).unwrap(), &p.inverse().unwrap()).unwrap();
        prop_assert!(common::max_abs(&(back.matrix() - rho.matrix())) < 1e-12);
    }

    #[test]
    fn two_qubit_ansatz_keeps_states_valid(rho in common::density(2), t in prop::collection::vec(-7.0f64..7.0, 6)) {
        let p = PqcParams::new(Ansatz::Entangled { layers: 1 }, t).unwrap();
        prop_assert!(apply_pqc(&rho, &p).unwrap().validate(1e-12).is_ok());
    }

    #[test]
    fn loss_is_bounded(seed in any::<u64>(), t in prop::collection::vec(-7.0f64..7.0, 3)) {
        let p = PqcParams::new(Ansatz::default(), t).unwrap();
        let l = loss_mse(&p, &mixed_batch(seed)).unwrap();
        prop_assert!((0.0..=1.0).contains(&l));
    }
}
