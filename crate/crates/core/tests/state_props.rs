mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use qkd_core::rng::generator;
use qkd_core::state::{
    make_gate, sample_shots, unitarity_error, DensityMatrix, GateKind, MeasurementDistribution,
};
use rand::Rng;

fn phase_circuit(start: usize, theta1: f64, theta2: f64) -> DensityMatrix {
    let h = make_gate(GateKind::H, None).unwrap();
    let mut rho = DensityMatrix::basis(1, start).unwrap();
    for g in [
        h.clone(),
        make_gate(GateKind::P, Some(theta1)).unwrap(),
        make_gate(GateKind::P, Some(-theta2)).unwrap(),
        h,
    ] {
        rho = rho.apply_gate(&g, &[0]).unwrap();
    }
    rho
}

#[test]
fn phase_circuit_matches_closed_form_on_random_angles() {
    let mut rng = generator(2024);
    for _ in 0..100 {
        let t1 = rng.random_range(0.0..2.0 * PI);
        let t2 = rng.random_range(0.0..2.0 * PI);
        let oracle = (1.0 + (t1 - t2).cos()) / 2.0;
        assert!((phase_circuit(0, t1, t2).probabilities().p(0) - oracle).abs() < 1e-12);
        assert!((phase_circuit(1, t1, t2).probabilities().p(1) - oracle).abs() < 1e-12);
    }
}

const ONE_QUBIT: [GateKind; 9] = [
    GateKind::I,
    GateKind::X,
    GateKind::Y,
    GateKind::Z,
    GateKind::H,
    GateKind::P,
    GateKind::RX,
    GateKind::RY,
    GateKind::RZ,
];

proptest! {
    #[test]
    fn gates_are_unitary(idx in 0usize..9, t in -10.0f64..10.0) {
        let kind = ONE_QUBIT[idx];
        let g = make_gate(kind, kind.takes_angle().then_some(t)).unwrap();
        prop_assert!(unitarity_error(g.matrix()) < 1e-12);
    }

    #[test]
    fn gates_preserve_state_invariants(
        rho in common::density(2),
        idx in 0usize..9,
        t in -10.0f64..10.0,
        target in 0usize..2,
        cnot_first in any::<bool>(),
    ) {
        let kind = ONE_QUBIT[idx];
        let g = make_gate(kind, kind.takes_angle().then_some(t)).unwrap();
        let out = rho.apply_gate(&g, &[target]).unwrap();
        out.validate(1e-12).unwrap();
        let cnot = make_gate(GateKind::CNOT, None).unwrap();
        let targets = if cnot_first { [0, 1] } else { [1, 0] };
        let out = out.apply_gate(&cnot, &targets).unwrap();
        out.validate(1e-12).unwrap();
        let total: f64 = out.probabilities().probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_reproducible(p in 0.0f64..=1.0, shots in 1u64..5000, seed in any::<u64>()) {
        let d = MeasurementDistribution::new(vec![p, 1.0 - p]).unwrap();
        let a = sample_shots(&d, shots, seed).unwrap();
        prop_assert_eq!(a.counts.iter().sum::<u64>(), shots);
        prop_assert_eq!(a, sample_shots(&d, shots, seed).unwrap());
    }
}
