#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;
use qkd_core::state::{CMatrix, DensityMatrix};

/// Random full-rank density matrix `A A^dagger / tr(A A^dagger)`.
pub fn density(qubits: usize) -> impl Strategy<Value = DensityMatrix> {
    let dim = 1usize << qubits;
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_filter_map(
        "degenerate",
        move |entries| {
            let a: CMatrix = DMatrix::from_iterator(
                dim,
                dim,
                entries.into_iter().map(|(re, im)| Complex::new(re, im)),
            );
            let m = &a * a.adjoint();
            let tr = m.trace().re;
            if tr < 1e-3 {
                return None;
            }
            DensityMatrix::from_matrix(m / Complex::new(tr, 0.0)).ok()
        },
    )
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
