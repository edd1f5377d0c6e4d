use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{identity, make_gate, CMatrix, DensityMatrix, GateKind};

/// Circuit layout of the trainable unitary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Ansatz {
    /// `layers` copies of `Rz(a) Ry(b) Rz(c)` on one qubit.
    Zyz { layers: usize },
    /// Two qubits: per layer a `Zyz` block on each qubit followed by `CNOT(0, 1)`.
    Entangled { layers: usize },
}

impl Default for Ansatz {
    fn default() -> Self {
        Ansatz::Zyz { layers: 1 }
    }
}

impl Ansatz {
    pub fn qubits(self) -> usize {
        match self {
            Ansatz::Zyz { .. } => 1,
            Ansatz::Entangled { .. } => 2,
        }
    }

    pub fn layers(self) -> usize {
        match self {
            Ansatz::Zyz { layers } | Ansatz::Entangled { layers } => layers,
        }
    }

    pub fn parameter_count(self) -> usize {
        3 * self.qubits() * self.layers()
    }
}

fn zyz(t: &[f64]) -> CMatrix {
    let g = |k, a| {
        make_gate(k, Some(a))
            .expect("finite angle")
            .matrix()
            .clone()
    };
    g(GateKind::RZ, t[0]) * g(GateKind::RY, t[1]) * g(GateKind::RZ, t[2])
}

/// Builds the ansatz unitary for an arbitrary angle vector.
pub fn ansatz_unitary(ansatz: Ansatz, thetas: &[f64]) -> Result<CMatrix> {
    if ansatz.layers() == 0 {
        return Err(Error::ZeroCount("ansatz layers"));
    }
    if thetas.len() != ansatz.parameter_count() {
        return Err(Error::LengthMismatch {
            left: ansatz.parameter_count(),
            right: thetas.len(),
        });
    }
    if thetas.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("circuit angles"));
    }
    let mut u = identity(1 << ansatz.qubits());
    match ansatz {
        Ansatz::Zyz { .. } => {
            for layer in thetas.chunks(3) {
                u = zyz(layer) * u;
            }
        }
        Ansatz::Entangled { .. } => {
            let cnot = make_gate(GateKind::CNOT, None)?.matrix().clone();
            for layer in thetas.chunks(6) {
                u = &cnot * zyz(&layer[..3]).kronecker(&zyz(&layer[3..])) * u;
            }
        }
    }
    Ok(u)
}

/// Trainable angles, stored in `[0, 2pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqcParams {
    thetas: Vec<f64>,
    ansatz: Ansatz,
}

fn canonical(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl PqcParams {
    pub fn new(ansatz: Ansatz, thetas: Vec<f64>) -> Result<Self> {
        ansatz_unitary(ansatz, &thetas)?;
        Ok(Self {
            thetas: thetas.into_iter().map(canonical).collect(),
            ansatz,
        })
    }

    pub fn zeros(ansatz: Ansatz) -> Self {
        Self {
            thetas: vec![0.0; ansatz.parameter_count()],
            ansatz,
        }
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn ansatz(&self) -> Ansatz {
        self.ansatz
    }

    pub fn unitary(&self) -> CMatrix {
        ansatz_unitary(self.ansatz, &self.thetas).expect("validated on construction")
    }

    /// Single-qubit parameters whose unitary is the inverse of this one.
    pub fn inverse(&self) -> Result<Self> {
        match self.ansatz {
            Ansatz::Zyz { .. } => {
                let thetas = self.thetas.iter().rev().map(|t| -t).collect();
                Self::new(self.ansatz, thetas)
            }
            Ansatz::Entangled { .. } => Err(Error::DimensionMismatch(
                "inverse parameters exist only for the single-qubit ansatz".into(),
            )),
        }
    }
}

pub fn apply_pqc(state: &DensityMatrix, params: &PqcParams) -> Result<DensityMatrix> {
    if state.qubits() != params.ansatz().qubits() {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit ansatz on a {}-qubit state",
            params.ansatz().qubits(),
            state.qubits()
        )));
    }
    let targets: Vec<usize> = (0..state.qubits()).collect();
    state.apply_unitary(&params.unitary(), &targets)
}
