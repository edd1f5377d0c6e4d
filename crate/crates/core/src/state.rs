//! Exact one- and two-qubit simulation on density matrices.
//!
//! Qubit 0 is the most significant bit of the computational-basis index, so a
//! two-qubit basis state `|q0 q1>` has index `2*q0 + q1`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{generator, Generator};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Tolerance used for the algebraic invariants of states and gates.
pub const TOLERANCE: f64 = 1e-12;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub(crate) fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    I,
    X,
    Y,
    Z,
    H,
    P,
    RX,
    RY,
    RZ,
    CNOT,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::I => "I",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::P => "P",
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::CNOT => "CNOT",
        }
    }

    pub fn takes_angle(self) -> bool {
        matches!(
            self,
            GateKind::P | GateKind::RX | GateKind::RY | GateKind::RZ
        )
    }

    pub fn qubits(self) -> usize {
        if self == GateKind::CNOT {
            2
        } else {
            1
        }
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "I" | "ID" => GateKind::I,
            "X" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "H" => GateKind::H,
            "P" | "PHASE" => GateKind::P,
            "RX" => GateKind::RX,
            "RY" => GateKind::RY,
            "RZ" => GateKind::RZ,
            "CNOT" | "CX" => GateKind::CNOT,
            _ => return Err(Error::UnknownGate(s.to_string())),
        })
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A unitary gate matrix together with the gate it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    kind: GateKind,
    angle: Option<f64>,
    matrix: CMatrix,
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn angle(&self) -> Option<f64> {
        self.angle
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn qubits(&self) -> usize {
        self.kind.qubits()
    }
}

/// Builds the matrix of a named gate. Rotations follow `R_a(t) = exp(-i t/2 A)`
/// and the phase gate is `P(t) = diag(1, e^{it})`.
pub fn make_gate(kind: GateKind, angle: Option<f64>) -> Result<Gate> {
    match (kind.takes_angle(), angle) {
        (true, None) => {
            return Err(Error::GateAngle {
                gate: kind.name(),
                reason: "requires an angle",
            })
        }
        (false, Some(_)) => {
            return Err(Error::GateAngle {
                gate: kind.name(),
                reason: "does not take an angle",
            })
        }
        (_, Some(t)) if !t.is_finite() => return Err(Error::NonFinite("gate angle")),
        _ => {}
    }
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let t = angle.unwrap_or(0.0);
    let (ch, sh) = ((t / 2.0).cos(), (t / 2.0).sin());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let m2 = |a: C64, b: C64, cc: C64, d: C64| CMatrix::from_row_slice(2, 2, &[a, b, cc, d]);
    let matrix = match kind {
        GateKind::I => identity(2),
        GateKind::X => m2(zero, one, one, zero),
        GateKind::Y => m2(zero, c(0.0, -1.0), c(0.0, 1.0), zero),
        GateKind::Z => m2(one, zero, zero, -one),
        GateKind::H => m2(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)),
        GateKind::P => m2(one, zero, zero, C64::from_polar(1.0, t)),
        GateKind::RX => m2(c(ch, 0.0), c(0.0, -sh), c(0.0, -sh), c(ch, 0.0)),
        GateKind::RY => m2(c(ch, 0.0), c(-sh, 0.0), c(sh, 0.0), c(ch, 0.0)),
        GateKind::RZ => m2(c(ch, -sh), zero, zero, c(ch, sh)),
        GateKind::CNOT => {
            let mut m = CMatrix::zeros(4, 4);
            m[(0, 0)] = one;
            m[(1, 1)] = one;
            m[(2, 3)] = one;
            m[(3, 2)] = one;
            m
        }
    };
    Ok(Gate {
        kind,
        angle,
        matrix,
    })
}

/// `max |(U^dagger U - I)_ij|`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let prod = u.adjoint() * u;
    let id = identity(u.nrows());
    (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Lifts an operator acting on `targets` to the full register.
///
/// `targets[0]` is the most significant qubit of the operator's own index.
pub(crate) fn embed(op: &CMatrix, targets: &[usize], qubits: usize) -> Result<CMatrix> {
    let k = targets.len();
    if op.nrows() != 1 << k || op.ncols() != 1 << k {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator on {} target qubit(s)",
            op.nrows(),
            op.ncols(),
            k
        )));
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= qubits {
            return Err(Error::QubitOutOfRange { index: t, qubits });
        }
        if targets[..i].contains(&t) {
            return Err(Error::DimensionMismatch(format!(
                "repeated target qubit {t}"
            )));
        }
    }
    if k == qubits && targets.iter().enumerate().all(|(i, &t)| i == t) {
        return Ok(op.clone());
    }
    let dim = 1usize << qubits;
    let bit = |index: usize, q: usize| (index >> (qubits - 1 - q)) & 1;
    let sub = |index: usize| {
        targets
            .iter()
            .fold(0usize, |acc, &t| (acc << 1) | bit(index, t))
    };
    let target_mask: usize = targets.iter().map(|&t| 1 << (qubits - 1 - t)).sum();
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        if (i & !target_mask) == (j & !target_mask) {
            op[(sub(i), sub(j))]
        } else {
            c(0.0, 0.0)
        }
    }))
}

/// Hermitian, unit-trace, positive semidefinite operator on 1 or 2 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    rho: CMatrix,
}

impl DensityMatrix {
    /// Computational basis state `|index><index|`.
    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        check_qubits(qubits)?;
        let dim = 1 << qubits;
        if index >= dim {
            return Err(Error::InvalidState(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut rho = CMatrix::zeros(dim, dim);
        rho[(index, index)] = c(1.0, 0.0);
        Ok(Self { qubits, rho })
    }

    /// `|0...0><0...0|`.
    pub fn zero(qubits: usize) -> Result<Self> {
        Self::basis(qubits, 0)
    }

    pub fn maximally_mixed(qubits: usize) -> Result<Self> {
        check_qubits(qubits)?;
        let dim = 1 << qubits;
        Ok(Self {
            qubits,
            rho: identity(dim) / c(dim as f64, 0.0),
        })
    }

    /// Embeds a normalised pure state as a rank-one density matrix.
    pub fn from_pure(amplitudes: &[C64]) -> Result<Self> {
        let qubits = match amplitudes.len() {
            2 => 1,
            4 => 2,
            n => {
                return Err(Error::DimensionMismatch(format!(
                    "state vector of length {n}"
                )))
            }
        };
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("state vector norm^2 = {norm}")));
        }
        let dim = amplitudes.len();
        let rho = CMatrix::from_fn(dim, dim, |i, j| amplitudes[i] * amplitudes[j].conj());
        Ok(Self { qubits, rho })
    }

    /// Validates an arbitrary matrix as a density matrix.
    pub fn from_matrix(rho: CMatrix) -> Result<Self> {
        let qubits = match (rho.nrows(), rho.ncols()) {
            (2, 2) => 1,
            (4, 4) => 2,
            (r, cc) => return Err(Error::DimensionMismatch(format!("{r}x{cc} density matrix"))),
        };
        let state = Self { qubits, rho };
        state.validate(TOLERANCE)?;
        Ok(state)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.rho + self.rho.adjoint()) * c(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks Hermiticity, unit trace, and positivity within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if self
            .rho
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("density matrix"));
        }
        let herm = self.hermiticity_error();
        if herm > tol {
            return Err(Error::InvalidState(format!(
                "not Hermitian (error {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min = self.min_eigenvalue();
        if min < -tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn apply_gate(&self, gate: &Gate, targets: &[usize]) -> Result<Self> {
        self.apply_unitary(gate.matrix(), targets)
    }

    /// `U rho U^dagger` with `U` acting on `targets`.
    pub fn apply_unitary(&self, u: &CMatrix, targets: &[usize]) -> Result<Self> {
        let full = embed(u, targets, self.qubits)?;
        Ok(Self {
            qubits: self.qubits,
            rho: &full * &self.rho * full.adjoint(),
        })
    }

    /// `sum_k K_k rho K_k^dagger` with the single-qubit operators on `target`.
    pub fn apply_kraus(&self, operators: &[CMatrix], target: usize) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::Empty("Kraus operator list"));
        }
        let dim = self.dim();
        let mut out = CMatrix::zeros(dim, dim);
        for k in operators {
            let full = embed(k, &[target], self.qubits)?;
            out += &full * &self.rho * full.adjoint();
        }
        Ok(Self {
            qubits: self.qubits,
            rho: out,
        })
    }

    pub fn probabilities(&self) -> MeasurementDistribution {
        measure_distribution(self)
    }
}

fn check_qubits(qubits: usize) -> Result<()> {
    if qubits == 0 || qubits > 2 {
        return Err(Error::DimensionMismatch(format!(
            "{qubits} qubits (supported: 1 or 2)"
        )));
    }
    Ok(())
}

/// Applies `gate` to `targets` of `state`.
pub fn apply_gate(state: &DensityMatrix, gate: &Gate, targets: &[usize]) -> Result<DensityMatrix> {
    state.apply_gate(gate, targets)
}

/// Outcome probabilities in the computational basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDistribution {
    probabilities: Vec<f64>,
}

impl MeasurementDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::Empty("probability vector"));
        }
        if probabilities
            .iter()
            .any(|p| !p.is_finite() || *p < -TOLERANCE || *p > 1.0 + TOLERANCE)
        {
            return Err(Error::InvalidState(format!(
                "probabilities out of [0, 1]: {probabilities:?}"
            )));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("probabilities sum to {total}")));
        }
        Ok(Self { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn p(&self, outcome: usize) -> f64 {
        self.probabilities.get(outcome).copied().unwrap_or(0.0)
    }

    pub fn outcomes(&self) -> usize {
        self.probabilities.len()
    }
}

/// Diagonal of the density matrix, with rounding noise below zero clipped.
pub fn measure_distribution(state: &DensityMatrix) -> MeasurementDistribution {
    let probabilities = (0..state.dim())
        .map(|i| state.rho[(i, i)].re.clamp(0.0, 1.0))
        .collect();
    MeasurementDistribution { probabilities }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shots: u64,
    /// `counts[outcome]`, indexed like the distribution.
    pub counts: Vec<u64>,
    pub seed: u64,
}

impl ShotRecord {
    pub fn frequency(&self, outcome: usize) -> f64 {
        self.counts.get(outcome).copied().unwrap_or(0) as f64 / self.shots as f64
    }
}

/// Draws `shots` samples from `dist` with a generator seeded by `seed`.
pub fn sample_shots(dist: &MeasurementDistribution, shots: u64, seed: u64) -> Result<ShotRecord> {
    let mut rng = generator(seed);
    let counts = sample_counts(dist, shots, &mut rng)?;
    Ok(ShotRecord {
        shots,
        counts,
        seed,
    })
}

/// Multinomial counts drawn as a chain of conditional binomials.
pub fn sample_counts(
    dist: &MeasurementDistribution,
    shots: u64,
    rng: &mut Generator,
) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let probs = dist.probabilities();
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() || mass <= 0.0 {
            counts[i] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, q)
            .map_err(|e| Error::InvalidState(e.to_string()))?
            .sample(rng);
        counts[i] = k;
        remaining -= k;
        mass -= p;
    }
    Ok(counts)
}

/// How a single-qubit measurement is turned into one classical outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Readout {
    /// Most likely outcome of the exact distribution.
    Exact,
    /// Majority outcome over a finite number of shots.
    Sampled { shots: u64 },
}

impl Default for Readout {
    fn default() -> Self {
        Readout::Sampled { shots: 1024 }
    }
}

impl Readout {
    /// Picks an outcome; exact ties are broken by a fair coin from `rng`.
    pub fn outcome(&self, dist: &MeasurementDistribution, rng: &mut Generator) -> Result<usize> {
        let weights: Vec<f64> = match *self {
            Readout::Exact => dist.probabilities().to_vec(),
            Readout::Sampled { shots } => sample_counts(dist, shots, rng)?
                .into_iter()
                .map(|n| n as f64)
                .collect(),
        };
        let tie_tol = match self {
            Readout::Exact => TOLERANCE,
            Readout::Sampled { .. } => 0.0,
        };
        let best = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let leaders: Vec<usize> = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| best - w <= tie_tol)
            .map(|(i, _)| i)
            .collect();
        Ok(if leaders.len() == 1 {
            leaders[0]
        } else {
            leaders[rng.random_range(0..leaders.len())]
        })
    }

    /// Estimated outcome probabilities: exact, or shot frequencies.
    pub fn estimate(
        &self,
        dist: &MeasurementDistribution,
        rng: &mut Generator,
    ) -> Result<Vec<f64>> {
        match *self {
            Readout::Exact => Ok(dist.probabilities().to_vec()),
            Readout::Sampled { shots } => Ok(sample_counts(dist, shots, rng)?
                .into_iter()
                .map(|n| n as f64 / shots as f64)
                .collect()),
        }
    }
}
