//! Trainable circuit appended to Bob's decoder, its loss and optimizers, and
//! the protocols that use it.

mod optim;
mod pqc;
mod protocols;

pub use optim::{
    mse_gradient, optimize_derivative_free, optimize_gradient, parameter_shift_jacobian,
    TraceEntry, TrainingTrace,
};
pub use pqc::{ansatz_unitary, apply_pqc, Ansatz, PqcParams};
pub use protocols::{qnn_b92_run, qnn_bb84_run, qnn_qrl_run, PqcMode, QnnRun, QnnSample};

use serde::{Deserialize, Serialize};

use crate::baseline::{b92_decide, rotate, B92Mode};
use crate::error::{Error, Result};
use crate::state::{CMatrix, DensityMatrix};
use crate::transcript::Basis;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    #[default]
    DerivativeFree,
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub optimizer: OptimizerKind,
    /// Step size for gradient descent.
    pub learning_rate: f64,
    /// Objective evaluations (derivative-free) or updates (gradient) per round.
    pub max_iterations: usize,
    pub rho_begin: f64,
    pub rho_end: f64,
    /// Training rounds, each on a freshly drawn batch.
    pub rounds: usize,
    pub samples: usize,
    pub key_bits: usize,
    /// Learner and circuit alternations per round for the learned-phase protocols.
    pub inner_iterations: usize,
    pub ansatz: Ansatz,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::DerivativeFree,
            learning_rate: 0.5,
            max_iterations: 60,
            rho_begin: 0.5,
            rho_end: 1e-4,
            rounds: 5,
            samples: 10,
            key_bits: 100,
            inner_iterations: 1,
            ansatz: Ansatz::default(),
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("max_iterations", self.max_iterations),
            ("rounds", self.rounds),
            ("samples", self.samples),
            ("key_bits", self.key_bits),
            ("inner_iterations", self.inner_iterations),
            ("ansatz layers", self.ansatz.layers()),
        ] {
            if v == 0 {
                return Err(Error::ZeroCount(name));
            }
        }
        for (what, v) in [
            ("learning_rate", self.learning_rate),
            ("rho_begin", self.rho_begin),
            ("rho_end", self.rho_end),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::OutOfRange {
                    what,
                    value: v,
                    lo: 0.0,
                    hi: f64::INFINITY,
                });
            }
        }
        Ok(())
    }
}

/// Which outcomes count as errors for a training sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorRule {
    /// Any outcome different from the bit.
    Direct,
    /// Gap between `P(outcome 1)` and its noiseless B92 value: 1/2 where a
    /// conclusive outcome is possible for this bit and basis, 0 otherwise.
    B92Conclusive { basis: Basis },
}

/// A state just before the trainable circuit, with the bit it should reveal.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub bit: u8,
    pub state: DensityMatrix,
    pub rule: ErrorRule,
}

impl TrainingSample {
    /// Signed residual after applying `u`; zero on the ideal channel.
    pub fn residual(&self, u: &CMatrix) -> f64 {
        let dist = rotate(&self.state, u).probabilities();
        match self.rule {
            ErrorRule::Direct => dist.p(usize::from(1 - self.bit)),
            ErrorRule::B92Conclusive { basis } => {
                let (bit, conclusive) = b92_decide(B92Mode::Standard, basis, 1);
                let target = if conclusive && bit == self.bit {
                    0.5
                } else {
                    0.0
                };
                dist.p(1) - target
            }
        }
    }
}

/// Per-sample residuals for arbitrary angles.
pub fn residuals(ansatz: Ansatz, thetas: &[f64], batch: &[TrainingSample]) -> Result<Vec<f64>> {
    let u = ansatz_unitary(ansatz, thetas)?;
    Ok(batch.iter().map(|s| s.residual(&u)).collect())
}

/// `mean(P_err^2)` over the batch.
pub fn loss_mse(params: &PqcParams, batch: &[TrainingSample]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("training batch"));
    }
    let r = residuals(params.ansatz(), params.thetas(), batch)?;
    Ok(r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64)
}

/// Trains the circuit on `batch`, starting from `initial`.
pub fn train(
    initial: &PqcParams,
    batch: &[TrainingSample],
    config: &TrainingConfig,
) -> Result<(PqcParams, TrainingTrace)> {
    if batch.is_empty() {
        return Err(Error::Empty("training batch"));
    }
    let ansatz = initial.ansatz();
    let res = |t: &[f64]| residuals(ansatz, t, batch).unwrap_or_else(|_| vec![f64::NAN]);
    let trace = match config.optimizer {
        OptimizerKind::DerivativeFree => optimize_derivative_free(
            |t| {
                let r = res(t);
                r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64
            },
            initial.thetas(),
            config,
        )?,
        OptimizerKind::GradientDescent => optimize_gradient(res, initial.thetas(), config)?,
    };
    let params = PqcParams::new(ansatz, trace.best_thetas.clone())?;
    Ok((params, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::TOLERANCE;

    fn batch() -> Vec<TrainingSample> {
        (0..2u8)
            .map(|bit| TrainingSample {
                bit,
                state: DensityMatrix::basis(1, usize::from(bit)).unwrap(),
                rule: ErrorRule::Direct,
            })
            .collect()
    }

    #[test]
    fn loss_examples() {
        let zero = PqcParams::zeros(Ansatz::default());
        assert_eq!(loss_mse(&zero, &batch()).unwrap(), 0.0);
        let mixed = vec![TrainingSample {
            bit: 1,
            state: DensityMatrix::maximally_mixed(1).unwrap(),
            rule: ErrorRule::Direct,
        }];
        assert!((loss_mse(&zero, &mixed).unwrap() - 0.25).abs() < TOLERANCE);
        let mut rev = batch();
        rev.reverse();
        let p = PqcParams::new(Ansatz::default(), vec![0.4, 1.0, 2.0]).unwrap();
        assert_eq!(loss_mse(&p, &batch()).unwrap(), loss_mse(&p, &rev).unwrap());
        assert!(loss_mse(&zero, &[]).is_err());
    }

    #[test]
    fn b92_conclusive_rule() {
        let id = crate::state::identity(2);
        let z = ErrorRule::B92Conclusive {
            basis: Basis::Rectilinear,
        };
        // bit 0 arrives as |0>: a Z click on 1 would be a wrong conclusive 1
        let wrong = TrainingSample {
            bit: 0,
            state: DensityMatrix::basis(1, 1).unwrap(),
            rule: z,
        };
        assert_eq!(wrong.residual(&id), 1.0);
        // bit 1 arrives as |+>: the ideal conclusive rate is one half
        let plus =
            DensityMatrix::from_matrix(CMatrix::from_element(2, 2, crate::state::c(0.5, 0.0)))
                .unwrap();
        let ideal = TrainingSample {
            bit: 1,
            state: plus,
            rule: z,
        };
        assert!(ideal.residual(&id).abs() < TOLERANCE);
        // never clicking is penalised instead of rewarded
        let silent = TrainingSample {
            bit: 1,
            state: DensityMatrix::basis(1, 0).unwrap(),
            rule: z,
        };
        assert_eq!(silent.residual(&id), -0.5);
    }

    #[test]
    fn training_recovers_from_a_flip() {
        let flipped: Vec<TrainingSample> = batch()
            .into_iter()
            .map(|s| TrainingSample {
                bit: 1 - s.bit,
                ..s
            })
            .collect();
        let cfg = TrainingConfig::default();
        let start = PqcParams::new(Ansatz::default(), vec![0.1, 0.3, 0.2]).unwrap();
        let (p, trace) = train(&start, &flipped, &cfg).unwrap();
        assert!(trace.best_loss < 1e-3, "{}", trace.best_loss);
        assert!(loss_mse(&p, &flipped).unwrap() < 1e-3);
    }
}
