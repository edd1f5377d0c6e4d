use serde::{Deserialize, Serialize};

use super::{train, ErrorRule, PqcParams, TrainingConfig, TrainingSample, TrainingTrace};
use crate::baseline::{b92_round, b92_with, bb84_round, bb84_with, hadamard, B92Mode, Link};
use crate::error::Result;
use crate::metrics::{evaluate, summarize, MetricsSummary, SampleMetrics};
use crate::noise::KrausChannel;
use crate::qrl::{decode, encode, keygen_with, LearnerConfig, QrlVersion};
use crate::rng::{derive_indexed, derive_seed, generator};
use crate::state::Readout;
use crate::transcript::ProtocolTranscript;

/// Whether the circuit is trained per sample or held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PqcMode {
    Train,
    Frozen(PqcParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QnnSample {
    pub index: usize,
    pub seed: u64,
    pub params: PqcParams,
    pub traces: Vec<TrainingTrace>,
    pub transcript: ProtocolTranscript,
    pub metrics: SampleMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QnnRun {
    pub samples: Vec<QnnSample>,
    pub summary: MetricsSummary,
}

impl QnnRun {
    pub fn transcripts(&self) -> Vec<ProtocolTranscript> {
        self.samples.iter().map(|s| s.transcript.clone()).collect()
    }
}

/// Per sample: optionally train on fresh batches, then evaluate fresh bits
/// with the angles frozen.
fn drive<B, E>(mode: &PqcMode, config: &TrainingConfig, batch: B, eval: E) -> Result<QnnRun>
where
    B: Fn(&PqcParams, u64) -> Result<Vec<TrainingSample>>,
    E: Fn(&PqcParams, u64) -> Result<ProtocolTranscript>,
{
    config.validate()?;
    let mut samples = Vec::with_capacity(config.samples);
    for index in 0..config.samples {
        let seed = derive_indexed(config.seed, "sample", index);
        let mut traces = Vec::new();
        let params = match mode {
            PqcMode::Frozen(p) => p.clone(),
            PqcMode::Train => {
                let mut p = PqcParams::zeros(config.ansatz);
                for step in 0..config.rounds * config.inner_iterations {
                    let data = batch(&p, derive_indexed(seed, "train", step))?;
                    if data.is_empty() {
                        continue;
                    }
                    let (next, trace) = train(&p, &data, config)?;
                    p = next;
                    traces.push(trace);
                }
                p
            }
        };
        let transcript = eval(&params, derive_seed(seed, &["eval"]))?;
        let metrics = evaluate(&transcript)?;
        samples.push(QnnSample {
            index,
            seed,
            params,
            traces,
            transcript,
            metrics,
        });
    }
    let summary = summarize(&samples.iter().map(|s| s.metrics).collect::<Vec<_>>())?;
    Ok(QnnRun { samples, summary })
}

/// BB84 with the circuit applied after Bob's basis rotation. Training uses
/// the sifted positions of a fresh run.
pub fn qnn_bb84_run(
    mode: &PqcMode,
    config: &TrainingConfig,
    channel: Option<&KrausChannel>,
    readout: Readout,
) -> Result<QnnRun> {
    let n = config.key_bits;
    let h = hadamard();
    let batch = |_: &PqcParams, seed| {
        let mut rng = generator(seed);
        Ok((0..n)
            .map(|_| bb84_round(&mut rng, false, channel, &h))
            .filter(|r| r.alice_basis == r.bob_basis)
            .map(|r| TrainingSample {
                bit: r.bit,
                state: r.decoded,
                rule: ErrorRule::Direct,
            })
            .collect())
    };
    let eval = |p: &PqcParams, seed| {
        bb84_with(
            n,
            false,
            Link { channel, readout },
            Some(&p.unitary()),
            seed,
        )
    };
    drive(mode, config, batch, eval)
}

/// B92 with the circuit applied after Bob's basis rotation.
///
/// In [`B92Mode::Paper`] a position is kept when Alice's bit equals Bob's basis
/// index and Bob's bit is his raw outcome. In [`B92Mode::Standard`] positions
/// are kept on conclusive outcomes and training pulls the click rate of each
/// round toward its noiseless value.
pub fn qnn_b92_run(
    mode: &PqcMode,
    config: &TrainingConfig,
    channel: Option<&KrausChannel>,
    readout: Readout,
    b92_mode: B92Mode,
) -> Result<QnnRun> {
    let n = config.key_bits;
    let h = hadamard();
    let batch = |_: &PqcParams, seed| {
        let mut rng = generator(seed);
        Ok((0..n)
            .map(|_| b92_round(&mut rng, channel, &h))
            .filter_map(|r| match b92_mode {
                B92Mode::Paper => (r.bit == r.bob_basis.index()).then_some(TrainingSample {
                    bit: r.bit,
                    state: r.decoded,
                    rule: ErrorRule::Direct,
                }),
                B92Mode::Standard => Some(TrainingSample {
                    bit: r.bit,
                    state: r.decoded,
                    rule: ErrorRule::B92Conclusive { basis: r.bob_basis },
                }),
            })
            .collect())
    };
    let eval = |p: &PqcParams, seed| {
        let mut t = b92_with(
            n,
            Link { channel, readout },
            b92_mode,
            Some(&p.unitary()),
            seed,
        )?;
        if b92_mode == B92Mode::Paper {
            let bases = t.bob_bases.as_ref().expect("B92 records Bob's bases");
            t.conclusive_mask = t
                .alice_bits
                .iter()
                .zip(bases)
                .map(|(&b, basis)| b == basis.index())
                .collect();
            t.sifted_key = t.bob_bits.select(&t.conclusive_mask)?;
        }
        Ok(t)
    };
    drive(mode, config, batch, eval)
}

/// Learned-phase protocol with the circuit appended to every learner
/// evaluation. Training uses the decoded states at each learner's final angle.
pub fn qnn_qrl_run(
    version: QrlVersion,
    mode: &PqcMode,
    config: &TrainingConfig,
    channel: Option<&KrausChannel>,
    learner: &LearnerConfig,
) -> Result<QnnRun> {
    let n = config.key_bits;
    let batch = |p: &PqcParams, seed| {
        let u = p.unitary();
        let (_, runs) = keygen_with(version, n, channel, Some(&u), learner, seed)?;
        Ok(runs
            .iter()
            .map(|r| TrainingSample {
                bit: r.true_bit,
                state: decode(&encode(r.true_bit, r.theta1, channel), r.theta2_final),
                rule: ErrorRule::Direct,
            })
            .collect())
    };
    let eval = |p: &PqcParams, seed| {
        Ok(keygen_with(version, n, channel, Some(&p.unitary()), learner, seed)?.0)
    };
    drive(mode, config, batch, eval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::{b92_run, bb84_run};
    use crate::qnn::Ansatz;

    fn small() -> TrainingConfig {
        TrainingConfig {
            samples: 2,
            key_bits: 40,
            rounds: 2,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn frozen_identity_matches_baselines() {
        let zero = PqcMode::Frozen(PqcParams::zeros(Ansatz::default()));
        let run = qnn_bb84_run(&zero, &small(), None, Readout::default()).unwrap();
        for s in &run.samples {
            let t = &s.transcript;
            assert_eq!(
                t,
                &bb84_run(40, None, false, Readout::default(), t.seed).unwrap()
            );
        }
        let run =
            qnn_b92_run(&zero, &small(), None, Readout::default(), B92Mode::Standard).unwrap();
        for s in &run.samples {
            let t = &s.transcript;
            let base = b92_run(40, None, Readout::default(), t.seed, B92Mode::Standard).unwrap();
            assert_eq!(t, &base);
        }
    }

    #[test]
    fn trained_bb84_key_is_clean() {
        let run = qnn_bb84_run(&PqcMode::Train, &small(), None, Readout::default()).unwrap();
        assert_eq!(run.summary.key.accuracy.mean, 1.0);
        assert_eq!(run.summary.qber_sifted.mean, 0.0);
        assert!(run.samples.iter().all(|s| s.traces.len() == 2));
    }

    #[test]
    fn runs_are_reproducible() {
        let cfg = TrainingConfig { seed: 9, ..small() };
        let a = qnn_b92_run(
            &PqcMode::Train,
            &cfg,
            None,
            Readout::default(),
            B92Mode::Paper,
        )
        .unwrap();
        let b = qnn_b92_run(
            &PqcMode::Train,
            &cfg,
            None,
            Readout::default(),
            B92Mode::Paper,
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
