//! Experiment orchestration: single runs, comparison tables, noise sweeps,
//! learner convergence traces and circuit training.

use std::f64::consts::PI;

use anyhow::Context;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qkd_core::baseline::{b92_run, bb84_run};
use qkd_core::metrics::{evaluate, summarize, MetricsSummary, SampleMetrics};
use qkd_core::noise::ChannelKind;
use qkd_core::qnn::{qnn_b92_run, qnn_bb84_run, qnn_qrl_run, QnnRun, TrainingTrace};
use qkd_core::qrl::{learn, qrl_keygen, QrlRunResult, QrlVersion};
use qkd_core::rng::{derive_indexed, derive_seed, generator};
use qkd_core::transcript::ProtocolTranscript;

use crate::config::{ExperimentConfig, Protocol};

/// Seed for one (protocol, channel, strength) cell.
pub fn cell_seed(
    base: u64,
    protocol: Protocol,
    channel: Option<ChannelKind>,
    strength: f64,
) -> u64 {
    let channel = channel.map_or("none", ChannelKind::name);
    let strength = if channel == "none" {
        String::from("0")
    } else {
        strength.to_string()
    };
    derive_seed(base, &[protocol.name(), channel, &strength])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitRecord {
    pub sample: usize,
    pub thetas: Vec<f64>,
    pub traces: Vec<TrainingTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    pub protocol: Protocol,
    pub channel: Option<ChannelKind>,
    pub strength: f64,
    pub seed: u64,
    pub transcripts: Vec<ProtocolTranscript>,
    pub samples: Vec<SampleMetrics>,
    pub summary: MetricsSummary,
    pub circuits: Vec<CircuitRecord>,
}

fn from_transcripts(
    protocol: Protocol,
    channel: Option<ChannelKind>,
    strength: f64,
    seed: u64,
    transcripts: Vec<ProtocolTranscript>,
) -> anyhow::Result<ProtocolOutcome> {
    let samples = transcripts
        .iter()
        .map(evaluate)
        .collect::<qkd_core::Result<Vec<_>>>()?;
    let summary = summarize(&samples)?;
    Ok(ProtocolOutcome {
        protocol,
        channel,
        strength,
        seed,
        transcripts,
        samples,
        summary,
        circuits: Vec::new(),
    })
}

fn from_qnn(
    protocol: Protocol,
    channel: Option<ChannelKind>,
    strength: f64,
    seed: u64,
    run: QnnRun,
) -> ProtocolOutcome {
    let circuits = run
        .samples
        .iter()
        .map(|s| CircuitRecord {
            sample: s.index,
            thetas: s.params.thetas().to_vec(),
            traces: s.traces.clone(),
        })
        .collect();
    ProtocolOutcome {
        protocol,
        channel,
        strength,
        seed,
        transcripts: run.transcripts(),
        samples: run.samples.iter().map(|s| s.metrics).collect(),
        summary: run.summary,
        circuits,
    }
}

/// Runs `cfg.samples` independent samples of one protocol on one channel setting.
pub fn run_protocol(
    cfg: &ExperimentConfig,
    protocol: Protocol,
    kind: Option<ChannelKind>,
    strength: f64,
) -> anyhow::Result<ProtocolOutcome> {
    let seed = cell_seed(cfg.seed, protocol, kind, strength);
    let channel = cfg.channel_at(kind, strength)?;
    let ch = channel.as_ref();
    let readout = cfg.readout();
    let sample_seed = |s| derive_indexed(seed, "sample", s);
    let n = cfg.n_bits;
    let outcome = match protocol {
        Protocol::Bb84 => {
            let ts = (0..cfg.samples)
                .map(|s| bb84_run(n, ch, cfg.eve, readout, sample_seed(s)))
                .collect::<qkd_core::Result<Vec<_>>>()?;
            from_transcripts(protocol, kind, strength, seed, ts)?
        }
        Protocol::B92 => {
            let ts = (0..cfg.samples)
                .map(|s| b92_run(n, ch, readout, sample_seed(s), cfg.b92_mode))
                .collect::<qkd_core::Result<Vec<_>>>()?;
            from_transcripts(protocol, kind, strength, seed, ts)?
        }
        Protocol::QrlV1 | Protocol::QrlV2 => {
            let version = protocol.learner().expect("learner protocol");
            let learner = cfg.learner_config(version);
            let ts = (0..cfg.samples)
                .map(|s| qrl_keygen(version, n, ch, &learner, sample_seed(s)))
                .collect::<qkd_core::Result<Vec<_>>>()?;
            from_transcripts(protocol, kind, strength, seed, ts)?
        }
        Protocol::QnnBb84 => {
            let run = qnn_bb84_run(&cfg.pqc_mode()?, &cfg.training_config(seed)?, ch, readout)?;
            from_qnn(protocol, kind, strength, seed, run)
        }
        Protocol::QnnB92 => {
            let run = qnn_b92_run(
                &cfg.pqc_mode()?,
                &cfg.training_config(seed)?,
                ch,
                readout,
                cfg.b92_mode,
            )?;
            from_qnn(protocol, kind, strength, seed, run)
        }
        Protocol::QnnQrlV1 | Protocol::QnnQrlV2 => {
            let version = protocol.learner().expect("learner protocol");
            let run = qnn_qrl_run(
                version,
                &cfg.pqc_mode()?,
                &cfg.training_config(seed)?,
                ch,
                &cfg.learner_config(version),
            )?;
            from_qnn(protocol, kind, strength, seed, run)
        }
    };
    Ok(outcome)
}

pub fn run_single(cfg: &ExperimentConfig) -> anyhow::Result<ProtocolOutcome> {
    cfg.validate()?;
    run_protocol(cfg, cfg.protocol, cfg.channel, cfg.strength)
        .with_context(|| format!("running {}", cfg.protocol))
}

/// One row per protocol, in the given order.
pub fn run_table(
    cfg: &ExperimentConfig,
    protocols: &[Protocol],
) -> anyhow::Result<Vec<ProtocolOutcome>> {
    cfg.validate()?;
    if protocols.is_empty() {
        anyhow::bail!("no protocols requested");
    }
    protocols
        .par_iter()
        .map(|&p| {
            run_protocol(cfg, p, cfg.channel, cfg.strength).with_context(|| format!("running {p}"))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub protocol: Protocol,
    pub channel: ChannelKind,
    pub strength: f64,
    pub seed: u64,
    pub summary: MetricsSummary,
}

/// Full factorial over protocols, channel kinds and grid strengths.
pub fn run_sweep(cfg: &ExperimentConfig, protocols: &[Protocol]) -> anyhow::Result<Vec<SweepRow>> {
    cfg.validate()?;
    let cells: Vec<(Protocol, ChannelKind, f64)> = protocols
        .iter()
        .flat_map(|&p| {
            cfg.sweep_kinds()
                .into_iter()
                .flat_map(move |k| cfg.grid.iter().map(move |&s| (p, k, s)))
        })
        .collect();
    cells
        .par_iter()
        .map(|&(p, k, s)| {
            let o = run_protocol(cfg, p, Some(k), s)
                .with_context(|| format!("sweep cell {p} {k} {s}"))?;
            Ok(SweepRow {
                protocol: p,
                channel: k,
                strength: s,
                seed: o.seed,
                summary: o.summary,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrial {
    pub trial: usize,
    pub seed: u64,
    pub result: QrlRunResult,
}

/// Learner runs on random secret phases, for plotting episode trajectories.
pub fn run_convergence(
    cfg: &ExperimentConfig,
    version: QrlVersion,
) -> anyhow::Result<Vec<ConvergenceTrial>> {
    cfg.validate()?;
    let channel = cfg.channel_at(cfg.channel, cfg.strength)?;
    let learner = cfg.learner_config(version);
    let base = derive_seed(cfg.seed, &["converge", &version.to_string()]);
    (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_indexed(base, "trial", trial);
            let mut rng = generator(seed);
            let bit = u8::from(rng.random::<bool>());
            let theta1 = rng.random_range(0.0..=PI);
            let result = learn(
                version,
                bit,
                theta1,
                channel.as_ref(),
                &learner,
                rng.random(),
            )?;
            Ok(ConvergenceTrial {
                trial,
                seed,
                result,
            })
        })
        .collect()
}
