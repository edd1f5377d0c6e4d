use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qkd_core::baseline::B92Mode;
use qkd_core::noise::{build_channel, ChannelKind, KrausChannel};
use qkd_core::qnn::{Ansatz, OptimizerKind, PqcMode, PqcParams, TrainingConfig};
use qkd_core::qrl::{LearnerConfig, QrlVersion, DEFAULT_EPSILON, DEFAULT_TARGET};
use qkd_core::state::Readout;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Bb84,
    B92,
    QrlV1,
    QrlV2,
    QnnBb84,
    QnnB92,
    QnnQrlV1,
    QnnQrlV2,
}

impl Protocol {
    pub const ALL: [Protocol; 8] = [
        Protocol::Bb84,
        Protocol::B92,
        Protocol::QrlV1,
        Protocol::QrlV2,
        Protocol::QnnBb84,
        Protocol::QnnB92,
        Protocol::QnnQrlV1,
        Protocol::QnnQrlV2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Bb84 => "bb84",
            Protocol::B92 => "b92",
            Protocol::QrlV1 => "qrl-v1",
            Protocol::QrlV2 => "qrl-v2",
            Protocol::QnnBb84 => "qnn-bb84",
            Protocol::QnnB92 => "qnn-b92",
            Protocol::QnnQrlV1 => "qnn-qrl-v1",
            Protocol::QnnQrlV2 => "qnn-qrl-v2",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Protocol::Bb84 => "BB84",
            Protocol::B92 => "B92",
            Protocol::QrlV1 => "QRL-V.1",
            Protocol::QrlV2 => "QRL-V.2",
            Protocol::QnnBb84 => "QNN-BB84",
            Protocol::QnnB92 => "QNN-B92",
            Protocol::QnnQrlV1 => "QNN-QRL-V.1",
            Protocol::QnnQrlV2 => "QNN-QRL-V.2",
        }
    }

    pub fn uses_circuit(self) -> bool {
        matches!(
            self,
            Protocol::QnnBb84 | Protocol::QnnB92 | Protocol::QnnQrlV1 | Protocol::QnnQrlV2
        )
    }

    pub fn learner(self) -> Option<QrlVersion> {
        match self {
            Protocol::QrlV1 | Protocol::QnnQrlV1 => Some(QrlVersion::V1),
            Protocol::QrlV2 | Protocol::QnnQrlV2 => Some(QrlVersion::V2),
            _ => None,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['_', '.'], "-");
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == key)
            .with_context(|| format!("unknown protocol `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadoutMode {
    Exact,
    #[default]
    Sampled,
}

/// Which positions the headline accuracy block and QBER column cover.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QberDef {
    #[default]
    Sifted,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSettings {
    /// Train the circuit per sample; when false the angles stay at `frozen_thetas`.
    pub enabled: bool,
    pub frozen_thetas: Option<Vec<f64>>,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub max_iterations: usize,
    pub rounds: usize,
    pub inner_iterations: usize,
    pub layers: usize,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        let t = TrainingConfig::default();
        Self {
            enabled: true,
            frozen_thetas: None,
            optimizer: t.optimizer,
            learning_rate: t.learning_rate,
            max_iterations: t.max_iterations,
            rounds: t.rounds,
            inner_iterations: t.inner_iterations,
            layers: t.ansatz.layers(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSettings {
    /// Episode budget; the version default applies when absent.
    pub max_episodes: Option<usize>,
    pub epsilon: f64,
    pub target: f64,
    /// Readout used while scoring candidate angles.
    pub reward_mode: ReadoutMode,
}

impl Default for LearnerSettings {
    fn default() -> Self {
        Self {
            max_episodes: None,
            epsilon: DEFAULT_EPSILON,
            target: DEFAULT_TARGET,
            reward_mode: ReadoutMode::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub protocol: Protocol,
    pub n_bits: usize,
    pub samples: usize,
    pub shots: u64,
    pub mode: ReadoutMode,
    pub channel: Option<ChannelKind>,
    pub strength: f64,
    /// Strengths visited by `sweep`.
    pub grid: Vec<f64>,
    /// Channels visited by `sweep`; every kind when empty.
    pub sweep_channels: Vec<ChannelKind>,
    pub eve: bool,
    pub b92_mode: B92Mode,
    pub qber_def: QberDef,
    pub training: TrainingSettings,
    pub learner: LearnerSettings,
    /// Learner runs for `converge`.
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn default_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            protocol: Protocol::Bb84,
            n_bits: 100,
            samples: 10,
            shots: 1024,
            mode: ReadoutMode::Sampled,
            channel: None,
            strength: 0.0,
            grid: default_grid(),
            sweep_channels: Vec::new(),
            eve: false,
            b92_mode: B92Mode::Standard,
            qber_def: QberDef::Sifted,
            training: TrainingSettings::default(),
            learner: LearnerSettings::default(),
            trials: 10,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = serde_json::from_str(text).context("parsing experiment config")?;
        if cfg.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            );
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.n_bits == 0 {
            bail!("n_bits must be at least 1");
        }
        if self.samples == 0 {
            bail!("samples must be at least 1");
        }
        if self.shots == 0 {
            bail!("shots must be at least 1");
        }
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.strength) {
            bail!("strength must lie in [0, 1], got {}", self.strength);
        }
        if self.grid.is_empty() {
            bail!("sweep grid is empty");
        }
        if self.grid.iter().any(|s| !(0.0..=1.0).contains(s)) {
            bail!("sweep grid strengths must lie in [0, 1]");
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            bail!("sweep grid must be strictly increasing");
        }
        self.training_config(self.seed)
            .map_err(anyhow::Error::from)?
            .validate()?;
        if let Some(t) = &self.training.frozen_thetas {
            PqcParams::new(self.ansatz(), t.clone())?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring the output location.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn readout(&self) -> Readout {
        readout(self.mode, self.shots)
    }

    pub fn channel_at(
        &self,
        kind: Option<ChannelKind>,
        strength: f64,
    ) -> anyhow::Result<Option<KrausChannel>> {
        Ok(match kind {
            Some(k) => Some(build_channel(k, strength)?),
            None => None,
        })
    }

    pub fn ansatz(&self) -> Ansatz {
        Ansatz::Zyz {
            layers: self.training.layers,
        }
    }

    pub fn training_config(&self, seed: u64) -> qkd_core::Result<TrainingConfig> {
        let t = &self.training;
        let cfg = TrainingConfig {
            optimizer: t.optimizer,
            learning_rate: t.learning_rate,
            max_iterations: t.max_iterations,
            rounds: t.rounds,
            samples: self.samples,
            key_bits: self.n_bits,
            inner_iterations: t.inner_iterations,
            ansatz: self.ansatz(),
            seed,
            ..TrainingConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn pqc_mode(&self) -> anyhow::Result<PqcMode> {
        if self.training.enabled {
            return Ok(PqcMode::Train);
        }
        Ok(PqcMode::Frozen(match &self.training.frozen_thetas {
            Some(t) => PqcParams::new(self.ansatz(), t.clone())?,
            None => PqcParams::zeros(self.ansatz()),
        }))
    }

    pub fn learner_config(&self, version: QrlVersion) -> LearnerConfig {
        let l = &self.learner;
        LearnerConfig {
            max_episodes: l.max_episodes.unwrap_or(version.default_episodes()),
            epsilon: l.epsilon,
            target: l.target,
            reward_readout: readout(l.reward_mode, self.shots),
            final_readout: self.readout(),
        }
    }

    pub fn sweep_kinds(&self) -> Vec<ChannelKind> {
        if self.sweep_channels.is_empty() {
            ChannelKind::ALL.to_vec()
        } else {
            self.sweep_channels.clone()
        }
    }
}

pub fn readout(mode: ReadoutMode, shots: u64) -> Readout {
    match mode {
        ReadoutMode::Exact => Readout::Exact,
        ReadoutMode::Sampled => Readout::Sampled { shots },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_names_round_trip() {
        for p in Protocol::ALL {
            assert_eq!(p.name().parse::<Protocol>().unwrap(), p);
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(json, format!("\"{}\"", p.name()));
        }
        assert_eq!(
            "QNN_QRL_V2".parse::<Protocol>().unwrap(),
            Protocol::QnnQrlV2
        );
        assert!("e91".parse::<Protocol>().is_err());
    }

    #[test]
    fn json_round_trip_and_schema_check() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
        let partial = r#"{"schema_version": 1, "protocol": "qnn-b92", "channel": "phase-damping"}"#;
        let cfg = ExperimentConfig::from_json(partial).unwrap();
        assert_eq!(cfg.protocol, Protocol::QnnB92);
        assert_eq!(cfg.channel, Some(ChannelKind::PhaseDamping));
        assert!(ExperimentConfig::from_json(r#"{"schema_version": 2}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"bits": 3}"#).is_err());
    }

    #[test]
    fn validation() {
        let ok = ExperimentConfig::default();
        ok.validate().unwrap();
        let bad_grid = ExperimentConfig {
            grid: vec![0.0, 0.5, 0.5],
            ..ok.clone()
        };
        assert!(bad_grid.validate().is_err());
        let bad_strength = ExperimentConfig {
            strength: 1.5,
            ..ok.clone()
        };
        assert!(bad_strength.validate().is_err());
        let no_bits = ExperimentConfig { n_bits: 0, ..ok };
        assert!(no_bits.validate().is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig {
            out: PathBuf::from("/elsewhere"),
            ..a.clone()
        };
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig {
            seed: 1,
            ..a.clone()
        };
        assert_ne!(a.hash(), c.hash());
    }
}
