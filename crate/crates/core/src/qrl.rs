//! Reinforcement-learned agreement on a secret phase.
//!
//! Alice encodes a bit as `H P(theta1) |bit>`. Bob decodes with
//! `H P(-theta2)` and is rewarded with `max(P0, P1) = (1 + |cos(theta1 - theta2)|) / 2`.
//! Two searches over `theta2` are provided: deterministic bisection (`V1`) and
//! a randomized three-point bracket on the `pi`-periodic reward (`V2`).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::{hadamard, rotate, transmit};
use crate::error::{Error, Result};
use crate::noise::KrausChannel;
use crate::rng::{derive_indexed, generator, Generator};
use crate::state::{make_gate, CMatrix, DensityMatrix, GateKind, Readout};
use crate::transcript::{ProtocolTranscript, TranscriptBuilder};

pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_TARGET: f64 = 1.2;

/// `max(p0, p1)`; the inputs must sum to one within `1e-9`.
pub fn reward(p0: f64, p1: f64) -> Result<f64> {
    if !p0.is_finite() || !p1.is_finite() {
        return Err(Error::NonFinite("reward inputs"));
    }
    if (p0 + p1 - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(p0 + p1));
    }
    Ok(p0.max(p1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QrlVersion {
    V1,
    V2,
}

impl QrlVersion {
    pub fn default_episodes(self) -> usize {
        match self {
            QrlVersion::V1 => 1000,
            QrlVersion::V2 => 100,
        }
    }
}

impl fmt::Display for QrlVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QrlVersion::V1 => "v1",
            QrlVersion::V2 => "v2",
        })
    }
}

impl FromStr for QrlVersion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "v1" | "1" => Ok(QrlVersion::V1),
            "v2" | "2" => Ok(QrlVersion::V2),
            _ => Err(Error::Parse(format!("unknown learner version `{s}`"))),
        }
    }
}

/// Search bracket `n1 <= n2 <= n3` with `n2` the current pivot.
///
/// The width is tracked separately so bisection widths are exact powers of two.
/// `V2` brackets may straddle the `0 = pi` seam, in which case `n1 < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleInterval {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    width: f64,
}

impl AngleInterval {
    pub fn initial(n2: f64) -> Self {
        Self {
            n1: 0.0,
            n2,
            n3: PI,
            width: PI,
        }
    }

    fn new(n1: f64, n2: f64, n3: f64) -> Self {
        Self {
            n1,
            n2,
            n3,
            width: n3 - n1,
        }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn is_ordered(&self) -> bool {
        self.n1 <= self.n2 && self.n2 <= self.n3
    }
}

/// Last reward observed at each candidate angle, in evaluation order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    entries: Vec<(f64, f64)>,
}

impl QTable {
    pub fn record(&mut self, angle: f64, reward: f64) {
        self.entries.retain(|&(a, _)| a != angle);
        self.entries.push((angle, reward));
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Highest-reward angle; ties go to the most recently recorded entry.
    pub fn best(&self) -> Option<(f64, f64)> {
        self.entries
            .iter()
            .copied()
            .fold(None, |best: Option<(f64, f64)>, e| match best {
                Some(b) if b.1 > e.1 => Some(b),
                _ => Some(e),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    /// Best candidate evaluated in this episode.
    pub theta2: f64,
    pub delta_theta: f64,
    pub p0: f64,
    pub p1: f64,
    pub reward: f64,
    /// `| |delta_theta| - target |`.
    pub target_gap: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub records: Vec<EpisodeRecord>,
    pub convergence_episode: Option<usize>,
}

impl EpisodeLog {
    pub const CSV_HEADER: [&'static str; 9] = [
        "episode",
        "n1",
        "n2",
        "n3",
        "theta2",
        "delta_theta",
        "p0",
        "p1",
        "reward",
    ];

    pub fn csv_row(r: &EpisodeRecord) -> [String; 9] {
        [
            r.episode.to_string(),
            r.n1.to_string(),
            r.n2.to_string(),
            r.n3.to_string(),
            r.theta2.to_string(),
            r.delta_theta.to_string(),
            r.p0.to_string(),
            r.p1.to_string(),
            r.reward.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub max_episodes: usize,
    pub epsilon: f64,
    pub target: f64,
    /// Readout used to score candidate angles.
    pub reward_readout: Readout,
    /// Readout used for the final key bit.
    pub final_readout: Readout,
}

impl LearnerConfig {
    pub fn for_version(version: QrlVersion) -> Self {
        Self {
            max_episodes: version.default_episodes(),
            epsilon: DEFAULT_EPSILON,
            target: DEFAULT_TARGET,
            reward_readout: Readout::Exact,
            final_readout: Readout::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QrlRunResult {
    pub theta1: f64,
    pub theta2_final: f64,
    pub decoded_bit: u8,
    pub true_bit: u8,
    pub converged: bool,
    /// Exact probability of outcome 1 at `theta2_final`.
    pub p1: f64,
    pub interval: AngleInterval,
    pub qtable: QTable,
    pub episode_log: EpisodeLog,
}

impl QrlRunResult {
    pub fn delta_theta(&self) -> f64 {
        self.theta1 - self.theta2_final
    }
}

/// `P(theta1) H |bit>` after the channel.
pub fn encode(bit: u8, theta1: f64, channel: Option<&KrausChannel>) -> DensityMatrix {
    let h = hadamard();
    let p = make_gate(GateKind::P, Some(theta1)).expect("finite angle");
    let rho = DensityMatrix::basis(1, usize::from(bit)).expect("bit is 0 or 1");
    transmit(rotate(&rotate(&rho, &h), p.matrix()), channel)
}

/// `H P(-theta2)` applied to a received state.
pub fn decode(received: &DensityMatrix, theta2: f64) -> DensityMatrix {
    let p = make_gate(GateKind::P, Some(-theta2)).expect("finite angle");
    rotate(&rotate(received, p.matrix()), &hadamard())
}

struct Evaluator<'a> {
    received: DensityMatrix,
    post: Option<&'a CMatrix>,
    theta1: f64,
    readout: Readout,
}

struct Eval {
    angle: f64,
    p0: f64,
    p1: f64,
    reward: f64,
}

impl Evaluator<'_> {
    fn state(&self, theta2: f64) -> DensityMatrix {
        let rho = decode(&self.received, theta2);
        match self.post {
            Some(u) => rotate(&rho, u),
            None => rho,
        }
    }

    fn eval(&self, angle: f64, rng: &mut Generator) -> Result<Eval> {
        let dist = self.state(angle).probabilities();
        let est = self.readout.estimate(&dist, rng)?;
        let (p0, p1) = (est[0], est[1]);
        Ok(Eval {
            angle,
            p0,
            p1,
            reward: reward(p0, p1)?,
        })
    }
}

fn check_inputs(bit: u8, theta1: f64, config: &LearnerConfig) -> Result<()> {
    if bit > 1 {
        return Err(Error::Parse(format!("bit value {bit} is not 0 or 1")));
    }
    if !(0.0..=PI).contains(&theta1) {
        return Err(Error::OutOfRange {
            what: "theta1",
            value: theta1,
            lo: 0.0,
            hi: PI,
        });
    }
    if config.max_episodes == 0 {
        return Err(Error::ZeroCount("max_episodes"));
    }
    if config.epsilon.is_nan() || config.epsilon <= 0.0 {
        return Err(Error::OutOfRange {
            what: "epsilon",
            value: config.epsilon,
            lo: 0.0,
            hi: PI,
        });
    }
    Ok(())
}

fn push_record(
    log: &mut EpisodeLog,
    episode: usize,
    iv: &AngleInterval,
    best: &Eval,
    theta1: f64,
    target: f64,
) {
    let delta = theta1 - best.angle;
    log.records.push(EpisodeRecord {
        episode,
        n1: iv.n1,
        n2: iv.n2,
        n3: iv.n3,
        theta2: best.angle,
        delta_theta: delta,
        p0: best.p0,
        p1: best.p1,
        reward: best.reward,
        target_gap: (delta.abs() - target).abs(),
    });
}

/// Learns `theta2` for one key bit.
pub fn learn(
    version: QrlVersion,
    bit: u8,
    theta1: f64,
    channel: Option<&KrausChannel>,
    config: &LearnerConfig,
    seed: u64,
) -> Result<QrlRunResult> {
    learn_with(version, bit, theta1, channel, None, config, seed)
}

pub fn qrl_v1_learn(
    bit: u8,
    theta1: f64,
    channel: Option<&KrausChannel>,
    config: &LearnerConfig,
    seed: u64,
) -> Result<QrlRunResult> {
    learn(QrlVersion::V1, bit, theta1, channel, config, seed)
}

pub fn qrl_v2_learn(
    bit: u8,
    theta1: f64,
    channel: Option<&KrausChannel>,
    config: &LearnerConfig,
    seed: u64,
) -> Result<QrlRunResult> {
    learn(QrlVersion::V2, bit, theta1, channel, config, seed)
}

/// Same as [`learn`], with an extra unitary `post` applied before every measurement.
pub(crate) fn learn_with(
    version: QrlVersion,
    bit: u8,
    theta1: f64,
    channel: Option<&KrausChannel>,
    post: Option<&CMatrix>,
    config: &LearnerConfig,
    seed: u64,
) -> Result<QrlRunResult> {
    check_inputs(bit, theta1, config)?;
    let mut rng = generator(seed);
    let ev = Evaluator {
        received: encode(bit, theta1, channel),
        post,
        theta1,
        readout: config.reward_readout,
    };
    let mut qtable = QTable::default();
    let mut log = EpisodeLog::default();
    let interval = match version {
        QrlVersion::V1 => bisect(&ev, config, &mut qtable, &mut log, &mut rng)?,
        QrlVersion::V2 => bracket(&ev, config, &mut qtable, &mut log, &mut rng)?,
    };
    let (theta2_final, _) = qtable.best().expect("at least one episode ran");
    let final_state = ev.state(theta2_final);
    let dist = final_state.probabilities();
    let decoded_bit = config.final_readout.outcome(&dist, &mut rng)? as u8;
    Ok(QrlRunResult {
        theta1,
        theta2_final,
        decoded_bit,
        true_bit: bit,
        converged: log.convergence_episode.is_some(),
        p1: dist.p(1),
        interval,
        qtable,
        episode_log: log,
    })
}

fn bisect(
    ev: &Evaluator<'_>,
    config: &LearnerConfig,
    qtable: &mut QTable,
    log: &mut EpisodeLog,
    rng: &mut Generator,
) -> Result<AngleInterval> {
    let mut iv = AngleInterval::initial(PI / 2.0);
    for episode in 1..=config.max_episodes {
        let a = ev.eval((iv.n1 + iv.n2) / 2.0, rng)?;
        let b = ev.eval((iv.n2 + iv.n3) / 2.0, rng)?;
        qtable.record(a.angle, a.reward);
        qtable.record(b.angle, b.reward);
        let half = iv.width / 2.0;
        let (n1, n3, best) = if b.reward > a.reward {
            (iv.n2, iv.n3, &b)
        } else {
            (iv.n1, iv.n2, &a)
        };
        iv = AngleInterval {
            n1,
            n2: (n1 + n3) / 2.0,
            n3,
            width: half,
        };
        push_record(log, episode, &iv, best, ev.theta1, config.target);
        if iv.width < config.epsilon {
            log.convergence_episode = Some(episode);
            break;
        }
    }
    Ok(iv)
}

fn reduce(angle: f64) -> f64 {
    let r = angle.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

fn bracket(
    ev: &Evaluator<'_>,
    config: &LearnerConfig,
    qtable: &mut QTable,
    log: &mut EpisodeLog,
    rng: &mut Generator,
) -> Result<AngleInterval> {
    let n2 = rng.random_range(0.0..PI);
    let mut iv = AngleInterval::initial(n2);
    let seam = ev.eval(0.0, rng)?;
    let mut pivot = ev.eval(n2, rng)?;
    qtable.record(seam.angle, seam.reward);
    qtable.record(pivot.angle, pivot.reward);
    let mut seam = Some(seam);
    for episode in 1..=config.max_episodes {
        let x1 = iv.n1 + rng.random::<f64>() * (iv.n2 - iv.n1);
        let x2 = iv.n2 + rng.random::<f64>() * (iv.n3 - iv.n2);
        let mut a = ev.eval(reduce(x1), rng)?;
        let mut b = ev.eval(reduce(x2), rng)?;
        qtable.record(a.angle, a.reward);
        qtable.record(b.angle, b.reward);
        a.angle = x1;
        b.angle = x2;
        let seam_wins = seam
            .as_ref()
            .is_some_and(|s| s.reward > a.reward.max(b.reward).max(pivot.reward));
        let next = if seam_wins {
            let s = seam.take().expect("checked above");
            (AngleInterval::new(x2 - PI, 0.0, x1), s)
        } else if a.reward >= pivot.reward && a.reward >= b.reward {
            (AngleInterval::new(iv.n1, x1, iv.n2), a)
        } else if b.reward > pivot.reward {
            (AngleInterval::new(iv.n2, x2, iv.n3), b)
        } else {
            (AngleInterval::new(x1, iv.n2, x2), pivot)
        };
        seam = None;
        iv = next.0;
        pivot = next.1;
        let shown = Eval {
            angle: reduce(pivot.angle),
            ..pivot
        };
        push_record(log, episode, &iv, &shown, ev.theta1, config.target);
        if iv.width < config.epsilon {
            log.convergence_episode = Some(episode);
            break;
        }
    }
    Ok(iv)
}

/// Learner run for each key position with a fresh random bit and secret phase.
pub fn qrl_keygen(
    version: QrlVersion,
    n: usize,
    channel: Option<&KrausChannel>,
    config: &LearnerConfig,
    seed: u64,
) -> Result<ProtocolTranscript> {
    Ok(keygen_with(version, n, channel, None, config, seed)?.0)
}

pub(crate) fn keygen_with(
    version: QrlVersion,
    n: usize,
    channel: Option<&KrausChannel>,
    post: Option<&CMatrix>,
    config: &LearnerConfig,
    seed: u64,
) -> Result<(ProtocolTranscript, Vec<QrlRunResult>)> {
    if n == 0 {
        return Err(Error::ZeroCount("bit count"));
    }
    let mut out = TranscriptBuilder::with_capacity(n);
    let mut runs = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = generator(derive_indexed(seed, "position", i));
        let bit = u8::from(rng.random::<bool>());
        let theta1 = rng.random_range(0.0..=PI);
        let run = learn_with(version, bit, theta1, channel, post, config, rng.random())?;
        out.push(bit, None, None, run.decoded_bit, run.converged, run.p1);
        runs.push(run);
    }
    Ok((out.finish(seed), runs))
}
