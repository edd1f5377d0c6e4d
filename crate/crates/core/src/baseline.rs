//! BB84 and B92 with sifting, QBER estimation and an intercept-resend attacker.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{apply_channel, KrausChannel};
use crate::rng::{generator, Generator};
use crate::state::{make_gate, CMatrix, DensityMatrix, GateKind, Readout};
use crate::transcript::{Basis, ProtocolTranscript, TranscriptBuilder};

/// Abort threshold commonly used for BB84.
pub const DEFAULT_THRESHOLD: f64 = 0.11;

/// How B92 outcomes are turned into key bits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum B92Mode {
    /// Z outcome 1 means bit 1, X outcome `|->` means bit 0, anything else is inconclusive.
    #[default]
    Standard,
    /// Z outcome 0 means bit 0, X outcome `|->` means bit 1.
    Paper,
}

/// Quantum channel and readout shared by all rounds of a run.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Link<'a> {
    pub channel: Option<&'a KrausChannel>,
    pub readout: Readout,
}

pub(crate) fn hadamard() -> CMatrix {
    make_gate(GateKind::H, None)
        .expect("H takes no angle")
        .matrix()
        .clone()
}

pub(crate) fn transmit(rho: DensityMatrix, channel: Option<&KrausChannel>) -> DensityMatrix {
    match channel {
        Some(ch) => apply_channel(&rho, ch, 0).expect("single-qubit channel on qubit 0"),
        None => rho,
    }
}

pub(crate) fn rotate(rho: &DensityMatrix, u: &CMatrix) -> DensityMatrix {
    rho.apply_unitary(u, &[0]).expect("single-qubit unitary")
}

/// Prepares `|bit>` in the given BB84 basis.
pub(crate) fn encode_bb84(bit: u8, basis: Basis, h: &CMatrix) -> DensityMatrix {
    let rho = DensityMatrix::basis(1, bit as usize).expect("valid basis index");
    match basis {
        Basis::Rectilinear => rho,
        Basis::Diagonal => rotate(&rho, h),
    }
}

/// One BB84 round up to, but not including, any post-decoding circuit.
#[derive(Debug, Clone)]
pub(crate) struct Bb84Round {
    pub bit: u8,
    pub alice_basis: Basis,
    pub bob_basis: Basis,
    /// State after Bob's basis rotation.
    pub decoded: DensityMatrix,
}

pub(crate) fn bb84_round(
    rng: &mut Generator,
    eve: bool,
    channel: Option<&KrausChannel>,
    h: &CMatrix,
) -> Bb84Round {
    let bit = u8::from(rng.random::<bool>());
    let alice_basis = Basis::from_bit(rng.random());
    let bob_basis = Basis::from_bit(rng.random());
    let mut rho = encode_bb84(bit, alice_basis, h);
    if eve {
        let eve_basis = Basis::from_bit(rng.random());
        let seen = match eve_basis {
            Basis::Rectilinear => rho,
            Basis::Diagonal => rotate(&rho, h),
        };
        let p1 = seen.probabilities().p(1);
        let outcome = u8::from(rng.random::<f64>() < p1);
        rho = encode_bb84(outcome, eve_basis, h);
    }
    rho = transmit(rho, channel);
    if bob_basis == Basis::Diagonal {
        rho = rotate(&rho, h);
    }
    Bb84Round {
        bit,
        alice_basis,
        bob_basis,
        decoded: rho,
    }
}

pub(crate) fn bb84_with(
    n: usize,
    eve: bool,
    link: Link<'_>,
    post: Option<&CMatrix>,
    seed: u64,
) -> Result<ProtocolTranscript> {
    if n == 0 {
        return Err(Error::ZeroCount("bit count"));
    }
    let mut rng = generator(seed);
    let h = hadamard();
    let mut out = TranscriptBuilder::with_capacity(n);
    for _ in 0..n {
        let round = bb84_round(&mut rng, eve, link.channel, &h);
        let rho = match post {
            Some(u) => rotate(&round.decoded, u),
            None => round.decoded,
        };
        let dist = rho.probabilities();
        let outcome = link.readout.outcome(&dist, &mut rng)? as u8;
        out.push(
            round.bit,
            Some(round.alice_basis),
            Some(round.bob_basis),
            outcome,
            round.alice_basis == round.bob_basis,
            dist.p(1),
        );
    }
    Ok(out.finish(seed))
}

/// Runs `n` BB84 rounds. Bob's bit at each position is the readout of his
/// measurement; positions where the bases agree form the sifted key.
pub fn bb84_run(
    n: usize,
    channel: Option<&KrausChannel>,
    eve: bool,
    readout: Readout,
    seed: u64,
) -> Result<ProtocolTranscript> {
    bb84_with(n, eve, Link { channel, readout }, None, seed)
}

/// One B92 round up to Bob's basis rotation.
#[derive(Debug, Clone)]
pub(crate) struct B92Round {
    pub bit: u8,
    pub bob_basis: Basis,
    pub decoded: DensityMatrix,
}

pub(crate) fn b92_round(
    rng: &mut Generator,
    channel: Option<&KrausChannel>,
    h: &CMatrix,
) -> B92Round {
    let bit = u8::from(rng.random::<bool>());
    let bob_basis = Basis::from_bit(rng.random());
    let mut rho = DensityMatrix::zero(1).expect("one qubit");
    if bit == 1 {
        rho = rotate(&rho, h);
    }
    rho = transmit(rho, channel);
    if bob_basis == Basis::Diagonal {
        rho = rotate(&rho, h);
    }
    B92Round {
        bit,
        bob_basis,
        decoded: rho,
    }
}

/// Bob's decision for a raw B92 outcome: `(bit, conclusive)`.
pub fn b92_decide(mode: B92Mode, basis: Basis, outcome: u8) -> (u8, bool) {
    match (mode, basis, outcome) {
        (B92Mode::Standard, Basis::Rectilinear, 1) => (1, true),
        (B92Mode::Standard, Basis::Diagonal, 1) => (0, true),
        (B92Mode::Paper, Basis::Rectilinear, 0) => (0, true),
        (B92Mode::Paper, Basis::Diagonal, 1) => (1, true),
        (_, _, o) => (o, false),
    }
}

/// Probability that Bob's decision is 1 given his outcome distribution.
pub(crate) fn b92_score(mode: B92Mode, basis: Basis, p: [f64; 2]) -> f64 {
    (0..2u8)
        .filter(|&o| b92_decide(mode, basis, o).0 == 1)
        .map(|o| p[o as usize])
        .sum()
}

pub(crate) fn b92_with(
    n: usize,
    link: Link<'_>,
    mode: B92Mode,
    post: Option<&CMatrix>,
    seed: u64,
) -> Result<ProtocolTranscript> {
    if n == 0 {
        return Err(Error::ZeroCount("bit count"));
    }
    let mut rng = generator(seed);
    let h = hadamard();
    let mut out = TranscriptBuilder::with_capacity(n);
    for _ in 0..n {
        let round = b92_round(&mut rng, link.channel, &h);
        let rho = match post {
            Some(u) => rotate(&round.decoded, u),
            None => round.decoded,
        };
        let dist = rho.probabilities();
        let outcome = link.readout.outcome(&dist, &mut rng)? as u8;
        let (bit, conclusive) = b92_decide(mode, round.bob_basis, outcome);
        let score = b92_score(mode, round.bob_basis, [dist.p(0), dist.p(1)]);
        out.push(
            round.bit,
            None,
            Some(round.bob_basis),
            bit,
            conclusive,
            score,
        );
    }
    Ok(out.finish(seed))
}

/// Runs `n` B92 rounds: Alice sends `|0>` for 0 and `|+>` for 1, Bob measures
/// in a random basis and keeps only conclusive outcomes.
pub fn b92_run(
    n: usize,
    channel: Option<&KrausChannel>,
    readout: Readout,
    seed: u64,
    mode: B92Mode,
) -> Result<ProtocolTranscript> {
    b92_with(n, Link { channel, readout }, mode, None, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QberReport {
    pub qber: f64,
    pub checked_bits: usize,
    pub aborted: bool,
    pub threshold: f64,
}

/// Compares a random subset of the sifted key against Alice's bits.
pub fn estimate_qber(
    transcript: &ProtocolTranscript,
    sample_fraction: f64,
    threshold: f64,
    seed: u64,
) -> Result<QberReport> {
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(Error::OutOfRange {
            what: "sample fraction",
            value: sample_fraction,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::OutOfRange {
            what: "threshold",
            value: threshold,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let alice = transcript.sifted_alice();
    let bob = &transcript.sifted_key;
    if bob.is_empty() {
        return Err(Error::Empty("sifted key"));
    }
    let total = bob.len();
    let checked = ((sample_fraction * total as f64).ceil() as usize).clamp(1, total);
    let picks: Vec<usize> = if checked == total {
        (0..total).collect()
    } else {
        sample(&mut generator(seed), total, checked).into_vec()
    };
    let errors = picks.iter().filter(|&&i| alice[i] != bob[i]).count();
    let qber = errors as f64 / checked as f64;
    Ok(QberReport {
        qber,
        checked_bits: checked,
        aborted: qber > threshold,
        threshold,
    })
}
