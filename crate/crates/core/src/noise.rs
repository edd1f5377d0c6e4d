//! Single-qubit noise channels in Kraus form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{c, identity, make_gate, CMatrix, DensityMatrix, GateKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    BitFlip,
    PhaseFlip,
    BitPhaseFlip,
    Depolarizing,
    AmplitudeDamping,
    PhaseDamping,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 6] = [
        ChannelKind::BitFlip,
        ChannelKind::PhaseFlip,
        ChannelKind::BitPhaseFlip,
        ChannelKind::Depolarizing,
        ChannelKind::AmplitudeDamping,
        ChannelKind::PhaseDamping,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::BitFlip => "bit-flip",
            ChannelKind::PhaseFlip => "phase-flip",
            ChannelKind::BitPhaseFlip => "bit-phase-flip",
            ChannelKind::Depolarizing => "depolarizing",
            ChannelKind::AmplitudeDamping => "amplitude-damping",
            ChannelKind::PhaseDamping => "phase-damping",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        ChannelKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::Parse(format!("unknown channel kind `{s}`")))
    }
}

/// A channel at a fixed strength together with its Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    kind: ChannelKind,
    strength: f64,
    operators: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    /// `max |(sum_k K_k^dagger K_k - I)_ij|`.
    pub fn completeness_error(&self) -> f64 {
        let sum = self
            .operators
            .iter()
            .fold(CMatrix::zeros(2, 2), |acc, k| acc + k.adjoint() * k);
        (sum - identity(2))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

pub fn build_channel(kind: ChannelKind, strength: f64) -> Result<KrausChannel> {
    if !strength.is_finite() || !(0.0..=1.0).contains(&strength) {
        return Err(Error::OutOfRange {
            what: "channel strength",
            value: strength,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let p = strength;
    let pauli = |g: GateKind| make_gate(g, None).map(|g| g.matrix().clone());
    let scaled = |m: CMatrix, w: f64| m * c(w.sqrt(), 0.0);
    let m2 = |a: f64, b: f64, cc: f64, d: f64| {
        CMatrix::from_row_slice(2, 2, &[c(a, 0.0), c(b, 0.0), c(cc, 0.0), c(d, 0.0)])
    };
    let flip = |g: GateKind| -> Result<Vec<CMatrix>> {
        Ok(vec![scaled(identity(2), 1.0 - p), scaled(pauli(g)?, p)])
    };
    let operators = match kind {
        ChannelKind::BitFlip => flip(GateKind::X)?,
        ChannelKind::PhaseFlip => flip(GateKind::Z)?,
        ChannelKind::BitPhaseFlip => flip(GateKind::Y)?,
        ChannelKind::Depolarizing => vec![
            scaled(identity(2), 1.0 - 0.75 * p),
            scaled(pauli(GateKind::X)?, p / 4.0),
            scaled(pauli(GateKind::Y)?, p / 4.0),
            scaled(pauli(GateKind::Z)?, p / 4.0),
        ],
        ChannelKind::AmplitudeDamping => vec![
            m2(1.0, 0.0, 0.0, (1.0 - p).sqrt()),
            m2(0.0, p.sqrt(), 0.0, 0.0),
        ],
        ChannelKind::PhaseDamping => vec![
            m2(1.0, 0.0, 0.0, (1.0 - p).sqrt()),
            m2(0.0, 0.0, 0.0, p.sqrt()),
        ],
    };
    Ok(KrausChannel {
        kind,
        strength,
        operators,
    })
}

pub fn apply_channel(
    state: &DensityMatrix,
    channel: &KrausChannel,
    target: usize,
) -> Result<DensityMatrix> {
    state.apply_kraus(channel.operators(), target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::TOLERANCE;

    fn close(a: &DensityMatrix, b: &DensityMatrix) -> bool {
        (a.matrix() - b.matrix())
            .iter()
            .all(|z| z.norm() < TOLERANCE)
    }

    #[test]
    fn names_round_trip() {
        for k in ChannelKind::ALL {
            assert_eq!(k.name().parse::<ChannelKind>().unwrap(), k);
        }
        assert!("thermal".parse::<ChannelKind>().is_err());
    }

    #[test]
    fn completeness_on_grid() {
        for k in ChannelKind::ALL {
            for i in 0..=10 {
                let ch = build_channel(k, i as f64 / 10.0).unwrap();
                assert!(ch.completeness_error() < TOLERANCE, "{k} {i}");
            }
        }
        assert!(build_channel(ChannelKind::BitFlip, 1.1).is_err());
        assert!(build_channel(ChannelKind::BitFlip, f64::NAN).is_err());
    }

    #[test]
    fn textbook_cases() {
        let zero = DensityMatrix::basis(1, 0).unwrap();
        let one = DensityMatrix::basis(1, 1).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        let apply =
            |k, p, s: &DensityMatrix| apply_channel(s, &build_channel(k, p).unwrap(), 0).unwrap();
        assert!(close(&apply(ChannelKind::BitFlip, 0.0, &one), &one));
        assert!(close(&apply(ChannelKind::BitFlip, 1.0, &zero), &one));
        assert!(close(
            &apply(ChannelKind::AmplitudeDamping, 1.0, &one),
            &zero
        ));
        assert!(close(&apply(ChannelKind::PhaseFlip, 0.37, &zero), &zero));
        let p1 = apply(ChannelKind::BitFlip, 0.3, &zero).probabilities().p(1);
        assert!((p1 - 0.3).abs() < TOLERANCE);
        let plus = DensityMatrix::from_pure(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        assert!(close(&apply(ChannelKind::Depolarizing, 1.0, &plus), &mixed));
    }

    #[test]
    fn acts_on_chosen_qubit() {
        let rho = DensityMatrix::zero(2).unwrap();
        let ch = build_channel(ChannelKind::BitFlip, 1.0).unwrap();
        let out = apply_channel(&rho, &ch, 1).unwrap();
        assert!((out.probabilities().p(1) - 1.0).abs() < TOLERANCE);
        assert!(apply_channel(&rho, &ch, 2).is_err());
    }
}
