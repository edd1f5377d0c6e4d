//! Classical records shared by every protocol.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered bits, each 0 or 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Parse(format!("bit value {b} is not 0 or 1")));
        }
        Ok(Self(bits))
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        Self(bits.into_iter().map(u8::from).collect())
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    /// Bits at the positions where `mask` is set.
    pub fn select(&self, mask: &[bool]) -> Result<BitString> {
        if mask.len() != self.0.len() {
            return Err(Error::LengthMismatch {
                left: self.0.len(),
                right: mask.len(),
            });
        }
        Ok(Self(
            self.0
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(&b, _)| b)
                .collect(),
        ))
    }
}

impl Deref for BitString {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl TryFrom<Vec<u8>> for BitString {
    type Error = Error;

    fn try_from(bits: Vec<u8>) -> Result<Self> {
        Self::new(bits)
    }
}

impl From<BitString> for Vec<u8> {
    fn from(b: BitString) -> Self {
        b.0
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::Parse(format!("`{ch}` in bit string"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Self)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    Rectilinear,
    Diagonal,
}

impl Basis {
    pub fn from_bit(diagonal: bool) -> Self {
        if diagonal {
            Basis::Diagonal
        } else {
            Basis::Rectilinear
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Basis::Rectilinear => '+',
            Basis::Diagonal => 'x',
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Basis::Rectilinear => 0,
            Basis::Diagonal => 1,
        }
    }
}

pub type BasisString = Vec<Basis>;

/// Everything Alice and Bob hold after one protocol run.
///
/// `bob_bits` holds Bob's decision at every position: the decoded bit where
/// the round was conclusive and the raw measurement outcome elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub alice_bits: BitString,
    pub alice_bases: Option<BasisString>,
    pub bob_bases: Option<BasisString>,
    pub bob_bits: BitString,
    pub conclusive_mask: Vec<bool>,
    pub sifted_key: BitString,
    /// Exact probability that Bob's decision is 1, taken before sampling.
    pub scores: Vec<f64>,
    pub seed: u64,
}

impl ProtocolTranscript {
    pub fn len(&self) -> usize {
        self.alice_bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice_bits.is_empty()
    }

    pub fn sifted_alice(&self) -> BitString {
        self.alice_bits
            .select(&self.conclusive_mask)
            .expect("transcript lengths are consistent")
    }

    pub fn sift_fraction(&self) -> f64 {
        self.sifted_key.len() as f64 / self.len() as f64
    }

    /// Checks that all per-position lists agree in length.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let lens = [
            self.bob_bits.len(),
            self.conclusive_mask.len(),
            self.scores.len(),
            self.alice_bases.as_ref().map_or(n, Vec::len),
            self.bob_bases.as_ref().map_or(n, Vec::len),
        ];
        if let Some(&bad) = lens.iter().find(|&&l| l != n) {
            return Err(Error::LengthMismatch {
                left: n,
                right: bad,
            });
        }
        let kept = self.conclusive_mask.iter().filter(|&&m| m).count();
        if kept != self.sifted_key.len() {
            return Err(Error::LengthMismatch {
                left: kept,
                right: self.sifted_key.len(),
            });
        }
        if self.scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::InvalidState("score outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// Assembles a transcript, deriving the sifted key from the mask.
pub(crate) struct TranscriptBuilder {
    alice_bits: Vec<u8>,
    alice_bases: Vec<Basis>,
    bob_bases: Vec<Basis>,
    bob_bits: Vec<u8>,
    mask: Vec<bool>,
    scores: Vec<f64>,
}

impl TranscriptBuilder {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            alice_bits: Vec::with_capacity(n),
            alice_bases: Vec::with_capacity(n),
            bob_bases: Vec::with_capacity(n),
            bob_bits: Vec::with_capacity(n),
            mask: Vec::with_capacity(n),
            scores: Vec::with_capacity(n),
        }
    }

    pub fn push(
        &mut self,
        alice_bit: u8,
        alice_basis: Option<Basis>,
        bob_basis: Option<Basis>,
        bob_bit: u8,
        conclusive: bool,
        score: f64,
    ) {
        self.alice_bits.push(alice_bit);
        if let Some(b) = alice_basis {
            self.alice_bases.push(b);
        }
        if let Some(b) = bob_basis {
            self.bob_bases.push(b);
        }
        self.bob_bits.push(bob_bit);
        self.mask.push(conclusive);
        self.scores.push(score.clamp(0.0, 1.0));
    }

    pub fn finish(self, seed: u64) -> ProtocolTranscript {
        let opt = |v: Vec<Basis>| (!v.is_empty()).then_some(v);
        let bob_bits = BitString(self.bob_bits);
        let sifted_key = bob_bits.select(&self.mask).expect("equal lengths");
        ProtocolTranscript {
            alice_bits: BitString(self.alice_bits),
            alice_bases: opt(self.alice_bases),
            bob_bases: opt(self.bob_bases),
            bob_bits,
            conclusive_mask: self.mask,
            sifted_key,
            scores: self.scores,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_string_parse_and_select() {
        let b: BitString = "0110".parse().unwrap();
        assert_eq!(b.to_string(), "0110");
        assert_eq!(
            b.select(&[true, false, true, false]).unwrap().bits(),
            &[0, 1]
        );
        assert!(b.select(&[true]).is_err());
        assert!("012".parse::<BitString>().is_err());
        assert!(BitString::new(vec![0, 2]).is_err());
    }

    #[test]
    fn builder_sifts() {
        let mut t = TranscriptBuilder::with_capacity(3);
        t.push(1, None, Some(Basis::Diagonal), 1, true, 0.9);
        t.push(0, None, Some(Basis::Rectilinear), 1, false, 0.4);
        t.push(0, None, Some(Basis::Rectilinear), 0, true, 0.0);
        let tr = t.finish(4);
        assert!(tr.alice_bases.is_none());
        assert_eq!(tr.sifted_key.bits(), &[1, 0]);
        assert_eq!(tr.sifted_alice().bits(), &[1, 0]);
        tr.validate().unwrap();
    }
}
