//! Binary-classification metrics over protocol transcripts.
//!
//! Bit 1 is the positive class. Ratios with a zero denominator evaluate to 0
//! and carry `defined = false`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transcript::ProtocolTranscript;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn correct(&self) -> u64 {
        self.tp + self.tn
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

fn check_lengths(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    Ok(())
}

pub fn confusion(truth: &[u8], predicted: &[u8]) -> Result<ConfusionMatrix> {
    check_lengths(truth.len(), predicted.len())?;
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in truth.iter().zip(predicted) {
        match (t != 0, p != 0) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// A ratio that may have had a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub value: f64,
    pub defined: bool,
}

impl Ratio {
    pub fn of(num: f64, den: f64) -> Self {
        if den > 0.0 {
            Self {
                value: num / den,
                defined: true,
            }
        } else {
            Self {
                value: 0.0,
                defined: false,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarMetrics {
    pub accuracy: f64,
    pub precision: Ratio,
    pub recall: Ratio,
    pub f1: Ratio,
}

pub fn scalar_metrics(cm: &ConfusionMatrix) -> Result<ScalarMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Empty("confusion matrix"));
    }
    let precision = Ratio::of(cm.tp as f64, (cm.tp + cm.fp) as f64);
    let recall = Ratio::of(cm.tp as f64, (cm.tp + cm.fn_) as f64);
    let f1 = if precision.defined && recall.defined {
        Ratio::of(
            2.0 * precision.value * recall.value,
            precision.value + recall.value,
        )
    } else {
        Ratio {
            value: 0.0,
            defined: false,
        }
    };
    Ok(ScalarMetrics {
        accuracy: cm.correct() as f64 / total as f64,
        precision,
        recall,
        f1,
    })
}

/// Mismatch fraction over the masked positions, or over all positions.
pub fn qber(truth: &[u8], predicted: &[u8], mask: Option<&[bool]>) -> Result<f64> {
    check_lengths(truth.len(), predicted.len())?;
    if let Some(m) = mask {
        check_lengths(truth.len(), m.len())?;
    }
    let keep = |i: usize| mask.is_none_or(|m| m[i]);
    let (errors, compared) = (0..truth.len())
        .filter(|&i| keep(i))
        .fold((0u64, 0u64), |(e, n), i| {
            (e + u64::from(truth[i] != predicted[i]), n + 1)
        });
    if compared == 0 {
        return Err(Error::Empty("QBER comparison set"));
    }
    Ok(errors as f64 / compared as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

fn class_counts(truth: &[u8]) -> Result<(usize, usize)> {
    let pos = truth.iter().filter(|&&t| t != 0).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

fn check_scores(scores: &[f64]) -> Result<()> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    Ok(())
}

/// Threshold sweep over the distinct scores, highest first; AUC by trapezoid.
pub fn roc(truth: &[u8], scores: &[f64]) -> Result<RocCurve> {
    check_lengths(truth.len(), scores.len())?;
    check_scores(scores)?;
    let (pos, neg) = class_counts(truth)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] != 0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

/// Probability that a random positive outscores a random negative, ties counted half.
pub fn rank_auc(truth: &[u8], scores: &[f64]) -> Result<f64> {
    check_lengths(truth.len(), scores.len())?;
    check_scores(scores)?;
    let (pos, neg) = class_counts(truth)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j share their average
        let avg = (i + 1 + j) as f64 / 2.0;
        rank_sum += avg * order[i..j].iter().filter(|&&k| truth[k] != 0).count() as f64;
        i = j;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}

/// Metrics over one position set of one transcript.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScopeMetrics {
    pub confusion: ConfusionMatrix,
    pub scalars: ScalarMetrics,
}

impl ScopeMetrics {
    fn new(truth: &[u8], predicted: &[u8]) -> Result<Self> {
        let confusion = confusion(truth, predicted)?;
        Ok(Self {
            confusion,
            scalars: scalar_metrics(&confusion)?,
        })
    }
}

/// `key` covers sifted positions, `raw` covers every position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub key: Option<ScopeMetrics>,
    pub raw: ScopeMetrics,
    pub qber_sifted: Option<f64>,
    pub qber_all: f64,
    pub sift_fraction: f64,
}

pub fn evaluate(t: &ProtocolTranscript) -> Result<SampleMetrics> {
    t.validate()?;
    let raw = ScopeMetrics::new(&t.alice_bits, &t.bob_bits)?;
    let alice = t.sifted_alice();
    let key = if t.sifted_key.is_empty() {
        None
    } else {
        Some(ScopeMetrics::new(&alice, &t.sifted_key)?)
    };
    Ok(SampleMetrics {
        key,
        raw,
        qber_sifted: key.map(|_| qber(&alice, &t.sifted_key, None)).transpose()?,
        qber_all: qber(&t.alice_bits, &t.bob_bits, None)?,
        sift_fraction: t.sift_fraction(),
    })
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            count: values.len(),
        }
    }

    /// False when no sample contributed a value.
    pub fn is_defined(&self) -> bool {
        self.count > 0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
}

impl BlockSummary {
    fn of<'a>(scopes: impl Iterator<Item = &'a ScopeMetrics> + Clone) -> Self {
        let col = |f: fn(&ScalarMetrics) -> f64| {
            MeanStd::of(&scopes.clone().map(|s| f(&s.scalars)).collect::<Vec<_>>())
        };
        Self {
            accuracy: col(|m| m.accuracy),
            precision: col(|m| m.precision.value),
            recall: col(|m| m.recall.value),
            f1: col(|m| m.f1.value),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub samples: usize,
    pub key: BlockSummary,
    pub raw: BlockSummary,
    pub qber_sifted: MeanStd,
    pub qber_all: MeanStd,
    pub sift_fraction: MeanStd,
}

/// Aggregates per-sample metrics; samples with an empty sifted key are left
/// out of the key block and of `qber_sifted`.
pub fn summarize(samples: &[SampleMetrics]) -> Result<MetricsSummary> {
    if samples.is_empty() {
        return Err(Error::Empty("sample list"));
    }
    let keyed: Vec<&ScopeMetrics> = samples.iter().filter_map(|s| s.key.as_ref()).collect();
    Ok(MetricsSummary {
        samples: samples.len(),
        key: BlockSummary::of(keyed.iter().copied()),
        raw: BlockSummary::of(samples.iter().map(|s| &s.raw)),
        qber_sifted: MeanStd::of(
            &samples
                .iter()
                .filter_map(|s| s.qber_sifted)
                .collect::<Vec<_>>(),
        ),
        qber_all: MeanStd::of(&samples.iter().map(|s| s.qber_all).collect::<Vec<_>>()),
        sift_fraction: MeanStd::of(&samples.iter().map(|s| s.sift_fraction).collect::<Vec<_>>()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    Key,
    Raw,
}

/// Truth bits and scores pooled over transcripts for the given scope.
pub fn pooled_scores(transcripts: &[ProtocolTranscript], scope: Scope) -> (Vec<u8>, Vec<f64>) {
    let mut truth = Vec::new();
    let mut scores = Vec::new();
    for t in transcripts {
        for i in 0..t.len() {
            if scope == Scope::Raw || t.conclusive_mask[i] {
                truth.push(t.alice_bits[i]);
                scores.push(t.scores[i]);
            }
        }
    }
    (truth, scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<u8> {
        s.bytes().map(|b| b - b'0').collect()
    }

    #[test]
    fn confusion_examples() {
        let cm = confusion(&bits("0101"), &bits("0101")).unwrap();
        assert_eq!((cm.tp, cm.tn, cm.fp, cm.fn_), (2, 2, 0, 0));
        let cm = confusion(&bits("0101"), &bits("1010")).unwrap();
        assert_eq!((cm.tp, cm.tn, cm.fp, cm.fn_), (0, 0, 2, 2));
        assert!(confusion(&bits("01"), &bits("0")).is_err());
        let cm = ConfusionMatrix {
            tp: 43,
            tn: 32,
            fp: 13,
            fn_: 12,
        };
        assert_eq!(scalar_metrics(&cm).unwrap().accuracy, 0.75);
    }

    #[test]
    fn scalar_examples() {
        let m = scalar_metrics(&ConfusionMatrix {
            tp: 25,
            fp: 25,
            tn: 25,
            fn_: 25,
        })
        .unwrap();
        assert_eq!(
            (m.accuracy, m.precision.value, m.recall.value, m.f1.value),
            (0.5, 0.5, 0.5, 0.5)
        );
        let m = scalar_metrics(&ConfusionMatrix {
            tp: 3,
            tn: 4,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(m.f1.value, 1.0);
        let m = scalar_metrics(&ConfusionMatrix {
            fn_: 3,
            ..Default::default()
        })
        .unwrap();
        assert!(!m.precision.defined && m.precision.value == 0.0);
        assert!(m.recall.defined && m.recall.value == 0.0);
        assert!(!m.f1.defined);
        assert!(scalar_metrics(&ConfusionMatrix::default()).is_err());
    }

    #[test]
    fn qber_examples() {
        assert_eq!(qber(&bits("0101"), &bits("0101"), None).unwrap(), 0.0);
        assert_eq!(qber(&bits("0101"), &bits("1010"), None).unwrap(), 1.0);
        assert_eq!(qber(&bits("0101"), &bits("0111"), None).unwrap(), 0.25);
        let mask = [true, false, false, true];
        assert_eq!(
            qber(&bits("0101"), &bits("0111"), Some(&mask)).unwrap(),
            0.0
        );
        assert!(qber(&bits("01"), &bits("01"), Some(&[false, false])).is_err());
    }

    #[test]
    fn roc_examples() {
        let truth = bits("0011");
        let r = roc(&truth, &[0.1, 0.2, 0.8, 0.9]).unwrap();
        assert_eq!(r.auc, 1.0);
        assert_eq!(r.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(r.points.last(), Some(&(1.0, 1.0)));
        let flat = roc(&truth, &[0.5; 4]).unwrap();
        assert_eq!(flat.auc, 0.5);
        assert_eq!(rank_auc(&truth, &[0.5; 4]).unwrap(), 0.5);
        assert_eq!(roc(&bits("111"), &[0.1, 0.2, 0.3]), Err(Error::SingleClass));
        let s = [0.3, 0.3, 0.1, 0.7, 0.3, 0.9];
        let t = bits("010110");
        assert!((roc(&t, &s).unwrap().auc - rank_auc(&t, &s).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn population_std() {
        let m = MeanStd::of(&[1.0, 3.0]);
        assert_eq!((m.mean, m.std, m.count), (2.0, 1.0, 2));
    }
}
