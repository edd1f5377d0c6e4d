//! CSV and JSON outputs.
//!
//! Every CSV starts with a `# seed=..., config_hash=...` comment line followed
//! by a header row. Numbers use Rust's shortest round-trip formatting, so
//! identical runs produce byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use qkd_core::metrics::{pooled_scores, roc, BlockSummary, MeanStd, Scope, ScopeMetrics};
use qkd_core::qrl::{EpisodeLog, QrlVersion};
use qkd_core::transcript::Basis;

use crate::config::{ExperimentConfig, QberDef};
use crate::experiment::{ConvergenceTrial, ProtocolOutcome, SweepRow};

/// Collects the files written by one invocation.
pub struct Report<'a> {
    dir: PathBuf,
    config: &'a ExperimentConfig,
    hash: String,
    written: Vec<String>,
}

impl<'a> Report<'a> {
    pub fn new(config: &'a ExperimentConfig) -> anyhow::Result<Self> {
        let dir = config.out.clone();
        fs::create_dir_all(&dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir,
            config,
            hash: config.hash(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }

    pub fn csv<I>(&mut self, name: &str, header: &[String], rows: I) -> anyhow::Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(
            out,
            "# seed={}, config_hash={}",
            self.config.seed, self.hash
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes `<command>_manifest.json` listing the config and every output.
    pub fn manifest<T: Serialize>(
        &mut self,
        command: &str,
        results: &T,
    ) -> anyhow::Result<PathBuf> {
        let name = format!("{command}_manifest.json");
        let manifest = Manifest {
            command,
            schema_version: self.config.schema_version,
            config_hash: &self.hash,
            seed: self.config.seed,
            config: self.config,
            outputs: &self.written,
            results,
        };
        let path = self.dir.join(&name);
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    command: &'a str,
    schema_version: u32,
    config_hash: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
    outputs: &'a [String],
    results: &'a T,
}

fn s<T: ToString>(v: T) -> String {
    v.to_string()
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn basis(b: Option<&Vec<Basis>>, i: usize) -> String {
    b.map_or(String::new(), |v| v[i].symbol().to_string())
}

fn scope_cells(m: Option<&ScopeMetrics>) -> Vec<String> {
    match m {
        Some(m) => vec![
            s(m.scalars.accuracy),
            s(m.scalars.precision.value),
            s(m.scalars.recall.value),
            s(m.scalars.f1.value),
        ],
        None => vec![String::new(); 4],
    }
}

/// Empty when no sample contributed a value.
fn stat(m: &MeanStd, pick: fn(&MeanStd) -> f64) -> String {
    if m.is_defined() {
        s(pick(m))
    } else {
        String::new()
    }
}

fn block_cells(b: &BlockSummary, pick: fn(&MeanStd) -> f64) -> Vec<String> {
    [b.accuracy, b.precision, b.recall, b.f1]
        .iter()
        .map(|m| stat(m, pick))
        .collect()
}

/// `mean ± std` to three places, or `n/a` when undefined.
pub fn mean_std(m: &MeanStd) -> String {
    if m.is_defined() {
        format!("{:.3} ± {:.3}", m.mean, m.std)
    } else {
        "n/a".to_string()
    }
}

/// Transcript, metrics, confusion, ROC and, when present, training files for one run.
pub fn write_outcome(report: &mut Report<'_>, o: &ProtocolOutcome) -> anyhow::Result<()> {
    let p = o.protocol.name();
    let rows = o.transcripts.iter().enumerate().flat_map(|(k, t)| {
        (0..t.len()).map(move |i| {
            vec![
                s(k),
                s(i),
                s(t.alice_bits[i]),
                basis(t.alice_bases.as_ref(), i),
                basis(t.bob_bases.as_ref(), i),
                s(t.bob_bits[i]),
                s(u8::from(t.conclusive_mask[i])),
                s(t.scores[i]),
            ]
        })
    });
    report.csv(
        &format!("{p}_transcripts.csv"),
        &header(&[
            "sample",
            "position",
            "alice_bit",
            "alice_basis",
            "bob_basis",
            "bob_bit",
            "sifted",
            "score",
        ]),
        rows,
    )?;

    let mut rows: Vec<Vec<String>> = o
        .samples
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let mut r = vec![s(k)];
            r.extend(scope_cells(m.key.as_ref()));
            r.extend(scope_cells(Some(&m.raw)));
            r.push(m.qber_sifted.map_or(String::new(), s));
            r.push(s(m.qber_all));
            r.push(s(m.sift_fraction));
            r
        })
        .collect();
    for (label, pick) in [
        ("mean", (|m: &MeanStd| m.mean) as fn(&MeanStd) -> f64),
        ("std", |m| m.std),
    ] {
        let sm = &o.summary;
        let mut r = vec![label.to_string()];
        r.extend(block_cells(&sm.key, pick));
        r.extend(block_cells(&sm.raw, pick));
        r.push(stat(&sm.qber_sifted, pick));
        r.push(stat(&sm.qber_all, pick));
        r.push(stat(&sm.sift_fraction, pick));
        rows.push(r);
    }
    report.csv(
        &format!("{p}_metrics.csv"),
        &header(&[
            "sample",
            "accuracy_key",
            "precision_key",
            "recall_key",
            "f1_key",
            "accuracy_raw",
            "precision_raw",
            "recall_raw",
            "f1_raw",
            "qber_sifted",
            "qber_all",
            "sift_fraction",
        ]),
        rows,
    )?;

    let pooled = |scope: Scope| {
        o.samples
            .iter()
            .filter_map(|m| match scope {
                Scope::Key => m.key.map(|k| k.confusion),
                Scope::Raw => Some(m.raw.confusion),
            })
            .fold(Default::default(), |a, b| a + b)
    };
    let rows = [("key", Scope::Key), ("raw", Scope::Raw)].map(|(name, scope)| {
        let cm: qkd_core::metrics::ConfusionMatrix = pooled(scope);
        vec![s(name), s(cm.tp), s(cm.fp), s(cm.tn), s(cm.fn_)]
    });
    report.csv(
        &format!("{p}_confusion.csv"),
        &header(&["scope", "tp", "fp", "tn", "fn"]),
        rows,
    )?;

    let mut rows = Vec::new();
    for (name, scope) in [("key", Scope::Key), ("raw", Scope::Raw)] {
        let (truth, scores) = pooled_scores(&o.transcripts, scope);
        // a single-class pool has no ROC curve; it is left out
        if let Ok(curve) = roc(&truth, &scores) {
            for (i, (fpr, tpr)) in curve.points.iter().enumerate() {
                rows.push(vec![s(name), s(i), s(fpr), s(tpr), s(curve.auc)]);
            }
        }
    }
    report.csv(
        &format!("{p}_roc.csv"),
        &header(&["scope", "point", "fpr", "tpr", "auc"]),
        rows,
    )?;

    if !o.circuits.is_empty() {
        write_training(report, o)?;
    }
    Ok(())
}

pub fn write_training(report: &mut Report<'_>, o: &ProtocolOutcome) -> anyhow::Result<()> {
    let d = o.circuits.first().map_or(0, |c| c.thetas.len());
    let mut cols = header(&["sample", "round", "iteration", "loss"]);
    cols.extend((0..d).map(|k| format!("theta_{k}")));
    let rows = o.circuits.iter().flat_map(|c| {
        c.traces.iter().enumerate().flat_map(move |(round, t)| {
            t.entries.iter().map(move |e| {
                let mut r = vec![s(c.sample), s(round), s(e.iteration), s(e.loss)];
                r.extend(e.thetas.iter().map(|x| s(*x)));
                r
            })
        })
    });
    report.csv(&format!("{}_training.csv", o.protocol.name()), &cols, rows)?;
    let mut cols = header(&["sample"]);
    cols.extend((0..d).map(|k| format!("theta_{k}")));
    let rows = o.circuits.iter().map(|c| {
        let mut r = vec![s(c.sample)];
        r.extend(c.thetas.iter().map(|x| s(*x)));
        r
    });
    report.csv(&format!("{}_circuit.csv", o.protocol.name()), &cols, rows)
}

/// Headline block and QBER column for the chosen definition.
pub fn headline(o: &ProtocolOutcome, def: QberDef) -> (&BlockSummary, &MeanStd) {
    match def {
        QberDef::Sifted => (&o.summary.key, &o.summary.qber_sifted),
        QberDef::All => (&o.summary.raw, &o.summary.qber_all),
    }
}

pub fn write_table(
    report: &mut Report<'_>,
    rows: &[ProtocolOutcome],
    def: QberDef,
) -> anyhow::Result<()> {
    let cols = header(&[
        "protocol",
        "accuracy_mean",
        "accuracy_std",
        "precision_mean",
        "precision_std",
        "recall_mean",
        "recall_std",
        "f1_mean",
        "f1_std",
        "qber_mean",
        "qber_std",
        "qber_definition",
        "qber_sifted_mean",
        "qber_sifted_std",
        "qber_all_mean",
        "qber_all_std",
        "seed",
    ]);
    let def_name = match def {
        QberDef::Sifted => "sifted",
        QberDef::All => "all",
    };
    let out = rows.iter().map(|o| {
        let (b, q) = headline(o, def);
        let mut r = vec![s(o.protocol.name())];
        for m in [b.accuracy, b.precision, b.recall, b.f1, *q] {
            r.push(stat(&m, |m| m.mean));
            r.push(stat(&m, |m| m.std));
        }
        r.push(s(def_name));
        for m in [o.summary.qber_sifted, o.summary.qber_all] {
            r.push(stat(&m, |m| m.mean));
            r.push(stat(&m, |m| m.std));
        }
        r.push(s(o.seed));
        r
    });
    report.csv("table.csv", &cols, out)
}

/// Fixed-width text rendering with `mean ± std` cells.
pub fn render_table(rows: &[ProtocolOutcome], def: QberDef) -> String {
    let mut out = format!(
        "{:<12} {:>15} {:>15} {:>15} {:>15} {:>15}\n",
        "Algorithm", "Accuracy", "Precision", "Recall", "F1", "QBER"
    );
    for o in rows {
        let (b, q) = headline(o, def);
        out.push_str(&format!(
            "{:<12} {:>15} {:>15} {:>15} {:>15} {:>15}\n",
            o.protocol.label(),
            mean_std(&b.accuracy),
            mean_std(&b.precision),
            mean_std(&b.recall),
            mean_std(&b.f1),
            mean_std(q)
        ));
    }
    out
}

pub fn write_sweep(report: &mut Report<'_>, rows: &[SweepRow]) -> anyhow::Result<()> {
    let cols = header(&[
        "protocol",
        "channel",
        "strength",
        "accuracy_key_mean",
        "accuracy_key_std",
        "accuracy_raw_mean",
        "accuracy_raw_std",
        "qber_sifted_mean",
        "qber_sifted_std",
        "qber_all_mean",
        "qber_all_std",
        "seed",
    ]);
    let out = rows.iter().map(|r| {
        let m = &r.summary;
        let mut v = vec![s(r.protocol.name()), s(r.channel.name()), s(r.strength)];
        for x in [m.key.accuracy, m.raw.accuracy, m.qber_sifted, m.qber_all] {
            v.push(stat(&x, |m| m.mean));
            v.push(stat(&x, |m| m.std));
        }
        v.push(s(r.seed));
        v
    });
    report.csv("sweep.csv", &cols, out)
}

pub fn write_convergence(
    report: &mut Report<'_>,
    version: QrlVersion,
    trials: &[ConvergenceTrial],
) -> anyhow::Result<()> {
    let mut cols = header(&["trial", "theta1"]);
    cols.extend(EpisodeLog::CSV_HEADER.iter().map(|c| c.to_string()));
    cols.push("width".to_string());
    let rows = trials.iter().flat_map(|t| {
        t.result.episode_log.records.iter().map(move |rec| {
            let mut r = vec![s(t.trial), s(t.result.theta1)];
            r.extend(EpisodeLog::csv_row(rec));
            r.push(s(rec.n3 - rec.n1));
            r
        })
    });
    report.csv(&format!("converge_{version}.csv"), &cols, rows)?;
    let cols = header(&[
        "trial",
        "theta1",
        "theta2_final",
        "delta_theta",
        "true_bit",
        "decoded_bit",
        "converged",
        "episodes",
    ]);
    let rows = trials.iter().map(|t| {
        let r = &t.result;
        vec![
            s(t.trial),
            s(r.theta1),
            s(r.theta2_final),
            s(r.delta_theta()),
            s(r.true_bit),
            s(r.decoded_bit),
            s(r.converged),
            s(r.episode_log.records.len()),
        ]
    });
    report.csv(&format!("converge_{version}_final.csv"), &cols, rows)
}
