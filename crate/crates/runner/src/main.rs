use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qkd_core::baseline::B92Mode;
use qkd_core::noise::ChannelKind;
use qkd_core::qrl::QrlVersion;
use qkd_runner::config::{ExperimentConfig, Protocol, QberDef, ReadoutMode};
use qkd_runner::experiment::{run_convergence, run_single, run_sweep, run_table};
use qkd_runner::report::{
    headline, mean_std, render_table, write_convergence, write_outcome, write_sweep, write_table,
    write_training, Report,
};

#[derive(Parser)]
#[command(
    name = "qkdlab",
    version,
    about = "Quantum key distribution protocol laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one protocol and write transcripts, metrics, confusion and ROC files.
    Run(Common),
    /// Compare protocols side by side (all eight unless --protocol is given).
    Table(Common),
    /// Accuracy and QBER across channel kinds and strengths.
    Sweep(Common),
    /// Per-episode learner trajectories on random secret phases.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Learner version; taken from --protocol when omitted.
        #[arg(long)]
        version: Option<QrlVersion>,
    },
    /// Train the circuit of a qnn-* protocol and export loss traces.
    Train(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, ValueEnum)]
enum B92Arg {
    Paper,
    Standard,
}

#[derive(Clone, Copy, ValueEnum)]
enum QberArg {
    Sifted,
    All,
}

#[derive(Args, Default)]
struct Common {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Protocol name(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    protocol: Vec<Protocol>,
    /// Key bits per sample.
    #[arg(long)]
    bits: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    shots: Option<u64>,
    /// Channel kind(s), comma separated; `sweep` visits every kind when omitted.
    #[arg(long, value_delimiter = ',')]
    channel: Vec<ChannelKind>,
    #[arg(long)]
    strength: Option<f64>,
    /// Sweep strengths: a comma list or `start:stop:step`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long = "b92-mode", value_enum)]
    b92_mode: Option<B92Arg>,
    #[arg(long = "qber-def", value_enum)]
    qber_def: Option<QberArg>,
    /// Insert an intercept-resend eavesdropper (BB84).
    #[arg(long)]
    eve: bool,
    /// Keep circuit angles fixed instead of training them.
    #[arg(long)]
    frozen: bool,
    /// Learner runs for `converge`.
    #[arg(long)]
    trials: Option<usize>,
    /// Learner episode budget.
    #[arg(long)]
    episodes: Option<usize>,
}

fn parse_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let [a, b, step] = [parts[0], parts[1], parts[2]].map(|p| p.trim().parse::<f64>());
        let (a, b, step) = (a?, b?, step?);
        if step <= 0.0 {
            bail!("grid step must be positive");
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        // round to the step's decimals so 0.1 * 3 prints as 0.3
        let scale = 1e9;
        return Ok((0..=n)
            .map(|i| ((a + step * i as f64) * scale).round() / scale)
            .collect());
    }
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("grid value `{p}`"))
        })
        .collect()
}

impl Common {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json(
                &std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?,
            )?,
            None => ExperimentConfig::default(),
        };
        if let Some(&p) = self.protocol.first() {
            cfg.protocol = p;
        }
        if let Some(v) = self.bits {
            cfg.n_bits = v;
        }
        if let Some(v) = self.samples {
            cfg.samples = v;
        }
        if let Some(v) = self.shots {
            cfg.shots = v;
        }
        if !self.channel.is_empty() {
            cfg.channel = Some(self.channel[0]);
            cfg.sweep_channels = self.channel.clone();
        }
        if let Some(v) = self.strength {
            cfg.strength = v;
        }
        if let Some(g) = &self.grid {
            cfg.grid = parse_grid(g)?;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::Exact => ReadoutMode::Exact,
                ModeArg::Sampled => ReadoutMode::Sampled,
            };
        }
        if let Some(m) = self.b92_mode {
            cfg.b92_mode = match m {
                B92Arg::Paper => B92Mode::Paper,
                B92Arg::Standard => B92Mode::Standard,
            };
        }
        if let Some(q) = self.qber_def {
            cfg.qber_def = match q {
                QberArg::Sifted => QberDef::Sifted,
                QberArg::All => QberDef::All,
            };
        }
        if self.eve {
            cfg.eve = true;
        }
        if self.frozen {
            cfg.training.enabled = false;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.episodes {
            cfg.learner.max_episodes = Some(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn protocols(&self, cfg: &ExperimentConfig, all: bool) -> Vec<Protocol> {
        if !self.protocol.is_empty() {
            self.protocol.clone()
        } else if all {
            Protocol::ALL.to_vec()
        } else {
            vec![cfg.protocol]
        }
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let cfg = args.config()?;
            let o = run_single(&cfg)?;
            let mut report = Report::new(&cfg)?;
            write_outcome(&mut report, &o)?;
            let path = report.manifest("run", &json!({ "summary": o.summary }))?;
            let (b, q) = headline(&o, cfg.qber_def);
            println!(
                "{}: accuracy {}, qber {}",
                o.protocol.label(),
                mean_std(&b.accuracy),
                mean_std(q)
            );
            println!("wrote {}", path.display());
        }
        Command::Table(args) => {
            let cfg = args.config()?;
            let protocols = args.protocols(&cfg, true);
            let rows = run_table(&cfg, &protocols)?;
            let mut report = Report::new(&cfg)?;
            write_table(&mut report, &rows, cfg.qber_def)?;
            let summaries: Vec<_> = rows
                .iter()
                .map(|o| json!({ "protocol": o.protocol, "summary": o.summary }))
                .collect();
            let path = report.manifest("table", &summaries)?;
            print!("{}", render_table(&rows, cfg.qber_def));
            println!("wrote {}", path.display());
        }
        Command::Sweep(args) => {
            let cfg = args.config()?;
            let rows = run_sweep(&cfg, &args.protocols(&cfg, false))?;
            let mut report = Report::new(&cfg)?;
            write_sweep(&mut report, &rows)?;
            let path = report.manifest("sweep", &json!({ "cells": rows.len() }))?;
            println!("{} sweep cells; wrote {}", rows.len(), path.display());
        }
        Command::Converge { common, version } => {
            let cfg = common.config()?;
            let version = match version.or_else(|| cfg.protocol.learner()) {
                Some(v) => v,
                None => bail!("choose --version v1|v2 or a learner protocol"),
            };
            let trials = run_convergence(&cfg, version)?;
            let mut report = Report::new(&cfg)?;
            write_convergence(&mut report, version, &trials)?;
            let finals: Vec<_> = trials
                .iter()
                .map(|t| json!({ "trial": t.trial, "delta_theta": t.result.delta_theta(), "converged": t.result.converged }))
                .collect();
            let path = report.manifest(&format!("converge_{version}"), &finals)?;
            println!("{} trials; wrote {}", trials.len(), path.display());
        }
        Command::Train(args) => {
            let mut cfg = args.config()?;
            if !cfg.protocol.uses_circuit() {
                bail!("`train` needs a qnn-* protocol, got {}", cfg.protocol);
            }
            cfg.training.enabled = true;
            let o = run_single(&cfg)?;
            let mut report = Report::new(&cfg)?;
            write_training(&mut report, &o)?;
            let best: Vec<_> = o
                .circuits
                .iter()
                .map(|c| {
                    json!({ "sample": c.sample, "thetas": c.thetas,
                    "final_loss": c.traces.last().map(|t| t.best_loss) })
                })
                .collect();
            let path = report.manifest("train", &best)?;
            println!("trained {} circuits; wrote {}", best.len(), path.display());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::parse_grid;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0:1:0.1").unwrap().len(), 11);
        assert_eq!(parse_grid("0:1:0.1").unwrap()[3], 0.3);
        assert_eq!(parse_grid("0, 0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a").is_err());
    }
}
