//! `fedphd` command-line runner.
//!
//! `fedphd run --config exp.txt --out results/` runs one experiment;
//! `fedphd sweep --preset selection --out sweeps/` runs a named sweep.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fedphd_core::experiment::{preset, run_experiment, run_sweep, write_atomic, ExperimentConfig, PRESETS};

#[derive(Debug, Parser)]
#[command(name = "fedphd", version, about = "Hierarchical federated diffusion training simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its result files.
    Run {
        /// Flat `key = value` config file.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed_data: Option<u64>,
        #[arg(long)]
        seed_proto: Option<u64>,
        /// Output directory; overrides `out_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Train clients sequentially for bit-exact reruns.
        #[arg(long)]
        strict: bool,
    },
    /// Run a named sweep and write one directory per run plus `sweep.csv`.
    Sweep {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
        preset: String,
        #[arg(long)]
        out: PathBuf,
        /// Base config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Protocol seeds per sweep value.
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[arg(long)]
        strict: bool,
    },
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::parse(&text).with_context(|| format!("in config {}", p.display()))
        }
        None => Ok(ExperimentConfig::default()),
    }
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed_data,
            seed_proto,
            out,
            strict,
        } => {
            let mut cfg = load_config(Some(&config))?;
            if let Some(s) = seed_data {
                cfg.seed_data = s;
            }
            if let Some(s) = seed_proto {
                cfg.seed_proto = s;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            cfg.strict |= strict;
            let record = run_experiment(&cfg)?;
            let s = record.summary();
            println!(
                "mode={} rounds={} sw={:.4} mean_sh={:.4} params={}->{} cost={:.3} out={}",
                s.mode,
                s.rounds,
                s.final_sliced_wasserstein,
                s.mean_final_sh,
                s.initial_params,
                s.final_params,
                s.total_cost,
                cfg.out_dir.display()
            );
        }
        Command::Sweep {
            preset: name,
            out,
            config,
            seeds,
            strict,
        } => {
            let mut base = load_config(config.as_deref())?;
            base.strict |= strict;
            let mut entries = preset(&name, &base, seeds)?;
            for e in &mut entries {
                e.config.out_dir = out
                    .join(sanitize(&e.label))
                    .join(format!("seed_{}", e.config.seed_proto));
            }
            let result = run_sweep(&entries)?;
            for r in &result.records {
                r.write_to(&r.config.out_dir)?;
            }
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            write_atomic(&out.join("sweep.csv"), result.to_csv().as_bytes())?;
            for row in &result.rows {
                println!(
                    "{:<22} runs={} sw={:.4}±{:.4} sh={:.4} load_var={:.3} params={:.0} cost={:.3}",
                    row.label,
                    row.runs,
                    row.sliced_wasserstein.mean,
                    row.sliced_wasserstein.std,
                    row.mean_final_sh.mean,
                    row.load_variance.mean,
                    row.final_params.mean,
                    row.total_cost.mean
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
