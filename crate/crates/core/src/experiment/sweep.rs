use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Mode};
use super::run::{execute, ExperimentRecord};
use crate::error::{Error, Result};

/// One configuration of a sweep and the group it is summarised under.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub label: String,
    pub config: ExperimentConfig,
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Stat {
        if xs.is_empty() {
            return Stat { mean: f64::NAN, std: f64::NAN };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Stat { mean, std: var.sqrt() }
    }
}

/// Aggregates over every run sharing a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub label: String,
    pub runs: usize,
    pub sliced_wasserstein: Stat,
    pub mean_final_sh: Stat,
    pub load_variance: Stat,
    pub final_params: Stat,
    pub total_cost: Stat,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Rows in order of first appearance of each label.
    pub rows: Vec<SweepRow>,
    /// Records aligned with the input entries.
    pub records: Vec<ExperimentRecord>,
}

impl SweepResult {
    pub const CSV_HEADER: &'static str = "label,runs,sw_mean,sw_std,sh_mean,sh_std,load_var_mean,load_var_std,\
params_mean,params_std,cost_mean,cost_std";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let cells = [
                r.sliced_wasserstein,
                r.mean_final_sh,
                r.load_variance,
                r.final_params,
                r.total_cost,
            ];
            let stats: Vec<String> = cells.iter().map(|s| format!("{:?},{:?}", s.mean, s.std)).collect();
            out.push_str(&format!("{},{},{}\n", r.label, r.runs, stats.join(",")));
        }
        out
    }
}

/// Runs every entry (in parallel unless any entry is strict) and groups the
/// records by label.
pub fn run_sweep(entries: &[SweepEntry]) -> Result<SweepResult> {
    let first = entries.first().ok_or_else(|| Error::config("sweep needs at least one config"))?;
    if entries.iter().any(|e| e.config.classes != first.config.classes) {
        return Err(Error::key("classes", "every config in a sweep must use the same class count"));
    }
    let records: Vec<ExperimentRecord> = if entries.iter().any(|e| e.config.strict) {
        entries.iter().map(|e| execute(&e.config)).collect::<Result<_>>()?
    } else {
        entries.par_iter().map(|e| execute(&e.config)).collect::<Result<_>>()?
    };
    let mut labels: Vec<&str> = Vec::new();
    for e in entries {
        if !labels.contains(&e.label.as_str()) {
            labels.push(&e.label);
        }
    }
    let rows = labels
        .into_iter()
        .map(|label| {
            let group: Vec<&ExperimentRecord> = entries
                .iter()
                .zip(&records)
                .filter(|(e, _)| e.label == label)
                .map(|(_, r)| r)
                .collect();
            let stat = |f: &dyn Fn(&ExperimentRecord) -> f64| Stat::of(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
            SweepRow {
                label: label.to_string(),
                runs: group.len(),
                sliced_wasserstein: stat(&|r| r.quality.sliced_wasserstein),
                mean_final_sh: stat(&|r| r.mean_final_sh()),
                load_variance: stat(&|r| r.load_variance()),
                final_params: stat(&|r| r.final_params() as f64),
                total_cost: stat(&|r| r.ledger.total_cost()),
            }
        })
        .collect();
    Ok(SweepResult { rows, records })
}

/// Names accepted by [`preset`].
pub const PRESETS: &[&str] = &[
    "selection",
    "heterogeneity",
    "pruning_ratio",
    "a_grid",
    "lambda_grid",
    "sparse_rounds_grid",
];

fn seeded(base: &ExperimentConfig, label: String, seeds: u64, f: impl Fn(&mut ExperimentConfig)) -> Vec<SweepEntry> {
    (0..seeds)
        .map(|i| {
            let mut config = base.clone();
            f(&mut config);
            config.seed_proto = base.seed_proto + i;
            SweepEntry {
                label: label.clone(),
                config,
            }
        })
        .collect()
}

/// Named sweeps over a base config, each value repeated over `seeds`
/// protocol seeds on the base data seed.
pub fn preset(name: &str, base: &ExperimentConfig, seeds: u64) -> Result<Vec<SweepEntry>> {
    if seeds == 0 {
        return Err(Error::invalid("a sweep needs at least one seed"));
    }
    let mut entries = Vec::new();
    match name {
        "selection" | "heterogeneity" => {
            let modes = if name == "selection" {
                [Mode::FedPhd, Mode::RandomSelection]
            } else {
                [Mode::FedPhd, Mode::FedAvgBaseline]
            };
            for mode in modes {
                let cfg = base.with_mode(mode)?;
                entries.extend(seeded(&cfg, mode.to_string(), seeds, |_| {}));
            }
        }
        "pruning_ratio" => {
            for s in [0.0, 0.25, 0.44, 0.61, 0.74] {
                entries.extend(seeded(base, format!("s_p={s}"), seeds, |c| c.hyper.pruning_ratio = s));
            }
        }
        "a_grid" => {
            for a in [0.0, 5000.0, 10000.0, 15000.0, 25000.0, 50000.0] {
                entries.extend(seeded(base, format!("a={a}"), seeds, |c| c.hyper.a = a));
            }
        }
        "lambda_grid" => {
            for l in [1e-2, 1e-3, 1e-4, 1e-5] {
                entries.extend(seeded(base, format!("lambda0={l:e}"), seeds, |c| c.hyper.lambda0 = l));
            }
        }
        "sparse_rounds_grid" => {
            for rs in [10, 20, 50, 100] {
                entries.extend(seeded(base, format!("sparse_rounds={rs}"), seeds, |c| {
                    c.hyper.sparse_rounds = rs;
                    c.hyper.rounds = c.hyper.rounds.max(rs);
                }));
            }
        }
        _ => {
            return Err(Error::invalid(format!(
                "unknown preset `{name}`; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    }
    for e in &entries {
        e.config.validate()?;
    }
    Ok(entries)
}
