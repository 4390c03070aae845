use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::model_io::serialize_model;
use crate::diffusion::{build_schedule, generate, DenoiserModel, NoiseSchedule, SamplerMode};
use crate::error::{Error, Result};
use crate::protocol::{run, ProtocolEvent, RoundMetrics, RunSetup};
use crate::rng::{stream_rng, Stream};
use crate::sim::{
    make_toy_dataset, partition_non_iid, sliced_wasserstein, CommLedger, LinkKind, LinkTotals, PartitionSpec,
    QualityReport, ToyDataset,
};
use crate::stats::build_target;

/// Embedded in every summary file; bump when a column or field changes.
pub const SCHEMA_VERSION: &str = "fedphd-results/1";

/// Column order of `rounds.csv`. List-valued columns are `;`-separated.
pub const ROUNDS_CSV_HEADER: &str = "round,participants,mean_loss,edge_aggregated,cloud_aggregated,pruned,\
param_count,client_edge_bytes,edge_cloud_bytes,cost,edge_load,edge_mu,edge_n,cloud_weights,assignments";

/// Everything one run produced.
#[derive(Debug, Clone)]
pub struct ExperimentRecord {
    pub config: ExperimentConfig,
    pub rounds: Vec<RoundMetrics>,
    pub events: Vec<ProtocolEvent>,
    pub ledger: CommLedger,
    pub quality: QualityReport,
    pub model: DenoiserModel,
    pub initial_params: usize,
    pub wall_clock_seconds: f64,
}

/// Fields of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: String,
    pub mode: String,
    pub seed_data: u64,
    pub seed_proto: u64,
    pub rounds: usize,
    pub final_sliced_wasserstein: f64,
    pub n_projections: usize,
    pub n_samples: usize,
    pub initial_params: usize,
    pub final_params: usize,
    pub mean_final_sh: f64,
    pub load_variance: f64,
    pub client_edge: LinkTotals,
    pub edge_cloud: LinkTotals,
    pub total_cost: f64,
    pub cloud_aggregations: usize,
    /// Total cost divided by the number of cloud aggregations.
    pub cost_per_cloud_aggregation: f64,
    /// Per-round SH score of each edge.
    pub edge_sh_per_round: Vec<Vec<f64>>,
    pub wall_clock_seconds: f64,
}

/// The toy data every run of a given data seed shares.
#[derive(Debug, Clone)]
pub struct DataBundle {
    pub train: ToyDataset,
    pub partition: PartitionSpec,
    pub held_out: ToyDataset,
}

pub fn build_data(cfg: &ExperimentConfig) -> Result<DataBundle> {
    let s = cfg.seed_data;
    let train = make_toy_dataset(
        cfg.classes,
        cfg.samples_per_class,
        None,
        cfg.cov_scale,
        &mut stream_rng(s, 0, 0, Stream::Dataset),
    )?;
    let partition = partition_non_iid(
        &train,
        cfg.clients,
        cfg.classes_per_client,
        &mut stream_rng(s, 0, 0, Stream::Partition),
    )?;
    let per_class = cfg.eval_samples.div_ceil(cfg.classes);
    let held_out = train.resample(per_class, &mut stream_rng(s, 0, 0, Stream::HeldOut))?;
    Ok(DataBundle {
        train,
        partition,
        held_out,
    })
}

pub fn build_noise_schedule(cfg: &ExperimentConfig) -> Result<NoiseSchedule> {
    build_schedule(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end)
}

/// Sliced-Wasserstein distance between `eval_samples` deterministic DDIM
/// samples and the held-out set. Evaluation randomness derives from the
/// data seed so runs sharing a partition are scored on identical draws.
pub fn evaluate(
    model: &DenoiserModel,
    cfg: &ExperimentConfig,
    sched: &NoiseSchedule,
    held_out: &ToyDataset,
) -> Result<QualityReport> {
    let mode = SamplerMode::Ddim {
        steps: cfg.ddim_steps,
        eta: 0.0,
    };
    let generated = generate(
        model,
        cfg.eval_samples,
        mode,
        sched,
        &mut stream_rng(cfg.seed_data, 0, 0, Stream::Generation),
    )?;
    sliced_wasserstein(
        &generated,
        &held_out.as_batch()?,
        cfg.sw_projections,
        &mut stream_rng(cfg.seed_data, 0, 0, Stream::Metric),
    )
}

/// Runs the protocol and the quality evaluation without touching the disk.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let data = build_data(cfg)?;
    let schedule = build_noise_schedule(cfg)?;
    let target = build_target(cfg.target_counts.as_deref(), cfg.classes)?;
    let setup = RunSetup {
        hyper: cfg.hyper.clone(),
        policy: cfg.mode.policy(),
        model: cfg.model_config(),
        schedule,
        dataset: data.train,
        partition: data.partition,
        target,
        edges: cfg.edges,
        d_e: cfg.d_e,
        d_c: cfg.d_c,
        seed: cfg.seed_proto,
        strict: cfg.strict,
    };
    let out = run(&setup)?;
    let quality = evaluate(&out.model, cfg, &setup.schedule, &data.held_out)?;
    Ok(ExperimentRecord {
        config: cfg.clone(),
        rounds: out.rounds,
        events: out.events,
        ledger: out.ledger,
        quality,
        model: out.model,
        initial_params: out.initial_params,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

fn join<T: std::fmt::Debug>(xs: &[T]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(";")
}

impl ExperimentRecord {
    pub fn final_params(&self) -> usize {
        self.model.params().count_params()
    }

    /// Mean over cloud rounds and edges of the end-of-interval SH score.
    pub fn mean_final_sh(&self) -> f64 {
        crate::protocol::mean_final_sh(&self.rounds)
    }

    pub fn load_variance(&self) -> f64 {
        crate::protocol::load_variance(&self.rounds)
    }

    pub fn rounds_csv(&self) -> String {
        let mut out = String::from(ROUNDS_CSV_HEADER);
        out.push('\n');
        for m in &self.rounds {
            let _ = writeln!(
                out,
                "{},{},{:?},{},{},{},{},{},{},{:?},{},{},{},{},{}",
                m.round,
                join(&m.participants),
                m.mean_loss,
                m.edge_aggregated,
                m.cloud_aggregated,
                m.pruned,
                m.param_count,
                m.client_edge_bytes,
                m.edge_cloud_bytes,
                m.cost,
                join(&m.edge_load),
                join(&m.edge_mu),
                join(&m.edge_n),
                join(&m.cloud_weights),
                join(&m.assignments),
            );
        }
        out
    }

    pub fn summary(&self) -> Summary {
        let cloud_aggregations = self.rounds.iter().filter(|m| m.cloud_aggregated).count();
        let total_cost = self.ledger.total_cost();
        Summary {
            schema_version: SCHEMA_VERSION.into(),
            mode: self.config.mode.to_string(),
            seed_data: self.config.seed_data,
            seed_proto: self.config.seed_proto,
            rounds: self.rounds.len(),
            final_sliced_wasserstein: self.quality.sliced_wasserstein,
            n_projections: self.quality.n_projections,
            n_samples: self.quality.n_samples,
            initial_params: self.initial_params,
            final_params: self.final_params(),
            mean_final_sh: self.mean_final_sh(),
            load_variance: self.load_variance(),
            client_edge: self.ledger.link_totals(LinkKind::ClientEdge),
            edge_cloud: self.ledger.link_totals(LinkKind::EdgeCloud),
            total_cost,
            cloud_aggregations,
            cost_per_cloud_aggregation: if cloud_aggregations == 0 {
                0.0
            } else {
                total_cost / cloud_aggregations as f64
            },
            edge_sh_per_round: self.rounds.iter().map(|m| m.edge_mu.clone()).collect(),
            wall_clock_seconds: self.wall_clock_seconds,
        }
    }

    /// Writes `config.txt`, `rounds.csv`, `ledger.csv`, `summary.json` and
    /// `final_model.txt` into `dir`, each through a temporary file that is
    /// renamed into place.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let summary = serde_json::to_string_pretty(&self.summary())
            .map_err(|e| Error::config(format!("cannot encode summary: {e}")))?;
        let files = [
            ("config.txt", self.config.to_text()),
            ("rounds.csv", self.rounds_csv()),
            ("ledger.csv", self.ledger.to_csv()),
            ("summary.json", summary + "\n"),
            ("final_model.txt", serialize_model(&self.model)),
        ];
        files
            .iter()
            .map(|(name, body)| {
                let path = dir.join(name);
                write_atomic(&path, body.as_bytes())?;
                Ok(path)
            })
            .collect()
    }
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// [`execute`] followed by writing the outputs under `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    let record = execute(cfg)?;
    record.write_to(&cfg.out_dir)?;
    Ok(record)
}
