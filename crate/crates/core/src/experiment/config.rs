use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diffusion::DenoiserConfig;
use crate::error::{Error, Result};
use crate::protocol::{HyperParams, SelectionPolicy};

/// Which variant of the protocol a run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Homogeneity-aware selection and aggregation, pruning after sparse training.
    FedPhd,
    /// As `FedPhd` but with a random structured pruning at initialisation.
    FedPhdOs,
    /// Single edge, sample-count weights, edge and cloud aggregation together.
    FedAvgBaseline,
    /// As `FedPhd` but clients choose edges uniformly at random.
    RandomSelection,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::FedPhd, Mode::FedPhdOs, Mode::FedAvgBaseline, Mode::RandomSelection];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::FedPhd => "fedphd",
            Mode::FedPhdOs => "fedphd_os",
            Mode::FedAvgBaseline => "fedavg_baseline",
            Mode::RandomSelection => "random_selection",
        }
    }

    pub fn policy(self) -> SelectionPolicy {
        match self {
            Mode::RandomSelection => SelectionPolicy::Random,
            _ => SelectionPolicy::HomogeneityAware,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::key("mode", format!("unknown mode `{s}`")))
    }
}

/// Every setting of one experiment. Parsed from, and serialised to, flat
/// `key = value` text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub clients: usize,
    pub edges: usize,
    pub classes: usize,
    pub classes_per_client: usize,
    pub samples_per_class: usize,
    pub hyper: HyperParams,
    pub mode: Mode,
    pub seed_data: u64,
    pub seed_proto: u64,
    pub out_dir: PathBuf,
    pub strict: bool,
    pub hidden: Vec<usize>,
    pub time_embed_dim: usize,
    pub diffusion_steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub ddim_steps: usize,
    pub eval_samples: usize,
    pub sw_projections: usize,
    pub cov_scale: f64,
    pub d_e: f64,
    pub d_c: f64,
    /// Global label counts defining the target distribution; uniform when absent.
    pub target_counts: Option<Vec<u64>>,
    /// Keys given explicitly in the parsed text.
    #[serde(skip)]
    explicit: BTreeSet<String>,
}

impl PartialEq for ExperimentConfig {
    fn eq(&self, other: &Self) -> bool {
        self.to_text() == other.to_text()
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            clients: 20,
            edges: 2,
            classes: 10,
            classes_per_client: 2,
            samples_per_class: 200,
            hyper: HyperParams::default(),
            mode: Mode::FedPhd,
            seed_data: 0,
            seed_proto: 0,
            out_dir: PathBuf::from("out"),
            strict: false,
            hidden: vec![64, 64, 64],
            time_embed_dim: 16,
            diffusion_steps: 1000,
            beta_start: 1e-4,
            beta_end: 0.02,
            ddim_steps: 100,
            eval_samples: 1000,
            sw_projections: 64,
            cov_scale: 0.5,
            d_e: 1.0,
            d_c: 10.0,
            target_counts: None,
            explicit: BTreeSet::new(),
        }
    }
}

/// Recognised keys, in serialisation order.
pub const CONFIG_KEYS: &[&str] = &[
    "mode",
    "clients",
    "edges",
    "classes",
    "classes_per_client",
    "samples_per_class",
    "rounds",
    "sparse_rounds",
    "local_epochs",
    "r_e",
    "r_g",
    "a",
    "b",
    "eta",
    "batch_size",
    "pruning_ratio",
    "lambda0",
    "q_floor",
    "kappa",
    "seed_data",
    "seed_proto",
    "out_dir",
    "strict",
    "hidden",
    "time_embed_dim",
    "diffusion_steps",
    "beta_start",
    "beta_end",
    "ddim_steps",
    "eval_samples",
    "sw_projections",
    "cov_scale",
    "d_e",
    "d_c",
    "target_counts",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::key(key, format!("cannot parse `{value}`")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| num(key, v.trim())).collect()
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::key(key, format!("expected true or false, got `{value}`"))),
    }
}

fn join<T: fmt::Debug>(xs: &[T]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Parses `key = value` lines (`#` starts a comment) over the defaults,
    /// then applies the mode constraints and validates.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            if !CONFIG_KEYS.contains(&key) {
                return Err(Error::key(key, "unknown key"));
            }
            if !cfg.explicit.insert(key.to_string()) {
                return Err(Error::key(key, "given more than once"));
            }
            cfg.set(key, value)?;
        }
        cfg.apply_mode()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its text value without validating.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let h = &mut self.hyper;
        match key {
            "mode" => self.mode = value.parse()?,
            "clients" => self.clients = num(key, value)?,
            "edges" => self.edges = num(key, value)?,
            "classes" => self.classes = num(key, value)?,
            "classes_per_client" => self.classes_per_client = num(key, value)?,
            "samples_per_class" => self.samples_per_class = num(key, value)?,
            "rounds" => h.rounds = num(key, value)?,
            "sparse_rounds" => h.sparse_rounds = num(key, value)?,
            "local_epochs" => h.local_epochs = num(key, value)?,
            "r_e" => h.r_e = num(key, value)?,
            "r_g" => h.r_g = num(key, value)?,
            "a" => h.a = num(key, value)?,
            "b" => h.b = num(key, value)?,
            "eta" => h.eta = num(key, value)?,
            "batch_size" => h.batch_size = num(key, value)?,
            "pruning_ratio" => h.pruning_ratio = num(key, value)?,
            "lambda0" => h.lambda0 = num(key, value)?,
            "q_floor" => h.q_floor = num(key, value)?,
            "kappa" => h.kappa = num(key, value)?,
            "seed_data" => self.seed_data = num(key, value)?,
            "seed_proto" => self.seed_proto = num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "strict" => self.strict = flag(key, value)?,
            "hidden" => {
                self.hidden = if value.is_empty() || value == "none" {
                    Vec::new()
                } else {
                    list(key, value)?
                }
            }
            "time_embed_dim" => self.time_embed_dim = num(key, value)?,
            "diffusion_steps" => self.diffusion_steps = num(key, value)?,
            "beta_start" => self.beta_start = num(key, value)?,
            "beta_end" => self.beta_end = num(key, value)?,
            "ddim_steps" => self.ddim_steps = num(key, value)?,
            "eval_samples" => self.eval_samples = num(key, value)?,
            "sw_projections" => self.sw_projections = num(key, value)?,
            "cov_scale" => self.cov_scale = num(key, value)?,
            "d_e" => self.d_e = num(key, value)?,
            "d_c" => self.d_c = num(key, value)?,
            "target_counts" => {
                self.target_counts = if value == "uniform" {
                    None
                } else {
                    Some(list(key, value)?)
                }
            }
            _ => return Err(Error::key(key, "unknown key")),
        }
        Ok(())
    }

    /// Text form accepted by [`ExperimentConfig::parse`]; floats use the
    /// shortest representation that parses back to the same value.
    pub fn to_text(&self) -> String {
        let h = &self.hyper;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("mode", self.mode.to_string());
        put("clients", self.clients.to_string());
        put("edges", self.edges.to_string());
        put("classes", self.classes.to_string());
        put("classes_per_client", self.classes_per_client.to_string());
        put("samples_per_class", self.samples_per_class.to_string());
        put("rounds", h.rounds.to_string());
        put("sparse_rounds", h.sparse_rounds.to_string());
        put("local_epochs", h.local_epochs.to_string());
        put("r_e", h.r_e.to_string());
        put("r_g", h.r_g.to_string());
        put("a", format!("{:?}", h.a));
        put("b", format!("{:?}", h.b));
        put("eta", format!("{:?}", h.eta));
        put("batch_size", h.batch_size.to_string());
        put("pruning_ratio", format!("{:?}", h.pruning_ratio));
        put("lambda0", format!("{:?}", h.lambda0));
        put("q_floor", format!("{:?}", h.q_floor));
        put("kappa", format!("{:?}", h.kappa));
        put("seed_data", self.seed_data.to_string());
        put("seed_proto", self.seed_proto.to_string());
        put("out_dir", self.out_dir.display().to_string());
        put("strict", self.strict.to_string());
        put("hidden", if self.hidden.is_empty() { "none".into() } else { join(&self.hidden) });
        put("time_embed_dim", self.time_embed_dim.to_string());
        put("diffusion_steps", self.diffusion_steps.to_string());
        put("beta_start", format!("{:?}", self.beta_start));
        put("beta_end", format!("{:?}", self.beta_end));
        put("ddim_steps", self.ddim_steps.to_string());
        put("eval_samples", self.eval_samples.to_string());
        put("sw_projections", self.sw_projections.to_string());
        put("cov_scale", format!("{:?}", self.cov_scale));
        put("d_e", format!("{:?}", self.d_e));
        put("d_c", format!("{:?}", self.d_c));
        put(
            "target_counts",
            self.target_counts.as_deref().map_or_else(|| "uniform".into(), join),
        );
        out
    }

    /// Keys given explicitly in the parsed text.
    pub fn explicit_keys(&self) -> &BTreeSet<String> {
        &self.explicit
    }

    /// Switches mode and applies its forced values, overriding whatever was
    /// set before. Use this to derive variants from a base config.
    pub fn with_mode(&self, mode: Mode) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.mode = mode;
        for key in forced_keys(mode) {
            cfg.explicit.remove(*key);
        }
        cfg.apply_mode()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Forces the values a mode fixes. A forced key that was given
    /// explicitly with a different value is an error.
    fn apply_mode(&mut self) -> Result<()> {
        let forced: Vec<(&str, String)> = match self.mode {
            Mode::FedAvgBaseline => vec![
                ("edges", "1".into()),
                ("a", "0.0".into()),
                ("b", "0.0".into()),
                ("r_e", self.hyper.r_g.to_string()),
                ("sparse_rounds", "0".into()),
                ("pruning_ratio", "0.0".into()),
            ],
            Mode::FedPhdOs => vec![("sparse_rounds", "0".into())],
            Mode::FedPhd | Mode::RandomSelection => Vec::new(),
        };
        for (key, value) in forced {
            let mut probe = self.clone();
            probe.set(key, &value)?;
            let changed = probe.to_text() != self.to_text();
            if changed && self.explicit.contains(key) {
                return Err(Error::key(
                    key,
                    format!("mode {} requires {key} = {value}", self.mode),
                ));
            }
            *self = probe;
        }
        self.hyper.os_mode = self.mode == Mode::FedPhdOs;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("clients", self.clients),
            ("edges", self.edges),
            ("classes_per_client", self.classes_per_client),
            ("samples_per_class", self.samples_per_class),
            ("diffusion_steps", self.diffusion_steps),
            ("ddim_steps", self.ddim_steps),
            ("eval_samples", self.eval_samples),
            ("sw_projections", self.sw_projections),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::key(key, "must be positive"));
            }
        }
        if self.classes < 2 {
            return Err(Error::key("classes", "need at least 2 classes"));
        }
        if self.classes_per_client > self.classes {
            return Err(Error::key("classes_per_client", "exceeds the number of classes"));
        }
        if !(self.clients * self.classes_per_client).is_multiple_of(self.classes) {
            return Err(Error::key(
                "classes_per_client",
                "clients * classes_per_client must be a multiple of classes",
            ));
        }
        let holders = self.clients * self.classes_per_client / self.classes;
        if !self.samples_per_class.is_multiple_of(holders) {
            return Err(Error::key(
                "samples_per_class",
                format!("must split evenly among the {holders} clients holding each class"),
            ));
        }
        if self.ddim_steps > self.diffusion_steps {
            return Err(Error::key("ddim_steps", "exceeds diffusion_steps"));
        }
        if !(self.beta_start > 0.0 && self.beta_start <= self.beta_end && self.beta_end < 1.0) {
            return Err(Error::key("beta_end", "need 0 < beta_start <= beta_end < 1"));
        }
        if !(self.cov_scale.is_finite() && self.cov_scale >= 0.0) {
            return Err(Error::key("cov_scale", "must be nonnegative"));
        }
        if !(self.d_e.is_finite() && self.d_e >= 0.0) {
            return Err(Error::key("d_e", "must be nonnegative"));
        }
        if !(self.d_c.is_finite() && self.d_c >= 0.0) {
            return Err(Error::key("d_c", "must be nonnegative"));
        }
        if let Some(counts) = &self.target_counts {
            if counts.len() != self.classes {
                return Err(Error::key("target_counts", "need one count per class"));
            }
            if counts.iter().all(|&c| c == 0) {
                return Err(Error::key("target_counts", "counts sum to zero"));
            }
        }
        self.model_config()
            .validate()
            .map_err(|e| Error::key("time_embed_dim", e.to_string()))?;
        self.hyper.validate()?;
        if self.mode == Mode::FedAvgBaseline && (self.edges != 1 || self.hyper.r_e != self.hyper.r_g) {
            return Err(Error::key("mode", "fedavg_baseline needs one edge and r_e = r_g"));
        }
        Ok(())
    }

    pub fn model_config(&self) -> DenoiserConfig {
        DenoiserConfig {
            data_dim: 2,
            hidden: self.hidden.clone(),
            time_embed_dim: self.time_embed_dim,
        }
    }
}

fn forced_keys(mode: Mode) -> &'static [&'static str] {
    match mode {
        Mode::FedAvgBaseline => &["edges", "a", "b", "r_e", "sparse_rounds", "pruning_ratio"],
        Mode::FedPhdOs => &["sparse_rounds"],
        Mode::FedPhd | Mode::RandomSelection => &[],
    }
}

/// Free-function form of [`ExperimentConfig::parse`].
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::parse(text)
}

/// Free-function form of [`ExperimentConfig::to_text`].
pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    cfg.to_text()
}
