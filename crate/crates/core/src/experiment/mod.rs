//! Experiment configuration, execution and result files.
//!
//! A config is flat `key = value` text. [`execute`] runs the protocol and
//! scores the final model; [`run_experiment`] additionally writes
//! `config.txt`, `rounds.csv`, `ledger.csv`, `summary.json` and
//! `final_model.txt` under the configured output directory.

mod config;
mod model_io;
mod run;
mod sweep;

pub use config::{parse_config, serialize_config, ExperimentConfig, Mode, CONFIG_KEYS};
pub use model_io::{parse_model, serialize_model};
pub use run::{
    build_data, build_noise_schedule, evaluate, execute, run_experiment, write_atomic, DataBundle, ExperimentRecord,
    Summary, ROUNDS_CSV_HEADER, SCHEMA_VERSION,
};
pub use sweep::{preset, run_sweep, Stat, SweepEntry, SweepResult, SweepRow, PRESETS};
