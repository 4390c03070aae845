//! Hierarchical federated training of small diffusion models.
//!
//! The crate is organised bottom-up: [`diffusion`] holds the noise schedule,
//! denoiser, loss and samplers; [`pruning`] the channel groups, group-norm
//! regularizer and structured pruning; [`stats`] label distributions and
//! homogeneity scores; [`sim`] the toy data, partitions, communication ledger
//! and quality metric; [`protocol`] the client/edge/cloud schedule; and
//! [`experiment`] configuration, execution and output files.

pub mod diffusion;
pub mod error;
pub mod experiment;
pub mod params;
pub mod protocol;
pub mod pruning;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use params::{count_params, Layer, Matrix, ParamSet};
