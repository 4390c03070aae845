use serde::{Deserialize, Serialize};

use crate::diffusion::{DenoiserModel, SampleBatch};
use crate::error::{Error, Result};
use crate::stats::{EdgeAccumulator, LabelDistribution};

/// Scheduler and optimiser settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// SH weight in both aggregation weights and selection.
    pub a: f64,
    /// Offset in the same ReLU scores.
    pub b: f64,
    /// Edge aggregation period in rounds.
    pub r_e: usize,
    /// Cloud aggregation period in rounds.
    pub r_g: usize,
    pub rounds: usize,
    /// Rounds trained with the group regularizer before pruning.
    pub sparse_rounds: usize,
    pub local_epochs: usize,
    pub eta: f64,
    pub batch_size: usize,
    pub pruning_ratio: f64,
    pub lambda0: f64,
    pub q_floor: f64,
    /// Fraction of clients sampled each round.
    pub kappa: f64,
    /// Prune a random plan at initialisation instead of after sparse training.
    pub os_mode: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            a: 15000.0,
            b: 0.0,
            r_e: 1,
            r_g: 5,
            rounds: 50,
            sparse_rounds: 25,
            local_epochs: 1,
            eta: 0.05,
            batch_size: 16,
            pruning_ratio: 0.44,
            lambda0: 1e-3,
            q_floor: 0.5,
            kappa: 1.0,
            os_mode: false,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r_e", self.r_e),
            ("r_g", self.r_g),
            ("rounds", self.rounds),
            ("local_epochs", self.local_epochs),
            ("batch_size", self.batch_size),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::key(key, "must be positive"));
            }
        }
        if self.r_e > self.r_g {
            return Err(Error::key("r_e", format!("r_e = {} exceeds r_g = {}", self.r_e, self.r_g)));
        }
        if self.sparse_rounds > 0 && !self.sparse_rounds.is_multiple_of(self.r_g) {
            return Err(Error::key(
                "sparse_rounds",
                format!("{} is not a multiple of r_g = {}", self.sparse_rounds, self.r_g),
            ));
        }
        if self.sparse_rounds > self.rounds {
            return Err(Error::key("sparse_rounds", "exceeds the total number of rounds"));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::key("eta", "must be a positive number"));
        }
        if !(0.0..1.0).contains(&self.pruning_ratio) {
            return Err(Error::key("pruning_ratio", "must lie in [0, 1)"));
        }
        if !(self.lambda0.is_finite() && self.lambda0 >= 0.0) {
            return Err(Error::key("lambda0", "must be nonnegative"));
        }
        if !(self.q_floor.is_finite() && self.q_floor > 0.0) {
            return Err(Error::key("q_floor", "must be positive"));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::key("kappa", "must lie in (0, 1]"));
        }
        if !self.a.is_finite() {
            return Err(Error::key("a", "must be finite"));
        }
        if !self.b.is_finite() {
            return Err(Error::key("b", "must be finite"));
        }
        Ok(())
    }
}

/// One client: its shard, label statistics and current local model.
#[derive(Debug, Clone)]
pub struct ClientState {
    pub id: usize,
    /// Dataset row indices.
    pub shard: Vec<usize>,
    pub data: SampleBatch,
    pub q_n: LabelDistribution,
    pub n_n: u64,
    pub theta: DenoiserModel,
    /// Edge chosen in the most recent round the client took part in.
    pub assigned_edge: Option<usize>,
}

/// One edge server.
#[derive(Debug, Clone)]
pub struct EdgeState {
    pub id: usize,
    /// Clients assigned this round, sorted by id.
    pub roster: Vec<usize>,
    /// Pool as of the last edge update; what clients see at selection time.
    pub accumulator: EdgeAccumulator,
    /// Contributions received since the last edge update.
    pub pending: Vec<(LabelDistribution, u64)>,
    /// Samples contributed since the last cloud round.
    pub n_e: u64,
    pub theta: DenoiserModel,
    pub d_e: f64,
    pub d_c: f64,
}

impl EdgeState {
    pub fn new(id: usize, classes: usize, theta: DenoiserModel, d_e: f64, d_c: f64) -> Self {
        EdgeState {
            id,
            roster: Vec::new(),
            accumulator: EdgeAccumulator::neutral(classes),
            pending: Vec::new(),
            n_e: 0,
            theta,
            d_e,
            d_c,
        }
    }
}

/// Central server state.
#[derive(Debug, Clone)]
pub struct CloudState {
    pub theta: DenoiserModel,
    pub round: usize,
    pub groups: Vec<crate::pruning::PruningGroup>,
    pub pruned: bool,
}
