//! Client, edge and cloud roles of the hierarchical protocol: homogeneity-aware
//! aggregation weights, probabilistic edge selection, local training and the
//! round scheduler.

mod runner;
mod selection;
mod state;
mod training;
mod weights;

pub use runner::{load_variance, mean_final_sh, run, ProtocolEvent, RoundMetrics, RunOutput, RunSetup, SelectionPolicy};
pub use selection::{fallback_ranking, select_edge_server, selection_probabilities, selection_scores};
pub use state::{ClientState, CloudState, EdgeState, HyperParams};
pub use training::local_train;
pub use weights::{aggregate, aggregate_by_id, client_weight, edge_weight, relu_weights};
