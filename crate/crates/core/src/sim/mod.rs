//! Synthetic data, non-IID partitioning, communication accounting and the
//! sliced-Wasserstein quality proxy.

mod comm;
mod dataset;
mod partition;
mod quality;

pub use comm::{
    comm_cost_client_edge, comm_cost_edge_cloud, distribution_volume, model_volume, CommLedger, Endpoint,
    LedgerEntry, LinkKind, LinkTotals, Role, TransferKind, BYTES_PER_PARAM, BYTES_PER_PROB,
};
pub use dataset::{circle_means, make_toy_dataset, ToyDataset};
pub use partition::{partition_non_iid, PartitionSpec};
pub use quality::{random_directions, sliced_wasserstein, sliced_wasserstein_with, QualityReport};
