//! Dependency groups of coupled channels, the layer-distance-scaled group
//! regularizer, group-norm channel ranking and structural pruning.

mod group;
mod plan;
mod regularizer;

pub use group::{hidden_layer_groups, Axis, GroupMember, PruningGroup};
pub use plan::{
    apply_pruning, build_pruning_plan, random_pruning_plan, rank_channels_by_group_norm, ChannelRank,
    PruningPlan,
};
pub use regularizer::{
    group_distance_score, group_lambda, mean_layer_index, sparse_regularizer, sparse_regularizer_grad,
    GroupNormConfig, GroupRegularizer,
};
