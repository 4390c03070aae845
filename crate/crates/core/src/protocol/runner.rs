use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::selection::select_edge_server;
use super::state::{ClientState, CloudState, EdgeState, HyperParams};
use super::training::local_train;
use super::weights::{aggregate_by_id, client_weight, edge_weight};
use crate::diffusion::{DenoiserConfig, DenoiserModel, NoiseSchedule};
use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::pruning::{
    apply_pruning, build_pruning_plan, hidden_layer_groups, random_pruning_plan, rank_channels_by_group_norm,
    GroupNormConfig, GroupRegularizer, PruningGroup,
};
use crate::rng::{stream_rng, Stream};
use crate::sim::{distribution_volume, model_volume, CommLedger, Endpoint, LinkKind, PartitionSpec, ToyDataset, TransferKind};
use crate::stats::{distribution_from_counts, sh_score, update_accumulator, TargetDistribution};

/// How participating clients pick an edge server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionPolicy {
    /// Sample from the homogeneity-aware probabilities.
    HomogeneityAware,
    /// Uniform over edges.
    Random,
}

/// Everything a run needs besides the scheduler settings.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub hyper: HyperParams,
    pub policy: SelectionPolicy,
    pub model: DenoiserConfig,
    pub schedule: NoiseSchedule,
    pub dataset: ToyDataset,
    pub partition: PartitionSpec,
    pub target: TargetDistribution,
    pub edges: usize,
    pub d_e: f64,
    pub d_c: f64,
    /// Base seed for every protocol stream.
    pub seed: u64,
    /// Train clients sequentially.
    pub strict: bool,
}

/// Protocol events in the order they happen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProtocolEvent {
    Pruned {
        round: usize,
        params_before: usize,
        params_after: usize,
        channels_removed: usize,
    },
    Selected {
        round: usize,
        client: usize,
        edge: usize,
    },
    Trained {
        round: usize,
        client: usize,
        loss: f64,
    },
    EdgeAggregated {
        round: usize,
        edge: usize,
        clients: Vec<usize>,
        weights: Vec<f64>,
    },
    CloudAggregated {
        round: usize,
        edges: Vec<usize>,
        weights: Vec<f64>,
    },
    Refreshed {
        round: usize,
    },
}

/// Per-round summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub participants: Vec<usize>,
    /// Edge chosen by each participant, aligned with `participants`.
    pub assignments: Vec<usize>,
    pub mean_loss: f64,
    /// Clients assigned to each edge this round.
    pub edge_load: Vec<usize>,
    /// SH score of each edge's pool at the end of the round, before any refresh.
    pub edge_mu: Vec<f64>,
    /// Samples each edge has collected since the last cloud round.
    pub edge_n: Vec<u64>,
    pub edge_aggregated: bool,
    pub cloud_aggregated: bool,
    /// Cloud weight per edge in cloud rounds (0 for inactive edges), else empty.
    pub cloud_weights: Vec<f64>,
    pub pruned: bool,
    /// Parameter count of the global model at the end of the round.
    pub param_count: usize,
    pub client_edge_bytes: u64,
    pub edge_cloud_bytes: u64,
    pub cost: f64,
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rounds: Vec<RoundMetrics>,
    pub events: Vec<ProtocolEvent>,
    pub ledger: CommLedger,
    pub model: DenoiserModel,
    pub groups: Vec<PruningGroup>,
    pub initial_params: usize,
}

impl RunOutput {
    pub fn mean_final_sh(&self) -> f64 {
        mean_final_sh(&self.rounds)
    }

    pub fn load_variance(&self) -> f64 {
        load_variance(&self.rounds)
    }
}

/// Mean over cloud rounds and edges of the end-of-interval SH score.
pub fn mean_final_sh(rounds: &[RoundMetrics]) -> f64 {
    let values: Vec<f64> = rounds
        .iter()
        .filter(|m| m.cloud_aggregated)
        .flat_map(|m| m.edge_mu.iter().copied())
        .collect();
    mean(&values)
}

/// Variance across cloud intervals of the number of assignments each edge
/// received in the interval, averaged over edges. Rounds after the last
/// cloud round are ignored.
pub fn load_variance(rounds: &[RoundMetrics]) -> f64 {
    let edges = rounds.first().map_or(0, |m| m.edge_load.len());
    let mut intervals: Vec<Vec<f64>> = Vec::new();
    let mut current = vec![0.0; edges];
    for m in rounds {
        for (c, l) in current.iter_mut().zip(&m.edge_load) {
            *c += *l as f64;
        }
        if m.cloud_aggregated {
            intervals.push(std::mem::replace(&mut current, vec![0.0; edges]));
        }
    }
    if intervals.len() < 2 {
        return 0.0;
    }
    let per_edge: Vec<f64> = (0..edges)
        .map(|e| {
            let xs: Vec<f64> = intervals.iter().map(|iv| iv[e]).collect();
            let m = mean(&xs);
            xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
        })
        .collect();
    mean(&per_edge)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn participants(n: usize, kappa: f64, seed: u64, round: usize) -> Vec<usize> {
    let m = ((kappa * n as f64 + 1e-9).floor() as usize).clamp(1, n);
    if m == n {
        return (0..n).collect();
    }
    let mut rng = stream_rng(seed, round as u64, 0, Stream::Participation);
    let mut chosen = rand::seq::index::sample(&mut rng, n, m).into_vec();
    chosen.sort_unstable();
    chosen
}

fn check_setup(setup: &RunSetup) -> Result<()> {
    setup.hyper.validate()?;
    setup.model.validate()?;
    if setup.edges == 0 {
        return Err(Error::key("edges", "need at least one edge server"));
    }
    if setup.partition.shards.len() != setup.partition.clients || setup.partition.clients == 0 {
        return Err(Error::config("partition does not list one shard per client"));
    }
    if setup.target.classes() != setup.dataset.classes() {
        return Err(Error::config(format!(
            "target has {} classes, dataset has {}",
            setup.target.classes(),
            setup.dataset.classes()
        )));
    }
    if setup.model.data_dim != setup.dataset.dim() {
        return Err(Error::config("model data_dim differs from the dataset dimension"));
    }
    Ok(())
}

fn build_clients(setup: &RunSetup, theta: &DenoiserModel) -> Result<Vec<ClientState>> {
    setup
        .partition
        .shards
        .iter()
        .enumerate()
        .map(|(id, shard)| {
            if shard.is_empty() {
                return Err(Error::config(format!("client {id} has an empty partition")));
            }
            let counts = setup.dataset.label_counts(shard);
            Ok(ClientState {
                id,
                shard: shard.clone(),
                data: setup.dataset.subset(shard)?,
                q_n: distribution_from_counts(&counts)?,
                n_n: shard.len() as u64,
                theta: theta.clone(),
                assigned_edge: None,
            })
        })
        .collect()
}

fn relay_edge(client: &ClientState, edges: usize) -> usize {
    client.assigned_edge.unwrap_or(client.id % edges)
}

/// Runs the full hierarchical schedule: per-round participation and edge
/// selection, local training, edge aggregation every `r_e` rounds, cloud
/// aggregation every `r_g` rounds, pruning once on the cloud model, and the
/// accumulator refresh after each cloud round.
pub fn run(setup: &RunSetup) -> Result<RunOutput> {
    check_setup(setup)?;
    let h = &setup.hyper;
    let seed = setup.seed;
    let classes = setup.dataset.classes();
    let n_edges = setup.edges;
    let prob_bytes = distribution_volume(classes);
    let mut ledger = CommLedger::new(setup.d_e, setup.d_c);
    let mut events = Vec::new();

    let initial = DenoiserModel::new(&setup.model, &mut stream_rng(seed, 0, 0, Stream::Init))?;
    let initial_params = initial.params().count_params();
    let mut cloud = CloudState {
        groups: hidden_layer_groups(initial.params()),
        theta: initial,
        round: 0,
        pruned: false,
    };
    if h.os_mode {
        if h.pruning_ratio > 0.0 {
            let plan = random_pruning_plan(
                &cloud.groups,
                h.pruning_ratio,
                &mut stream_rng(seed, 0, 0, Stream::Pruning),
            )?;
            prune(&mut cloud, &plan, 0, &mut events)?;
        }
        cloud.pruned = true;
    }
    let regularizer = if !h.os_mode && h.sparse_rounds > 0 && h.lambda0 > 0.0 {
        let cfg = GroupNormConfig {
            lambda0: h.lambda0,
            q_floor: h.q_floor,
        };
        Some(GroupRegularizer::new(cloud.theta.params(), &cloud.groups, &cfg)?)
    } else {
        None
    };

    let mut clients = build_clients(setup, &cloud.theta)?;
    let mut edges: Vec<EdgeState> = (0..n_edges)
        .map(|e| EdgeState::new(e, classes, cloud.theta.clone(), setup.d_e, setup.d_c))
        .collect();
    let client_mu: Vec<f64> = clients
        .iter()
        .map(|c| sh_score(&c.q_n, &setup.target))
        .collect::<Result<_>>()?;
    let mut rounds = Vec::with_capacity(h.rounds);

    for r in 1..=h.rounds {
        cloud.round = r;
        let reference = cloud.theta.params().clone();
        let cost_before = ledger.total_cost();
        let ce_before = ledger.link_totals(LinkKind::ClientEdge).bytes;
        let ec_before = ledger.link_totals(LinkKind::EdgeCloud).bytes;
        let active = participants(clients.len(), h.kappa, seed, r);

        // Selection: every participant sees the same edge state.
        if setup.policy == SelectionPolicy::HomogeneityAware && n_edges > 1 {
            for &n in &active {
                for e in 0..n_edges {
                    ledger.record(r, TransferKind::DistributionBroadcast, Endpoint::edge(e), Endpoint::client(n), prob_bytes);
                }
            }
        }
        let mut assignments = Vec::with_capacity(active.len());
        for &n in &active {
            let mut rng = stream_rng(seed, r as u64, n as u64, Stream::Selection);
            let e = match setup.policy {
                SelectionPolicy::HomogeneityAware => select_edge_server(&clients[n], &edges, &setup.target, h.a, h.b, &mut rng)?,
                SelectionPolicy::Random => rng.random_range(0..n_edges),
            };
            assignments.push(e);
            events.push(ProtocolEvent::Selected { round: r, client: n, edge: e });
        }
        for edge in edges.iter_mut() {
            edge.roster.clear();
        }
        for (&n, &e) in active.iter().zip(&assignments) {
            clients[n].assigned_edge = Some(e);
            edges[e].roster.push(n);
        }

        // Local training.
        let sparse = if r < h.sparse_rounds && !cloud.pruned {
            regularizer.as_ref()
        } else {
            None
        };
        let train_one = |n: usize| {
            let mut rng = stream_rng(seed, r as u64, n as u64, Stream::LocalTraining);
            local_train(&clients[n], &clients[n].theta, &setup.schedule, h, sparse, &mut rng)
        };
        let trained: Vec<(DenoiserModel, f64)> = if setup.strict {
            active.iter().map(|&n| train_one(n)).collect::<Result<_>>()?
        } else {
            active.par_iter().map(|&n| train_one(n)).collect::<Result<_>>()?
        };
        let mut losses = Vec::with_capacity(active.len());
        for (&n, (model, loss)) in active.iter().zip(trained) {
            model.params().check_same_shape(&reference)?;
            clients[n].theta = model;
            losses.push(loss);
            events.push(ProtocolEvent::Trained { round: r, client: n, loss });
        }

        // Sample counts reach the edges every round.
        for edge in edges.iter_mut() {
            for &n in &edge.roster {
                edge.n_e += clients[n].n_n;
                edge.pending.push((clients[n].q_n.clone(), clients[n].n_n));
            }
        }

        let edge_round = r % h.r_e == 0;
        if edge_round {
            for edge in edges.iter_mut() {
                let pending: Vec<_> = edge.pending.iter().map(|(q, n)| (q, *n)).collect();
                edge.accumulator = update_accumulator(&edge.accumulator, &pending)?;
                edge.pending.clear();
                if edge.roster.is_empty() {
                    continue;
                }
                let scores: Vec<(f64, f64)> = edge
                    .roster
                    .iter()
                    .map(|&n| (clients[n].n_n as f64, client_mu[n]))
                    .collect();
                let weights = client_weight(&scores, h.a, h.b);
                let entries: Vec<(usize, &ParamSet, f64)> = edge
                    .roster
                    .iter()
                    .zip(&weights)
                    .map(|(&n, &w)| (n, clients[n].theta.params(), w))
                    .collect();
                let merged = aggregate_by_id(&entries)?;
                for &n in &edge.roster {
                    let bytes = model_volume(clients[n].theta.params());
                    ledger.record(r, TransferKind::ModelUpload, Endpoint::client(n), Endpoint::edge(edge.id), bytes);
                    ledger.record(r, TransferKind::DistributionUpload, Endpoint::client(n), Endpoint::edge(edge.id), prob_bytes);
                }
                edge.theta = edge.theta.with_params(merged)?;
                let bytes = model_volume(edge.theta.params());
                for &n in &edge.roster {
                    ledger.record(r, TransferKind::ModelDownload, Endpoint::edge(edge.id), Endpoint::client(n), bytes);
                    clients[n].theta = edge.theta.clone();
                }
                events.push(ProtocolEvent::EdgeAggregated {
                    round: r,
                    edge: edge.id,
                    clients: edge.roster.clone(),
                    weights,
                });
            }
        }

        // Pool as the cloud would see it now, including contributions not
        // yet folded in by an edge update.
        let pools = edges
            .iter()
            .map(|e| {
                let pending: Vec<_> = e.pending.iter().map(|(q, n)| (q, *n)).collect();
                update_accumulator(&e.accumulator, &pending)
            })
            .collect::<Result<Vec<_>>>()?;
        let edge_mu = pools
            .iter()
            .map(|p| p.sh_score(&setup.target))
            .collect::<Result<Vec<_>>>()?;
        let edge_n: Vec<u64> = edges.iter().map(|e| e.n_e).collect();
        let edge_load: Vec<usize> = edges.iter().map(|e| e.roster.len()).collect();

        let cloud_round = r % h.r_g == 0;
        let mut cloud_weights = Vec::new();
        let mut pruned_now = false;
        if cloud_round {
            let live: Vec<usize> = edges.iter().filter(|e| e.n_e > 0).map(|e| e.id).collect();
            if !live.is_empty() {
                for &e in &live {
                    ledger.record(r, TransferKind::DistributionUpload, Endpoint::edge(e), Endpoint::cloud(), prob_bytes);
                    let bytes = model_volume(edges[e].theta.params());
                    ledger.record(r, TransferKind::ModelUpload, Endpoint::edge(e), Endpoint::cloud(), bytes);
                }
                let scores: Vec<(f64, f64)> = live.iter().map(|&e| (edges[e].n_e as f64, edge_mu[e])).collect();
                let weights = edge_weight(&scores, h.a, h.b);
                let entries: Vec<(usize, &ParamSet, f64)> = live
                    .iter()
                    .zip(&weights)
                    .map(|(&e, &w)| (e, edges[e].theta.params(), w))
                    .collect();
                let merged = aggregate_by_id(&entries)?;
                cloud.theta = cloud.theta.with_params(merged)?;
                cloud_weights = vec![0.0; n_edges];
                for (&e, &w) in live.iter().zip(&weights) {
                    cloud_weights[e] = w;
                }
                events.push(ProtocolEvent::CloudAggregated {
                    round: r,
                    edges: live,
                    weights,
                });
            }
            if !cloud.pruned && h.sparse_rounds > 0 && r == h.sparse_rounds {
                if h.pruning_ratio > 0.0 {
                    let ranking = rank_channels_by_group_norm(cloud.theta.params(), &cloud.groups)?;
                    let plan = build_pruning_plan(&ranking, &cloud.groups, h.pruning_ratio)?;
                    prune(&mut cloud, &plan, r, &mut events)?;
                    pruned_now = true;
                }
                cloud.pruned = true;
            }
            let bytes = model_volume(cloud.theta.params());
            for edge in edges.iter_mut() {
                ledger.record(r, TransferKind::ModelDownload, Endpoint::cloud(), Endpoint::edge(edge.id), bytes);
                edge.theta = cloud.theta.clone();
                edge.accumulator = crate::stats::refresh_accumulator(classes);
                edge.pending.clear();
                edge.n_e = 0;
            }
            for client in clients.iter_mut() {
                let relay = relay_edge(client, n_edges);
                ledger.record(r, TransferKind::ModelDownload, Endpoint::edge(relay), Endpoint::client(client.id), bytes);
                client.theta = cloud.theta.clone();
            }
            events.push(ProtocolEvent::Refreshed { round: r });
        }

        rounds.push(RoundMetrics {
            round: r,
            participants: active,
            assignments,
            mean_loss: mean(&losses),
            edge_load,
            edge_mu,
            edge_n,
            edge_aggregated: edge_round,
            cloud_aggregated: cloud_round,
            cloud_weights,
            pruned: pruned_now,
            param_count: cloud.theta.params().count_params(),
            client_edge_bytes: ledger.link_totals(LinkKind::ClientEdge).bytes - ce_before,
            edge_cloud_bytes: ledger.link_totals(LinkKind::EdgeCloud).bytes - ec_before,
            cost: ledger.total_cost() - cost_before,
        });
    }

    Ok(RunOutput {
        rounds,
        events,
        ledger,
        model: cloud.theta,
        groups: cloud.groups,
        initial_params,
    })
}

fn prune(cloud: &mut CloudState, plan: &crate::pruning::PruningPlan, round: usize, events: &mut Vec<ProtocolEvent>) -> Result<()> {
    let before = cloud.theta.params().count_params();
    let (params, groups) = apply_pruning(cloud.theta.params(), &cloud.groups, plan)?;
    cloud.theta = cloud.theta.with_params(params)?;
    cloud.groups = groups;
    events.push(ProtocolEvent::Pruned {
        round,
        params_before: before,
        params_after: cloud.theta.params().count_params(),
        channels_removed: plan.removed_count(),
    });
    Ok(())
}
