use serde::{Deserialize, Serialize};

use super::group::{validate_groups, PruningGroup};
use crate::error::{Error, Result};
use crate::params::ParamSet;

/// Base factor `lambda0` and the lower clamp applied to the distance score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupNormConfig {
    pub lambda0: f64,
    pub q_floor: f64,
}

impl Default for GroupNormConfig {
    fn default() -> Self {
        GroupNormConfig {
            lambda0: 1e-3,
            q_floor: 0.5,
        }
    }
}

impl GroupNormConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 >= 0.0) {
            return Err(Error::invalid("lambda0 must be nonnegative"));
        }
        if !(self.q_floor > 0.0) {
            return Err(Error::invalid("q_floor must be positive"));
        }
        Ok(())
    }
}

/// Arithmetic mean of the layer indices.
pub fn mean_layer_index(params: &ParamSet) -> Result<f64> {
    if params.is_empty() {
        return Err(Error::invalid("model has no layers"));
    }
    let sum: usize = params.layers().iter().map(|l| l.index).sum();
    Ok(sum as f64 / params.len() as f64)
}

/// Mean absolute distance of the group's layers from `l_med`.
pub fn group_distance_score(group: &PruningGroup, l_med: f64) -> f64 {
    if group.layer_indices.is_empty() {
        return 0.0;
    }
    let total: f64 = group.layer_indices.iter().map(|&l| (l as f64 - l_med).abs()).sum();
    total / group.layer_indices.len() as f64
}

/// `lambda0 / max(Q, q_floor)`.
pub fn group_lambda(cfg: &GroupNormConfig, q: f64) -> f64 {
    cfg.lambda0 / q.max(cfg.q_floor)
}

/// Group regularizer with the per-group scales resolved against a model.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRegularizer {
    groups: Vec<PruningGroup>,
    lambdas: Vec<f64>,
}

impl GroupRegularizer {
    pub fn new(params: &ParamSet, groups: &[PruningGroup], cfg: &GroupNormConfig) -> Result<Self> {
        cfg.validate()?;
        validate_groups(params, groups)?;
        let l_med = mean_layer_index(params)?;
        let lambdas = groups
            .iter()
            .map(|g| group_lambda(cfg, group_distance_score(g, l_med)))
            .collect();
        Ok(GroupRegularizer {
            groups: groups.to_vec(),
            lambdas,
        })
    }

    pub fn groups(&self) -> &[PruningGroup] {
        &self.groups
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn check(&self, params: &ParamSet) -> Result<()> {
        validate_groups(params, &self.groups)
    }

    /// `sum_g sum_k lambda_g ||theta^g[k]||^2`.
    pub fn value(&self, params: &ParamSet) -> Result<f64> {
        let mut total = 0.0;
        for (g, lambda) in self.groups.iter().zip(&self.lambdas) {
            for k in 0..g.channels {
                total += lambda * g.channel_norm_sq(params, k)?;
            }
        }
        Ok(total)
    }

    /// Adds `2 lambda_g theta` on every grouped entry.
    pub fn add_gradient(&self, params: &ParamSet, grad: &mut ParamSet) -> Result<()> {
        params.check_same_shape(grad)?;
        for (g, &lambda) in self.groups.iter().zip(&self.lambdas) {
            for k in 0..g.channels {
                g.for_each_entry_mut(params, grad, k, |p, d| *d += 2.0 * lambda * p)?;
            }
        }
        Ok(())
    }
}

pub fn sparse_regularizer(params: &ParamSet, groups: &[PruningGroup], cfg: &GroupNormConfig) -> Result<f64> {
    GroupRegularizer::new(params, groups, cfg)?.value(params)
}

pub fn sparse_regularizer_grad(
    params: &ParamSet,
    groups: &[PruningGroup],
    cfg: &GroupNormConfig,
) -> Result<ParamSet> {
    let reg = GroupRegularizer::new(params, groups, cfg)?;
    let mut grad = params.zeros_like();
    reg.add_gradient(params, &mut grad)?;
    Ok(grad)
}
