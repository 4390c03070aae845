use crate::error::{Error, Result};
use crate::params::ParamSet;

/// `ReLU(s_i) / sum_j ReLU(s_j)`, uniform when every term is zero.
pub fn relu_weights(scores: &[f64]) -> Vec<f64> {
    let relu: Vec<f64> = scores.iter().map(|s| s.max(0.0)).collect();
    let total: f64 = relu.iter().sum();
    if total > 0.0 {
        relu.into_iter().map(|r| r / total).collect()
    } else {
        vec![1.0 / scores.len() as f64; scores.len()]
    }
}

/// Cloud-level weight of each edge from `(n_e, mu_e)`:
/// `ReLU(n_e + a mu_e + b)` normalised.
pub fn edge_weight(edges: &[(f64, f64)], a: f64, b: f64) -> Vec<f64> {
    relu_weights(&edges.iter().map(|&(n, mu)| n + a * mu + b).collect::<Vec<_>>())
}

/// Edge-level weight of each client from `(n_n, mu_n)`; same form as
/// [`edge_weight`].
pub fn client_weight(clients: &[(f64, f64)], a: f64, b: f64) -> Vec<f64> {
    edge_weight(clients, a, b)
}

/// Elementwise weighted sum, accumulated in slice order.
pub fn aggregate(models: &[&ParamSet], weights: &[f64]) -> Result<ParamSet> {
    let first = models
        .first()
        .ok_or_else(|| Error::invalid("aggregate needs at least one model"))?;
    if models.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} models but {} weights",
            models.len(),
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 || weights.iter().any(|w| *w < 0.0) {
        return Err(Error::invalid(format!("weights must form a probability vector, sum is {total}")));
    }
    let mut out = first.zeros_like();
    for (m, &w) in models.iter().zip(weights) {
        out.axpy(w, m)?;
    }
    Ok(out)
}

/// [`aggregate`] after sorting the `(id, model, weight)` triples by id, so
/// the result does not depend on arrival order.
pub fn aggregate_by_id(entries: &[(usize, &ParamSet, f64)]) -> Result<ParamSet> {
    let mut sorted: Vec<&(usize, &ParamSet, f64)> = entries.iter().collect();
    sorted.sort_by_key(|e| e.0);
    let models: Vec<&ParamSet> = sorted.iter().map(|e| e.1).collect();
    let weights: Vec<f64> = sorted.iter().map(|e| e.2).collect();
    aggregate(&models, &weights)
}
