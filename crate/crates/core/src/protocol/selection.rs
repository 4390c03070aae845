use rand::Rng;

use super::state::{ClientState, EdgeState};
use super::weights::relu_weights;
use crate::error::Result;
use crate::stats::{update_accumulator, TargetDistribution};

/// Unnormalised selection scores `a mu' - n' + b`, where `mu'` and `n'` are
/// the edge's SH score and sample count after hypothetically adding the
/// client. Nothing is committed.
pub fn selection_scores(
    client: &ClientState,
    edges: &[EdgeState],
    target: &TargetDistribution,
    a: f64,
    b: f64,
) -> Result<Vec<f64>> {
    edges
        .iter()
        .map(|e| {
            let hypothetical = update_accumulator(&e.accumulator, &[(&client.q_n, client.n_n)])?;
            let mu = hypothetical.sh_score(target)?;
            let n = (e.n_e + client.n_n) as f64;
            Ok(a * mu - n + b)
        })
        .collect()
}

/// `P_n(e) = ReLU(score_e) / sum ReLU(score)`, uniform when every score is
/// clipped to zero.
pub fn selection_probabilities(
    client: &ClientState,
    edges: &[EdgeState],
    target: &TargetDistribution,
    a: f64,
    b: f64,
) -> Result<Vec<f64>> {
    Ok(relu_weights(&selection_scores(client, edges, target, a, b)?))
}

/// Samples an edge id from `P_n(e)` with a single uniform draw.
pub fn select_edge_server<R: Rng + ?Sized>(
    client: &ClientState,
    edges: &[EdgeState],
    target: &TargetDistribution,
    a: f64,
    b: f64,
    rng: &mut R,
) -> Result<usize> {
    let probs = selection_probabilities(client, edges, target, a, b)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (e, p) in edges.iter().zip(&probs) {
        acc += p;
        if u < acc {
            return Ok(e.id);
        }
    }
    // u landed in the rounding slack at the top of the cumulative sum
    Ok(edges
        .iter()
        .zip(&probs)
        .rev()
        .find(|(_, p)| **p > 0.0)
        .map_or(edges[edges.len() - 1].id, |(e, _)| e.id))
}

/// Edge ids by descending `P_n(e)`, ties by id. The k-th entry is the
/// k-th alternative when better-ranked servers are unavailable.
pub fn fallback_ranking(
    client: &ClientState,
    edges: &[EdgeState],
    target: &TargetDistribution,
    a: f64,
    b: f64,
) -> Result<Vec<usize>> {
    let probs = selection_probabilities(client, edges, target, a, b)?;
    let mut order: Vec<(usize, f64)> = edges.iter().map(|e| e.id).zip(probs).collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    Ok(order.into_iter().map(|(id, _)| id).collect())
}
