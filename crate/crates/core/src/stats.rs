//! Label distributions, statistical-homogeneity (SH) scores and the edge
//! server's accumulated distribution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

/// Probability vector over the label set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    probs: Vec<f64>,
}

impl LabelDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("distribution needs at least one class"));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid("distribution entries must be finite and nonnegative"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!("distribution sums to {sum}, not 1")));
        }
        Ok(LabelDistribution { probs })
    }

    pub fn uniform(classes: usize) -> Result<Self> {
        if classes == 0 {
            return Err(Error::invalid("cardinality must be at least 1"));
        }
        Ok(LabelDistribution {
            probs: vec![1.0 / classes as f64; classes],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn classes(&self) -> usize {
        self.probs.len()
    }
}

/// Normalises nonnegative label counts.
pub fn distribution_from_counts(counts: &[u64]) -> Result<LabelDistribution> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::invalid("label counts are all zero"));
    }
    let t = total as f64;
    LabelDistribution::new(counts.iter().map(|&c| c as f64 / t).collect())
}

/// Reference distribution for SH scores, uniform unless global counts are known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDistribution(pub LabelDistribution);

impl TargetDistribution {
    pub fn uniform(classes: usize) -> Result<Self> {
        LabelDistribution::uniform(classes).map(TargetDistribution)
    }

    pub fn probs(&self) -> &[f64] {
        self.0.probs()
    }

    pub fn classes(&self) -> usize {
        self.0.classes()
    }
}

pub fn build_target(global_counts: Option<&[u64]>, cardinality: usize) -> Result<TargetDistribution> {
    if cardinality == 0 {
        return Err(Error::invalid("cardinality must be at least 1"));
    }
    match global_counts {
        None => TargetDistribution::uniform(cardinality),
        Some(counts) => {
            if counts.len() != cardinality {
                return Err(Error::invalid(format!(
                    "{} global counts for cardinality {cardinality}",
                    counts.len()
                )));
            }
            distribution_from_counts(counts).map(TargetDistribution)
        }
    }
}

/// `2 - ||q - q_u||_2` on raw vectors.
pub fn sh_score_vec(q: &[f64], target: &[f64]) -> Result<f64> {
    if q.len() != target.len() {
        return Err(Error::invalid(format!(
            "distribution has {} classes, target has {}",
            q.len(),
            target.len()
        )));
    }
    let sq: f64 = q.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(2.0 - sq.sqrt())
}

/// SH score of a client or edge distribution against the target.
pub fn sh_score(q: &LabelDistribution, target: &TargetDistribution) -> Result<f64> {
    sh_score_vec(q.probs(), target.probs())
}

/// Running pool `(q_e, n_e)` of the client distributions an edge has seen
/// since its last refresh. The neutral state is the all-zero vector with
/// `n_e = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeAccumulator {
    q: Vec<f64>,
    n: u64,
}

impl EdgeAccumulator {
    pub fn neutral(classes: usize) -> Self {
        EdgeAccumulator {
            q: vec![0.0; classes],
            n: 0,
        }
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn is_neutral(&self) -> bool {
        self.n == 0
    }

    pub fn classes(&self) -> usize {
        self.q.len()
    }

    pub fn distribution(&self) -> Option<LabelDistribution> {
        if self.n == 0 {
            None
        } else {
            LabelDistribution::new(self.q.clone()).ok()
        }
    }

    /// SH score, treating the neutral state as the zero vector.
    pub fn sh_score(&self, target: &TargetDistribution) -> Result<f64> {
        sh_score_vec(&self.q, target.probs())
    }
}

/// Count-pooled update
/// `q'(y) = (q_e(y) n_e + sum_n q_n(y) n_n) / (n_e + sum_n n_n)`.
pub fn update_accumulator(acc: &EdgeAccumulator, contributions: &[(&LabelDistribution, u64)]) -> Result<EdgeAccumulator> {
    if contributions.is_empty() {
        return Ok(acc.clone());
    }
    let classes = acc.classes();
    let mut mass: Vec<f64> = acc.q.iter().map(|p| p * acc.n as f64).collect();
    let mut n = acc.n;
    for (q, count) in contributions {
        if *count == 0 {
            return Err(Error::invalid("contribution with zero samples"));
        }
        if q.classes() != classes {
            return Err(Error::invalid(format!(
                "contribution has {} classes, accumulator has {classes}",
                q.classes()
            )));
        }
        for (m, p) in mass.iter_mut().zip(q.probs()) {
            *m += p * *count as f64;
        }
        n += count;
    }
    let total = n as f64;
    Ok(EdgeAccumulator {
        q: mass.into_iter().map(|m| m / total).collect(),
        n,
    })
}

/// Re-initialises an accumulator to the neutral state.
pub fn refresh_accumulator(classes: usize) -> EdgeAccumulator {
    EdgeAccumulator::neutral(classes)
}
