use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diffusion::SampleBatch;
use crate::error::{Error, Result};

/// Generative-quality proxy: lower is closer to the reference sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub sliced_wasserstein: f64,
    pub n_projections: usize,
    pub n_samples: usize,
}

/// `n` independent uniformly distributed unit vectors.
pub fn random_directions<R: Rng + ?Sized>(dim: usize, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            out.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    out
}

fn project_sorted(batch: &SampleBatch, rows: &[usize], dir: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = rows
        .iter()
        .map(|&i| batch.row(i).iter().zip(dir).map(|(a, b)| a * b).sum())
        .collect();
    p.sort_by(f64::total_cmp);
    p
}

/// Sliced Wasserstein-1 distance over explicit directions. Both batches
/// must already have equal size.
pub fn sliced_wasserstein_with(a: &SampleBatch, b: &SampleBatch, directions: &[Vec<f64>]) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::invalid(format!("dimension {} vs {}", a.dim(), b.dim())));
    }
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::invalid("batches must be nonempty and equally sized"));
    }
    if directions.is_empty() {
        return Err(Error::invalid("need at least one projection"));
    }
    let rows: Vec<usize> = (0..a.len()).collect();
    sw_rows(a, &rows, b, &rows, directions)
}

fn sw_rows(a: &SampleBatch, ra: &[usize], b: &SampleBatch, rb: &[usize], directions: &[Vec<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for dir in directions {
        if dir.len() != a.dim() {
            return Err(Error::invalid("projection direction has the wrong dimension"));
        }
        let pa = project_sorted(a, ra, dir);
        let pb = project_sorted(b, rb, dir);
        total += pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).sum::<f64>() / pa.len() as f64;
    }
    Ok(total / directions.len() as f64)
}

/// Average 1-D Wasserstein-1 distance over `n_proj` random directions.
///
/// Directions are drawn first; the larger batch is then subsampled without
/// replacement to the size of the smaller one.
pub fn sliced_wasserstein<R: Rng + ?Sized>(
    a: &SampleBatch,
    b: &SampleBatch,
    n_proj: usize,
    rng: &mut R,
) -> Result<QualityReport> {
    if a.dim() != b.dim() {
        return Err(Error::invalid(format!("dimension {} vs {}", a.dim(), b.dim())));
    }
    if a.is_empty() || b.is_empty() || n_proj == 0 {
        return Err(Error::invalid("need nonempty batches and at least one projection"));
    }
    let directions = random_directions(a.dim(), n_proj, rng);
    let n = a.len().min(b.len());
    let pick = |batch: &SampleBatch, rng: &mut R| -> Vec<usize> {
        if batch.len() == n {
            (0..n).collect()
        } else {
            let mut idx = sample(rng, batch.len(), n).into_vec();
            idx.sort_unstable();
            idx
        }
    };
    let ra = pick(a, rng);
    let rb = pick(b, rng);
    Ok(QualityReport {
        sliced_wasserstein: sw_rows(a, &ra, b, &rb, &directions)?,
        n_projections: n_proj,
        n_samples: n,
    })
}
