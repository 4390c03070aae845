use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diffusion::SampleBatch;
use crate::error::{Error, Result};
use crate::params::Matrix;

/// Class-conditional isotropic Gaussian mixture sample, stored class by class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyDataset {
    pub points: Matrix,
    pub labels: Vec<usize>,
    pub class_means: Vec<Vec<f64>>,
    /// Per-coordinate standard deviation of every class.
    pub cov_scale: f64,
}

/// `classes` points evenly spaced on a circle of radius 4.
pub fn circle_means(classes: usize) -> Vec<Vec<f64>> {
    (0..classes)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / classes as f64;
            vec![4.0 * angle.cos(), 4.0 * angle.sin()]
        })
        .collect()
}

pub fn make_toy_dataset<R: Rng + ?Sized>(
    classes: usize,
    n_per_class: usize,
    means: Option<Vec<Vec<f64>>>,
    cov_scale: f64,
    rng: &mut R,
) -> Result<ToyDataset> {
    if classes < 2 {
        return Err(Error::invalid("toy dataset needs at least 2 classes"));
    }
    if !(cov_scale >= 0.0) {
        return Err(Error::invalid("cov_scale must be nonnegative"));
    }
    let means = means.unwrap_or_else(|| circle_means(classes));
    if means.len() != classes {
        return Err(Error::invalid(format!("{} means for {classes} classes", means.len())));
    }
    let dim = means[0].len();
    if dim == 0 || means.iter().any(|m| m.len() != dim) {
        return Err(Error::invalid("class means must share a positive dimension"));
    }
    for (i, a) in means.iter().enumerate() {
        if means[..i].contains(a) {
            return Err(Error::invalid("class means must be distinct"));
        }
    }
    let mut data = Vec::with_capacity(classes * n_per_class * dim);
    let mut labels = Vec::with_capacity(classes * n_per_class);
    for (k, mean) in means.iter().enumerate() {
        for _ in 0..n_per_class {
            for m in mean {
                let z: f64 = rng.sample(StandardNormal);
                data.push(m + cov_scale * z);
            }
            labels.push(k);
        }
    }
    Ok(ToyDataset {
        points: Matrix::from_vec(classes * n_per_class, dim, data)?,
        labels,
        class_means: means,
        cov_scale,
    })
}

impl ToyDataset {
    pub fn classes(&self) -> usize {
        self.class_means.len()
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label_counts(&self, indices: &[usize]) -> Vec<u64> {
        let mut counts = vec![0u64; self.classes()];
        for &i in indices {
            counts[self.labels[i]] += 1;
        }
        counts
    }

    /// Rows `indices` as a labelled batch.
    pub fn subset(&self, indices: &[usize]) -> Result<SampleBatch> {
        let points = self.points.select_rows(indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        SampleBatch::new(points, Some(labels))
    }

    pub fn as_batch(&self) -> Result<SampleBatch> {
        SampleBatch::new(self.points.clone(), Some(self.labels.clone()))
    }

    /// Fresh draw from the same mixture.
    pub fn resample<R: Rng + ?Sized>(&self, n_per_class: usize, rng: &mut R) -> Result<ToyDataset> {
        make_toy_dataset(
            self.classes(),
            n_per_class,
            Some(self.class_means.clone()),
            self.cov_scale,
            rng,
        )
    }
}
