use rand::Rng;
use rand_distr::StandardNormal;

use super::model::{DenoiserModel, NoisePredictor};
use super::schedule::NoiseSchedule;
use crate::error::{Error, Result};
use crate::params::{Matrix, ParamSet};
use crate::pruning::GroupRegularizer;

/// A batch of clean samples `x_0`, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub points: Matrix,
    /// Class labels; only the federation statistics look at them.
    pub labels: Option<Vec<usize>>,
}

impl SampleBatch {
    pub fn new(points: Matrix, labels: Option<Vec<usize>>) -> Result<Self> {
        if points.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sample batch contains non-finite entries"));
        }
        if let Some(l) = &labels {
            if l.len() != points.rows() {
                return Err(Error::invalid("label count does not match row count"));
            }
        }
        Ok(SampleBatch { points, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("ragged sample rows"));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::new(Matrix::from_vec(rows.len(), dim, data)?, None)
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }
}

/// The per-sample draws of one loss evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    pub t: usize,
    pub eps: Vec<f64>,
}

/// For each sample in turn: `t ~ U{1..T}`, then `eps ~ N(0, I)`.
pub fn draw_noise<R: Rng + ?Sized>(
    batch_len: usize,
    dim: usize,
    sched: &NoiseSchedule,
    rng: &mut R,
) -> Vec<NoiseDraw> {
    (0..batch_len)
        .map(|_| {
            let t = rng.random_range(1..=sched.steps());
            let eps = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            NoiseDraw { t, eps }
        })
        .collect()
}

/// `sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps`.
pub fn forward_noise(x0: &[f64], t: usize, eps: &[f64], sched: &NoiseSchedule) -> Result<Vec<f64>> {
    sched.check_t(t)?;
    if eps.len() != x0.len() {
        return Err(Error::invalid("noise and sample dimensions differ"));
    }
    let ab = sched.alpha_bar(t);
    let (signal, noise) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(x0.iter().zip(eps).map(|(x, e)| signal * x + noise * e).collect())
}

fn check_batch(batch: &SampleBatch, dim: usize) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if batch.dim() != dim {
        return Err(Error::invalid(format!(
            "batch has dimension {}, model expects {dim}",
            batch.dim()
        )));
    }
    Ok(())
}

/// Mean squared noise-prediction error for fixed draws.
pub fn loss_with_draws<P: NoisePredictor + ?Sized>(
    model: &P,
    batch: &SampleBatch,
    draws: &[NoiseDraw],
    sched: &NoiseSchedule,
) -> Result<f64> {
    check_batch(batch, model.data_dim())?;
    if draws.len() != batch.len() {
        return Err(Error::invalid("one draw per sample required"));
    }
    let mut total = 0.0;
    for (i, d) in draws.iter().enumerate() {
        let x_t = forward_noise(batch.row(i), d.t, &d.eps, sched)?;
        let pred = model.predict(&x_t, d.t);
        total += d.eps.iter().zip(&pred).map(|(e, p)| (e - p) * (e - p)).sum::<f64>();
    }
    Ok(total / batch.len() as f64)
}

/// Batch estimate of `E ||eps - eps_theta(x_t, t)||^2`.
pub fn noise_prediction_loss<P: NoisePredictor + ?Sized, R: Rng + ?Sized>(
    model: &P,
    batch: &SampleBatch,
    sched: &NoiseSchedule,
    rng: &mut R,
) -> Result<f64> {
    check_batch(batch, model.data_dim())?;
    let draws = draw_noise(batch.len(), batch.dim(), sched, rng);
    loss_with_draws(model, batch, &draws, sched)
}

/// Loss value, regularizer value and gradient of their sum.
#[derive(Debug, Clone)]
pub struct LossGradient {
    pub loss: f64,
    pub regularizer: f64,
    pub grad: ParamSet,
}

/// Exact gradient of the noise-prediction loss, plus the group regularizer
/// when one is supplied. Uses the same draws as [`noise_prediction_loss`]
/// for the same generator state.
pub fn loss_gradient<R: Rng + ?Sized>(
    model: &DenoiserModel,
    batch: &SampleBatch,
    sched: &NoiseSchedule,
    rng: &mut R,
    sparse: Option<&GroupRegularizer>,
) -> Result<LossGradient> {
    check_batch(batch, model.data_dim())?;
    if let Some(reg) = sparse {
        reg.check(model.params())?;
    }
    let draws = draw_noise(batch.len(), batch.dim(), sched, rng);
    let mut grad = model.params().zeros_like();
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for (i, d) in draws.iter().enumerate() {
        let x_t = forward_noise(batch.row(i), d.t, &d.eps, sched)?;
        let pred = model.predict(&x_t, d.t);
        let upstream: Vec<f64> = pred.iter().zip(&d.eps).map(|(p, e)| 2.0 * (p - e) * scale).collect();
        total += d.eps.iter().zip(&pred).map(|(e, p)| (e - p) * (e - p)).sum::<f64>();
        model.backprop(&x_t, d.t, &upstream, &mut grad);
    }
    let regularizer = match sparse {
        Some(reg) => {
            reg.add_gradient(model.params(), &mut grad)?;
            reg.value(model.params())?
        }
        None => 0.0,
    };
    Ok(LossGradient {
        loss: total * scale,
        regularizer,
        grad,
    })
}
