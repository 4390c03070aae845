use rand::seq::SliceRandom;
use rand::Rng;

use super::state::{ClientState, HyperParams};
use crate::diffusion::{loss_gradient, DenoiserModel, NoiseSchedule, SampleBatch};
use crate::error::{Error, Result};
use crate::params::Matrix;
use crate::pruning::GroupRegularizer;

/// `E` epochs of shuffled mini-batch SGD starting from `start`. The group
/// regularizer is added to every step when supplied. Returns the updated
/// model and the mean batch loss (NaN when no step ran).
pub fn local_train<R: Rng + ?Sized>(
    client: &ClientState,
    start: &DenoiserModel,
    sched: &NoiseSchedule,
    hyper: &HyperParams,
    sparse: Option<&GroupRegularizer>,
    rng: &mut R,
) -> Result<(DenoiserModel, f64)> {
    let data = &client.data;
    if data.is_empty() {
        return Err(Error::config(format!("client {} has an empty partition", client.id)));
    }
    if hyper.batch_size == 0 {
        return Err(Error::key("batch_size", "must be positive"));
    }
    let mut model = start.clone();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_sum = 0.0;
    let mut steps = 0usize;
    for _ in 0..hyper.local_epochs {
        order.shuffle(rng);
        for chunk in order.chunks(hyper.batch_size) {
            let batch = gather(data, chunk)?;
            let lg = loss_gradient(&model, &batch, sched, rng, sparse)?;
            model.params_mut().axpy(-hyper.eta, &lg.grad)?;
            loss_sum += lg.loss;
            steps += 1;
        }
    }
    let mean = if steps == 0 { f64::NAN } else { loss_sum / steps as f64 };
    Ok((model, mean))
}

fn gather(data: &SampleBatch, rows: &[usize]) -> Result<SampleBatch> {
    let dim = data.dim();
    let mut values = Vec::with_capacity(rows.len() * dim);
    for &r in rows {
        values.extend_from_slice(data.row(r));
    }
    SampleBatch::new(Matrix::from_vec(rows.len(), dim, values)?, None)
}
