use rand::Rng;
use rand_distr::StandardNormal;

use super::loss::SampleBatch;
use super::model::NoisePredictor;
use super::schedule::NoiseSchedule;
use crate::error::{Error, Result};
use crate::params::Matrix;

/// Reverse process used by [`generate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplerMode {
    /// Full ancestral chain over every timestep.
    Ddpm,
    /// DDIM on an evenly spaced sub-grid. `eta = 0` is deterministic and
    /// `eta = 1` uses the DDPM-equivalent variance.
    Ddim { steps: usize, eta: f64 },
}

fn check_dims<P: NoisePredictor + ?Sized>(model: &P, x_t: &[f64], z: &[f64]) -> Result<()> {
    if x_t.len() != model.data_dim() || z.len() != model.data_dim() {
        return Err(Error::invalid("sample or noise dimension does not match the model"));
    }
    Ok(())
}

/// One ancestral DDPM step `x_t -> x_{t-1}` with `sigma_t^2` the posterior
/// variance. The noise term is dropped at `t = 1`.
pub fn ddpm_sample_step<P: NoisePredictor + ?Sized>(
    model: &P,
    x_t: &[f64],
    t: usize,
    z: &[f64],
    sched: &NoiseSchedule,
) -> Result<Vec<f64>> {
    sched.check_t(t)?;
    check_dims(model, x_t, z)?;
    let eps = model.predict(x_t, t);
    let coef = sched.beta(t) / (1.0 - sched.alpha_bar(t)).sqrt();
    let inv_sqrt_alpha = 1.0 / sched.alpha(t).sqrt();
    let sigma = if t == 1 { 0.0 } else { sched.posterior_variance(t).sqrt() };
    Ok(x_t
        .iter()
        .zip(&eps)
        .zip(z)
        .map(|((x, e), zi)| (x - coef * e) * inv_sqrt_alpha + sigma * zi)
        .collect())
}

/// Generalised DDIM step `x_t -> x_{t_prev}`.
///
/// The `alpha` symbols are cumulative products; `t_prev = 0` targets the
/// clean sample (`alpha_bar_0 = 1`).
#[allow(clippy::too_many_arguments)]
pub fn ddim_sample_step<P: NoisePredictor + ?Sized>(
    model: &P,
    x_t: &[f64],
    t: usize,
    t_prev: usize,
    sigma_t: f64,
    z: &[f64],
    sched: &NoiseSchedule,
) -> Result<Vec<f64>> {
    sched.check_t(t)?;
    if t_prev >= t {
        return Err(Error::invalid(format!("t_prev {t_prev} must be below t {t}")));
    }
    if !(sigma_t >= 0.0) {
        return Err(Error::invalid("sigma_t must be nonnegative"));
    }
    check_dims(model, x_t, z)?;
    let ab_t = sched.alpha_bar(t);
    let ab_prev = sched.alpha_bar(t_prev);
    let radicand = 1.0 - ab_prev - sigma_t * sigma_t;
    if radicand < -1e-12 {
        return Err(Error::invalid(format!(
            "sigma_t^2 = {} exceeds 1 - alpha_bar_prev = {}",
            sigma_t * sigma_t,
            1.0 - ab_prev
        )));
    }
    let dir = radicand.max(0.0).sqrt();
    let eps = model.predict(x_t, t);
    let (sqrt_ab_prev, sqrt_ab_t, sqrt_one_minus) = (ab_prev.sqrt(), ab_t.sqrt(), (1.0 - ab_t).sqrt());
    Ok(x_t
        .iter()
        .zip(&eps)
        .zip(z)
        .map(|((x, e), zi)| {
            let x0 = (x - sqrt_one_minus * e) / sqrt_ab_t;
            sqrt_ab_prev * x0 + dir * e + sigma_t * zi
        })
        .collect())
}

fn eta_sigma(t: usize, t_prev: usize, eta: f64, sched: &NoiseSchedule) -> f64 {
    let ab_t = sched.alpha_bar(t);
    let ab_prev = sched.alpha_bar(t_prev);
    let v = (1.0 - ab_prev) / (1.0 - ab_t) * (1.0 - ab_t / ab_prev);
    eta * v.max(0.0).sqrt()
}

/// The DDIM `sigma_t` that turns a one-step DDIM update into the DDPM step:
/// `sqrt((1 - ab_{t-1}) / (1 - ab_t)) * sqrt(1 - ab_t / ab_{t-1})`. Zero at `t = 1`.
pub fn ddpm_equivalent_sigma(t: usize, sched: &NoiseSchedule) -> Result<f64> {
    sched.check_t(t)?;
    if t == 1 {
        return Ok(0.0);
    }
    Ok(eta_sigma(t, t - 1, 1.0, sched))
}

/// Evenly spaced descending timestep grid containing `T` and 1.
pub fn ddim_timesteps(total: usize, steps: usize) -> Result<Vec<usize>> {
    if steps == 0 || steps > total {
        return Err(Error::invalid(format!("ddim steps {steps} outside 1..={total}")));
    }
    if steps == 1 {
        return Ok(vec![total]);
    }
    let stride = (total - 1) as f64 / (steps - 1) as f64;
    Ok((0..steps)
        .rev()
        .map(|i| 1 + (i as f64 * stride).round() as usize)
        .collect())
}

fn normal_vec<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Draws `n` samples by running the reverse chain from `x_T ~ N(0, I)`.
pub fn generate<P: NoisePredictor + ?Sized, R: Rng + ?Sized>(
    model: &P,
    n: usize,
    mode: SamplerMode,
    sched: &NoiseSchedule,
    rng: &mut R,
) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::invalid("generate needs n >= 1"));
    }
    let dim = model.data_dim();
    let grid = match mode {
        SamplerMode::Ddpm => (1..=sched.steps()).rev().collect::<Vec<_>>(),
        SamplerMode::Ddim { steps, eta } => {
            if !(eta >= 0.0) {
                return Err(Error::invalid("eta must be nonnegative"));
            }
            ddim_timesteps(sched.steps(), steps)?
        }
    };
    let zeros = vec![0.0; dim];
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let mut x = normal_vec(dim, rng);
        for (i, &t) in grid.iter().enumerate() {
            x = match mode {
                SamplerMode::Ddpm => {
                    let z = if t > 1 { normal_vec(dim, rng) } else { zeros.clone() };
                    ddpm_sample_step(model, &x, t, &z, sched)?
                }
                SamplerMode::Ddim { eta, .. } => {
                    let t_prev = grid.get(i + 1).copied().unwrap_or(0);
                    let sigma = eta_sigma(t, t_prev, eta, sched);
                    let z = if sigma > 0.0 { normal_vec(dim, rng) } else { zeros.clone() };
                    ddim_sample_step(model, &x, t, t_prev, sigma, &z, sched)?
                }
            };
        }
        data.extend(x);
    }
    SampleBatch::new(Matrix::from_vec(n, dim, data)?, None)
}
