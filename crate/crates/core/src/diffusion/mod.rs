//! Noise schedules, the forward process, the noise-prediction objective and
//! DDPM/DDIM reverse samplers for a small fully connected denoiser.

mod loss;
mod model;
mod sampling;
mod schedule;

pub use loss::{
    draw_noise, forward_noise, loss_gradient, loss_with_draws, noise_prediction_loss, LossGradient,
    NoiseDraw, SampleBatch,
};
pub use model::{sinusoidal_embedding, DenoiserConfig, DenoiserModel, NoisePredictor};
pub use sampling::{
    ddim_sample_step, ddim_timesteps, ddpm_equivalent_sigma, ddpm_sample_step, generate, SamplerMode,
};
pub use schedule::{build_schedule, NoiseSchedule};
