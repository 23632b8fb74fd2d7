//! Semi-supervised conditional GAN: conditioned generator, `K + 1`-way
//! discriminator, threshold-driven alternation, recurrent sequence generation,
//! and the cgan / sgan ablation modes.

mod alternation;
mod config;
mod latent;
mod loss;
mod model;
mod train;

pub use alternation::{threshold, threshold_value};
pub use config::{AlternationPolicy, GanMode, Prior, ScganConfig, ThresholdParams};
pub use latent::{sample_latent, ConditionVector, LatentVector};
pub use loss::{discriminator_loss, fake_term, generator_loss, generator_term, real_term};
pub use model::{argmax, Generator, GeneratorTrace, ScganModel};
pub use train::{train, TraceRecord, TrainTrace, TrainedNet};
