//! Training-set augmentation: the scGAN ensemble synthesis pool with
//! discriminator filtering and class-balanced selection, and the SMOTE,
//! additive-noise and replication baselines.

mod ensemble;
mod noise;
mod pool;
mod replicate;
mod smote;

pub use ensemble::{train_ensemble, EnsembleConfig, EnsembleOutcome, TrainedMember};
pub use noise::{noise_transform, synth_noise, transform_grid, NoiseKind, NoiseOutcome, TRANSFORM_COPIES};
pub use pool::{
    draw_balanced, filter_by_discriminator, judge_pool, merge, select_balanced, synthesize_pool, write_pool, AugmentPlan,
    PoolEntry, PoolSource, SynthPool, Verdict,
};
pub use replicate::oversample_replicate;
pub use smote::{smote, SmoteSample, DEFAULT_K_NEIGHBORS};
