use serde::{Deserialize, Serialize};

use crate::data::DataKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GanMode {
    /// Conditioned generator, `K + 1`-way discriminator.
    Scgan,
    /// Conditioned generator, binary discriminator fed `[x ‖ c]`.
    Cgan,
    /// Unconditioned generator, `K + 1`-way discriminator; the generator
    /// only has to land in any real class.
    Sgan,
}

impl GanMode {
    pub fn discriminator_outputs(self, num_classes: usize) -> usize {
        match self {
            GanMode::Scgan | GanMode::Sgan => num_classes + 1,
            GanMode::Cgan => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prior {
    Gaussian,
    /// Uniform on `[−1, 1]`.
    Uniform,
}

/// `max(decay^i + offset, floor)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdParams {
    pub decay: f64,
    pub offset: f64,
    pub floor: f64,
}

impl ThresholdParams {
    pub const GENERATOR: ThresholdParams = ThresholdParams {
        decay: 0.95,
        offset: 1.0,
        floor: 1.0,
    };
    pub const DISCRIMINATOR: ThresholdParams = ThresholdParams {
        decay: 0.95,
        offset: 0.0,
        floor: 0.7,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlternationPolicy {
    Fixed {
        generator_epochs: usize,
        discriminator_epochs: usize,
    },
    Dynamic {
        generator: ThresholdParams,
        discriminator: ThresholdParams,
    },
}

impl AlternationPolicy {
    pub fn dynamic_default() -> Self {
        AlternationPolicy::Dynamic {
            generator: ThresholdParams::GENERATOR,
            discriminator: ThresholdParams::DISCRIMINATOR,
        }
    }

    pub fn fixed(epochs: usize) -> Self {
        AlternationPolicy::Fixed {
            generator_epochs: epochs,
            discriminator_epochs: epochs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AlternationPolicy::Fixed {
                generator_epochs,
                discriminator_epochs,
            } => {
                if generator_epochs == 0 || discriminator_epochs == 0 {
                    return Err(Error::config("fixed alternation needs at least one epoch per turn"));
                }
            }
            AlternationPolicy::Dynamic {
                generator,
                discriminator,
            } => {
                for p in [generator, discriminator] {
                    if !(p.decay > 0.0 && p.decay < 1.0) {
                        return Err(Error::config(format!("threshold decay {} must lie in (0, 1)", p.decay)));
                    }
                    if !p.offset.is_finite() || !p.floor.is_finite() {
                        return Err(Error::config("threshold offset and floor must be finite"));
                    }
                }
            }
        }
        Ok(())
    }
}

impl Default for AlternationPolicy {
    fn default() -> Self {
        Self::dynamic_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScganConfig {
    pub mode: GanMode,
    pub num_classes: usize,
    pub latent_dim: usize,
    pub prior: Prior,
    pub hidden_size: usize,
    pub hidden_layers: usize,
    pub generator_lr: f64,
    pub discriminator_lr: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub alternation: AlternationPolicy,
    /// Completed generator/discriminator turn pairs before stopping.
    pub max_iterations: usize,
    /// Minibatch steps allowed in one dynamic turn.
    pub turn_step_cap: usize,
    /// Consecutive turn pairs with both losses under their floors that count as converged.
    pub convergence_turns: usize,
    pub seed: u64,
    pub data_kind: DataKind,
    /// Frames per generated sequence; sequence data only.
    pub sequence_length: Option<usize>,
}

impl Default for ScganConfig {
    fn default() -> Self {
        Self {
            mode: GanMode::Scgan,
            num_classes: 4,
            latent_dim: 32,
            prior: Prior::Gaussian,
            hidden_size: 60,
            hidden_layers: 2,
            generator_lr: 0.001,
            discriminator_lr: 0.01,
            batch_size: 64,
            l2: 1e-4,
            alternation: AlternationPolicy::default(),
            max_iterations: 300,
            turn_step_cap: 50,
            convergence_turns: 10,
            seed: 0,
            data_kind: DataKind::StaticVector,
            sequence_length: None,
        }
    }
}

impl ScganConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::config("need at least two classes"));
        }
        if self.hidden_size == 0 || self.hidden_layers == 0 {
            return Err(Error::config("hidden size and layer count must be positive"));
        }
        if self.latent_dim == 0 {
            return Err(Error::config("latent dimension must be positive"));
        }
        if !(self.generator_lr > 0.0 && self.discriminator_lr > 0.0) {
            return Err(Error::config("learning rates must be positive"));
        }
        if self.batch_size == 0 || self.turn_step_cap == 0 {
            return Err(Error::config("batch size and per-turn step cap must be positive"));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::config("l2 must be non-negative"));
        }
        if self.data_kind == DataKind::Sequence && !matches!(self.sequence_length, Some(t) if t >= 1) {
            return Err(Error::config("sequence data needs sequence_length >= 1"));
        }
        self.alternation.validate()
    }
}
