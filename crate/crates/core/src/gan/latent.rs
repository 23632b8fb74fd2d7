use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use super::config::Prior;
use crate::error::{Error, Result};

/// Generator noise input `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentVector(pub Vec<f64>);

/// One-hot class condition `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionVector {
    class: usize,
    num_classes: usize,
}

impl ConditionVector {
    pub fn new(class: usize, num_classes: usize) -> Result<Self> {
        if class >= num_classes {
            return Err(Error::IndexOutOfRange {
                context: "condition class",
                index: class,
                len: num_classes,
            });
        }
        Ok(Self { class, num_classes })
    }

    pub fn class(&self) -> usize {
        self.class
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn one_hot(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.num_classes];
        v[self.class] = 1.0;
        v
    }
}

pub fn sample_latent<R: Rng + ?Sized>(latent_dim: usize, prior: Prior, rng: &mut R) -> LatentVector {
    let z = match prior {
        Prior::Gaussian => (0..latent_dim).map(|_| StandardNormal.sample(rng)).collect(),
        Prior::Uniform => {
            let u = Uniform::new_inclusive(-1.0, 1.0).expect("valid bounds");
            (0..latent_dim).map(|_| u.sample(rng)).collect()
        }
    };
    LatentVector(z)
}
