use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::FeatureRecord;
use crate::error::{Error, Result};
use crate::gan::{train, ScganConfig, ScganModel, TrainTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Hidden width of each member, in member order.
    pub hidden_sizes: Vec<usize>,
    /// Settings shared by all members; `hidden_size` and `seed` are overridden.
    pub template: ScganConfig,
    /// Per-member seeds. When absent member `i` uses `template.seed + i`.
    pub seeds: Option<Vec<u64>>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![40, 60, 80, 100],
            template: ScganConfig::default(),
            seeds: None,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_sizes.is_empty() {
            return Err(Error::config("ensemble needs at least one member"));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::config("member hidden sizes must be positive"));
        }
        if let Some(seeds) = &self.seeds {
            if seeds.len() != self.hidden_sizes.len() {
                return Err(Error::config(format!(
                    "{} seeds for {} members",
                    seeds.len(),
                    self.hidden_sizes.len()
                )));
            }
        }
        self.template.validate()
    }

    pub fn member_seed(&self, member: usize) -> u64 {
        match &self.seeds {
            Some(s) => s[member],
            None => self.template.seed.wrapping_add(member as u64),
        }
    }

    pub fn member_config(&self, member: usize) -> ScganConfig {
        ScganConfig {
            hidden_size: self.hidden_sizes[member],
            seed: self.member_seed(member),
            ..self.template.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedMember {
    /// Position in the configured member list.
    pub id: usize,
    pub model: ScganModel,
    pub trace: TrainTrace,
}

#[derive(Debug)]
pub struct EnsembleOutcome {
    pub members: Vec<TrainedMember>,
    /// Members whose training failed, with the cause.
    pub failures: Vec<Error>,
}

impl EnsembleOutcome {
    pub fn models(&self) -> Vec<&ScganModel> {
        self.members.iter().map(|m| &m.model).collect()
    }
}

/// Trains every member independently. A failing member is reported in
/// `failures` and does not affect the others.
pub fn train_ensemble(cfg: &EnsembleConfig, train_set: &[FeatureRecord]) -> Result<EnsembleOutcome> {
    cfg.validate()?;
    let results: Vec<(usize, Result<(ScganModel, TrainTrace)>)> = (0..cfg.hidden_sizes.len())
        .into_par_iter()
        .map(|i| (i, train(&cfg.member_config(i), train_set)))
        .collect();
    let mut members = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok((model, trace)) => members.push(TrainedMember { id, model, trace }),
            Err(e) => failures.push(Error::Member {
                member: id,
                source: Box::new(e),
            }),
        }
    }
    Ok(EnsembleOutcome { members, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Partition, Sample};
    use crate::gan::{ConditionVector, LatentVector};
    use crate::nn::ParamSet;

    fn tiny_set() -> Vec<FeatureRecord> {
        (0..16)
            .map(|i| {
                let k = i % 2;
                FeatureRecord::real(Sample::Static(vec![k as f64, 1.0 - k as f64 + 0.01 * i as f64]), k, Partition::Train)
            })
            .collect()
    }

    fn template() -> ScganConfig {
        ScganConfig {
            num_classes: 2,
            latent_dim: 4,
            max_iterations: 2,
            turn_step_cap: 3,
            batch_size: 8,
            ..ScganConfig::default()
        }
    }

    #[test]
    fn members_have_distinct_widths_and_outputs() {
        let cfg = EnsembleConfig {
            template: template(),
            ..EnsembleConfig::default()
        };
        let out = train_ensemble(&cfg, &tiny_set()).unwrap();
        assert!(out.failures.is_empty());
        let sizes: Vec<usize> = out.members.iter().map(|m| m.model.config.hidden_size).collect();
        assert_eq!(sizes, vec![40, 60, 80, 100]);
        let counts: Vec<usize> = out.members.iter().map(|m| m.model.discriminator.num_params()).collect();
        assert!(counts.windows(2).all(|w| w[0] < w[1]));
        let z = LatentVector(vec![0.3, -0.2, 0.1, 0.5]);
        let c = ConditionVector::new(1, 2).unwrap();
        let a = out.members[0].model.generate_static(&z, &c).unwrap();
        let b = out.members[1].model.generate_static(&z, &c).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn singleton_matches_mono_training() {
        let cfg = EnsembleConfig {
            hidden_sizes: vec![60],
            template: template(),
            seeds: Some(vec![11]),
        };
        let out = train_ensemble(&cfg, &tiny_set()).unwrap();
        let mono = train(&ScganConfig { seed: 11, ..template() }, &tiny_set()).unwrap().0;
        assert_eq!(out.members[0].model, mono);
    }

    #[test]
    fn validation() {
        let mut cfg = EnsembleConfig { hidden_sizes: vec![], ..EnsembleConfig::default() };
        assert!(train_ensemble(&cfg, &tiny_set()).is_err());
        cfg.hidden_sizes = vec![10, 0];
        assert!(cfg.validate().is_err());
        cfg.hidden_sizes = vec![10, 20];
        cfg.seeds = Some(vec![1]);
        assert!(cfg.validate().is_err());
    }
}
