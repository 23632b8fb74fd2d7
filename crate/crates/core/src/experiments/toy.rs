use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::metrics::population_sd;
use crate::data::{FeatureRecord, Partition, Sample};
use crate::error::{Error, Result};
use crate::gan::{train, AlternationPolicy, ScganConfig, TrainTrace};

/// Two-dimensional Gaussian mixture: class `k` sits at angle `2πk/K` on a circle
/// of radius `radius`; with several modes per class, the modes ring the class
/// centre at distance `spread`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToySpec {
    pub num_classes: usize,
    pub modes_per_class: usize,
    pub per_mode: usize,
    pub sigma: f64,
    pub radius: f64,
    pub spread: f64,
    pub seed: u64,
}

impl Default for ToySpec {
    fn default() -> Self {
        Self {
            num_classes: 4,
            modes_per_class: 1,
            per_mode: 100,
            sigma: 0.3,
            radius: 2.0,
            spread: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyData {
    pub records: Vec<FeatureRecord>,
    /// `(class, centre)` of every mode.
    pub modes: Vec<(usize, [f64; 2])>,
    pub sigma: f64,
}

pub fn toy_mixture(spec: &ToySpec) -> Result<ToyData> {
    if spec.num_classes < 2 || spec.modes_per_class == 0 || spec.per_mode == 0 || !(spec.sigma > 0.0) {
        return Err(Error::config("toy mixture needs >= 2 classes, >= 1 mode, >= 1 point and sigma > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.sigma).map_err(|e| Error::config(e.to_string()))?;
    let mut modes = Vec::new();
    for k in 0..spec.num_classes {
        let a = 2.0 * PI * k as f64 / spec.num_classes as f64;
        let centre = [spec.radius * a.cos(), spec.radius * a.sin()];
        if spec.modes_per_class == 1 {
            modes.push((k, centre));
            continue;
        }
        for j in 0..spec.modes_per_class {
            let b = 2.0 * PI * j as f64 / spec.modes_per_class as f64;
            modes.push((k, [centre[0] + spec.spread * b.cos(), centre[1] + spec.spread * b.sin()]));
        }
    }
    let mut records = Vec::with_capacity(modes.len() * spec.per_mode);
    for &(k, c) in &modes {
        for _ in 0..spec.per_mode {
            let x = vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)];
            records.push(FeatureRecord::real(Sample::Static(x), k, Partition::Train));
        }
    }
    Ok(ToyData {
        records,
        modes,
        sigma: spec.sigma,
    })
}

/// Modes holding at least `min_mass` of their class's generated samples within
/// `2σ` of the mode centre.
pub fn covered_modes(samples: &[(usize, Vec<f64>)], modes: &[(usize, [f64; 2])], sigma: f64, min_mass: f64) -> usize {
    let radius2 = (2.0 * sigma).powi(2);
    modes
        .iter()
        .filter(|(k, c)| {
            let class: Vec<&Vec<f64>> = samples.iter().filter(|(l, _)| l == k).map(|(_, x)| x).collect();
            if class.is_empty() {
                return false;
            }
            let near = class
                .iter()
                .filter(|x| (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) <= radius2)
                .count();
            near as f64 / class.len() as f64 >= min_mass
        })
        .count()
}

/// Loss smoothness of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyStats {
    pub policy: AlternationPolicy,
    /// Standard deviation over the final `tail` recorded steps.
    pub generator_sd: f64,
    pub discriminator_sd: f64,
    /// Mean standard deviation over sliding windows across the whole trace.
    pub generator_window_sd: f64,
    pub discriminator_window_sd: f64,
    pub steps: usize,
}

impl PolicyStats {
    /// `SD(L_G) + SD(L_D)` over the final steps.
    pub fn combined_sd(&self) -> f64 {
        self.generator_sd + self.discriminator_sd
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternationComparison {
    pub dynamic: PolicyStats,
    pub fixed: PolicyStats,
    pub dynamic_trace: TrainTrace,
    pub fixed_trace: TrainTrace,
}

fn windowed_sd(v: &[f64], window: usize) -> f64 {
    if v.len() < window || window == 0 {
        return population_sd(v);
    }
    let sds: Vec<f64> = v.windows(window).map(population_sd).collect();
    sds.iter().sum::<f64>() / sds.len() as f64
}

pub fn policy_stats(policy: &AlternationPolicy, trace: &TrainTrace, tail: usize, window: usize) -> PolicyStats {
    let g = trace.generator_losses();
    let d = trace.discriminator_losses();
    let from = g.len().saturating_sub(tail);
    PolicyStats {
        policy: *policy,
        generator_sd: population_sd(&g[from..]),
        discriminator_sd: population_sd(&d[from..]),
        generator_window_sd: windowed_sd(&g, window),
        discriminator_window_sd: windowed_sd(&d, window),
        steps: g.len(),
    }
}

/// Trains the same configuration under `dynamic` and `fixed` alternation and
/// compares loss smoothness over the final 200 steps and 50-step windows.
pub fn compare_alternation(
    template: &ScganConfig,
    dynamic: &AlternationPolicy,
    fixed: &AlternationPolicy,
    data: &[FeatureRecord],
) -> Result<AlternationComparison> {
    let run = |policy: &AlternationPolicy| {
        let cfg = ScganConfig {
            alternation: *policy,
            ..template.clone()
        };
        train(&cfg, data).map(|(_, trace)| trace)
    };
    let (d, f) = rayon::join(|| run(dynamic), || run(fixed));
    let (dynamic_trace, fixed_trace) = (d?, f?);
    Ok(AlternationComparison {
        dynamic: policy_stats(dynamic, &dynamic_trace, 200, 50),
        fixed: policy_stats(fixed, &fixed_trace, 200, 50),
        dynamic_trace,
        fixed_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gan::threshold;

    #[test]
    fn mixture_layout() {
        let spec = ToySpec {
            modes_per_class: 8,
            per_mode: 5,
            ..ToySpec::default()
        };
        let toy = toy_mixture(&spec).unwrap();
        assert_eq!(toy.modes.len(), 32);
        assert_eq!(toy.records.len(), 160);
        let samples: Vec<(usize, Vec<f64>)> = toy.records.iter().map(|r| (r.label, r.payload.values().to_vec())).collect();
        assert_eq!(covered_modes(&samples, &toy.modes, toy.sigma, 0.02), 32);
        let collapsed: Vec<(usize, Vec<f64>)> = toy.modes.iter().filter(|m| m.1[0] > 2.9 || m.0 != 0).map(|m| (m.0, m.1.to_vec())).collect();
        assert!(covered_modes(&collapsed, &toy.modes, toy.sigma, 0.02) < 32);
    }

    #[test]
    fn identical_arms_give_identical_stats() {
        let toy = toy_mixture(&ToySpec { per_mode: 20, ..ToySpec::default() }).unwrap();
        let cfg = ScganConfig {
            max_iterations: 5,
            hidden_size: 8,
            latent_dim: 4,
            turn_step_cap: 10,
            ..ScganConfig::default()
        };
        let policy = AlternationPolicy::dynamic_default();
        let cmp = compare_alternation(&cfg, &policy, &policy, &toy.records).unwrap();
        assert_eq!(cmp.dynamic.generator_sd, cmp.fixed.generator_sd);
        assert_eq!(cmp.dynamic.discriminator_window_sd, cmp.fixed.discriminator_window_sd);
        for r in &cmp.dynamic_trace.records {
            let (g, d) = threshold(&policy, r.iteration).unwrap();
            assert_eq!(r.generator_threshold, Some(g));
            assert_eq!(r.discriminator_threshold, Some(d));
        }
    }
}
