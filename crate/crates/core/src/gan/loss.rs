//! Adversarial objectives, written as cross-entropies to minimize.

use super::config::GanMode;
use super::model::ScganModel;
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::nn::{cross_entropy_with_grad, leading_mass_loss_with_grad};

/// Loss and logit gradient pushing a real sample toward its class
/// (toward "real" for cgan).
pub fn real_term(model: &ScganModel, logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    check_label(model, label)?;
    match model.mode() {
        GanMode::Scgan | GanMode::Sgan => cross_entropy_with_grad(logits, label),
        GanMode::Cgan => cross_entropy_with_grad(logits, 0),
    }
}

/// Loss and logit gradient pushing a generated sample toward "fake".
pub fn fake_term(model: &ScganModel, logits: &[f64]) -> Result<(f64, Vec<f64>)> {
    cross_entropy_with_grad(logits, model.fake_index())
}

/// Generator-side loss on one generated sample conditioned on `class`.
pub fn generator_term(model: &ScganModel, logits: &[f64], class: usize) -> Result<(f64, Vec<f64>)> {
    match model.mode() {
        GanMode::Scgan => {
            check_label(model, class)?;
            cross_entropy_with_grad(logits, class)
        }
        GanMode::Sgan => leading_mass_loss_with_grad(logits, model.num_classes()),
        GanMode::Cgan => {
            check_label(model, class)?;
            cross_entropy_with_grad(logits, 0)
        }
    }
}

fn check_label(model: &ScganModel, label: usize) -> Result<()> {
    if label >= model.num_classes() {
        return Err(Error::IndexOutOfRange {
            context: "class label",
            index: label,
            len: model.num_classes(),
        });
    }
    Ok(())
}

/// Mean real-sample cross-entropy plus mean fake-sample cross-entropy.
///
/// `fake` pairs each generated sample with its conditioning class, which
/// only the cgan discriminator reads. An empty fake batch contributes 0.
pub fn discriminator_loss(model: &ScganModel, real: &[(Sample, usize)], fake: &[(Sample, usize)]) -> Result<f64> {
    if real.is_empty() {
        return Err(Error::EmptyInput("real batch"));
    }
    let mut real_sum = 0.0;
    for (x, label) in real {
        check_label(model, *label)?;
        let logits = model.discriminator_logits(x, *label)?;
        real_sum += real_term(model, &logits, *label)?.0;
    }
    let mut fake_sum = 0.0;
    for (x, class) in fake {
        let logits = model.discriminator_logits(x, *class)?;
        fake_sum += fake_term(model, &logits)?.0;
    }
    let fake_mean = if fake.is_empty() { 0.0 } else { fake_sum / fake.len() as f64 };
    Ok(real_sum / real.len() as f64 + fake_mean)
}

/// Mean generator loss over a batch of generated samples.
///
/// scgan and cgan need the conditioning class of every sample.
pub fn generator_loss(model: &ScganModel, fake: &[Sample], conditions: Option<&[usize]>) -> Result<f64> {
    if fake.is_empty() {
        return Err(Error::EmptyInput("generated batch"));
    }
    let needs = matches!(model.mode(), GanMode::Scgan | GanMode::Cgan);
    let conditions = match conditions {
        Some(c) if c.len() != fake.len() => return Err(Error::dims("generator conditions", fake.len(), c.len())),
        None if needs => return Err(Error::config("scgan/cgan generator loss needs conditions")),
        other => other,
    };
    let mut sum = 0.0;
    for (i, x) in fake.iter().enumerate() {
        let class = conditions.map_or(0, |c| c[i]);
        let logits = model.discriminator_logits(x, class)?;
        sum += generator_term(model, &logits, class)?.0;
    }
    Ok(sum / fake.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gan::ScganConfig;
    use crate::nn::{Network, ParamSet};

    fn uniform_model(mode: GanMode) -> ScganModel {
        let cfg = ScganConfig {
            mode,
            hidden_size: 6,
            latent_dim: 3,
            ..ScganConfig::default()
        };
        let mut m = ScganModel::init(&cfg, 2).unwrap();
        m.discriminator.scale(0.0);
        m
    }

    /// Discriminator whose head puts a huge logit on `x[0]`-selected classes:
    /// a one-layer linear net reading a one-hot input.
    fn saturated_model() -> ScganModel {
        let cfg = ScganConfig {
            hidden_size: 6,
            latent_dim: 3,
            hidden_layers: 1,
            ..ScganConfig::default()
        };
        let mut m = ScganModel::init(&cfg, 5).unwrap();
        let mut layer = crate::nn::DenseLayerParams::init(5, 5, crate::nn::Activation::Linear, 0.0, &mut rand::rng());
        for i in 0..5 {
            layer.weight.set(i, i, 40.0);
        }
        m.discriminator = Network::Dense(crate::nn::Mlp { layers: vec![layer] });
        m
    }

    fn one_hot(i: usize) -> Sample {
        let mut v = vec![0.0; 5];
        v[i] = 1.0;
        Sample::Static(v)
    }

    #[test]
    fn uniform_discriminator_values() {
        let m = uniform_model(GanMode::Scgan);
        let real = vec![(Sample::Static(vec![0.2, 0.1]), 1), (Sample::Static(vec![-1.0, 3.0]), 3)];
        let fake = vec![(Sample::Static(vec![0.0, 0.5]), 0)];
        let ld = discriminator_loss(&m, &real, &fake).unwrap();
        assert!((ld - 2.0 * 5f64.ln()).abs() < 1e-12);
        assert!((ld - 3.2189).abs() < 1e-4);
        let lg = generator_loss(&m, &[Sample::Static(vec![0.0, 0.5])], Some(&[2])).unwrap();
        assert!((lg - 5f64.ln()).abs() < 1e-12);

        let s = uniform_model(GanMode::Sgan);
        let lg = generator_loss(&s, &[Sample::Static(vec![0.0, 0.5])], None).unwrap();
        assert!((lg + (0.8f64).ln()).abs() < 1e-12);
        assert!((lg - 0.2231).abs() < 1e-4);
    }

    #[test]
    fn empty_fake_batch_is_real_only() {
        let m = uniform_model(GanMode::Scgan);
        let real = vec![(Sample::Static(vec![0.2, 0.1]), 1)];
        let ld = discriminator_loss(&m, &real, &[]).unwrap();
        assert!((ld - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn saturated_discriminator_has_near_zero_losses() {
        let m = saturated_model();
        let real: Vec<_> = (0..4).map(|k| (one_hot(k), k)).collect();
        let fake = vec![(one_hot(4), 0)];
        assert!(discriminator_loss(&m, &real, &fake).unwrap() < 1e-6);
        let lg = generator_loss(&m, &[one_hot(2)], Some(&[2])).unwrap();
        assert!(lg < 1e-6);
    }

    #[test]
    fn label_and_condition_errors() {
        let m = uniform_model(GanMode::Scgan);
        assert!(discriminator_loss(&m, &[(Sample::Static(vec![0.0, 0.0]), 4)], &[]).is_err());
        assert!(generator_loss(&m, &[Sample::Static(vec![0.0, 0.0])], None).is_err());
        let c = uniform_model(GanMode::Cgan);
        assert!(generator_loss(&c, &[Sample::Static(vec![0.0, 0.0])], None).is_err());
    }
}
