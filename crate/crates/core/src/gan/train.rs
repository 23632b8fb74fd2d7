use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::alternation::threshold_value;
use super::config::{AlternationPolicy, GanMode, ScganConfig};
use super::latent::{sample_latent, ConditionVector};
use super::loss::{fake_term, generator_term, real_term};
use super::model::ScganModel;
use crate::data::{BatchSampler, FeatureRecord, Sample};
use crate::error::{Error, Result};
use crate::nn::{adam_update, AdamState, DenseMatrix, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainedNet {
    Generator,
    Discriminator,
}

/// One minibatch step. Losses are the data terms of the batch the step was
/// taken on, evaluated before the update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub iteration: usize,
    pub trained: TrainedNet,
    pub generator_loss: f64,
    pub discriminator_loss: f64,
    pub generator_threshold: Option<f64>,
    pub discriminator_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
    /// Completed turn pairs.
    pub iterations: usize,
    pub converged: bool,
}

impl TrainTrace {
    pub fn generator_losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.generator_loss).collect()
    }

    pub fn discriminator_losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.discriminator_loss).collect()
    }
}

struct Trainer<'a> {
    model: ScganModel,
    g_state: AdamState,
    d_state: AdamState,
    rng: ChaCha8Rng,
    data: &'a [FeatureRecord],
    sampler: BatchSampler,
    trace: TrainTrace,
}

/// Train an scGAN (or its cgan / sgan ablations) on labeled examples.
///
/// Networks alternate in turns, discriminator first. Under a dynamic policy a
/// turn lasts until the active network's batch loss falls below its threshold
/// for the current turn pair `i` (or the per-turn step cap is hit); under a
/// fixed policy each turn is a fixed number of epochs.
pub fn train(config: &ScganConfig, train_set: &[FeatureRecord]) -> Result<(ScganModel, TrainTrace)> {
    config.validate()?;
    let first = train_set.first().ok_or(Error::EmptyInput("training set"))?;
    let feature_dim = first.payload.feature_dim();
    if first.payload.kind() != config.data_kind {
        return Err(Error::WrongDataKind {
            expected: config.data_kind.name(),
            found: first.payload.kind().name(),
        });
    }
    for r in train_set {
        if !r.payload.same_shape(&first.payload) {
            return Err(Error::dims("training example shape", first.payload.values().len(), r.payload.values().len()));
        }
        if r.label >= config.num_classes {
            return Err(Error::IndexOutOfRange {
                context: "training label",
                index: r.label,
                len: config.num_classes,
            });
        }
    }
    if let (Sample::Sequence(m), Some(t)) = (&first.payload, config.sequence_length) {
        if m.rows() != t {
            return Err(Error::dims("training sequence length", t, m.rows()));
        }
    }
    if feature_dim == 0 {
        return Err(Error::config("feature dimension must be positive"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let model = ScganModel::init_with_rng(config, feature_dim, &mut rng);
    let mut trainer = Trainer {
        g_state: AdamState::new(&model.generator),
        d_state: AdamState::new(&model.discriminator),
        model,
        rng,
        data: train_set,
        sampler: BatchSampler::new(train_set.len()),
        trace: TrainTrace::default(),
    };
    trainer.run()?;
    Ok((trainer.model, trainer.trace))
}

impl Trainer<'_> {
    fn run(&mut self) -> Result<()> {
        let cfg = self.model.config.clone();
        match cfg.alternation {
            AlternationPolicy::Dynamic {
                generator,
                discriminator,
            } => {
                let mut below_floor = 0;
                for i in 0..cfg.max_iterations {
                    let tg = threshold_value(generator, i);
                    let td = threshold_value(discriminator, i);
                    let mut last_d = f64::INFINITY;
                    for _ in 0..cfg.turn_step_cap {
                        let (ld, _) = self.discriminator_step(i, Some((tg, td)))?;
                        last_d = ld;
                        if ld < td {
                            break;
                        }
                    }
                    let mut last_g = f64::INFINITY;
                    for _ in 0..cfg.turn_step_cap {
                        let (lg, ld) = self.generator_step(i, Some((tg, td)))?;
                        last_g = lg;
                        last_d = ld;
                        if lg < tg {
                            break;
                        }
                    }
                    self.trace.iterations = i + 1;
                    if last_g < generator.floor && last_d < discriminator.floor {
                        below_floor += 1;
                        if below_floor >= cfg.convergence_turns {
                            self.trace.converged = true;
                            break;
                        }
                    } else {
                        below_floor = 0;
                    }
                }
            }
            AlternationPolicy::Fixed {
                generator_epochs,
                discriminator_epochs,
            } => {
                let per_epoch = self.data.len().div_ceil(cfg.batch_size);
                for i in 0..cfg.max_iterations {
                    for _ in 0..discriminator_epochs * per_epoch {
                        self.discriminator_step(i, None)?;
                    }
                    for _ in 0..generator_epochs * per_epoch {
                        self.generator_step(i, None)?;
                    }
                    self.trace.iterations = i + 1;
                }
            }
        }
        Ok(())
    }

    fn draw_fakes(&mut self, n: usize) -> Result<Vec<(usize, super::model::GeneratorTrace)>> {
        let k = self.model.num_classes();
        let steps = self.model.config.sequence_length.unwrap_or(1);
        (0..n)
            .map(|_| {
                let class = self.rng.random_range(0..k);
                let z = sample_latent(self.model.config.latent_dim, self.model.config.prior, &mut self.rng);
                let c = ConditionVector::new(class, k)?;
                Ok((class, self.model.generator_forward(&z, &c, steps)?))
            })
            .collect()
    }

    /// Returns `(L_D, L_G)` of the batch.
    fn discriminator_step(&mut self, iteration: usize, thresholds: Option<(f64, f64)>) -> Result<(f64, f64)> {
        let b = self.model.config.batch_size;
        let idx = self.sampler.next(b, &mut self.rng);
        let fakes = self.draw_fakes(b)?;
        let model = &self.model;
        let scale = 1.0 / b as f64;
        let mut grads = model.discriminator.zeros_like();
        let (mut real_sum, mut fake_sum, mut gen_sum) = (0.0, 0.0, 0.0);

        for &i in &idx {
            let rec = &self.data[i];
            let input = model.discriminator_input(&rec.payload, rec.label);
            let tr = model.discriminator.forward_traced(&input)?;
            let (l, mut d) = real_term(model, tr.output(), rec.label)?;
            real_sum += l;
            d.iter_mut().for_each(|v| *v *= scale);
            model.discriminator.backward_sample(&tr, &d, &mut grads);
        }
        for (class, gtrace) in &fakes {
            let input = model.discriminator_input(&gtrace.sample(), *class);
            let tr = model.discriminator.forward_traced(&input)?;
            let (l, mut d) = fake_term(model, tr.output())?;
            fake_sum += l;
            gen_sum += generator_term(model, tr.output(), *class)?.0;
            d.iter_mut().for_each(|v| *v *= scale);
            model.discriminator.backward_sample(&tr, &d, &mut grads);
        }

        let ld = (real_sum + fake_sum) * scale;
        let lg = gen_sum * scale;
        if !ld.is_finite() {
            return Err(Error::Divergence {
                iteration,
                network: "discriminator",
            });
        }
        model.discriminator.add_l2_grad(&mut grads, model.config.l2);
        let lr = model.config.discriminator_lr;
        adam_update(&mut self.model.discriminator, &grads, &mut self.d_state, lr, 0.0)
            .map_err(|_| Error::Divergence {
                iteration,
                network: "discriminator",
            })?;
        self.record(iteration, TrainedNet::Discriminator, lg, ld, thresholds);
        Ok((ld, lg))
    }

    /// Returns `(L_G, L_D)`; `L_D` pairs a fresh real batch with this step's fakes.
    fn generator_step(&mut self, iteration: usize, thresholds: Option<(f64, f64)>) -> Result<(f64, f64)> {
        let b = self.model.config.batch_size;
        let fakes = self.draw_fakes(b)?;
        let idx = self.sampler.next(b, &mut self.rng);
        let model = &self.model;
        let scale = 1.0 / b as f64;
        let mut g_grads = model.generator.zeros_like();
        let mut scratch = model.discriminator.zeros_like();
        let (mut gen_sum, mut fake_sum, mut real_sum) = (0.0, 0.0, 0.0);
        let fd = model.feature_dim;

        for (class, gtrace) in &fakes {
            let input = model.discriminator_input(&gtrace.sample(), *class);
            let tr = model.discriminator.forward_traced(&input)?;
            let (l, mut d) = generator_term(model, tr.output(), *class)?;
            gen_sum += l;
            fake_sum += fake_term(model, tr.output())?.0;
            d.iter_mut().for_each(|v| *v *= scale);
            let dx = model.discriminator.backward_sample(&tr, &d, &mut scratch);
            let dx = strip_condition(dx, fd, model.mode());
            model.generator_backward(gtrace, &dx, &mut g_grads);
        }
        for &i in &idx {
            let rec = &self.data[i];
            let logits = model.discriminator.forward(&model.discriminator_input(&rec.payload, rec.label))?;
            real_sum += real_term(model, &logits, rec.label)?.0;
        }

        let lg = gen_sum * scale;
        let ld = (real_sum + fake_sum) * scale;
        if !lg.is_finite() {
            return Err(Error::Divergence {
                iteration,
                network: "generator",
            });
        }
        model.generator.add_l2_grad(&mut g_grads, model.config.l2);
        let lr = model.config.generator_lr;
        adam_update(&mut self.model.generator, &g_grads, &mut self.g_state, lr, 0.0).map_err(|_| {
            Error::Divergence {
                iteration,
                network: "generator",
            }
        })?;
        self.record(iteration, TrainedNet::Generator, lg, ld, thresholds);
        Ok((lg, ld))
    }

    fn record(&mut self, iteration: usize, trained: TrainedNet, lg: f64, ld: f64, thresholds: Option<(f64, f64)>) {
        let step = self.trace.records.len();
        self.trace.records.push(TraceRecord {
            step,
            iteration,
            trained,
            generator_loss: lg,
            discriminator_loss: ld,
            generator_threshold: thresholds.map(|t| t.0),
            discriminator_threshold: thresholds.map(|t| t.1),
        });
    }
}

/// Drop the condition columns a cgan discriminator appends to its input.
fn strip_condition(dx: Sample, feature_dim: usize, mode: GanMode) -> Sample {
    if mode != GanMode::Cgan {
        return dx;
    }
    match dx {
        Sample::Static(mut v) => {
            v.truncate(feature_dim);
            Sample::Static(v)
        }
        Sample::Sequence(m) => {
            let mut out = DenseMatrix::zeros(m.rows(), feature_dim);
            for t in 0..m.rows() {
                out.row_mut(t).copy_from_slice(&m.row(t)[..feature_dim]);
            }
            Sample::Sequence(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DataKind, Partition};
    use crate::gan::{LatentVector, Prior};
    use crate::nn::grad_check_with;

    fn static_set(n: usize, rng: &mut ChaCha8Rng) -> Vec<FeatureRecord> {
        (0..n)
            .map(|i| {
                let label = i % 3;
                let x = vec![label as f64 + rng.random::<f64>() * 0.1, -(label as f64)];
                FeatureRecord::real(Sample::Static(x), label, Partition::Train)
            })
            .collect()
    }

    fn small_config(mode: GanMode, kind: DataKind) -> ScganConfig {
        ScganConfig {
            mode,
            num_classes: 3,
            latent_dim: 3,
            hidden_size: 5,
            hidden_layers: 2,
            batch_size: 8,
            max_iterations: 5,
            turn_step_cap: 4,
            data_kind: kind,
            sequence_length: (kind == DataKind::Sequence).then_some(4),
            seed: 17,
            ..ScganConfig::default()
        }
    }

    /// Generator loss for fixed latents, and its analytic gradient through D.
    fn generator_objective(model: &ScganModel, batch: &[(LatentVector, usize)]) -> (f64, super::super::Generator) {
        let steps = model.config.sequence_length.unwrap_or(1);
        let mut grads = model.generator.zeros_like();
        let mut scratch = model.discriminator.zeros_like();
        let mut total = 0.0;
        for (z, class) in batch {
            let c = ConditionVector::new(*class, model.num_classes()).unwrap();
            let gt = model.generator_forward(z, &c, steps).unwrap();
            let tr = model.discriminator.forward_traced(&model.discriminator_input(&gt.sample(), *class)).unwrap();
            let (l, d) = generator_term(model, tr.output(), *class).unwrap();
            total += l;
            let dx = model.discriminator.backward_sample(&tr, &d, &mut scratch);
            model.generator_backward(&gt, &strip_condition(dx, model.feature_dim, model.mode()), &mut grads);
        }
        (total, grads)
    }

    #[test]
    fn generator_gradients_through_discriminator_match_differences() {
        for kind in [DataKind::StaticVector, DataKind::Sequence] {
            for mode in [GanMode::Scgan, GanMode::Sgan, GanMode::Cgan] {
                let cfg = small_config(mode, kind);
                let mut model = ScganModel::init(&cfg, 2).unwrap();
                // larger weights than the default initializer give well-conditioned differences
                model.generator.scale(3.0);
                model.discriminator.scale(3.0);
                let mut rng = ChaCha8Rng::seed_from_u64(4);
                let batch: Vec<_> = (0..3).map(|i| (sample_latent(3, Prior::Gaussian, &mut rng), i % 3)).collect();
                let (_, analytic) = generator_objective(&model, &batch);
                let report = grad_check_with(
                    &model.generator,
                    &analytic,
                    |g| {
                        let mut m = model.clone();
                        m.generator = g.clone();
                        generator_objective(&m, &batch).0
                    },
                    1e-5,
                    1e-4,
                );
                // entries below ~1e-7 sit at the finite-difference noise floor
                let ok = report
                    .tensors
                    .iter()
                    .all(|t| t.max_relative_error < 1e-4 || (t.worst.0 - t.worst.1).abs() < 1e-10);
                assert!(ok, "{kind:?} {mode:?}: {report:?}");
            }
        }
    }

    #[test]
    fn zero_iterations_returns_initialized_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data = static_set(12, &mut rng);
        let cfg = ScganConfig {
            max_iterations: 0,
            ..small_config(GanMode::Scgan, DataKind::StaticVector)
        };
        let (model, trace) = train(&cfg, &data).unwrap();
        assert!(trace.records.is_empty());
        assert_eq!(model, ScganModel::init(&cfg, 2).unwrap());
    }

    #[test]
    fn identical_inputs_give_bitwise_identical_traces() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = static_set(30, &mut rng);
        for policy in [AlternationPolicy::dynamic_default(), AlternationPolicy::fixed(1)] {
            let cfg = ScganConfig {
                alternation: policy,
                ..small_config(GanMode::Scgan, DataKind::StaticVector)
            };
            let (m1, t1) = train(&cfg, &data).unwrap();
            let (m2, t2) = train(&cfg, &data).unwrap();
            let bits = |t: &TrainTrace| {
                t.records
                    .iter()
                    .map(|r| (r.generator_loss.to_bits(), r.discriminator_loss.to_bits()))
                    .collect::<Vec<_>>()
            };
            assert_eq!(bits(&t1), bits(&t2));
            assert_eq!(m1, m2);
        }
    }

    #[test]
    fn trace_steps_increase_and_thresholds_follow_policy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = static_set(30, &mut rng);
        let cfg = small_config(GanMode::Scgan, DataKind::StaticVector);
        let (_, trace) = train(&cfg, &data).unwrap();
        assert!(!trace.records.is_empty());
        for w in trace.records.windows(2) {
            assert!(w[1].step > w[0].step);
            assert!(w[1].iteration >= w[0].iteration);
        }
        let AlternationPolicy::Dynamic { generator, discriminator } = cfg.alternation else { unreachable!() };
        for r in &trace.records {
            assert_eq!(r.generator_threshold, Some(threshold_value(generator, r.iteration)));
            assert_eq!(r.discriminator_threshold, Some(threshold_value(discriminator, r.iteration)));
        }
        // each turn pair starts with the discriminator
        let mut last_iter = usize::MAX;
        for r in &trace.records {
            if r.iteration != last_iter {
                assert_eq!(r.trained, TrainedNet::Discriminator);
                last_iter = r.iteration;
            }
        }
    }

    #[test]
    fn fixed_policy_turn_lengths_are_epochs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = static_set(20, &mut rng);
        let cfg = ScganConfig {
            alternation: AlternationPolicy::Fixed {
                generator_epochs: 2,
                discriminator_epochs: 1,
            },
            max_iterations: 2,
            ..small_config(GanMode::Scgan, DataKind::StaticVector)
        };
        let (_, trace) = train(&cfg, &data).unwrap();
        // 20 examples, batch 8 → 3 steps per epoch
        let pattern: Vec<TrainedNet> = trace.records.iter().map(|r| r.trained).collect();
        use TrainedNet::{Discriminator as D, Generator as G};
        assert_eq!(pattern, vec![D, D, D, G, G, G, G, G, G, D, D, D, G, G, G, G, G, G]);
    }

    #[test]
    fn sequence_training_runs_and_keeps_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let data: Vec<FeatureRecord> = (0..12)
            .map(|i| {
                let seq = DenseMatrix::random_normal(4, 2, 0.3, &mut rng);
                FeatureRecord::real(Sample::Sequence(seq), i % 3, Partition::Train)
            })
            .collect();
        let cfg = small_config(GanMode::Scgan, DataKind::Sequence);
        let (model, trace) = train(&cfg, &data).unwrap();
        assert!(!trace.records.is_empty());
        let s = model.sample(1, &mut rng).unwrap();
        assert_eq!(s.as_sequence().unwrap().rows(), 4);
    }

    #[test]
    fn rejects_bad_training_sets() {
        let cfg = small_config(GanMode::Scgan, DataKind::StaticVector);
        assert!(matches!(train(&cfg, &[]), Err(Error::EmptyInput(_))));
        let bad = vec![FeatureRecord::real(Sample::Static(vec![0.0, 0.0]), 7, Partition::Train)];
        assert!(matches!(train(&cfg, &bad), Err(Error::IndexOutOfRange { .. })));
        let seq = vec![FeatureRecord::real(Sample::Sequence(DenseMatrix::zeros(4, 2)), 0, Partition::Train)];
        assert!(matches!(train(&cfg, &seq), Err(Error::WrongDataKind { .. })));
    }
}
