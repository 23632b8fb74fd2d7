use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::Corpus;
use super::derive_seed;
use super::features::{clip_llds, corpus_llds, FeatureConfig, FeatureSystem, PreparedFeatures};
use super::metrics::{confusion_matrix, mean_sd, uar_report};
use crate::audio::AudioClip;
use crate::augment::{
    draw_balanced, merge, noise_transform, oversample_replicate, smote, synth_noise, train_ensemble, transform_grid,
    EnsembleConfig, EnsembleOutcome, DEFAULT_K_NEIGHBORS,
};
use crate::classifiers::{majority_vote, svm_predict, train_gru_classifier, train_svm, GruClassifierConfig, SvmConfig};
use crate::data::{class_counts, DataKind, FeatureRecord, Partition, Provenance};
use crate::error::{Error, Result};
use crate::gan::{train, GanMode, ScganConfig};
use crate::nn::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Augmentation {
    None,
    Transform,
    Smote,
    Cgan,
    Sgan,
    ScganMono,
    ScganEnsemble,
}

impl Augmentation {
    pub fn as_str(self) -> &'static str {
        match self {
            Augmentation::None => "none",
            Augmentation::Transform => "transform",
            Augmentation::Smote => "smote",
            Augmentation::Cgan => "cgan",
            Augmentation::Sgan => "sgan",
            Augmentation::ScganMono => "scgan_mono",
            Augmentation::ScganEnsemble => "scgan_ensemble",
        }
    }

    fn gan_mode(self) -> Option<GanMode> {
        match self {
            Augmentation::Cgan => Some(GanMode::Cgan),
            Augmentation::Sgan => Some(GanMode::Sgan),
            Augmentation::ScganMono | Augmentation::ScganEnsemble => Some(GanMode::Scgan),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub feature_system: FeatureSystem,
    pub augmentation: Augmentation,
    /// Generated samples added per class (GAN augmentations only).
    pub m_per_class: usize,
    pub runs: usize,
    pub seed: u64,
    /// SVM complexity; defaults to the feature system's value.
    pub svm_c: Option<f64>,
    pub svm_tolerance: f64,
    pub svm_max_epochs: usize,
    /// GAN settings; class count, data kind and sequence length come from the corpus.
    pub gan: ScganConfig,
    /// Hidden widths of the ensemble members.
    pub ensemble_sizes: Vec<usize>,
    /// Hidden width of the single-GAN augmentations.
    pub mono_hidden: usize,
    /// Pool oversampling before filtering, relative to the plan.
    pub pool_factor: usize,
    /// Extra synthesis rounds allowed when filtering leaves a class short.
    pub pool_rounds: usize,
    pub smote_k: usize,
    /// Replicate minority classes up to the majority count after augmentation.
    pub replicate: bool,
    pub gru: GruClassifierConfig,
    pub features: FeatureConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            feature_system: FeatureSystem::FunctionalsSvm,
            augmentation: Augmentation::None,
            m_per_class: 250,
            runs: 20,
            seed: 0,
            svm_c: None,
            svm_tolerance: 1e-4,
            svm_max_epochs: 1000,
            gan: RunConfig::default_gan(),
            ensemble_sizes: vec![40, 60, 80, 100],
            mono_hidden: 60,
            pool_factor: 3,
            pool_rounds: 40,
            smote_k: DEFAULT_K_NEIGHBORS,
            replicate: true,
            gru: GruClassifierConfig::default(),
            features: FeatureConfig::default(),
        }
    }
}

impl RunConfig {
    /// GAN template for augmentation runs: a wider latent space and a short
    /// schedule with long generator turns. Longer schedules on a few dozen
    /// examples end with the discriminator rejecting whole classes.
    pub fn default_gan() -> ScganConfig {
        ScganConfig {
            latent_dim: 100,
            max_iterations: 30,
            turn_step_cap: 1000,
            ..ScganConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::config("run count must be at least 1"));
        }
        if self.augmentation == Augmentation::Smote && self.feature_system.is_sequence() {
            return Err(Error::config("smote cannot synthesize sequences; use a static feature system"));
        }
        if self.pool_factor == 0 || self.mono_hidden == 0 || self.ensemble_sizes.is_empty() {
            return Err(Error::config("pool factor, mono width and ensemble sizes must be positive"));
        }
        if let Some(c) = self.svm_c {
            if !(c > 0.0) {
                return Err(Error::config("svm_c must be positive"));
            }
        }
        Ok(())
    }

    fn gan_config(&self, mode: GanMode, num_classes: usize, hidden: usize, seed: u64) -> ScganConfig {
        let seq = self.feature_system.is_sequence();
        ScganConfig {
            mode,
            num_classes,
            hidden_size: hidden,
            seed,
            data_kind: if seq { DataKind::Sequence } else { DataKind::StaticVector },
            sequence_length: seq.then_some(self.features.window_frames),
            ..self.gan.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub dev_uar: f64,
    pub test_uar: f64,
    pub dev_confusion: Vec<Vec<usize>>,
    pub test_confusion: Vec<Vec<usize>>,
    /// Examples added per class by the augmentation, before replication.
    pub added: Vec<usize>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: RunConfig,
    pub m_per_class: usize,
    pub runs: Vec<RunResult>,
    pub dev_mean: f64,
    pub dev_sd: f64,
    pub test_mean: f64,
    pub test_sd: f64,
}

impl EvalReport {
    fn new(config: &RunConfig, m: usize, runs: Vec<RunResult>) -> Self {
        let dev: Vec<f64> = runs.iter().map(|r| r.dev_uar).collect();
        let test: Vec<f64> = runs.iter().map(|r| r.test_uar).collect();
        let (dev_mean, dev_sd) = mean_sd(&dev);
        let (test_mean, test_sd) = mean_sd(&test);
        Self {
            config: config.clone(),
            m_per_class: m,
            runs,
            dev_mean,
            dev_sd,
            test_mean,
            test_sd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub m: usize,
    pub dev_mean: f64,
    pub dev_sd: f64,
    pub test_mean: f64,
    pub test_sd: f64,
}

/// Descriptors and features shared by every run of an experiment.
pub struct Prepared<'a> {
    pub corpus: &'a Corpus,
    pub llds: Vec<DenseMatrix>,
    pub features: PreparedFeatures,
}

const FEATURE_STREAM: u64 = 0x0FEA;
const ENSEMBLE_STREAM: u64 = 0x0E45;
const RUN_STREAM: u64 = 0x1000;

pub fn prepare<'a>(cfg: &RunConfig, corpus: &'a Corpus) -> Result<Prepared<'a>> {
    cfg.validate()?;
    for p in Partition::ALL {
        if corpus.partition(p).next().is_none() {
            return Err(Error::config(format!("corpus has no {} examples", p.as_str())));
        }
    }
    let llds = corpus_llds(corpus)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, FEATURE_STREAM));
    let features = PreparedFeatures::build(cfg.feature_system, corpus, &llds, &cfg.features, &mut rng)?;
    Ok(Prepared { corpus, llds, features })
}

fn transformed_copies(prep: &Prepared, seed: u64) -> Result<Vec<FeatureRecord>> {
    let items: Vec<_> = prep.corpus.partition(Partition::Train).collect();
    let grid = transform_grid();
    let per_item: Vec<Vec<FeatureRecord>> = items
        .par_iter()
        .map(|item| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, item.id as u64));
            let mut out = Vec::new();
            for &(kind, snr) in &grid {
                let noise = AudioClip::new(synth_noise(kind, 2 * item.audio.len(), &mut rng), item.audio.sample_rate())?;
                let noisy = noise_transform(&item.audio, &noise, snr, &mut rng)?.clip;
                let llds = clip_llds(&noisy)?;
                out.extend(prep.features.transformer.records(
                    &llds,
                    item.label,
                    Partition::Train,
                    Provenance::Transformed,
                    item.id,
                )?);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_item.into_iter().flatten().collect())
}

fn evaluate_static(model: &crate::classifiers::LinearSvmModel, set: &[FeatureRecord]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut pred = Vec::with_capacity(set.len());
    let mut labels = Vec::with_capacity(set.len());
    for r in set {
        pred.push(svm_predict(model, r.payload.as_static()?)?.class);
        labels.push(r.label);
    }
    Ok((pred, labels))
}

fn evaluate_windows(model: &crate::classifiers::GruClassifierModel, set: &[FeatureRecord]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut groups: BTreeMap<usize, (usize, Vec<crate::classifiers::Prediction>)> = BTreeMap::new();
    for r in set {
        let g = r.group.ok_or(Error::config("window record without a recording id"))?;
        let p = model.predict(r.payload.as_sequence()?)?;
        groups.entry(g).or_insert_with(|| (r.label, Vec::new())).1.push(p);
    }
    let mut pred = Vec::with_capacity(groups.len());
    let mut labels = Vec::with_capacity(groups.len());
    for (_, (label, preds)) in groups {
        pred.push(majority_vote(&preds)?.class);
        labels.push(label);
    }
    Ok((pred, labels))
}

fn classify(cfg: &RunConfig, prep: &Prepared, train_set: &[FeatureRecord], k: usize, seed: u64) -> Result<[(Vec<usize>, Vec<usize>); 2]> {
    let f = &prep.features;
    if cfg.feature_system.is_sequence() {
        let windows: Vec<DenseMatrix> = train_set.iter().map(|r| r.payload.as_sequence().cloned()).collect::<Result<_>>()?;
        let labels: Vec<usize> = train_set.iter().map(|r| r.label).collect();
        let model = train_gru_classifier(&windows, &labels, k, &GruClassifierConfig { seed, ..cfg.gru })?;
        Ok([evaluate_windows(&model, &f.devel)?, evaluate_windows(&model, &f.test)?])
    } else {
        let x: Vec<Vec<f64>> = train_set.iter().map(|r| r.payload.as_static().map(<[f64]>::to_vec)).collect::<Result<_>>()?;
        let y: Vec<usize> = train_set.iter().map(|r| r.label).collect();
        let svm = SvmConfig {
            c: cfg.svm_c.unwrap_or(cfg.feature_system.default_svm_c()),
            max_epochs: cfg.svm_max_epochs,
            tolerance: cfg.svm_tolerance,
            seed,
        };
        let model = train_svm(&x, &y, k, &svm)?.model;
        Ok([evaluate_static(&model, &f.devel)?, evaluate_static(&model, &f.test)?])
    }
}

/// One run evaluated at every requested `m`; the augmentor is trained once.
fn run_once(cfg: &RunConfig, prep: &Prepared, ensemble: Option<&EnsembleOutcome>, run: usize, ms: &[usize]) -> Result<Vec<RunResult>> {
    let k = prep.corpus.num_classes();
    let seed = derive_seed(cfg.seed, RUN_STREAM + run as u64);
    let train_set = &prep.features.train;
    let mut warnings = Vec::new();

    let mono = match cfg.augmentation.gan_mode() {
        Some(mode) if cfg.augmentation != Augmentation::ScganEnsemble && ms.iter().any(|&m| m > 0) => {
            Some(train(&cfg.gan_config(mode, k, cfg.mono_hidden, seed), train_set)?.0)
        }
        _ => None,
    };
    let fixed_extra = match cfg.augmentation {
        Augmentation::Transform => Some(transformed_copies(prep, seed)?),
        Augmentation::Smote => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Some(smote(train_set, k, cfg.smote_k, None, &mut rng)?.into_iter().map(|s| s.record).collect())
        }
        _ => None,
    };

    let mut out = Vec::with_capacity(ms.len());
    for &m in ms {
        let pool_seed = derive_seed(seed, m as u64);
        let extra: Vec<FeatureRecord> = match (&fixed_extra, &mono, ensemble) {
            (Some(e), _, _) => e.clone(),
            (None, Some(model), _) => draw_balanced(&[model], m, cfg.pool_factor, cfg.pool_rounds, &mut ChaCha8Rng::seed_from_u64(pool_seed))?,
            (None, None, Some(ens)) if cfg.augmentation == Augmentation::ScganEnsemble => {
                draw_balanced(&ens.models(), m, cfg.pool_factor, cfg.pool_rounds, &mut ChaCha8Rng::seed_from_u64(pool_seed))?
            }
            _ => Vec::new(),
        };
        let added = class_counts(&extra, k);
        let mut set = merge(train_set, &extra)?;
        if cfg.replicate {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(pool_seed, 1));
            set = oversample_replicate(&set, k, &mut rng)?;
        }
        let [(dev_p, dev_y), (test_p, test_y)] = classify(cfg, prep, &set, k, seed)?;
        let dev = uar_report(&dev_p, &dev_y, k)?;
        let test = uar_report(&test_p, &test_y, k)?;
        warnings.extend(dev.warnings.iter().map(|w| format!("devel: {w}")));
        warnings.extend(test.warnings.iter().map(|w| format!("test: {w}")));
        out.push(RunResult {
            run,
            seed,
            dev_uar: dev.uar,
            test_uar: test.uar,
            dev_confusion: confusion_matrix(&dev_p, &dev_y, k)?,
            test_confusion: confusion_matrix(&test_p, &test_y, k)?,
            added,
            warnings: warnings.clone(),
        });
    }
    Ok(out)
}

fn shared_ensemble(cfg: &RunConfig, prep: &Prepared, ms: &[usize]) -> Result<Option<EnsembleOutcome>> {
    if cfg.augmentation != Augmentation::ScganEnsemble || ms.iter().all(|&m| m == 0) {
        return Ok(None);
    }
    let k = prep.corpus.num_classes();
    let ens_cfg = EnsembleConfig {
        hidden_sizes: cfg.ensemble_sizes.clone(),
        template: cfg.gan_config(GanMode::Scgan, k, cfg.mono_hidden, derive_seed(cfg.seed, ENSEMBLE_STREAM)),
        seeds: None,
    };
    let outcome = train_ensemble(&ens_cfg, &prep.features.train)?;
    if outcome.members.is_empty() {
        return Err(outcome.failures.into_iter().next().unwrap_or(Error::EmptyInput("ensemble")));
    }
    Ok(Some(outcome))
}

/// Evaluates every `m` over `cfg.runs` seeded runs that share the corpus,
/// features and (per run) the trained augmentor.
pub fn evaluate(cfg: &RunConfig, prep: &Prepared, ms: &[usize]) -> Result<Vec<EvalReport>> {
    cfg.validate()?;
    let ensemble = shared_ensemble(cfg, prep, ms)?;
    let per_run: Vec<Vec<RunResult>> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            run_once(cfg, prep, ensemble.as_ref(), run, ms).map_err(|e| Error::Run {
                run,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ms
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let runs = per_run.iter().map(|r| r[i].clone()).collect();
            EvalReport::new(&RunConfig { m_per_class: m, ..cfg.clone() }, m, runs)
        })
        .collect())
}

/// Full protocol: augment, merge, replicate, train, and score dev and test UAR
/// for every run.
pub fn run_experiment(cfg: &RunConfig, corpus: &Corpus) -> Result<EvalReport> {
    let prep = prepare(cfg, corpus)?;
    Ok(evaluate(cfg, &prep, &[cfg.m_per_class])?.remove(0))
}

/// One curve point per `m` (ascending), all sharing corpus, features and seeds.
pub fn sweep_augmentation(cfg: &RunConfig, corpus: &Corpus, ms: &[usize]) -> Result<(Vec<SweepPoint>, Vec<EvalReport>)> {
    if ms.is_empty() {
        return Err(Error::EmptyInput("sweep values"));
    }
    if ms.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::config("sweep values must be ascending"));
    }
    let prep = prepare(cfg, corpus)?;
    let reports = evaluate(cfg, &prep, ms)?;
    let points = reports
        .iter()
        .map(|r| SweepPoint {
            m: r.m_per_class,
            dev_mean: r.dev_mean,
            dev_sd: r.dev_sd,
            test_mean: r.test_mean,
            test_sd: r.test_sd,
        })
        .collect();
    Ok((points, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::EventParams;
    use crate::experiments::SyntheticCorpusSpec;

    fn small_corpus() -> Corpus {
        Corpus::from_synthetic(&SyntheticCorpusSpec::balanced([8, 4, 4], 3), &EventParams::default()).unwrap()
    }

    #[test]
    fn baseline_is_reproducible() {
        let corpus = small_corpus();
        let cfg = RunConfig { runs: 1, ..RunConfig::default() };
        let a = run_experiment(&cfg, &corpus).unwrap();
        let b = run_experiment(&cfg, &corpus).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.dev_mean));
    }

    #[test]
    fn smote_with_sequences_is_rejected() {
        let cfg = RunConfig {
            feature_system: FeatureSystem::LldsGru,
            augmentation: Augmentation::Smote,
            ..RunConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn zero_sweep_equals_baseline() {
        let corpus = small_corpus();
        let cfg = RunConfig {
            runs: 2,
            augmentation: Augmentation::ScganMono,
            ..RunConfig::default()
        };
        let (points, _) = sweep_augmentation(&cfg, &corpus, &[0]).unwrap();
        let base = run_experiment(&RunConfig { augmentation: Augmentation::None, ..cfg.clone() }, &corpus).unwrap();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].dev_mean, base.dev_mean);
        assert!(sweep_augmentation(&cfg, &corpus, &[50, 0]).is_err());
    }

    #[test]
    fn augmentations_add_expected_counts() {
        let corpus = small_corpus();
        let gan = ScganConfig {
            max_iterations: 3,
            turn_step_cap: 5,
            hidden_layers: 1,
            ..ScganConfig::default()
        };
        for aug in [Augmentation::Smote, Augmentation::Transform, Augmentation::ScganMono, Augmentation::Cgan] {
            let cfg = RunConfig {
                runs: 1,
                augmentation: aug,
                m_per_class: 5,
                gan: gan.clone(),
                pool_rounds: 100,
                ..RunConfig::default()
            };
            let report = run_experiment(&cfg, &corpus).unwrap();
            let added = &report.runs[0].added;
            match aug {
                Augmentation::Smote => assert_eq!(added, &vec![0; 4]),
                Augmentation::Transform => assert_eq!(added, &vec![80; 4]),
                _ => assert_eq!(added, &vec![5; 4]),
            }
        }
    }
}
