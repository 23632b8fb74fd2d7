use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{Corpus, CorpusItem};
use crate::audio::{
    boaw, build_codebook, extract_llds, functionals, window_sequence, AudioClip, Codebook, CodebookMethod, STEP_FRAMES,
    WINDOW_FRAMES,
};
use crate::classifiers::Standardizer;
use crate::data::{FeatureRecord, Partition, Provenance, Sample};
use crate::error::{Error, Result};
use crate::nn::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSystem {
    FunctionalsSvm,
    BoawSvm,
    LldsGru,
}

impl FeatureSystem {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSystem::FunctionalsSvm => "functionals_svm",
            FeatureSystem::BoawSvm => "boaw_svm",
            FeatureSystem::LldsGru => "llds_gru",
        }
    }

    /// SVM complexity used for this representation.
    pub fn default_svm_c(self) -> f64 {
        match self {
            FeatureSystem::BoawSvm => 1e-3,
            _ => 1e-4,
        }
    }

    pub fn is_sequence(self) -> bool {
        self == FeatureSystem::LldsGru
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub codebook_size: usize,
    /// Codewords each frame is assigned to.
    pub assignments: usize,
    pub codebook_method: CodebookMethod,
    /// Training frames sampled for codebook learning.
    pub codebook_max_frames: usize,
    pub window_frames: usize,
    pub step_frames: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            codebook_size: 250,
            assignments: 5,
            codebook_method: CodebookMethod::KMeans,
            codebook_max_frames: 5000,
            window_frames: WINDOW_FRAMES,
            step_frames: STEP_FRAMES,
        }
    }
}

/// Maps descriptor contours into the (standardized) representation of one
/// feature system, with statistics fitted on the real training partition.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureTransformer {
    Functionals { scaler: Standardizer },
    Boaw { frames: Standardizer, codebook: Codebook, assignments: usize },
    Windows { frames: Standardizer, window: usize, step: usize },
}

fn scale_frames(seq: &DenseMatrix, scaler: &Standardizer) -> Result<DenseMatrix> {
    let mut out = Vec::with_capacity(seq.values().len());
    for row in seq.row_iter() {
        out.extend(scaler.transform(row)?);
    }
    DenseMatrix::from_vec(seq.rows(), seq.cols(), out)
}

fn all_frames(llds: &[&DenseMatrix]) -> Vec<Vec<f64>> {
    llds.iter().flat_map(|m| m.row_iter().map(<[f64]>::to_vec)).collect()
}

impl FeatureTransformer {
    pub fn fit<R: Rng + ?Sized>(
        system: FeatureSystem,
        train_llds: &[&DenseMatrix],
        cfg: &FeatureConfig,
        rng: &mut R,
    ) -> Result<Self> {
        if train_llds.is_empty() {
            return Err(Error::EmptyInput("training descriptors"));
        }
        Ok(match system {
            FeatureSystem::FunctionalsSvm => {
                let f = train_llds.iter().map(|m| functionals(m)).collect::<Result<Vec<_>>>()?;
                FeatureTransformer::Functionals {
                    scaler: Standardizer::fit(&f)?,
                }
            }
            FeatureSystem::BoawSvm => {
                let frames = all_frames(train_llds);
                let scaler = Standardizer::fit(&frames)?;
                let take = frames.len().min(cfg.codebook_max_frames.max(cfg.codebook_size));
                let mut idx = sample(rng, frames.len(), take).into_vec();
                idx.sort_unstable();
                let mut values = Vec::with_capacity(take * frames[0].len());
                for i in idx {
                    values.extend(scaler.transform(&frames[i])?);
                }
                let pool = DenseMatrix::from_vec(take, frames[0].len(), values)?;
                let codebook = build_codebook(&pool, cfg.codebook_size, cfg.codebook_method, rng)?;
                FeatureTransformer::Boaw {
                    frames: scaler,
                    codebook,
                    assignments: cfg.assignments,
                }
            }
            FeatureSystem::LldsGru => FeatureTransformer::Windows {
                frames: Standardizer::fit(&all_frames(train_llds))?,
                window: cfg.window_frames,
                step: cfg.step_frames,
            },
        })
    }

    /// Feature payloads for one recording: one vector, or one per window.
    pub fn payloads(&self, llds: &DenseMatrix) -> Result<Vec<Sample>> {
        Ok(match self {
            FeatureTransformer::Functionals { scaler } => vec![Sample::Static(scaler.transform(&functionals(llds)?)?)],
            FeatureTransformer::Boaw {
                frames,
                codebook,
                assignments,
            } => vec![Sample::Static(boaw(&scale_frames(llds, frames)?, codebook, *assignments)?)],
            FeatureTransformer::Windows { frames, window, step } => window_sequence(&scale_frames(llds, frames)?, *window, *step)?
                .into_iter()
                .map(|w| Sample::Sequence(w.frames))
                .collect(),
        })
    }

    pub fn records(
        &self,
        llds: &DenseMatrix,
        label: usize,
        partition: Partition,
        provenance: Provenance,
        group: usize,
    ) -> Result<Vec<FeatureRecord>> {
        Ok(self
            .payloads(llds)?
            .into_iter()
            .map(|payload| FeatureRecord {
                payload,
                label,
                partition,
                provenance,
                group: Some(group),
            })
            .collect())
    }
}

/// Descriptor contours of every corpus item, in item order.
pub fn corpus_llds(corpus: &Corpus) -> Result<Vec<DenseMatrix>> {
    corpus.items.par_iter().map(|i| Ok(extract_llds(&i.audio)?.frames)).collect()
}

pub fn clip_llds(clip: &AudioClip) -> Result<DenseMatrix> {
    Ok(extract_llds(clip)?.frames)
}

/// Corpus in one feature representation.
#[derive(Debug, Clone)]
pub struct PreparedFeatures {
    pub system: FeatureSystem,
    pub transformer: FeatureTransformer,
    pub train: Vec<FeatureRecord>,
    pub devel: Vec<FeatureRecord>,
    pub test: Vec<FeatureRecord>,
}

impl PreparedFeatures {
    pub fn build<R: Rng + ?Sized>(
        system: FeatureSystem,
        corpus: &Corpus,
        llds: &[DenseMatrix],
        cfg: &FeatureConfig,
        rng: &mut R,
    ) -> Result<Self> {
        if llds.len() != corpus.items.len() {
            return Err(Error::dims("descriptor sets", corpus.items.len(), llds.len()));
        }
        let train_llds: Vec<&DenseMatrix> = corpus
            .items
            .iter()
            .zip(llds)
            .filter(|(i, _)| i.partition == Partition::Train)
            .map(|(_, m)| m)
            .collect();
        let transformer = FeatureTransformer::fit(system, &train_llds, cfg, rng)?;
        let per_item: Vec<(&CorpusItem, Vec<FeatureRecord>)> = corpus
            .items
            .par_iter()
            .zip(llds)
            .map(|(item, m)| Ok((item, transformer.records(m, item.label, item.partition, Provenance::Real, item.id)?)))
            .collect::<Result<_>>()?;
        let mut out = Self {
            system,
            transformer,
            train: Vec::new(),
            devel: Vec::new(),
            test: Vec::new(),
        };
        for (item, recs) in per_item {
            match item.partition {
                Partition::Train => out.train.extend(recs),
                Partition::Devel => out.devel.extend(recs),
                Partition::Test => out.test.extend(recs),
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::EventParams;
    use crate::experiments::SyntheticCorpusSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn representations_have_expected_shapes() {
        let spec = SyntheticCorpusSpec::balanced([3, 1, 1], 2);
        let corpus = Corpus::from_synthetic(&spec, &EventParams::default()).unwrap();
        let llds = corpus_llds(&corpus).unwrap();
        let cfg = FeatureConfig {
            codebook_size: 16,
            ..FeatureConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = PreparedFeatures::build(FeatureSystem::FunctionalsSvm, &corpus, &llds, &cfg, &mut rng).unwrap();
        assert_eq!(f.train.len(), 12);
        assert_eq!(f.train[0].payload.feature_dim(), 600);
        let b = PreparedFeatures::build(FeatureSystem::BoawSvm, &corpus, &llds, &cfg, &mut rng).unwrap();
        let h = b.devel[0].payload.values();
        assert_eq!(h.len(), 16);
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let g = PreparedFeatures::build(FeatureSystem::LldsGru, &corpus, &llds, &cfg, &mut rng).unwrap();
        assert!(g.train.len() >= 12);
        let s = g.test[0].payload.as_sequence().unwrap();
        assert_eq!((s.rows(), s.cols()), (40, 50));
        assert!(g.test.iter().all(|r| r.group.is_some()));
    }
}
