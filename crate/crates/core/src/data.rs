//! Example containers shared by the augmentation, classifier and experiment modules.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::DenseMatrix;

/// A feature payload: one static vector or a `T × d` frame sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Sample {
    Static(Vec<f64>),
    Sequence(DenseMatrix),
}

impl Sample {
    pub fn kind(&self) -> DataKind {
        match self {
            Sample::Static(_) => DataKind::StaticVector,
            Sample::Sequence(_) => DataKind::Sequence,
        }
    }

    /// Width of one feature vector (static length or frame width).
    pub fn feature_dim(&self) -> usize {
        match self {
            Sample::Static(v) => v.len(),
            Sample::Sequence(m) => m.cols(),
        }
    }

    pub fn steps(&self) -> usize {
        match self {
            Sample::Static(_) => 1,
            Sample::Sequence(m) => m.rows(),
        }
    }

    pub fn as_static(&self) -> Result<&[f64]> {
        match self {
            Sample::Static(v) => Ok(v),
            Sample::Sequence(_) => Err(Error::WrongDataKind {
                expected: "static_vector",
                found: "sequence",
            }),
        }
    }

    pub fn as_sequence(&self) -> Result<&DenseMatrix> {
        match self {
            Sample::Sequence(m) => Ok(m),
            Sample::Static(_) => Err(Error::WrongDataKind {
                expected: "sequence",
                found: "static_vector",
            }),
        }
    }

    /// Row-major payload values.
    pub fn values(&self) -> &[f64] {
        match self {
            Sample::Static(v) => v,
            Sample::Sequence(m) => m.values(),
        }
    }

    pub fn same_shape(&self, other: &Sample) -> bool {
        match (self, other) {
            (Sample::Static(a), Sample::Static(b)) => a.len() == b.len(),
            (Sample::Sequence(a), Sample::Sequence(b)) => a.rows() == b.rows() && a.cols() == b.cols(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    StaticVector,
    Sequence,
}

impl DataKind {
    pub fn name(self) -> &'static str {
        match self {
            DataKind::StaticVector => "static_vector",
            DataKind::Sequence => "sequence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Devel,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Devel, Partition::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Devel => "devel",
            Partition::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "train" => Some(Partition::Train),
            "devel" | "dev" => Some(Partition::Devel),
            "test" => Some(Partition::Test),
            _ => None,
        }
    }
}

/// Where an example came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Real,
    Generated { member: usize },
    Smote,
    Transformed,
    Replicated,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Real => "real",
            Provenance::Generated { .. } => "generated",
            Provenance::Smote => "smote",
            Provenance::Transformed => "transformed",
            Provenance::Replicated => "replicated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub payload: Sample,
    pub label: usize,
    pub partition: Partition,
    pub provenance: Provenance,
    /// Recording the example was cut from, for window-level voting.
    pub group: Option<usize>,
}

impl FeatureRecord {
    pub fn real(payload: Sample, label: usize, partition: Partition) -> Self {
        Self {
            payload,
            label,
            partition,
            provenance: Provenance::Real,
            group: None,
        }
    }
}

/// Per-class example counts for labels `< num_classes`.
pub fn class_counts(records: &[FeatureRecord], num_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; num_classes];
    for r in records {
        if r.label < num_classes {
            counts[r.label] += 1;
        }
    }
    counts
}

/// Cycles through reshuffled epochs of example indices.
pub(crate) struct BatchSampler {
    order: Vec<usize>,
    pos: usize,
}

impl BatchSampler {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
            pos: n,
        }
    }

    pub(crate) fn next<R: Rng + ?Sized>(&mut self, size: usize, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.pos == self.order.len() {
                self.order.shuffle(rng);
                self.pos = 0;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }
}
