//! Downstream learners: one-vs-rest linear SVM, many-to-one GRU classifier and
//! recording-level majority voting.

mod gru;
mod svm;
mod vote;

use serde::{Deserialize, Serialize};

pub use gru::{train_gru_classifier, GruClassifierConfig, GruClassifierModel};
pub use svm::{svm_predict, train_svm, LinearSvmModel, Standardizer, SvmConfig, SvmFit, TIE_TOLERANCE};
pub use vote::{majority_vote, predict_recording};

/// A class decision with the per-class scores it was taken from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: usize,
    /// Decision values (SVM) or posteriors (GRU).
    pub scores: Vec<f64>,
}

impl Prediction {
    /// Argmax of `scores`, lowest index on ties.
    pub fn from_scores(scores: Vec<f64>) -> Self {
        Self {
            class: crate::gan::argmax(&scores),
            scores,
        }
    }
}
