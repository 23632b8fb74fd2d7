use super::{GruClassifierModel, Prediction};
use crate::error::{Error, Result};
use crate::nn::DenseMatrix;

/// Recording-level decision from window predictions: most votes wins, then the
/// highest summed posterior among the tied classes, then the lowest index. The
/// returned scores are the mean window posteriors.
pub fn majority_vote(windows: &[Prediction]) -> Result<Prediction> {
    let first = windows.first().ok_or(Error::EmptyInput("window predictions"))?;
    let k = first.scores.len();
    let mut votes = vec![0usize; k];
    let mut mass = vec![0.0; k];
    for p in windows {
        if p.scores.len() != k {
            return Err(Error::dims("window scores", k, p.scores.len()));
        }
        votes[p.class] += 1;
        for (m, s) in mass.iter_mut().zip(&p.scores) {
            *m += s;
        }
    }
    let mut best = 0;
    for c in 1..k {
        if votes[c] > votes[best] || (votes[c] == votes[best] && mass[c] > mass[best]) {
            best = c;
        }
    }
    let n = windows.len() as f64;
    Ok(Prediction {
        class: best,
        scores: mass.into_iter().map(|m| m / n).collect(),
    })
}

pub fn predict_recording(model: &GruClassifierModel, windows: &[DenseMatrix]) -> Result<Prediction> {
    if windows.is_empty() {
        return Err(Error::EmptyInput("recording windows"));
    }
    let preds = windows.iter().map(|w| model.predict(w)).collect::<Result<Vec<_>>>()?;
    majority_vote(&preds)
}
