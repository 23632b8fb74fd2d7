use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Prediction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Complexity `C`.
    pub c: f64,
    pub max_epochs: usize,
    /// Stop once `(primal − dual) / primal` falls to this value.
    pub tolerance: f64,
    /// Seeds the coordinate visiting order.
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1e-4,
            max_epochs: 1000,
            tolerance: 1e-4,
            seed: 0,
        }
    }
}

/// `K` one-vs-rest hyperplanes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub c: f64,
}

impl LinearSvmModel {
    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::dims("SVM input", self.dim(), x.len()));
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| crate::nn::dot(w, x) + b)
            .collect())
    }
}

/// Training result with the per-class dual objective after every epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmFit {
    pub model: LinearSvmModel,
    pub dual_history: Vec<Vec<f64>>,
}

struct Binary {
    w: Vec<f64>,
    b: f64,
    dual: Vec<f64>,
}

/// Dual coordinate descent for the L2-regularized hinge loss. The bias is the
/// weight of a constant feature 1 and is regularized with the rest.
fn solve_binary(x: &[Vec<f64>], y: &[f64], cfg: &SvmConfig, seed: u64) -> Binary {
    let n = x.len();
    let d = x[0].len();
    let q: Vec<f64> = x.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>() + 1.0).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dual = Vec::new();
    for _ in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let g = y[i] * (crate::nn::dot(&w, &x[i]) + b) - 1.0;
            let new = (alpha[i] - g / q[i]).clamp(0.0, cfg.c);
            let delta = (new - alpha[i]) * y[i];
            if delta != 0.0 {
                alpha[i] = new;
                for (wj, xj) in w.iter_mut().zip(&x[i]) {
                    *wj += delta * xj;
                }
                b += delta;
            }
        }
        let half_norm = 0.5 * (w.iter().map(|v| v * v).sum::<f64>() + b * b);
        let dual_obj = alpha.iter().sum::<f64>() - half_norm;
        let hinge: f64 = x
            .iter()
            .zip(y)
            .map(|(r, yi)| (1.0 - yi * (crate::nn::dot(&w, r) + b)).max(0.0))
            .sum();
        let primal = half_norm + cfg.c * hinge;
        dual.push(dual_obj);
        if primal - dual_obj <= cfg.tolerance * primal.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Binary { w, b, dual }
}

/// One-vs-rest linear SVM over `num_classes` classes; at least two must occur.
pub fn train_svm(x: &[Vec<f64>], y: &[usize], num_classes: usize, cfg: &SvmConfig) -> Result<SvmFit> {
    if x.is_empty() {
        return Err(Error::EmptyInput("SVM training set"));
    }
    if x.len() != y.len() {
        return Err(Error::dims("SVM labels", x.len(), y.len()));
    }
    if !(cfg.c > 0.0) || !(cfg.tolerance > 0.0) || cfg.max_epochs == 0 {
        return Err(Error::config("SVM needs C > 0, tolerance > 0 and at least one epoch"));
    }
    let d = x[0].len();
    for r in x {
        if r.len() != d {
            return Err(Error::dims("SVM row", d, r.len()));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("SVM input"));
        }
    }
    let mut present = vec![false; num_classes];
    for &label in y {
        if label >= num_classes {
            return Err(Error::IndexOutOfRange {
                context: "SVM label",
                index: label,
                len: num_classes,
            });
        }
        present[label] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::config("SVM training needs at least two classes"));
    }
    let problems: Vec<Binary> = (0..num_classes)
        .into_par_iter()
        .map(|k| {
            let targets: Vec<f64> = y.iter().map(|&l| if l == k { 1.0 } else { -1.0 }).collect();
            solve_binary(x, &targets, cfg, cfg.seed.wrapping_add(k as u64))
        })
        .collect();
    let mut weights = Vec::with_capacity(num_classes);
    let mut biases = Vec::with_capacity(num_classes);
    let mut dual_history = Vec::with_capacity(num_classes);
    for p in problems {
        weights.push(p.w);
        biases.push(p.b);
        dual_history.push(p.dual);
    }
    Ok(SvmFit {
        model: LinearSvmModel {
            weights,
            biases,
            c: cfg.c,
        },
        dual_history,
    })
}

/// Decision values closer than this (relative to `max(1, |value|)`) count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Argmax of the decision values, lowest class on ties. Solver round-off leaves
/// analytically equal values a few ulps apart, hence [`TIE_TOLERANCE`].
pub fn svm_predict(model: &LinearSvmModel, x: &[f64]) -> Result<Prediction> {
    let scores = model.decision_values(x)?;
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate().skip(1) {
        let slack = TIE_TOLERANCE * scores[best].abs().max(s.abs()).max(1.0);
        if s > scores[best] + slack {
            best = k;
        }
    }
    Ok(Prediction { class: best, scores })
}

/// Per-feature z-scoring with training-set statistics. Constant features are
/// only centred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let first = x.first().ok_or(Error::EmptyInput("standardizer input"))?;
        let d = first.len();
        let n = x.len() as f64;
        let mut mean = vec![0.0; d];
        for r in x {
            if r.len() != d {
                return Err(Error::dims("standardizer row", d, r.len()));
            }
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for r in x {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
        Ok(Self { mean, scale })
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::dims("standardizer input", self.mean.len(), x.len()));
        }
        Ok(x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect())
    }

    pub fn transform_all(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        x.iter().map(|r| self.transform(r)).collect()
    }
}
