use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UarReport {
    pub uar: f64,
    /// Recall per class; 0 for classes without labeled examples.
    pub recalls: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Rows are true classes, columns predicted classes.
pub fn confusion_matrix(predictions: &[usize], labels: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    if predictions.len() != labels.len() {
        return Err(Error::dims("predictions vs labels", labels.len(), predictions.len()));
    }
    let mut m = vec![vec![0usize; k]; k];
    for (&p, &l) in predictions.iter().zip(labels) {
        for (v, ctx) in [(l, "label"), (p, "prediction")] {
            if v >= k {
                return Err(Error::IndexOutOfRange { context: ctx, index: v, len: k });
            }
        }
        m[l][p] += 1;
    }
    Ok(m)
}

pub fn uar_report(predictions: &[usize], labels: &[usize], k: usize) -> Result<UarReport> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("UAR labels"));
    }
    let m = confusion_matrix(predictions, labels, k)?;
    let mut warnings = Vec::new();
    let recalls: Vec<f64> = m
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let total: usize = row.iter().sum();
            if total == 0 {
                warnings.push(format!("class {c} has no labeled examples, recall counted as 0"));
                0.0
            } else {
                row[c] as f64 / total as f64
            }
        })
        .collect();
    Ok(UarReport {
        uar: recalls.iter().sum::<f64>() / k as f64,
        recalls,
        warnings,
    })
}

/// Unweighted average recall: the mean of per-class recalls.
pub fn uar(predictions: &[usize], labels: &[usize], k: usize) -> Result<f64> {
    Ok(uar_report(predictions, labels, k)?.uar)
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Population standard deviation.
pub fn population_sd(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}
