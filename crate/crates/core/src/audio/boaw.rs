use super::codebook::Codebook;
use crate::error::{Error, Result};
use crate::nn::DenseMatrix;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `n` codewords closest to `frame`; equal distances go to the
/// lower index.
pub fn nearest_codewords(frame: &[f64], codebook: &Codebook, n: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = codebook
        .codewords
        .row_iter()
        .enumerate()
        .map(|(i, w)| (sq_dist(frame, w), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(n).map(|(_, i)| i).collect()
}

/// Bag-of-audio-words histogram: every frame votes for its `n` nearest codewords,
/// counts are divided by `n · T`.
pub fn boaw(seq: &DenseMatrix, codebook: &Codebook, n: usize) -> Result<Vec<f64>> {
    let s = codebook.size();
    if n == 0 || n > s {
        return Err(Error::config(format!("assignment count {n} outside 1..={s}")));
    }
    if seq.rows() == 0 {
        return Err(Error::EmptyInput("frame sequence"));
    }
    if seq.cols() != codebook.dim() {
        return Err(Error::dims("frame width vs codeword width", codebook.dim(), seq.cols()));
    }
    let mut counts = vec![0usize; s];
    for frame in seq.row_iter() {
        for i in nearest_codewords(frame, codebook, n) {
            counts[i] += 1;
        }
    }
    let total = (n * seq.rows()) as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}
