use crate::error::{Error, Result};
use crate::nn::DenseMatrix;

/// Per-descriptor statistic order in the functional vector.
pub const FUNCTIONAL_NAMES: [&str; 12] = [
    "mean",
    "stddev",
    "min",
    "max",
    "range",
    "skewness",
    "kurtosis",
    "quartile1",
    "quartile2",
    "quartile3",
    "slope",
    "residual_mse",
];

/// Linear-interpolation percentile of sorted data, position `p·(n−1)`.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn contour_stats(x: &[f64], out: &mut [f64]) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);

    let t_mean = (n - 1.0) / 2.0;
    let stt: f64 = (0..x.len()).map(|t| (t as f64 - t_mean).powi(2)).sum();
    let sty: f64 = x.iter().enumerate().map(|(t, v)| (t as f64 - t_mean) * (v - mean)).sum();
    let slope = sty / stt;
    let intercept = mean - slope * t_mean;
    let mse = x
        .iter()
        .enumerate()
        .map(|(t, v)| (v - intercept - slope * t as f64).powi(2))
        .sum::<f64>()
        / n;

    out[0] = mean;
    out[1] = m2.sqrt();
    out[2] = min;
    out[3] = max;
    out[4] = max - min;
    // Excess kurtosis; both shape moments are 0 for a flat contour.
    if m2 > 0.0 {
        out[5] = m3 / m2.powf(1.5);
        out[6] = m4 / (m2 * m2) - 3.0;
    } else {
        out[5] = 0.0;
        out[6] = 0.0;
    }
    out[7] = percentile(&sorted, 0.25);
    out[8] = percentile(&sorted, 0.5);
    out[9] = percentile(&sorted, 0.75);
    out[10] = slope;
    out[11] = mse;
}

/// Projects each descriptor contour onto the 12 statistics of
/// [`FUNCTIONAL_NAMES`]; descriptor-major order, `12 × d` values.
pub fn functionals(seq: &DenseMatrix) -> Result<Vec<f64>> {
    let (t, d) = (seq.rows(), seq.cols());
    if t < 2 {
        return Err(Error::TooShort { len: t, required: 2 });
    }
    let mut out = vec![0.0; 12 * d];
    let mut contour = vec![0.0; t];
    for c in 0..d {
        for (r, v) in contour.iter_mut().enumerate() {
            *v = seq.get(r, c);
        }
        contour_stats(&contour, &mut out[12 * c..12 * (c + 1)]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(x: &[f64]) -> DenseMatrix {
        DenseMatrix::from_vec(x.len(), 1, x.to_vec()).unwrap()
    }

    #[test]
    fn constant_contour() {
        let f = functionals(&column(&[3.0; 6])).unwrap();
        assert_eq!(f[0], 3.0);
        assert_eq!(f[1], 0.0);
        assert_eq!((f[2], f[3], f[4]), (3.0, 3.0, 0.0));
        assert_eq!((f[10], f[11]), (0.0, 0.0));
    }

    #[test]
    fn ramp_slope_and_median() {
        let f = functionals(&column(&[0.0, 1.0, 2.0, 3.0])).unwrap();
        assert!((f[10] - 1.0).abs() < 1e-12);
        assert!(f[11].abs() < 1e-24);
        assert_eq!(f[8], 1.5);
        assert_eq!(f[7], 0.75);
        assert_eq!(f[9], 2.25);
    }

    #[test]
    fn symmetric_contour_has_zero_skew() {
        let f = functionals(&column(&[-2.0, 5.0, 0.5, -4.0, 7.0, 1.5, 3.0])).unwrap();
        let g = functionals(&column(&[-3.0, -1.0, 0.0, 1.0, 3.0])).unwrap();
        assert!(g[5].abs() < 1e-9);
        assert!(f[5].abs() > 1e-3);
    }

    #[test]
    fn gaussian_like_moments() {
        // two-point distribution: excess kurtosis -2, skew 0
        let f = functionals(&column(&[1.0, -1.0, 1.0, -1.0])).unwrap();
        assert!((f[6] + 2.0).abs() < 1e-12);
        assert!(f[5].abs() < 1e-12);
        assert!((f[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn width_and_errors() {
        let m = DenseMatrix::from_vec(5, 50, (0..250).map(|v| v as f64).collect()).unwrap();
        assert_eq!(functionals(&m).unwrap().len(), 600);
        assert!(matches!(functionals(&column(&[1.0])), Err(Error::TooShort { .. })));
    }
}
