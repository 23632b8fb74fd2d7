use crate::error::{Error, Result};

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut p = logits.to_vec();
    super::dense::softmax_in_place(&mut p);
    p
}

fn log_sum_exp(z: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = z.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + z.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `−log softmax(logits)[target]`
pub fn softmax_cross_entropy(logits: &[f64], target: usize) -> Result<f64> {
    if target >= logits.len() {
        return Err(Error::IndexOutOfRange {
            context: "cross-entropy target",
            index: target,
            len: logits.len(),
        });
    }
    Ok(log_sum_exp(logits.iter().copied()) - logits[target])
}

/// Cross-entropy and its gradient with respect to the logits (`softmax − onehot`).
pub fn cross_entropy_with_grad(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    let loss = softmax_cross_entropy(logits, target)?;
    let mut grad = softmax(logits);
    grad[target] -= 1.0;
    Ok((loss, grad))
}

/// `−log Σ_{k<first} softmax(logits)[k]`: negative log of the probability
/// mass assigned to the leading `first` classes.
pub fn leading_mass_loss_with_grad(logits: &[f64], first: usize) -> Result<(f64, Vec<f64>)> {
    if first == 0 || first > logits.len() {
        return Err(Error::IndexOutOfRange {
            context: "leading class count",
            index: first,
            len: logits.len(),
        });
    }
    let all = log_sum_exp(logits.iter().copied());
    let lead = log_sum_exp(logits[..first].iter().copied());
    let loss = all - lead;
    let p = softmax(logits);
    let grad = p
        .iter()
        .enumerate()
        .map(|(j, &pj)| {
            if j < first {
                pj - (logits[j] - lead).exp()
            } else {
                pj
            }
        })
        .collect();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_log_k() {
        let l = softmax_cross_entropy(&[0.3; 5], 2).unwrap();
        assert!((l - 5f64.ln()).abs() < 1e-12);
        assert!((l - 1.6094).abs() < 1e-4);
    }

    #[test]
    fn dominant_target_saturates() {
        let l = softmax_cross_entropy(&[30.0, 0.0, 0.0, 0.0], 0).unwrap();
        assert!((0.0..1e-9).contains(&l));
    }

    #[test]
    fn worked_three_class_value() {
        let direct = -(1f64.exp() / (1f64.exp() + 2f64.exp() + 3f64.exp())).ln();
        let l = softmax_cross_entropy(&[1.0, 2.0, 3.0], 0).unwrap();
        assert!((l - direct).abs() < 1e-12);
        assert!((l - 2.4076).abs() < 1e-4);
    }

    #[test]
    fn target_out_of_range() {
        assert!(softmax_cross_entropy(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn leading_mass_uniform_k4() {
        let (l, _) = leading_mass_loss_with_grad(&[0.0; 5], 4).unwrap();
        assert!((l + (0.8f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn leading_mass_gradient_matches_differences() {
        let z = [0.4, -1.2, 2.0, 0.1, 0.7];
        let (_, g) = leading_mass_loss_with_grad(&z, 3).unwrap();
        for j in 0..z.len() {
            let mut zp = z;
            let mut zm = z;
            zp[j] += 1e-6;
            zm[j] -= 1e-6;
            let n = (leading_mass_loss_with_grad(&zp, 3).unwrap().0
                - leading_mass_loss_with_grad(&zm, 3).unwrap().0)
                / 2e-6;
            assert!((n - g[j]).abs() < 1e-8);
        }
    }
}
