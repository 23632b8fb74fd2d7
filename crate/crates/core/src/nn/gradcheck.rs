use super::network::{backward, batch_loss, Network};
use super::params::ParamSet;
use crate::data::Sample;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorError {
    pub name: String,
    pub max_relative_error: f64,
    /// Analytic and numeric values at the worst entry.
    pub worst: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorError>,
    pub tolerance: f64,
    pub passed: bool,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.max_relative_error).fold(0.0, f64::max)
    }
}

/// `|a − n| / max(|a|, |n|, 1e-12)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12)
}

/// Compare `analytic` against central differences of `loss` around `params`.
pub fn grad_check_with<P, F>(params: &P, analytic: &P, mut loss: F, h: f64, tol: f64) -> GradCheckReport
where
    P: ParamSet,
    F: FnMut(&P) -> f64,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    let base = params.flatten();
    let grads = analytic.flatten();
    let mut probe = params.clone();
    let mut flat = base.clone();
    let mut tensors = Vec::new();
    let mut offset = 0;
    for (name, len) in params.layout() {
        let mut worst: f64 = 0.0;
        let mut worst_pair = (0.0, 0.0);
        for idx in offset..offset + len {
            flat[idx] = base[idx] + h;
            probe.assign_flat(&flat);
            let plus = loss(&probe);
            flat[idx] = base[idx] - h;
            probe.assign_flat(&flat);
            let minus = loss(&probe);
            flat[idx] = base[idx];
            let numeric = (plus - minus) / (2.0 * h);
            let err = relative_error(grads[idx], numeric);
            let err = if err.is_nan() { f64::INFINITY } else { err };
            if err > worst || idx == offset {
                worst = worst.max(err);
                worst_pair = (grads[idx], numeric);
            }
        }
        tensors.push(TensorError {
            name,
            max_relative_error: worst,
            worst: worst_pair,
        });
        offset += len;
    }
    let passed = tensors.iter().all(|t| t.max_relative_error < tol);
    GradCheckReport {
        tensors,
        tolerance: tol,
        passed,
    }
}

/// Finite-difference check of [`backward`] on a classification batch.
pub fn grad_check(
    network: &Network,
    batch: &[Sample],
    targets: &[usize],
    l2: f64,
    h: f64,
    tol: f64,
) -> Result<GradCheckReport> {
    let (_, analytic) = backward(network, batch, targets, l2)?;
    Ok(grad_check_with(
        network,
        &analytic,
        |p| batch_loss(p, batch, targets, l2).unwrap_or(f64::NAN),
        h,
        tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, DenseMatrix, GruNet, Mlp, ParamSet};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dense_network_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let net = Network::Dense(Mlp::init(&[4, 6, 5, 3], Activation::Tanh, Activation::Linear, 0.5, &mut rng));
        let batch: Vec<Sample> = (0..4)
            .map(|_| Sample::Static(DenseMatrix::random_normal(1, 4, 1.0, &mut rng).into_values()))
            .collect();
        let report = grad_check(&net, &batch, &[0, 1, 2, 1], 1e-3, 1e-5, 1e-4).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn two_layer_gru_over_eight_steps_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let net = Network::Recurrent(GruNet::init(3, 4, 2, 3, Activation::Linear, 0.5, &mut rng));
        let batch: Vec<Sample> = (0..2)
            .map(|_| Sample::Sequence(DenseMatrix::random_normal(8, 3, 1.0, &mut rng)))
            .collect();
        let report = grad_check(&net, &batch, &[2, 0], 1e-3, 1e-5, 1e-4).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn corrupted_gradient_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let net = Network::Dense(Mlp::init(&[3, 4, 2], Activation::Sigmoid, Activation::Linear, 0.5, &mut rng));
        let batch = vec![Sample::Static(vec![0.5, -0.2, 1.0])];
        let (_, mut analytic) = backward(&net, &batch, &[1], 0.0).unwrap();
        let mut flat = analytic.flatten();
        let idx = flat.iter().position(|g| g.abs() > 1e-6).unwrap();
        flat[idx] *= 2.0;
        analytic.assign_flat(&flat);
        let report = grad_check_with(&net, &analytic, |p| batch_loss(p, &batch, &[1], 0.0).unwrap(), 1e-5, 1e-4);
        assert!(!report.passed);
    }
}
