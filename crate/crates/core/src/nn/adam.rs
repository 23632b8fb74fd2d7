use serde::{Deserialize, Serialize};

use super::params::{ParamRole, ParamSet};
use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam moments, flattened in the parameter set's visiting order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new<P: ParamSet>(params: &P) -> Self {
        let n = params.num_params();
        Self {
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
            step: 0,
        }
    }
}

/// One bias-corrected Adam step.
///
/// `l2` adds `l2 · w` to weight gradients before the moment update; pass 0
/// when the penalty is already folded into `grads`.
pub fn adam_update<P: ParamSet>(
    params: &mut P,
    grads: &P,
    state: &mut AdamState,
    lr: f64,
    l2: f64,
) -> Result<()> {
    let g = grads.flatten();
    if g.len() != state.first_moment.len() || g.len() != params.num_params() {
        return Err(Error::dims("adam gradients", state.first_moment.len(), g.len()));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("adam gradient"));
    }
    state.step += 1;
    let t = state.step as i32;
    let correction1 = 1.0 - BETA1.powi(t);
    let correction2 = 1.0 - BETA2.powi(t);
    let m = &mut state.first_moment;
    let v = &mut state.second_moment;
    let mut offset = 0;
    params.visit_mut(&mut |_, w, role| {
        for (j, wj) in w.iter_mut().enumerate() {
            let idx = offset + j;
            let mut gj = g[idx];
            if role == ParamRole::Weight {
                gj += l2 * *wj;
            }
            m[idx] = BETA1 * m[idx] + (1.0 - BETA1) * gj;
            v[idx] = BETA2 * v[idx] + (1.0 - BETA2) * gj * gj;
            let m_hat = m[idx] / correction1;
            let v_hat = v[idx] / correction2;
            *wj -= lr * m_hat / (v_hat.sqrt() + EPSILON);
        }
        offset += w.len();
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::matrix::DenseMatrix;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = DenseMatrix::from_vec(1, 3, vec![0.5, -1.0, 2.0]).unwrap();
        let before = p.clone();
        let g = p.zeros_like();
        let mut s = AdamState::new(&p);
        for _ in 0..5 {
            adam_update(&mut p, &g, &mut s, 0.01, 0.0).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_moments() {
        let mut p = DenseMatrix::from_vec(1, 2, vec![0.0, 0.0]).unwrap();
        let g = DenseMatrix::from_vec(1, 2, vec![2.0, -4.0]).unwrap();
        let mut s = AdamState::new(&p);
        assert_eq!(s.step, 0);
        adam_update(&mut p, &g, &mut s, 0.001, 0.0).unwrap();
        assert_eq!(s.step, 1);
        assert!((s.first_moment[0] - 0.1 * 2.0).abs() < 1e-15);
        assert!((s.first_moment[1] - 0.1 * -4.0).abs() < 1e-15);
        assert!((s.second_moment[0] - 0.001 * 4.0).abs() < 1e-15);
        assert!((s.second_moment[1] - 0.001 * 16.0).abs() < 1e-15);
    }

    #[test]
    fn constant_gradient_steps_approach_lr() {
        // constant g: m̂ = g and v̂ = g² at every t, so |Δw| = lr·|g|/(|g| + ε)
        let lr = 0.01;
        let mut p = DenseMatrix::from_vec(1, 1, vec![0.0]).unwrap();
        let g = DenseMatrix::from_vec(1, 1, vec![0.37]).unwrap();
        let mut s = AdamState::new(&p);
        let mut prev = 0.0;
        for _ in 0..200 {
            adam_update(&mut p, &g, &mut s, lr, 0.0).unwrap();
            let w = p.values()[0];
            let delta = (w - prev).abs();
            prev = w;
            assert!((delta - lr).abs() < 1e-6, "{delta}");
        }
    }

    #[test]
    fn rejects_non_finite_gradient() {
        let mut p = DenseMatrix::from_vec(1, 1, vec![0.0]).unwrap();
        let g = DenseMatrix::zeros(1, 1);
        let mut g_bad = g.clone();
        g_bad.values_mut()[0] = f64::INFINITY;
        let mut s = AdamState::new(&p);
        assert!(adam_update(&mut p, &g_bad, &mut s, 0.1, 0.0).is_err());
        assert_eq!(s.step, 0);
    }
}
