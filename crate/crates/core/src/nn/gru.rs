//! Gated recurrent unit cell.
//!
//! ```text
//! z  = σ(W_z x + U_z h + b_z)
//! r  = σ(W_r x + U_r h + b_r)
//! h̃  = tanh(W_h x + U_h (r ⊙ h) + b_h)
//! h' = (1 − z) ⊙ h + z ⊙ h̃
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dense::sigmoid;
use super::matrix::DenseMatrix;
use super::params::{ParamRole, ParamSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruCellParams {
    pub w_update: DenseMatrix,
    pub w_reset: DenseMatrix,
    pub w_candidate: DenseMatrix,
    pub u_update: DenseMatrix,
    pub u_reset: DenseMatrix,
    pub u_candidate: DenseMatrix,
    pub b_update: Vec<f64>,
    pub b_reset: Vec<f64>,
    pub b_candidate: Vec<f64>,
}

impl GruCellParams {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            w_update: DenseMatrix::zeros(hidden, inputs),
            w_reset: DenseMatrix::zeros(hidden, inputs),
            w_candidate: DenseMatrix::zeros(hidden, inputs),
            u_update: DenseMatrix::zeros(hidden, hidden),
            u_reset: DenseMatrix::zeros(hidden, hidden),
            u_candidate: DenseMatrix::zeros(hidden, hidden),
            b_update: vec![0.0; hidden],
            b_reset: vec![0.0; hidden],
            b_candidate: vec![0.0; hidden],
        }
    }

    pub fn init<R: Rng + ?Sized>(inputs: usize, hidden: usize, std: f64, rng: &mut R) -> Self {
        Self {
            w_update: DenseMatrix::random_normal(hidden, inputs, std, rng),
            w_reset: DenseMatrix::random_normal(hidden, inputs, std, rng),
            w_candidate: DenseMatrix::random_normal(hidden, inputs, std, rng),
            u_update: DenseMatrix::random_normal(hidden, hidden, std, rng),
            u_reset: DenseMatrix::random_normal(hidden, hidden, std, rng),
            u_candidate: DenseMatrix::random_normal(hidden, hidden, std, rng),
            b_update: vec![0.0; hidden],
            b_reset: vec![0.0; hidden],
            b_candidate: vec![0.0; hidden],
        }
    }

    pub fn inputs(&self) -> usize {
        self.w_update.cols()
    }

    pub fn hidden(&self) -> usize {
        self.w_update.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let (h, i) = (self.hidden(), self.inputs());
        for w in [&self.w_reset, &self.w_candidate] {
            if w.rows() != h || w.cols() != i {
                return Err(Error::dims("gru input weights", h * i, w.rows() * w.cols()));
            }
        }
        for u in [&self.u_update, &self.u_reset, &self.u_candidate] {
            if u.rows() != h || u.cols() != h {
                return Err(Error::dims("gru recurrent weights", h * h, u.rows() * u.cols()));
            }
        }
        for b in [&self.b_update, &self.b_reset, &self.b_candidate] {
            if b.len() != h {
                return Err(Error::dims("gru bias", h, b.len()));
            }
        }
        Ok(())
    }
}

impl ParamSet for GruCellParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64], ParamRole)) {
        f("w_update", self.w_update.values(), ParamRole::Weight);
        f("w_reset", self.w_reset.values(), ParamRole::Weight);
        f("w_candidate", self.w_candidate.values(), ParamRole::Weight);
        f("u_update", self.u_update.values(), ParamRole::Weight);
        f("u_reset", self.u_reset.values(), ParamRole::Weight);
        f("u_candidate", self.u_candidate.values(), ParamRole::Weight);
        f("b_update", &self.b_update, ParamRole::Bias);
        f("b_reset", &self.b_reset, ParamRole::Bias);
        f("b_candidate", &self.b_candidate, ParamRole::Bias);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64], ParamRole)) {
        f("w_update", self.w_update.values_mut(), ParamRole::Weight);
        f("w_reset", self.w_reset.values_mut(), ParamRole::Weight);
        f("w_candidate", self.w_candidate.values_mut(), ParamRole::Weight);
        f("u_update", self.u_update.values_mut(), ParamRole::Weight);
        f("u_reset", self.u_reset.values_mut(), ParamRole::Weight);
        f("u_candidate", self.u_candidate.values_mut(), ParamRole::Weight);
        f("b_update", &mut self.b_update, ParamRole::Bias);
        f("b_reset", &mut self.b_reset, ParamRole::Bias);
        f("b_candidate", &mut self.b_candidate, ParamRole::Bias);
    }
}

/// Intermediate values of one step, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct GruStepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub update: Vec<f64>,
    pub reset: Vec<f64>,
    pub candidate: Vec<f64>,
    pub h: Vec<f64>,
}

pub fn gru_step(x: &[f64], h_prev: &[f64], p: &GruCellParams) -> Result<Vec<f64>> {
    check_step_dims(x, h_prev, p)?;
    Ok(step_unchecked(x, h_prev, p).h)
}

pub fn gru_step_traced(x: &[f64], h_prev: &[f64], p: &GruCellParams) -> Result<GruStepCache> {
    check_step_dims(x, h_prev, p)?;
    Ok(step_unchecked(x, h_prev, p))
}

fn check_step_dims(x: &[f64], h_prev: &[f64], p: &GruCellParams) -> Result<()> {
    if x.len() != p.inputs() {
        return Err(Error::dims("gru input", p.inputs(), x.len()));
    }
    if h_prev.len() != p.hidden() {
        return Err(Error::dims("gru hidden state", p.hidden(), h_prev.len()));
    }
    Ok(())
}

pub(crate) fn step_unchecked(x: &[f64], h_prev: &[f64], p: &GruCellParams) -> GruStepCache {
    let mut update = p.b_update.clone();
    p.w_update.matvec_acc(x, &mut update);
    p.u_update.matvec_acc(h_prev, &mut update);
    update.iter_mut().for_each(|v| *v = sigmoid(*v));

    let mut reset = p.b_reset.clone();
    p.w_reset.matvec_acc(x, &mut reset);
    p.u_reset.matvec_acc(h_prev, &mut reset);
    reset.iter_mut().for_each(|v| *v = sigmoid(*v));

    let gated: Vec<f64> = reset.iter().zip(h_prev).map(|(r, h)| r * h).collect();
    let mut candidate = p.b_candidate.clone();
    p.w_candidate.matvec_acc(x, &mut candidate);
    p.u_candidate.matvec_acc(&gated, &mut candidate);
    candidate.iter_mut().for_each(|v| *v = v.tanh());

    let h = update
        .iter()
        .zip(h_prev)
        .zip(&candidate)
        .map(|((z, hp), c)| (1.0 - z) * hp + z * c)
        .collect();

    GruStepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        update,
        reset,
        candidate,
        h,
    }
}

/// Backpropagate `dL/dh` through one step. Accumulates parameter gradients
/// and returns `(dL/dx, dL/dh_prev)`.
pub fn gru_step_backward(
    p: &GruCellParams,
    cache: &GruStepCache,
    dh: &[f64],
    grads: &mut GruCellParams,
) -> (Vec<f64>, Vec<f64>) {
    let hidden = p.hidden();
    let mut dh_prev: Vec<f64> = dh.iter().zip(&cache.update).map(|(d, z)| d * (1.0 - z)).collect();

    let mut da_update = vec![0.0; hidden];
    let mut da_candidate = vec![0.0; hidden];
    for j in 0..hidden {
        let z = cache.update[j];
        let c = cache.candidate[j];
        let dz = dh[j] * (c - cache.h_prev[j]);
        da_update[j] = dz * z * (1.0 - z);
        da_candidate[j] = dh[j] * z * (1.0 - c * c);
    }

    let gated: Vec<f64> = cache.reset.iter().zip(&cache.h_prev).map(|(r, h)| r * h).collect();
    grads.w_candidate.add_outer(&da_candidate, &cache.x);
    grads.u_candidate.add_outer(&da_candidate, &gated);
    add_into(&mut grads.b_candidate, &da_candidate);

    let mut d_gated = vec![0.0; hidden];
    p.u_candidate.matvec_t_acc(&da_candidate, &mut d_gated);
    let mut da_reset = vec![0.0; hidden];
    for j in 0..hidden {
        let r = cache.reset[j];
        dh_prev[j] += d_gated[j] * r;
        da_reset[j] = d_gated[j] * cache.h_prev[j] * r * (1.0 - r);
    }

    grads.w_update.add_outer(&da_update, &cache.x);
    grads.u_update.add_outer(&da_update, &cache.h_prev);
    add_into(&mut grads.b_update, &da_update);
    grads.w_reset.add_outer(&da_reset, &cache.x);
    grads.u_reset.add_outer(&da_reset, &cache.h_prev);
    add_into(&mut grads.b_reset, &da_reset);

    p.u_update.matvec_t_acc(&da_update, &mut dh_prev);
    p.u_reset.matvec_t_acc(&da_reset, &mut dh_prev);

    let mut dx = vec![0.0; p.inputs()];
    p.w_update.matvec_t_acc(&da_update, &mut dx);
    p.w_reset.matvec_t_acc(&da_reset, &mut dx);
    p.w_candidate.matvec_t_acc(&da_candidate, &mut dx);
    (dx, dh_prev)
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}
