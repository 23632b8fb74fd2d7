use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::DenseMatrix;
use super::params::{ParamRole, ParamSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Linear,
    Softmax,
}

impl Activation {
    pub fn apply(self, z: &mut [f64]) {
        match self {
            Activation::Sigmoid => z.iter_mut().for_each(|v| *v = sigmoid(*v)),
            Activation::Tanh => z.iter_mut().for_each(|v| *v = v.tanh()),
            Activation::Linear => {}
            Activation::Softmax => softmax_in_place(z),
        }
    }

    /// Given the activated output `y` and `dL/dy`, returns `dL/dz`.
    fn backprop(self, y: &[f64], dy: &[f64]) -> Vec<f64> {
        match self {
            Activation::Sigmoid => y.iter().zip(dy).map(|(y, d)| d * y * (1.0 - y)).collect(),
            Activation::Tanh => y.iter().zip(dy).map(|(y, d)| d * (1.0 - y * y)).collect(),
            Activation::Linear => dy.to_vec(),
            Activation::Softmax => {
                let s: f64 = y.iter().zip(dy).map(|(y, d)| y * d).sum();
                y.iter().zip(dy).map(|(y, d)| y * (d - s)).collect()
            }
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayerParams {
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayerParams {
    pub fn new(weight: DenseMatrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::dims("dense bias", weight.rows(), bias.len()));
        }
        Ok(Self {
            weight,
            bias,
            activation,
        })
    }

    /// Gaussian weights with the given standard deviation, zero bias.
    pub fn init<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        std: f64,
        rng: &mut R,
    ) -> Self {
        Self {
            weight: DenseMatrix::random_normal(outputs, inputs, std, rng),
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }

    /// Accumulate gradients for one example and return `dL/dx`.
    ///
    /// `y` is the activated output recorded in the forward pass.
    pub fn backward(&self, x: &[f64], y: &[f64], dy: &[f64], grads: &mut DenseLayerParams) -> Vec<f64> {
        let dz = self.activation.backprop(y, dy);
        grads.weight.add_outer(&dz, x);
        for (g, d) in grads.bias.iter_mut().zip(&dz) {
            *g += d;
        }
        let mut dx = vec![0.0; self.inputs()];
        self.weight.matvec_t_acc(&dz, &mut dx);
        dx
    }
}

impl ParamSet for DenseLayerParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64], ParamRole)) {
        f("weight", self.weight.values(), ParamRole::Weight);
        f("bias", &self.bias, ParamRole::Bias);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64], ParamRole)) {
        f("weight", self.weight.values_mut(), ParamRole::Weight);
        f("bias", &mut self.bias, ParamRole::Bias);
    }
}

/// `activation(W·x + b)`
pub fn dense_forward(x: &[f64], layer: &DenseLayerParams) -> Result<Vec<f64>> {
    if x.len() != layer.inputs() {
        return Err(Error::dims("dense input", layer.inputs(), x.len()));
    }
    let mut z = layer.bias.clone();
    layer.weight.matvec_acc(x, &mut z);
    layer.activation.apply(&mut z);
    Ok(z)
}
