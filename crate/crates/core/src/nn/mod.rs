//! Small differentiable-network kernel: dense and GRU layers with hand-derived
//! gradients, softmax cross-entropy, Adam and finite-difference checking.

mod adam;
mod dense;
mod gradcheck;
mod gru;
mod loss;
mod matrix;
mod network;
mod params;

pub use adam::{adam_update, AdamState, BETA1, BETA2, EPSILON};
pub use dense::{dense_forward, sigmoid, softmax_in_place, Activation, DenseLayerParams};
pub use gradcheck::{grad_check, grad_check_with, relative_error, GradCheckReport, TensorError};
pub use gru::{gru_step, gru_step_backward, gru_step_traced, GruCellParams, GruStepCache};
pub use loss::{cross_entropy_with_grad, leading_mass_loss_with_grad, softmax, softmax_cross_entropy};
pub use matrix::{dot, DenseMatrix};
pub use network::{
    backward, batch_loss, GruNet, GruNetTrace, GruStack, Mlp, MlpTrace, Network, NetworkTrace, INIT_STD,
};
pub use params::{ParamRole, ParamSet};
