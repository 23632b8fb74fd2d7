use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dense::{dense_forward, Activation, DenseLayerParams};
use super::gru::{gru_step_backward, step_unchecked, GruCellParams, GruStepCache};
use super::loss::cross_entropy_with_grad;
use super::matrix::DenseMatrix;
use super::params::{ParamRole, ParamSet};
use crate::data::Sample;
use crate::error::{Error, Result};

/// Standard deviation of the Gaussian weight initializer.
pub const INIT_STD: f64 = 0.1;

/// Feed-forward stack of dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<DenseLayerParams>,
}

/// Activations of every layer for one input; `activations[0]` is the input.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    pub activations: Vec<Vec<f64>>,
}

impl MlpTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace holds at least the input")
    }
}

impl Mlp {
    /// `sizes = [input, hidden.., output]`.
    pub fn init<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        std: f64,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last { output } else { hidden };
                DenseLayerParams::init(w[0], w[1], act, std, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, DenseLayerParams::outputs)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut a = x.to_vec();
        for layer in &self.layers {
            a = dense_forward(&a, layer)?;
        }
        Ok(a)
    }

    pub fn forward_traced(&self, x: &[f64]) -> Result<MlpTrace> {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        for layer in &self.layers {
            let next = dense_forward(activations.last().unwrap(), layer)?;
            activations.push(next);
        }
        Ok(MlpTrace { activations })
    }

    /// Accumulates parameter gradients into `grads`, returns `dL/dx`.
    pub fn backward(&self, trace: &MlpTrace, d_out: &[f64], grads: &mut Mlp) -> Vec<f64> {
        let mut d = d_out.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            d = layer.backward(&trace.activations[i], &trace.activations[i + 1], &d, &mut grads.layers[i]);
        }
        d
    }
}

impl ParamSet for Mlp {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64], ParamRole)) {
        self.layers.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64], ParamRole)) {
        self.layers.visit_mut(f);
    }
}

/// Stacked GRU layers; layer `l + 1` reads the hidden state of layer `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruStack {
    pub cells: Vec<GruCellParams>,
}

impl GruStack {
    pub fn init<R: Rng + ?Sized>(inputs: usize, hidden: usize, layers: usize, std: f64, rng: &mut R) -> Self {
        let cells = (0..layers)
            .map(|l| GruCellParams::init(if l == 0 { inputs } else { hidden }, hidden, std, rng))
            .collect();
        Self { cells }
    }

    pub fn inputs(&self) -> usize {
        self.cells[0].inputs()
    }

    pub fn hidden(&self) -> usize {
        self.cells.last().map_or(0, GruCellParams::hidden)
    }

    pub fn zero_state(&self) -> Vec<Vec<f64>> {
        self.cells.iter().map(|c| vec![0.0; c.hidden()]).collect()
    }

    /// One time step through all layers. `state[l]` is layer `l`'s previous
    /// hidden state; the returned caches hold the new states in `.h`.
    pub fn step(&self, x: &[f64], state: &[Vec<f64>]) -> Result<Vec<GruStepCache>> {
        if x.len() != self.inputs() {
            return Err(Error::dims("gru stack input", self.inputs(), x.len()));
        }
        let mut caches: Vec<GruStepCache> = Vec::with_capacity(self.cells.len());
        for (l, cell) in self.cells.iter().enumerate() {
            let input = if l == 0 { x } else { &caches[l - 1].h };
            let cache = step_unchecked(input, &state[l], cell);
            caches.push(cache);
        }
        Ok(caches)
    }

    /// Backward through one time step.
    ///
    /// `carry[l]` holds `dL/dh` of layer `l` at this step coming from the
    /// next step; on return it holds `dL/dh` for the previous step.
    /// `d_top` is the external gradient on the top layer's output.
    pub fn step_backward(
        &self,
        caches: &[GruStepCache],
        d_top: &[f64],
        carry: &mut [Vec<f64>],
        grads: &mut GruStack,
    ) -> Vec<f64> {
        let top = self.cells.len() - 1;
        let mut from_above = d_top.to_vec();
        for l in (0..=top).rev() {
            let dh: Vec<f64> = carry[l].iter().zip(&from_above).map(|(a, b)| a + b).collect();
            let (dx, dh_prev) = gru_step_backward(&self.cells[l], &caches[l], &dh, &mut grads.cells[l]);
            carry[l] = dh_prev;
            from_above = dx;
        }
        from_above
    }
}

impl ParamSet for GruStack {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64], ParamRole)) {
        self.cells.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64], ParamRole)) {
        self.cells.visit_mut(f);
    }
}

/// Many-to-one recurrent network: a GRU stack read at its last step by a dense head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruNet {
    pub stack: GruStack,
    pub head: DenseLayerParams,
}

#[derive(Debug, Clone)]
pub struct GruNetTrace {
    pub steps: Vec<Vec<GruStepCache>>,
    pub output: Vec<f64>,
}

impl GruNet {
    pub fn init<R: Rng + ?Sized>(
        inputs: usize,
        hidden: usize,
        layers: usize,
        outputs: usize,
        output: Activation,
        std: f64,
        rng: &mut R,
    ) -> Self {
        let stack = GruStack::init(inputs, hidden, layers, std, rng);
        let head = DenseLayerParams::init(hidden, outputs, output, std, rng);
        Self { stack, head }
    }

    pub fn inputs(&self) -> usize {
        self.stack.inputs()
    }

    pub fn outputs(&self) -> usize {
        self.head.outputs()
    }

    pub fn forward(&self, seq: &DenseMatrix) -> Result<Vec<f64>> {
        Ok(self.forward_traced(seq)?.output)
    }

    pub fn forward_traced(&self, seq: &DenseMatrix) -> Result<GruNetTrace> {
        if seq.rows() == 0 {
            return Err(Error::EmptyInput("sequence"));
        }
        let mut state = self.stack.zero_state();
        let mut steps = Vec::with_capacity(seq.rows());
        for x in seq.row_iter() {
            let caches = self.stack.step(x, &state)?;
            state = caches.iter().map(|c| c.h.clone()).collect();
            steps.push(caches);
        }
        let last = state.last().expect("stack has at least one layer");
        let output = dense_forward(last, &self.head)?;
        Ok(GruNetTrace { steps, output })
    }

    /// Backpropagation through time. Returns `dL/dinput` as a `T × inputs` matrix.
    pub fn backward(&self, trace: &GruNetTrace, d_out: &[f64], grads: &mut GruNet) -> DenseMatrix {
        let last_h = &trace.steps.last().unwrap().last().unwrap().h;
        let d_last = self.head.backward(last_h, &trace.output, d_out, &mut grads.head);
        let mut carry = self.stack.zero_state();
        let zeros = vec![0.0; self.stack.hidden()];
        let t_len = trace.steps.len();
        let mut d_input = DenseMatrix::zeros(t_len, self.inputs());
        for t in (0..t_len).rev() {
            let d_top = if t + 1 == t_len { &d_last } else { &zeros };
            let dx = self.stack.step_backward(&trace.steps[t], d_top, &mut carry, &mut grads.stack);
            d_input.row_mut(t).copy_from_slice(&dx);
        }
        d_input
    }
}

impl ParamSet for GruNet {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64], ParamRole)) {
        self.stack.visit(f);
        self.head.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64], ParamRole)) {
        self.stack.visit_mut(f);
        self.head.visit_mut(f);
    }
}

/// A network that maps one [`Sample`] to an output vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Network {
    Dense(Mlp),
    Recurrent(GruNet),
}

#[derive(Debug, Clone)]
pub enum NetworkTrace {
    Dense(MlpTrace),
    Recurrent(GruNetTrace),
}

impl NetworkTrace {
    pub fn output(&self) -> &[f64] {
        match self {
            NetworkTrace::Dense(t) => t.output(),
            NetworkTrace::Recurrent(t) => &t.output,
        }
    }
}

impl Network {
    pub fn outputs(&self) -> usize {
        match self {
            Network::Dense(m) => m.outputs(),
            Network::Recurrent(g) => g.outputs(),
        }
    }

    pub fn inputs(&self) -> usize {
        match self {
            Network::Dense(m) => m.inputs(),
            Network::Recurrent(g) => g.inputs(),
        }
    }

    pub fn forward(&self, x: &Sample) -> Result<Vec<f64>> {
        match (self, x) {
            (Network::Dense(m), Sample::Static(v)) => m.forward(v),
            (Network::Recurrent(g), Sample::Sequence(s)) => g.forward(s),
            (Network::Dense(_), Sample::Sequence(_)) => Err(Error::WrongDataKind {
                expected: "static_vector",
                found: "sequence",
            }),
            (Network::Recurrent(_), Sample::Static(_)) => Err(Error::WrongDataKind {
                expected: "sequence",
                found: "static_vector",
            }),
        }
    }

    pub fn forward_traced(&self, x: &Sample) -> Result<NetworkTrace> {
        match (self, x) {
            (Network::Dense(m), Sample::Static(v)) => Ok(NetworkTrace::Dense(m.forward_traced(v)?)),
            (Network::Recurrent(g), Sample::Sequence(s)) => Ok(NetworkTrace::Recurrent(g.forward_traced(s)?)),
            _ => Err(Error::WrongDataKind {
                expected: if matches!(self, Network::Dense(_)) { "static_vector" } else { "sequence" },
                found: x.kind().name(),
            }),
        }
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward_sample(&self, trace: &NetworkTrace, d_out: &[f64], grads: &mut Network) -> Sample {
        match (self, trace, grads) {
            (Network::Dense(m), NetworkTrace::Dense(t), Network::Dense(g)) => Sample::Static(m.backward(t, d_out, g)),
            (Network::Recurrent(n), NetworkTrace::Recurrent(t), Network::Recurrent(g)) => {
                Sample::Sequence(n.backward(t, d_out, g))
            }
            _ => panic!("network, trace and gradient container kinds differ"),
        }
    }
}

impl ParamSet for Network {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64], ParamRole)) {
        match self {
            Network::Dense(m) => m.visit(f),
            Network::Recurrent(g) => g.visit(f),
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64], ParamRole)) {
        match self {
            Network::Dense(m) => m.visit_mut(f),
            Network::Recurrent(g) => g.visit_mut(f),
        }
    }
}

/// Mean softmax cross-entropy of a batch plus `(l2/2)·Σw²`.
pub fn batch_loss(network: &Network, batch: &[Sample], targets: &[usize], l2: f64) -> Result<f64> {
    check_batch(batch, targets)?;
    let mut total = 0.0;
    for (x, &t) in batch.iter().zip(targets) {
        let logits = network.forward(x)?;
        total += super::loss::softmax_cross_entropy(&logits, t)?;
    }
    Ok(total / batch.len() as f64 + 0.5 * l2 * network.weight_sq_norm())
}

/// Gradient of [`batch_loss`] with respect to every parameter.
/// Returns `(loss, gradients)`.
pub fn backward(network: &Network, batch: &[Sample], targets: &[usize], l2: f64) -> Result<(f64, Network)> {
    check_batch(batch, targets)?;
    let mut grads = network.zeros_like();
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for (x, &t) in batch.iter().zip(targets) {
        let trace = network.forward_traced(x)?;
        let (loss, mut d) = cross_entropy_with_grad(trace.output(), t)?;
        total += loss;
        d.iter_mut().for_each(|v| *v *= scale);
        network.backward_sample(&trace, &d, &mut grads);
    }
    let loss = total * scale + 0.5 * l2 * network.weight_sq_norm();
    if !loss.is_finite() {
        return Err(Error::NonFinite("batch loss"));
    }
    network.add_l2_grad(&mut grads, l2);
    Ok((loss, grads))
}

fn check_batch(batch: &[Sample], targets: &[usize]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    if batch.len() != targets.len() {
        return Err(Error::dims("batch targets", batch.len(), targets.len()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::loss::softmax;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_linear_layer_gradient_is_softmax_minus_onehot() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Network::Dense(Mlp::init(&[3, 4], Activation::Tanh, Activation::Linear, 0.5, &mut rng));
        let x = vec![0.3, -1.2, 0.8];
        let (_, grads) = backward(&net, &[Sample::Static(x.clone())], &[2], 0.0).unwrap();
        let Network::Dense(m) = &net else { unreachable!() };
        let logits = m.forward(&x).unwrap();
        let mut delta = softmax(&logits);
        delta[2] -= 1.0;
        let Network::Dense(g) = grads else { unreachable!() };
        for i in 0..4 {
            for j in 0..3 {
                assert!((g.layers[0].weight.get(i, j) - delta[i] * x[j]).abs() < 1e-14);
            }
            assert!((g.layers[0].bias[i] - delta[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn saturated_batch_leaves_only_l2() {
        let mut layer = DenseLayerParams::new(DenseMatrix::zeros(2, 2), vec![40.0, -40.0], Activation::Linear).unwrap();
        layer.weight.set(0, 0, 0.5);
        let net = Network::Dense(Mlp { layers: vec![layer] });
        let l2 = 0.01;
        let (loss, grads) = backward(&net, &[Sample::Static(vec![0.0, 0.0])], &[0], l2).unwrap();
        assert!(loss - 0.5 * l2 * 0.25 < 1e-12);
        let Network::Dense(g) = grads else { unreachable!() };
        assert!((g.layers[0].weight.get(0, 0) - l2 * 0.5).abs() < 1e-15);
        assert!(g.layers[0].bias.iter().all(|b| b.abs() < 1e-30));
    }

    #[test]
    fn kind_mismatch_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Network::Dense(Mlp::init(&[2, 2], Activation::Tanh, Activation::Linear, 0.1, &mut rng));
        let seq = Sample::Sequence(DenseMatrix::zeros(3, 2));
        assert!(matches!(net.forward(&seq), Err(Error::WrongDataKind { .. })));
        assert!(backward(&net, &[Sample::Static(vec![0.0; 3])], &[0], 0.0).is_err());
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = GruNet::init(3, 5, 2, 4, Activation::Linear, 0.3, &mut rng);
        let seq = DenseMatrix::random_normal(6, 3, 1.0, &mut rng);
        assert_eq!(net.forward(&seq).unwrap(), net.forward(&seq).unwrap());
    }
}
