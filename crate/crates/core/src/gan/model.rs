use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{GanMode, ScganConfig};
use super::latent::{sample_latent, ConditionVector, LatentVector};
use crate::data::{DataKind, Sample};
use crate::error::{Error, Result};
use crate::nn::{
    dense_forward, Activation, DenseLayerParams, DenseMatrix, GruNet, GruStack, GruStepCache, Mlp, MlpTrace, Network,
    ParamRole, ParamSet, INIT_STD,
};

/// Generator network.
///
/// The recurrent variant reads `[z ‖ 0 ‖ c]` at the first step and
/// `[0 ‖ x̂ₜ₋₁ ‖ c]` afterwards, so both the noise and the previous output
/// have a fixed slot in one input layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Dense(Mlp),
    Recurrent { stack: GruStack, head: DenseLayerParams },
}

impl ParamSet for Generator {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64], ParamRole)) {
        match self {
            Generator::Dense(m) => m.visit(f),
            Generator::Recurrent { stack, head } => {
                stack.visit(f);
                head.visit(f);
            }
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64], ParamRole)) {
        match self {
            Generator::Dense(m) => m.visit_mut(f),
            Generator::Recurrent { stack, head } => {
                stack.visit_mut(f);
                head.visit_mut(f);
            }
        }
    }
}

/// Everything the generator computed for one sample, kept for backpropagation.
#[derive(Debug, Clone)]
pub enum GeneratorTrace {
    Dense(MlpTrace),
    Recurrent {
        steps: Vec<Vec<GruStepCache>>,
        outputs: DenseMatrix,
    },
}

impl GeneratorTrace {
    pub fn sample(&self) -> Sample {
        match self {
            GeneratorTrace::Dense(t) => Sample::Static(t.output().to_vec()),
            GeneratorTrace::Recurrent { outputs, .. } => Sample::Sequence(outputs.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScganModel {
    pub config: ScganConfig,
    pub feature_dim: usize,
    pub generator: Generator,
    pub discriminator: Network,
}

const FORMAT_TAG: &str = "snoregan-model/1";

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    model: ScganModel,
}

impl ScganModel {
    /// Freshly initialized networks (Gaussian weights, zero biases).
    pub fn init(config: &ScganConfig, feature_dim: usize) -> Result<Self> {
        config.validate()?;
        if feature_dim == 0 {
            return Err(Error::config("feature dimension must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self::init_with_rng(config, feature_dim, &mut rng))
    }

    pub(crate) fn init_with_rng<R: Rng + ?Sized>(config: &ScganConfig, feature_dim: usize, rng: &mut R) -> Self {
        let k = config.num_classes;
        let hidden = config.hidden_size;
        let layers = config.hidden_layers;
        let d_out = config.mode.discriminator_outputs(k);
        let d_in = match config.mode {
            GanMode::Cgan => feature_dim + k,
            GanMode::Scgan | GanMode::Sgan => feature_dim,
        };
        let (generator, discriminator) = match config.data_kind {
            DataKind::StaticVector => {
                let mut g_sizes = vec![config.latent_dim + k];
                g_sizes.extend(std::iter::repeat_n(hidden, layers));
                g_sizes.push(feature_dim);
                let g = Mlp::init(&g_sizes, Activation::Tanh, Activation::Linear, INIT_STD, rng);
                let mut d_sizes = vec![d_in];
                d_sizes.extend(std::iter::repeat_n(hidden, layers));
                d_sizes.push(d_out);
                let d = Mlp::init(&d_sizes, Activation::Tanh, Activation::Linear, INIT_STD, rng);
                (Generator::Dense(g), Network::Dense(d))
            }
            DataKind::Sequence => {
                let stack = GruStack::init(config.latent_dim + feature_dim + k, hidden, layers, INIT_STD, rng);
                let head = DenseLayerParams::init(hidden, feature_dim, Activation::Linear, INIT_STD, rng);
                let d = GruNet::init(d_in, hidden, layers, d_out, Activation::Linear, INIT_STD, rng);
                (Generator::Recurrent { stack, head }, Network::Recurrent(d))
            }
        };
        Self {
            config: config.clone(),
            feature_dim,
            generator,
            discriminator,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    pub fn mode(&self) -> GanMode {
        self.config.mode
    }

    /// The condition block fed to the generator (all zeros for sgan).
    fn condition_input(&self, c: &ConditionVector) -> Vec<f64> {
        match self.config.mode {
            GanMode::Sgan => vec![0.0; self.num_classes()],
            GanMode::Scgan | GanMode::Cgan => c.one_hot(),
        }
    }

    fn check_condition(&self, z: &LatentVector, c: &ConditionVector) -> Result<()> {
        if z.0.len() != self.config.latent_dim {
            return Err(Error::dims("latent vector", self.config.latent_dim, z.0.len()));
        }
        if c.num_classes() != self.num_classes() {
            return Err(Error::dims("condition vector", self.num_classes(), c.num_classes()));
        }
        Ok(())
    }

    /// `x̂ = G(z | c)` for static-vector models.
    pub fn generate_static(&self, z: &LatentVector, c: &ConditionVector) -> Result<Vec<f64>> {
        if self.config.data_kind != DataKind::StaticVector {
            return Err(Error::WrongDataKind {
                expected: "static_vector",
                found: "sequence",
            });
        }
        self.check_condition(z, c)?;
        match self.generator_forward(z, c, 1)? {
            GeneratorTrace::Dense(t) => Ok(t.output().to_vec()),
            GeneratorTrace::Recurrent { .. } => unreachable!("static model holds a dense generator"),
        }
    }

    /// Autoregressive generation of `steps` frames.
    pub fn generate_sequence(&self, z: &LatentVector, c: &ConditionVector, steps: usize) -> Result<DenseMatrix> {
        if self.config.data_kind != DataKind::Sequence {
            return Err(Error::WrongDataKind {
                expected: "sequence",
                found: "static_vector",
            });
        }
        if steps == 0 {
            return Err(Error::config("sequence length must be at least 1"));
        }
        self.check_condition(z, c)?;
        match self.generator_forward(z, c, steps)? {
            GeneratorTrace::Recurrent { outputs, .. } => Ok(outputs),
            GeneratorTrace::Dense(_) => unreachable!("sequence model holds a recurrent generator"),
        }
    }

    /// Draw `z` from the prior and generate one sample for `class`.
    pub fn sample<R: Rng + ?Sized>(&self, class: usize, rng: &mut R) -> Result<Sample> {
        let c = ConditionVector::new(class, self.num_classes())?;
        let z = sample_latent(self.config.latent_dim, self.config.prior, rng);
        match self.config.data_kind {
            DataKind::StaticVector => self.generate_static(&z, &c).map(Sample::Static),
            DataKind::Sequence => {
                let t = self.config.sequence_length.unwrap_or(1);
                self.generate_sequence(&z, &c, t).map(Sample::Sequence)
            }
        }
    }

    pub(crate) fn generator_forward(&self, z: &LatentVector, c: &ConditionVector, steps: usize) -> Result<GeneratorTrace> {
        let cond = self.condition_input(c);
        match &self.generator {
            Generator::Dense(mlp) => {
                let mut input = z.0.clone();
                input.extend_from_slice(&cond);
                Ok(GeneratorTrace::Dense(mlp.forward_traced(&input)?))
            }
            Generator::Recurrent { stack, head } => {
                let latent = self.config.latent_dim;
                let d = self.feature_dim;
                let mut state = stack.zero_state();
                let mut outputs = DenseMatrix::zeros(steps, d);
                let mut all = Vec::with_capacity(steps);
                let mut input = vec![0.0; latent + d + cond.len()];
                input[..latent].copy_from_slice(&z.0);
                input[latent + d..].copy_from_slice(&cond);
                for t in 0..steps {
                    if t > 0 {
                        input[..latent].iter_mut().for_each(|v| *v = 0.0);
                        input[latent..latent + d].copy_from_slice(outputs.row(t - 1));
                    }
                    let caches = stack.step(&input, &state)?;
                    state = caches.iter().map(|c| c.h.clone()).collect();
                    let y = dense_forward(state.last().unwrap(), head)?;
                    outputs.row_mut(t).copy_from_slice(&y);
                    all.push(caches);
                }
                Ok(GeneratorTrace::Recurrent { steps: all, outputs })
            }
        }
    }

    /// Backpropagate `dL/dx̂` through the generator into `grads`.
    pub(crate) fn generator_backward(&self, trace: &GeneratorTrace, d_sample: &Sample, grads: &mut Generator) {
        match (&self.generator, trace, grads, d_sample) {
            (Generator::Dense(mlp), GeneratorTrace::Dense(t), Generator::Dense(g), Sample::Static(d)) => {
                mlp.backward(t, d, g);
            }
            (
                Generator::Recurrent { stack, head },
                GeneratorTrace::Recurrent { steps, outputs },
                Generator::Recurrent {
                    stack: g_stack,
                    head: g_head,
                },
                Sample::Sequence(d),
            ) => {
                let latent = self.config.latent_dim;
                let fd = self.feature_dim;
                let mut carry = stack.zero_state();
                let mut feedback = vec![0.0; fd];
                for t in (0..steps.len()).rev() {
                    let d_out: Vec<f64> = d.row(t).iter().zip(&feedback).map(|(a, b)| a + b).collect();
                    let top_h = &steps[t].last().unwrap().h;
                    let d_top = head.backward(top_h, outputs.row(t), &d_out, g_head);
                    let dx = stack.step_backward(&steps[t], &d_top, &mut carry, g_stack);
                    feedback.copy_from_slice(&dx[latent..latent + fd]);
                }
            }
            _ => panic!("generator, trace and gradient kinds differ"),
        }
    }

    /// Discriminator input for a sample; cgan appends the condition to every frame.
    pub(crate) fn discriminator_input(&self, x: &Sample, class: usize) -> Sample {
        if self.config.mode != GanMode::Cgan {
            return x.clone();
        }
        let k = self.num_classes();
        match x {
            Sample::Static(v) => {
                let mut out = v.clone();
                out.extend((0..k).map(|j| if j == class { 1.0 } else { 0.0 }));
                Sample::Static(out)
            }
            Sample::Sequence(m) => {
                let mut out = DenseMatrix::zeros(m.rows(), m.cols() + k);
                for t in 0..m.rows() {
                    let row = out.row_mut(t);
                    row[..m.cols()].copy_from_slice(m.row(t));
                    row[m.cols() + class] = 1.0;
                }
                Sample::Sequence(out)
            }
        }
    }

    /// Discriminator logits. `class` is only read in cgan mode.
    pub fn discriminator_logits(&self, x: &Sample, class: usize) -> Result<Vec<f64>> {
        if x.feature_dim() != self.feature_dim {
            return Err(Error::dims("discriminator input", self.feature_dim, x.feature_dim()));
        }
        self.discriminator.forward(&self.discriminator_input(x, class))
    }

    /// Argmax of the discriminator output, lowest index on ties.
    pub fn discriminate(&self, x: &Sample, class: usize) -> Result<usize> {
        Ok(argmax(&self.discriminator_logits(x, class)?))
    }

    /// Filter verdict for a generated sample conditioned on `class`: the raw
    /// discriminator argmax and whether it counts as recognized. scgan and sgan
    /// require the argmax to be `class` itself; cgan requires "real".
    pub fn verdict(&self, x: &Sample, class: usize) -> Result<(usize, bool)> {
        let predicted = self.discriminate(x, class)?;
        let keep = match self.config.mode {
            GanMode::Cgan => predicted == 0,
            GanMode::Scgan | GanMode::Sgan => predicted == class,
        };
        Ok((predicted, keep))
    }

    /// Most likely real class, ignoring the fake output. Labels samples from the
    /// unconditioned sgan generator.
    pub fn real_class(&self, x: &Sample) -> Result<usize> {
        if self.config.mode == GanMode::Cgan {
            return Err(Error::config("cgan discriminator has no class outputs"));
        }
        let logits = self.discriminator_logits(x, 0)?;
        Ok(argmax(&logits[..self.num_classes()]))
    }

    /// Index of the "fake" output.
    pub fn fake_index(&self) -> usize {
        match self.config.mode {
            GanMode::Cgan => 1,
            GanMode::Scgan | GanMode::Sgan => self.num_classes(),
        }
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let doc = ModelDocument {
            format: FORMAT_TAG.to_string(),
            model: self.clone(),
        };
        let w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(w, &doc)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let doc: ModelDocument = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if doc.format != FORMAT_TAG {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                reason: format!("unknown model format {:?}", doc.format),
            });
        }
        let model = doc.model;
        model.config.validate()?;
        let expected_out = model.config.mode.discriminator_outputs(model.num_classes());
        if model.discriminator.outputs() != expected_out {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                reason: format!("discriminator has {} outputs, mode needs {expected_out}", model.discriminator.outputs()),
            });
        }
        Ok(model)
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::softmax;

    fn config(kind: DataKind, mode: GanMode) -> ScganConfig {
        ScganConfig {
            mode,
            data_kind: kind,
            sequence_length: (kind == DataKind::Sequence).then_some(5),
            hidden_size: 8,
            latent_dim: 4,
            seed: 3,
            ..ScganConfig::default()
        }
    }

    #[test]
    fn discriminator_widths_follow_mode() {
        for (mode, width) in [(GanMode::Scgan, 5), (GanMode::Sgan, 5), (GanMode::Cgan, 2)] {
            let m = ScganModel::init(&config(DataKind::StaticVector, mode), 3).unwrap();
            assert_eq!(m.discriminator.outputs(), width);
            let logits = m.discriminator_logits(&Sample::Static(vec![0.1, 0.2, 0.3]), 1).unwrap();
            assert!((softmax(&logits).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_generator_emits_zeros() {
        let mut m = ScganModel::init(&config(DataKind::StaticVector, GanMode::Scgan), 3).unwrap();
        m.generator.scale(0.0);
        let z = LatentVector(vec![1.0; 4]);
        let c = ConditionVector::new(2, 4).unwrap();
        assert_eq!(m.generate_static(&z, &c).unwrap(), vec![0.0; 3]);

        let mut s = ScganModel::init(&config(DataKind::Sequence, GanMode::Scgan), 3).unwrap();
        s.generator.scale(0.0);
        let seq = s.generate_sequence(&z, &c, 7).unwrap();
        assert_eq!((seq.rows(), seq.cols()), (7, 3));
        assert!(seq.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn generation_is_deterministic_and_kind_checked() {
        let m = ScganModel::init(&config(DataKind::StaticVector, GanMode::Scgan), 3).unwrap();
        let z = LatentVector(vec![0.3, -0.1, 0.8, 0.0]);
        let c = ConditionVector::new(1, 4).unwrap();
        assert_eq!(m.generate_static(&z, &c).unwrap(), m.generate_static(&z, &c).unwrap());
        assert!(matches!(m.generate_sequence(&z, &c, 3), Err(Error::WrongDataKind { .. })));
        let s = ScganModel::init(&config(DataKind::Sequence, GanMode::Scgan), 3).unwrap();
        assert!(matches!(s.generate_static(&z, &c), Err(Error::WrongDataKind { .. })));
    }

    #[test]
    fn sequence_shapes_and_prefix_consistency() {
        let s = ScganModel::init(&config(DataKind::Sequence, GanMode::Scgan), 3).unwrap();
        let z = LatentVector(vec![0.5, -0.5, 1.0, 0.2]);
        let c = ConditionVector::new(3, 4).unwrap();
        let one = s.generate_sequence(&z, &c, 1).unwrap();
        let forty = s.generate_sequence(&z, &c, 40).unwrap();
        assert_eq!((one.rows(), one.cols()), (1, 3));
        assert_eq!((forty.rows(), forty.cols()), (40, 3));
        assert_eq!(one.row(0), forty.row(0));

        // first step by hand: one pass of the stack on [z ‖ 0 ‖ c] from a zero state
        let Generator::Recurrent { stack, head } = &s.generator else { unreachable!() };
        let mut input = z.0.clone();
        input.extend([0.0; 3]);
        input.extend(c.one_hot());
        let caches = stack.step(&input, &stack.zero_state()).unwrap();
        let y = dense_forward(&caches.last().unwrap().h, head).unwrap();
        assert_eq!(y.as_slice(), one.row(0));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        for kind in [DataKind::StaticVector, DataKind::Sequence] {
            let m = ScganModel::init(&config(kind, GanMode::Scgan), 3).unwrap();
            let path = dir.path().join("m.json");
            m.save_json(&path).unwrap();
            let back = ScganModel::load_json(&path).unwrap();
            assert_eq!(m.generator.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                back.generator.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            assert_eq!(m, back);
        }
    }
}
