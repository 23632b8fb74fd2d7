use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Prediction;
use crate::data::{BatchSampler, Sample};
use crate::error::{Error, Result};
use crate::nn::{adam_update, backward, softmax, Activation, AdamState, DenseMatrix, GruNet, Network, INIT_STD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GruClassifierConfig {
    pub hidden_size: usize,
    pub hidden_layers: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub batch_size: usize,
    /// Minibatch updates.
    pub steps: usize,
    pub seed: u64,
}

impl Default for GruClassifierConfig {
    fn default() -> Self {
        Self {
            hidden_size: 60,
            hidden_layers: 2,
            learning_rate: 0.01,
            l2: 1e-4,
            batch_size: 64,
            steps: 300,
            seed: 0,
        }
    }
}

/// GRU stack read at its last step by a `K`-way softmax head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruClassifierModel {
    pub network: Network,
    /// Batch loss after every update.
    pub loss_history: Vec<f64>,
}

impl GruClassifierModel {
    pub fn num_classes(&self) -> usize {
        self.network.outputs()
    }

    /// Class posteriors for one window.
    pub fn predict(&self, window: &DenseMatrix) -> Result<Prediction> {
        let logits = self.network.forward(&Sample::Sequence(window.clone()))?;
        Ok(Prediction::from_scores(softmax(&logits)))
    }
}

pub fn train_gru_classifier(
    windows: &[DenseMatrix],
    labels: &[usize],
    num_classes: usize,
    cfg: &GruClassifierConfig,
) -> Result<GruClassifierModel> {
    let first = windows.first().ok_or(Error::EmptyInput("classifier windows"))?;
    if windows.len() != labels.len() {
        return Err(Error::dims("window labels", windows.len(), labels.len()));
    }
    if num_classes < 2 {
        return Err(Error::config("classifier needs at least two classes"));
    }
    if cfg.hidden_size == 0 || cfg.hidden_layers == 0 || cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::config("hidden size, layers, batch size and learning rate must be positive"));
    }
    for w in windows {
        if w.rows() != first.rows() {
            return Err(Error::dims("window length", first.rows(), w.rows()));
        }
        if w.cols() != first.cols() {
            return Err(Error::dims("window width", first.cols(), w.cols()));
        }
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::IndexOutOfRange {
            context: "window label",
            index: bad,
            len: num_classes,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut network = Network::Recurrent(GruNet::init(
        first.cols(),
        cfg.hidden_size,
        cfg.hidden_layers,
        num_classes,
        Activation::Linear,
        INIT_STD,
        &mut rng,
    ));
    let mut state = AdamState::new(&network);
    let mut sampler = BatchSampler::new(windows.len());
    let mut history = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let idx = sampler.next(cfg.batch_size.min(windows.len()), &mut rng);
        let batch: Vec<Sample> = idx.iter().map(|&i| Sample::Sequence(windows[i].clone())).collect();
        let targets: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
        let (loss, grads) = backward(&network, &batch, &targets, cfg.l2).map_err(|_| Error::Divergence {
            iteration: step,
            network: "classifier",
        })?;
        adam_update(&mut network, &grads, &mut state, cfg.learning_rate, 0.0).map_err(|_| Error::Divergence {
            iteration: step,
            network: "classifier",
        })?;
        history.push(loss);
    }
    Ok(GruClassifierModel {
        network,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_windows(n: usize) -> (Vec<DenseMatrix>, Vec<usize>) {
        let mut w = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let k = i % 2;
            let v = if k == 0 { 0.5 } else { -0.5 };
            w.push(DenseMatrix::from_vec(10, 3, vec![v; 30]).unwrap());
            y.push(k);
        }
        (w, y)
    }

    fn small() -> GruClassifierConfig {
        GruClassifierConfig {
            hidden_size: 8,
            batch_size: 16,
            ..GruClassifierConfig::default()
        }
    }

    #[test]
    fn separates_constant_classes() {
        let (w, y) = constant_windows(40);
        let model = train_gru_classifier(&w, &y, 2, &GruClassifierConfig { steps: 200, ..small() }).unwrap();
        let correct = w.iter().zip(&y).filter(|(x, &l)| model.predict(x).unwrap().class == l).count();
        assert!(correct as f64 / w.len() as f64 >= 0.99);
    }

    #[test]
    fn untrained_predictions_are_distributions() {
        let (w, y) = constant_windows(4);
        let model = train_gru_classifier(&w, &y, 4, &GruClassifierConfig { steps: 0, ..small() }).unwrap();
        for x in &w {
            let p = model.predict(x).unwrap();
            assert_eq!(p.scores.len(), 4);
            assert!((p.scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(p.class, crate::gan::argmax(&p.scores));
        }
    }

    #[test]
    fn deterministic_and_validated() {
        let (w, y) = constant_windows(8);
        let cfg = GruClassifierConfig { steps: 5, ..small() };
        assert_eq!(
            train_gru_classifier(&w, &y, 2, &cfg).unwrap(),
            train_gru_classifier(&w, &y, 2, &cfg).unwrap()
        );
        let mut bad = w.clone();
        bad[3] = DenseMatrix::zeros(9, 3);
        assert!(train_gru_classifier(&bad, &y, 2, &cfg).is_err());
        assert!(train_gru_classifier(&w, &y[..3], 2, &cfg).is_err());
    }
}
