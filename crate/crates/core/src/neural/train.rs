use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EncodedExample, NnModel, NnParams, SequenceCaps, DEFAULT_BRANCH_NAMES};
use crate::error::{Error, Result};
use crate::label::Label;

/// Parameter-shaped gradient buffer.
pub type Gradients = NnParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// LSTM units per direction.
    pub hidden_size: usize,
    pub caps: SequenceCaps,
    /// Multiplier on the Glorot init range; small values start near a
    /// uniform softmax.
    pub init_scale: f64,
    pub rms_decay: f64,
    pub rms_epsilon: f64,
    pub branch_names: Vec<String>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            l2_lambda: 0.1,
            dropout: 0.5,
            batch_size: 32,
            epochs: 400,
            seed: 42,
            hidden_size: 25,
            caps: SequenceCaps::default(),
            init_scale: 1.0,
            rms_decay: 0.9,
            rms_epsilon: 1e-8,
            branch_names: DEFAULT_BRANCH_NAMES.map(String::from).to_vec(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("init_scale", self.init_scale),
            ("rms_epsilon", self.rms_epsilon),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(Error::invalid(format!("l2_lambda must be non-negative, got {}", self.l2_lambda)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        if !(0.0..1.0).contains(&self.rms_decay) {
            return Err(Error::invalid(format!("rms_decay must be in [0, 1), got {}", self.rms_decay)));
        }
        if self.batch_size == 0 || self.epochs == 0 || self.hidden_size == 0 || self.caps.0.contains(&0) {
            return Err(Error::invalid("batch size, epochs, hidden size and caps must be positive"));
        }
        if self.branch_names.len() != super::BRANCH_COUNT {
            return Err(Error::invalid(format!("need {} branch names", super::BRANCH_COUNT)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean cross-entropy over the epoch's mini-batches (with dropout).
    pub train_loss: f64,
    pub dev_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean cross-entropy on the training set before the first update.
    pub initial_loss: f64,
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch of the returned snapshot.
    pub best_epoch: usize,
}

fn labelled(examples: &[EncodedExample]) -> Result<Vec<Label>> {
    examples
        .iter()
        .enumerate()
        .map(|(i, e)| e.label.ok_or_else(|| Error::invalid(format!("example {i} has no label"))))
        .collect()
}

fn add_l2(params: &NnParams, grad: &mut Gradients, lambda: f64) {
    if lambda == 0.0 {
        return;
    }
    for (p, g) in params.tensors().iter().zip(grad.tensors_mut()) {
        if !p.is_bias {
            g.values.iter_mut().zip(p.values).for_each(|(g, w)| *g += 2.0 * lambda * w);
        }
    }
}

/// Mean cross-entropy plus `lambda`·Σw² over `examples`, without dropout,
/// and its gradient.
pub fn loss_and_gradient(model: &NnModel, examples: &[EncodedExample], lambda: f64) -> Result<(f64, Gradients)> {
    let labels = labelled(examples)?;
    let mut grad = model.params.zeros_like();
    let weight = 1.0 / examples.len().max(1) as f64;
    let mut loss = 0.0;
    for (ex, &y) in examples.iter().zip(&labels) {
        model.check_dims(ex)?;
        let tape = model.forward_tape(ex, None);
        loss += weight * model.backward(&tape, y, weight, &mut grad);
    }
    add_l2(&model.params, &mut grad, lambda);
    Ok((loss + lambda * model.params.weight_sq_norm(), grad))
}

fn loss_only(model: &NnModel, examples: &[EncodedExample], labels: &[Label], lambda: f64) -> f64 {
    let ce: f64 = examples
        .iter()
        .zip(labels)
        .map(|(ex, y)| -model.forward_tape(ex, None).probs[y.index()].max(f64::MIN_POSITIVE).ln())
        .sum::<f64>()
        / examples.len().max(1) as f64;
    ce + lambda * model.params.weight_sq_norm()
}

fn accuracy(model: &NnModel, examples: &[EncodedExample], labels: &[Label]) -> f64 {
    let correct = examples
        .iter()
        .zip(labels)
        .filter(|(ex, y)| {
            let p = model.forward_tape(ex, None).probs;
            Label::from_index(usize::from(p[1] > p[0])) == **y
        })
        .count();
    correct as f64 / examples.len() as f64
}

/// Trains with RMSprop on shuffled mini-batches and returns the snapshot with
/// the best dev accuracy (earliest on ties; the final epoch without dev data).
pub fn nn_train(train: &[EncodedExample], dev: &[EncodedExample], config: &TrainConfig) -> Result<(NnModel, TrainHistory)> {
    config.validate()?;
    let labels = labelled(train)?;
    let dev_labels = labelled(dev)?;
    if !Label::ALL.iter().all(|l| labels.contains(l)) {
        return Err(Error::invalid("training data must contain both classes"));
    }
    let first = &train[0];
    let embedding_dim = first.branches.first().map_or(0, |b| b.inputs.ncols());
    let similarity_dim = first.similarities.len();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = NnParams::init(embedding_dim, config.hidden_size, similarity_dim, config.init_scale, &mut rng);
    let mut model = NnModel::new(params, embedding_dim, config.hidden_size, similarity_dim);
    model.caps = config.caps;
    model.branch_names = config.branch_names.clone();
    for ex in train.iter().chain(dev) {
        model.check_dims(ex)?;
    }

    let initial_loss = loss_only(&model, train, &labels, 0.0);
    let mut rms = model.params.zeros_like();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, NnParams)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grad = model.params.zeros_like();
            let weight = 1.0 / batch.len() as f64;
            for &i in batch {
                let keep = model.dropout_mask(config.dropout, &mut rng);
                let tape = model.forward_tape(&train[i], keep);
                epoch_loss += model.backward(&tape, labels[i], weight, &mut grad);
            }
            add_l2(&model.params, &mut grad, config.l2_lambda);
            let (decay, lr, eps) = (config.rms_decay, config.learning_rate, config.rms_epsilon);
            for ((w, g), s) in model.params.tensors_mut().into_iter().zip(grad.tensors()).zip(rms.tensors_mut()) {
                for ((w, g), s) in w.values.iter_mut().zip(g.values).zip(s.values.iter_mut()) {
                    *s = decay * *s + (1.0 - decay) * g * g;
                    *w -= lr * g / (s.sqrt() + eps);
                }
            }
        }
        let dev_accuracy = (!dev.is_empty()).then(|| accuracy(&model, dev, &dev_labels));
        if let Some(acc) = dev_accuracy {
            if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
                best = Some((acc, epoch, model.params.clone()));
            }
        }
        let train_loss = epoch_loss / train.len() as f64;
        log::debug!("epoch {epoch}: loss {train_loss:.4} dev {dev_accuracy:?}");
        epochs.push(EpochStats {
            epoch,
            train_loss,
            dev_accuracy,
        });
    }

    let best_epoch = match best {
        Some((_, epoch, params)) => {
            model.params = params;
            epoch
        }
        None => config.epochs,
    };
    Ok((
        model,
        TrainHistory {
            initial_loss,
            epochs,
            best_epoch,
        },
    ))
}

#[derive(Debug, Clone)]
pub struct GradCheckOptions {
    pub epsilon: f64,
    /// Coordinates sampled per tensor (all of them for smaller tensors).
    pub samples_per_tensor: usize,
    pub l2_lambda: f64,
    pub seed: u64,
    /// Applied to the analytic gradient before comparison; for negative
    /// controls.
    pub corrupt: Option<fn(&mut Gradients)>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            epsilon: 1e-5,
            samples_per_tensor: 20,
            l2_lambda: 0.1,
            seed: 0,
            corrupt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Worst relative error per tensor, in parameter order.
    pub per_tensor: Vec<(String, f64)>,
    pub coordinates_checked: usize,
}

// Below this magnitude both gradients count as zero; central differences at
// epsilon 1e-5 carry absolute noise far smaller than this.
const RELATIVE_FLOOR: f64 = 1e-5;

/// Compares the analytic gradient of the full loss (cross-entropy plus L2,
/// no dropout) on `example` against central finite differences.
pub fn grad_check(model: &NnModel, example: &EncodedExample, options: &GradCheckOptions) -> Result<GradCheckReport> {
    let examples = std::slice::from_ref(example);
    let labels = labelled(examples)?;
    let (_, mut analytic) = loss_and_gradient(model, examples, options.l2_lambda)?;
    if let Some(corrupt) = options.corrupt {
        corrupt(&mut analytic);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut probe = model.clone();
    let mut per_tensor = Vec::new();
    let mut checked = 0;
    let analytic_tensors = analytic.tensors();

    for (t, a) in analytic_tensors.iter().enumerate() {
        let len = a.values.len();
        let coords: Vec<usize> = if len <= options.samples_per_tensor {
            (0..len).collect()
        } else {
            index::sample(&mut rng, len, options.samples_per_tensor).into_vec()
        };
        let mut worst: f64 = 0.0;
        for k in coords {
            let original = probe.params.tensors()[t].values[k];
            probe.params.tensors_mut()[t].values[k] = original + options.epsilon;
            let plus = loss_only(&probe, examples, &labels, options.l2_lambda);
            probe.params.tensors_mut()[t].values[k] = original - options.epsilon;
            let minus = loss_only(&probe, examples, &labels, options.l2_lambda);
            probe.params.tensors_mut()[t].values[k] = original;

            let numeric = (plus - minus) / (2.0 * options.epsilon);
            let exact = a.values[k];
            let err = (exact - numeric).abs() / exact.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
            worst = worst.max(err);
            checked += 1;
        }
        per_tensor.push((a.name.clone(), worst));
    }
    Ok(GradCheckReport {
        max_relative_error: per_tensor.iter().map(|(_, e)| *e).fold(0.0, f64::max),
        per_tensor,
        coordinates_checked: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::Sequence;
    use ndarray::{Array1, Array2};
    use rand::Rng;

    fn example(rng: &mut ChaCha8Rng, dim: usize, sims: usize, label: Label) -> EncodedExample {
        EncodedExample {
            branches: (0..5)
                .map(|_| {
                    let t = rng.random_range(1..=4);
                    Sequence {
                        inputs: Array2::from_shape_fn((t, dim), |_| rng.random_range(-1.0..1.0)),
                        mask: vec![true; t],
                    }
                })
                .collect(),
            similarities: Array1::from_shape_fn(sims, |_| rng.random_range(0.0..1.0)),
            label: Some(label),
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ex = example(&mut rng, 3, 4, Label::False);
        let model = NnModel::random(3, 2, 4, 8);
        let report = grad_check(&model, &ex, &GradCheckOptions::default()).unwrap();
        assert!(report.max_relative_error < 1e-4, "{report:?}");
        assert_eq!(report.per_tensor.len(), 5 * 6 + 4);

        let corrupted = GradCheckOptions {
            corrupt: Some(|g: &mut Gradients| g.dense_w *= 1.5),
            ..Default::default()
        };
        assert!(grad_check(&model, &ex, &corrupted).unwrap().max_relative_error > 1e-2);
    }

    #[test]
    fn biases_are_not_regularized() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ex = example(&mut rng, 2, 3, Label::True);
        let mut model = NnModel::random(2, 2, 3, 10);
        model.params.dense_b.fill(0.7);
        let (_, g0) = loss_and_gradient(&model, std::slice::from_ref(&ex), 0.0).unwrap();
        let (_, g1) = loss_and_gradient(&model, std::slice::from_ref(&ex), 50.0).unwrap();
        assert_eq!(g0.dense_b, g1.dense_b);
        assert_eq!(g0.branches[2].fwd.b, g1.branches[2].fwd.b);
        assert_ne!(g0.dense_w, g1.dense_w);
    }

    #[test]
    fn zero_model_has_zero_l2_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ex = example(&mut rng, 2, 3, Label::True);
        let model = NnModel::zeros(2, 2, 3);
        let (_, with) = loss_and_gradient(&model, std::slice::from_ref(&ex), 5.0).unwrap();
        let (_, without) = loss_and_gradient(&model, std::slice::from_ref(&ex), 0.0).unwrap();
        assert_eq!(with, without);
    }

    /// Two clusters in the similarity block; sequences are noise.
    fn separable(n: usize, seed: u64) -> Vec<EncodedExample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = if i % 2 == 0 { Label::True } else { Label::False };
                let mut ex = example(&mut rng, 3, 4, label);
                let centre = if label == Label::True { 0.9 } else { 0.1 };
                ex.similarities.mapv_inplace(|v| centre + 0.1 * (v - 0.5));
                ex
            })
            .collect()
    }

    fn small_config(epochs: usize) -> TrainConfig {
        TrainConfig {
            hidden_size: 3,
            epochs,
            batch_size: 8,
            learning_rate: 0.01,
            l2_lambda: 0.001,
            dropout: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn learns_a_tiny_separable_set() {
        let data = separable(20, 3);
        let (model, history) = nn_train(&data, &[], &small_config(400)).unwrap();
        assert_eq!(history.best_epoch, 400);
        let labels: Vec<Label> = data.iter().map(|e| e.label.unwrap()).collect();
        assert_eq!(accuracy(&model, &data, &labels), 1.0);
        assert!(history.epochs.last().unwrap().train_loss < history.initial_loss);
    }

    #[test]
    fn near_zero_init_starts_at_ln2() {
        let data = separable(10, 4);
        let cfg = TrainConfig {
            init_scale: 1e-4,
            ..small_config(1)
        };
        let (_, history) = nn_train(&data, &[], &cfg).unwrap();
        assert!((history.initial_loss - std::f64::consts::LN_2).abs() < 1e-3);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let data = separable(12, 5);
        let dev = separable(6, 6);
        let cfg = TrainConfig {
            dropout: 0.5,
            ..small_config(15)
        };
        let (a, ha) = nn_train(&data, &dev, &cfg).unwrap();
        let (b, hb) = nn_train(&data, &dev, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
        assert!(ha.best_epoch >= 1 && ha.best_epoch <= 15);
    }

    #[test]
    fn rejects_single_class_and_bad_config() {
        let data: Vec<_> = separable(6, 1).into_iter().filter(|e| e.label == Some(Label::True)).collect();
        assert!(matches!(nn_train(&data, &[], &small_config(1)), Err(Error::InvalidArgument(_))));
        let cfg = TrainConfig {
            dropout: 1.0,
            ..small_config(1)
        };
        assert!(matches!(nn_train(&separable(6, 1), &[], &cfg), Err(Error::InvalidArgument(_))));
    }
}
