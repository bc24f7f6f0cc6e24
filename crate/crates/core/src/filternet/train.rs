//! Training: window sampling, flip augmentation, Adam, threshold choice.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    stack_to_input, Architecture, FilterNet, FilterNetError, Gradients,
};
use crate::records::SnippetStack;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ArchitectureKind {
    /// Two stacked convolutions, one fully connected layer.
    #[default]
    TwoConv,
    /// Three convolutions, two fully connected layers.
    ThreeConvTwoFc,
}

impl ArchitectureKind {
    pub fn architecture(self) -> Architecture {
        match self {
            Self::TwoConv => Architecture::stacked_two_conv(),
            Self::ThreeConvTwoFc => Architecture::three_conv_two_fc(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub sequence_len: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub epsilon: f32,
    pub epochs: usize,
    pub validation_fraction: f64,
    /// Random horizontal/vertical flips during training.
    pub augment: bool,
    pub architecture: ArchitectureKind,
    /// Stop early once the inference-mode training accuracy reaches this.
    pub stop_at_train_accuracy: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            sequence_len: 128,
            batch_size: 8,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 20,
            validation_fraction: 0.2,
            augment: true,
            architecture: ArchitectureKind::TwoConv,
            stop_at_train_accuracy: None,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), FilterNetError> {
        if self.sequence_len == 0 {
            return Err(FilterNetError::ShapeMismatch(
                "sequence_len must be >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(FilterNetError::ShapeMismatch(format!(
                "validation_fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LabeledStack {
    pub stack: SnippetStack,
    pub label: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean BCE over the training set at epoch end, inference mode
    /// (deterministic windows, dropout off).
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct TrainMetrics {
    pub epochs: Vec<EpochMetrics>,
    pub train_samples: usize,
    pub val_samples: usize,
}

/// Fixed-length window of a stack: a seeded random contiguous window when
/// the stack is long enough, zero-padding at the end otherwise.
pub fn pad_or_sample(
    stack: &SnippetStack,
    target_len: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SnippetStack, FilterNetError> {
    let count = stack.frame_count();
    if count == 0 {
        return Err(FilterNetError::EmptyStack);
    }
    let mut out = SnippetStack::new(stack.width(), stack.height());
    if count >= target_len {
        let start = rng.random_range(0..=count - target_len);
        for t in start..start + target_len {
            out.push_frame(stack.frame(t));
        }
    } else {
        for t in 0..count {
            out.push_frame(stack.frame(t));
        }
        let zeros = vec![0u8; stack.frame_len()];
        for _ in count..target_len {
            out.push_frame(&zeros);
        }
    }
    Ok(out)
}

/// Deterministic window for inference: centered when long, padded when
/// short.
fn center_window(stack: &SnippetStack, target_len: usize) -> Result<SnippetStack, FilterNetError> {
    let count = stack.frame_count();
    if count == 0 {
        return Err(FilterNetError::EmptyStack);
    }
    let mut out = SnippetStack::new(stack.width(), stack.height());
    if count >= target_len {
        let start = (count - target_len) / 2;
        for t in start..start + target_len {
            out.push_frame(stack.frame(t));
        }
    } else {
        for t in 0..count {
            out.push_frame(stack.frame(t));
        }
        let zeros = vec![0u8; stack.frame_len()];
        for _ in count..target_len {
            out.push_frame(&zeros);
        }
    }
    Ok(out)
}

fn flip_horizontal(stack: &mut SnippetStack) {
    let w = stack.width() as usize;
    let flipped: Vec<Vec<u8>> = stack
        .frames()
        .map(|f| {
            let mut out = f.to_vec();
            for row in out.chunks_exact_mut(w) {
                row.reverse();
            }
            out
        })
        .collect();
    *stack = SnippetStack::from_frames(stack.width(), stack.height(), flipped);
}

fn flip_vertical(stack: &mut SnippetStack) {
    let w = stack.width() as usize;
    let flipped: Vec<Vec<u8>> = stack
        .frames()
        .map(|f| {
            let rows: Vec<&[u8]> = f.chunks_exact(w).collect();
            rows.iter().rev().flat_map(|r| r.iter().copied()).collect()
        })
        .collect();
    *stack = SnippetStack::from_frames(stack.width(), stack.height(), flipped);
}

/// Waggle probability of one stack under a trained model, using the
/// supplied rng for the window choice.
pub fn waggle_probability(
    net: &FilterNet,
    stack: &SnippetStack,
    sequence_len: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f32, FilterNetError> {
    let window = pad_or_sample(stack, sequence_len, rng)?;
    let (input, shape) = stack_to_input(&window);
    net.forward(&input, shape)
}

/// Deterministic (center-window) waggle probability, used for evaluation.
pub fn waggle_probability_centered(
    net: &FilterNet,
    stack: &SnippetStack,
    sequence_len: usize,
) -> Result<f32, FilterNetError> {
    let window = center_window(stack, sequence_len)?;
    let (input, shape) = stack_to_input(&window);
    net.forward(&input, shape)
}

/// Adam optimizer state (first/second moment estimates per parameter).
struct Adam {
    m: Gradients,
    v: Gradients,
    step: u64,
    lr: f32,
    beta1: f32,
    beta2: f32,
    epsilon: f32,
}

impl Adam {
    fn new(net: &FilterNet, cfg: &TrainConfig) -> Self {
        Self {
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
            step: 0,
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            epsilon: cfg.epsilon,
        }
    }

    fn step(&mut self, net: &mut FilterNet, grads: &Gradients) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let update = |p: &mut [f32], g: &[f32], m: &mut [f32], v: &mut [f32],
                      lr: f32, b1: f32, b2: f32, eps: f32| {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        };
        for (li, conv) in net.convs.iter_mut().enumerate() {
            update(
                &mut conv.weights,
                &grads.convs[li].0,
                &mut self.m.convs[li].0,
                &mut self.v.convs[li].0,
                self.lr,
                self.beta1,
                self.beta2,
                self.epsilon,
            );
            update(
                &mut conv.bias,
                &grads.convs[li].1,
                &mut self.m.convs[li].1,
                &mut self.v.convs[li].1,
                self.lr,
                self.beta1,
                self.beta2,
                self.epsilon,
            );
        }
        for (li, fc) in net.fcs.iter_mut().enumerate() {
            update(
                &mut fc.weights,
                &grads.fc[li].0,
                &mut self.m.fc[li].0,
                &mut self.v.fc[li].0,
                self.lr,
                self.beta1,
                self.beta2,
                self.epsilon,
            );
            update(
                &mut fc.bias,
                &grads.fc[li].1,
                &mut self.m.fc[li].1,
                &mut self.v.fc[li].1,
                self.lr,
                self.beta1,
                self.beta2,
                self.epsilon,
            );
        }
    }
}

fn mix_seed(seed: u64, epoch: u64, slot: u64) -> u64 {
    let mut z = seed
        .wrapping_add(epoch.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(slot.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z
}

fn bce_loss(p: f32, label: f32) -> f64 {
    let p = (p as f64).clamp(1e-7, 1.0 - 1e-7);
    -(label as f64 * p.ln() + (1.0 - label as f64) * (1.0 - p).ln())
}

/// Inference-mode accuracy and mean BCE over a sample set.
fn evaluate(net: &FilterNet, samples: &[&LabeledStack], sequence_len: usize) -> (f64, f64) {
    if samples.is_empty() {
        return (0.0, 0.0);
    }
    let (correct, loss): (usize, f64) = samples
        .par_iter()
        .map(|s| {
            let p = waggle_probability_centered(net, &s.stack, sequence_len).unwrap_or(0.5);
            let label = f32::from(u8::from(s.label));
            (usize::from((p >= 0.5) == s.label), bce_loss(p, label))
        })
        .reduce(|| (0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    (
        correct as f64 / samples.len() as f64,
        loss / samples.len() as f64,
    )
}

/// Train a filter network. Deterministic for a fixed config: the sample
/// windows, flips and dropout masks are derived from `(seed, epoch, slot)`
/// and per-sample gradients are reduced in slot order, so the result does
/// not depend on thread scheduling.
pub fn train(
    data: &[LabeledStack],
    cfg: &TrainConfig,
) -> Result<(FilterNet, TrainMetrics), FilterNetError> {
    cfg.validate()?;
    let positives = data.iter().filter(|s| s.label).count();
    if positives == 0 || positives == data.len() {
        return Err(FilterNetError::SingleClass);
    }

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let n_val = ((data.len() as f64) * cfg.validation_fraction).round() as usize;
    let (val_idx, train_idx) = order.split_at(n_val.min(data.len().saturating_sub(2)));
    let train_set: Vec<&LabeledStack> = train_idx.iter().map(|&i| &data[i]).collect();
    let val_set: Vec<&LabeledStack> = val_idx.iter().map(|&i| &data[i]).collect();
    if train_set.iter().all(|s| s.label) || train_set.iter().all(|s| !s.label) {
        return Err(FilterNetError::SingleClass);
    }

    let mut net = FilterNet::init(&cfg.architecture.architecture(), cfg.seed);
    let mut adam = Adam::new(&net, cfg);
    let mut metrics = TrainMetrics {
        epochs: Vec::new(),
        train_samples: train_set.len(),
        val_samples: val_set.len(),
    };

    for epoch in 0..cfg.epochs {
        let mut epoch_order: Vec<usize> = (0..train_set.len()).collect();
        let mut epoch_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, epoch as u64, u64::MAX));
        for i in (1..epoch_order.len()).rev() {
            epoch_order.swap(i, epoch_rng.random_range(0..=i));
        }

        for (batch_no, batch) in epoch_order.chunks(cfg.batch_size.max(1)).enumerate() {
            let results: Vec<Gradients> = batch
                .par_iter()
                .enumerate()
                .map(|(k, &idx)| {
                    let slot = (batch_no * cfg.batch_size + k) as u64;
                    let mut srng =
                        ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, epoch as u64, slot));
                    let sample = train_set[idx];
                    let mut window =
                        pad_or_sample(&sample.stack, cfg.sequence_len, &mut srng).unwrap();
                    if cfg.augment {
                        if srng.random_range(0.0..1.0) < 0.5 {
                            flip_horizontal(&mut window);
                        }
                        if srng.random_range(0.0..1.0) < 0.5 {
                            flip_vertical(&mut window);
                        }
                    }
                    let keep = 1.0 - net.dropout;
                    let features = net.convs.last().map(|c| c.out_channels).unwrap_or(1);
                    let mask: Vec<f32> = (0..features)
                        .map(|_| {
                            if net.dropout <= 0.0 || srng.random_range(0.0..1.0) < keep {
                                1.0 / keep.max(f32::MIN_POSITIVE)
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    let (input, shape) = stack_to_input(&window);
                    let trace = net.forward_trace(&input, shape, Some(&mask)).unwrap();
                    let label = f32::from(u8::from(sample.label));
                    net.backward(&trace, label)
                })
                .collect();

            let mut grads = Gradients::zeros_like(&net);
            for g in &results {
                grads.add(g);
            }
            grads.scale(1.0 / batch.len() as f32);
            adam.step(&mut net, &grads);
        }

        let (train_accuracy, train_loss) = evaluate(&net, &train_set, cfg.sequence_len);
        let (val_accuracy, _) = evaluate(&net, &val_set, cfg.sequence_len);
        metrics.epochs.push(EpochMetrics {
            epoch,
            train_loss,
            train_accuracy,
            val_accuracy,
        });
        if let Some(target) = cfg.stop_at_train_accuracy {
            if train_accuracy >= target {
                break;
            }
        }
    }
    Ok((net, metrics))
}

/// Pick the decision threshold with the highest recall among those whose
/// precision on `samples` is at least `target_precision`. Returns 1.0 when
/// no threshold reaches the target (rejecting everything).
pub fn pick_threshold(
    net: &FilterNet,
    samples: &[LabeledStack],
    sequence_len: usize,
    target_precision: f64,
) -> f64 {
    let mut scored: Vec<(f32, bool)> = samples
        .par_iter()
        .map(|s| {
            (
                waggle_probability_centered(net, &s.stack, sequence_len).unwrap_or(0.0),
                s.label,
            )
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total_pos = scored.iter().filter(|(_, l)| *l).count();
    let mut best: Option<(f64, usize)> = None; // (threshold, recall count)
    let mut tp = 0usize;
    let mut fp = 0usize;
    for i in 0..scored.len() {
        if scored[i].1 {
            tp += 1;
        } else {
            fp += 1;
        }
        // Threshold at this probability accepts items 0..=i.
        if i + 1 < scored.len() && scored[i + 1].0 == scored[i].0 {
            continue;
        }
        let precision = tp as f64 / (tp + fp) as f64;
        if precision >= target_precision && best.is_none_or(|(_, r)| tp > r) {
            best = Some((scored[i].0 as f64, tp));
        }
    }
    let _ = total_pos;
    best.map(|(t, _)| t).unwrap_or(1.0)
}
