//! A small 3D convolutional filter network, implemented from scratch.
//!
//! Default architecture: two stacked 3D convolutions with SELU
//! nonlinearities, global average pooling over all three dimensions,
//! dropout, and one fully connected layer to a sigmoid probability.
//! Deeper variants (three convolutions, two fully connected layers) are
//! expressible through the same layer lists.
//!
//! Everything is 32-bit floating point. Inference is deterministic;
//! training randomness (initialization, dropout, augmentation, window
//! sampling) is fully seeded.

mod io;
mod train;

pub use io::{load_model, save_model};
pub use train::{
    pad_or_sample, pick_threshold, train, waggle_probability, waggle_probability_centered,
    ArchitectureKind, LabeledStack, TrainConfig, TrainMetrics,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::records::SnippetStack;

pub const SELU_LAMBDA: f32 = 1.050_701;
pub const SELU_ALPHA: f32 = 1.673_263_2;

#[derive(Debug, Error)]
pub enum FilterNetError {
    #[error("empty snippet stack")]
    EmptyStack,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("bad model file {path}: {reason}")]
    BadModel { path: String, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub fn selu(x: f32) -> f32 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * (x.exp() - 1.0)
    }
}

fn selu_derivative(x: f32) -> f32 {
    if x > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp()
    }
}

fn sigmoid(z: f32) -> f32 {
    1.0 / (1.0 + (-z).exp())
}

/// Shape of a channel volume: `(t, h, w)`.
pub type Volume = (usize, usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Conv3dLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: Volume,
    pub stride: Volume,
    /// `[out][in][kt][kh][kw]`, row-major.
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl Conv3dLayer {
    pub fn output_shape(&self, input: Volume) -> Result<Volume, FilterNetError> {
        let (it, ih, iw) = input;
        let (kt, kh, kw) = self.kernel;
        if it < kt || ih < kh || iw < kw {
            return Err(FilterNetError::ShapeMismatch(format!(
                "input {input:?} smaller than kernel {:?}",
                self.kernel
            )));
        }
        Ok((
            (it - kt) / self.stride.0 + 1,
            (ih - kh) / self.stride.1 + 1,
            (iw - kw) / self.stride.2 + 1,
        ))
    }

    fn weight_index(&self, oc: usize, ic: usize, kt: usize, kh: usize, kw: usize) -> usize {
        let (t, h, w) = self.kernel;
        (((oc * self.in_channels + ic) * t + kt) * h + kh) * w + kw
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcLayer {
    pub inputs: usize,
    pub outputs: usize,
    /// `[out][in]`, row-major.
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

/// The filter network: conv stack, global average pooling, dropout,
/// fully connected stack, sigmoid.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterNet {
    pub convs: Vec<Conv3dLayer>,
    pub fcs: Vec<FcLayer>,
    pub dropout: f32,
}

/// Architecture description used for construction.
#[derive(Debug, Clone)]
pub struct Architecture {
    /// `(out_channels, kernel, stride)` per conv layer; input is 1 channel.
    pub convs: Vec<(usize, Volume, Volume)>,
    /// Hidden fully connected sizes; the final 1-output layer is implied.
    pub fc_hidden: Vec<usize>,
    pub dropout: f32,
}

impl Architecture {
    /// Two stacked convolutions and a single fully connected output layer.
    pub fn stacked_two_conv() -> Self {
        Self {
            convs: vec![
                (8, (3, 5, 5), (2, 2, 2)),
                (16, (3, 3, 3), (2, 2, 2)),
            ],
            fc_hidden: vec![],
            dropout: 0.5,
        }
    }

    /// The deeper variant: three convolutions, two fully connected layers.
    pub fn three_conv_two_fc() -> Self {
        Self {
            convs: vec![
                (8, (3, 5, 5), (2, 2, 2)),
                (16, (3, 3, 3), (2, 2, 2)),
                (16, (3, 3, 3), (1, 1, 1)),
            ],
            fc_hidden: vec![16],
            dropout: 0.5,
        }
    }
}

impl FilterNet {
    /// LeCun-normal initialization (variance 1/fan_in), seeded.
    pub fn init(arch: &Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut convs = Vec::new();
        let mut in_channels = 1;
        for &(out_channels, kernel, stride) in &arch.convs {
            let fan_in = in_channels * kernel.0 * kernel.1 * kernel.2;
            let dist = Normal::new(0.0_f32, (1.0 / fan_in as f32).sqrt()).unwrap();
            let n = out_channels * fan_in;
            convs.push(Conv3dLayer {
                in_channels,
                out_channels,
                kernel,
                stride,
                weights: (0..n).map(|_| dist.sample(&mut rng)).collect(),
                bias: vec![0.0; out_channels],
            });
            in_channels = out_channels;
        }
        let mut fcs = Vec::new();
        let mut inputs = in_channels;
        for &hidden in arch.fc_hidden.iter().chain(std::iter::once(&1)) {
            let dist = Normal::new(0.0_f32, (1.0 / inputs as f32).sqrt()).unwrap();
            fcs.push(FcLayer {
                inputs,
                outputs: hidden,
                weights: (0..inputs * hidden).map(|_| dist.sample(&mut rng)).collect(),
                bias: vec![0.0; hidden],
            });
            inputs = hidden;
        }
        Self {
            convs,
            fcs,
            dropout: arch.dropout,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.convs
            .iter()
            .map(|c| c.weights.len() + c.bias.len())
            .sum::<usize>()
            + self.fcs.iter().map(|f| f.weights.len() + f.bias.len()).sum::<usize>()
    }

    /// Inference: probability that the input sequence contains a waggle.
    /// Dropout is disabled; the result is in (0, 1).
    pub fn forward(&self, input: &[f32], shape: Volume) -> Result<f32, FilterNetError> {
        let trace = self.forward_trace(input, shape, None)?;
        Ok(trace.probability)
    }

    /// Forward pass keeping every intermediate needed by
    /// [`FilterNet::backward`]. `dropout_mask`, when given, is applied to
    /// the pooled features (training mode).
    pub fn forward_trace(
        &self,
        input: &[f32],
        shape: Volume,
        dropout_mask: Option<&[f32]>,
    ) -> Result<ForwardTrace, FilterNetError> {
        if input.len() != shape.0 * shape.1 * shape.2 {
            return Err(FilterNetError::ShapeMismatch(format!(
                "input has {} values for shape {shape:?}",
                input.len()
            )));
        }
        let mut activations: Vec<Vec<f32>> = vec![input.to_vec()];
        let mut pre_activations: Vec<Vec<f32>> = Vec::new();
        let mut shapes: Vec<Volume> = vec![shape];

        let mut current = shape;
        for conv in &self.convs {
            let out_shape = conv.output_shape(current)?;
            let pre = conv_forward(conv, activations.last().unwrap(), current, out_shape);
            let act: Vec<f32> = pre.iter().map(|&v| selu(v)).collect();
            pre_activations.push(pre);
            activations.push(act);
            shapes.push(out_shape);
            current = out_shape;
        }

        // Global average pooling over (t, h, w), per channel.
        let volume = current.0 * current.1 * current.2;
        let channels = self.convs.last().map(|c| c.out_channels).unwrap_or(1);
        let mut pooled = vec![0.0_f32; channels];
        let last = activations.last().unwrap();
        for (c, out) in pooled.iter_mut().enumerate() {
            let base = c * volume;
            *out = last[base..base + volume].iter().sum::<f32>() / volume as f32;
        }
        if let Some(mask) = dropout_mask {
            if mask.len() != pooled.len() {
                return Err(FilterNetError::ShapeMismatch(format!(
                    "dropout mask of {} for {} features",
                    mask.len(),
                    pooled.len()
                )));
            }
            for (p, &m) in pooled.iter_mut().zip(mask) {
                *p *= m;
            }
        }

        // Fully connected stack; SELU between layers, sigmoid at the end.
        let mut fc_inputs: Vec<Vec<f32>> = vec![pooled];
        let mut fc_pre: Vec<Vec<f32>> = Vec::new();
        for (i, fc) in self.fcs.iter().enumerate() {
            let x = fc_inputs.last().unwrap();
            if x.len() != fc.inputs {
                return Err(FilterNetError::ShapeMismatch(format!(
                    "fc layer {i} expects {} inputs, got {}",
                    fc.inputs,
                    x.len()
                )));
            }
            let mut z = fc.bias.clone();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &fc.weights[o * fc.inputs..(o + 1) * fc.inputs];
                *zo += row.iter().zip(x).map(|(w, v)| w * v).sum::<f32>();
            }
            fc_pre.push(z.clone());
            if i + 1 < self.fcs.len() {
                fc_inputs.push(z.iter().map(|&v| selu(v)).collect());
            } else {
                fc_inputs.push(z);
            }
        }
        let logit = fc_inputs.last().unwrap()[0];
        Ok(ForwardTrace {
            shapes,
            activations,
            pre_activations,
            dropout_mask: dropout_mask.map(<[f32]>::to_vec),
            fc_inputs,
            fc_pre,
            probability: sigmoid(logit),
        })
    }

    /// Gradient of the binary cross-entropy loss with respect to every
    /// parameter, for one sample.
    pub fn backward(&self, trace: &ForwardTrace, label: f32) -> Gradients {
        let mut grads = Gradients::zeros_like(self);

        // d loss / d logit for sigmoid + BCE.
        let mut delta: Vec<f32> = vec![trace.probability - label];

        // Fully connected layers, last to first.
        for (i, fc) in self.fcs.iter().enumerate().rev() {
            let x = &trace.fc_inputs[i];
            let (gw, gb) = &mut grads.fc[i];
            let mut dx = vec![0.0_f32; fc.inputs];
            for o in 0..fc.outputs {
                gb[o] += delta[o];
                let row = &fc.weights[o * fc.inputs..(o + 1) * fc.inputs];
                let grow = &mut gw[o * fc.inputs..(o + 1) * fc.inputs];
                for j in 0..fc.inputs {
                    grow[j] += delta[o] * x[j];
                    dx[j] += row[j] * delta[o];
                }
            }
            if i > 0 {
                // The input of this layer was SELU(fc_pre[i-1]).
                let pre = &trace.fc_pre[i - 1];
                delta = dx
                    .iter()
                    .zip(pre)
                    .map(|(&d, &z)| d * selu_derivative(z))
                    .collect();
            } else {
                delta = dx;
            }
        }

        // Through dropout.
        if let Some(mask) = &trace.dropout_mask {
            for (d, &m) in delta.iter_mut().zip(mask) {
                *d *= m;
            }
        }

        // Through global average pooling into the last conv activation.
        let last_shape = *trace.shapes.last().unwrap();
        let volume = last_shape.0 * last_shape.1 * last_shape.2;
        let channels = delta.len();
        let mut d_act = vec![0.0_f32; channels * volume];
        for c in 0..channels {
            let d = delta[c] / volume as f32;
            for v in &mut d_act[c * volume..(c + 1) * volume] {
                *v = d;
            }
        }

        // Conv layers, last to first.
        for (i, conv) in self.convs.iter().enumerate().rev() {
            let out_shape = trace.shapes[i + 1];
            let in_shape = trace.shapes[i];
            // Through SELU.
            let pre = &trace.pre_activations[i];
            let d_pre: Vec<f32> = d_act
                .iter()
                .zip(pre)
                .map(|(&d, &z)| d * selu_derivative(z))
                .collect();
            let input = &trace.activations[i];
            let (gw, gb) = &mut grads.convs[i];
            let d_input = conv_backward(conv, input, in_shape, out_shape, &d_pre, gw, gb);
            d_act = d_input;
        }
        grads
    }
}

/// Intermediates of one forward pass.
pub struct ForwardTrace {
    shapes: Vec<Volume>,
    activations: Vec<Vec<f32>>,
    pre_activations: Vec<Vec<f32>>,
    dropout_mask: Option<Vec<f32>>,
    fc_inputs: Vec<Vec<f32>>,
    fc_pre: Vec<Vec<f32>>,
    pub probability: f32,
}

/// Per-layer parameter gradients, same shapes as the model parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    /// `(d_weights, d_bias)` per conv layer.
    pub convs: Vec<(Vec<f32>, Vec<f32>)>,
    /// `(d_weights, d_bias)` per fc layer.
    pub fc: Vec<(Vec<f32>, Vec<f32>)>,
}

impl Gradients {
    pub fn zeros_like(net: &FilterNet) -> Self {
        Self {
            convs: net
                .convs
                .iter()
                .map(|c| (vec![0.0; c.weights.len()], vec![0.0; c.bias.len()]))
                .collect(),
            fc: net
                .fcs
                .iter()
                .map(|f| (vec![0.0; f.weights.len()], vec![0.0; f.bias.len()]))
                .collect(),
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.convs.iter_mut().zip(&other.convs) {
            for (x, y) in a.0.iter_mut().zip(&b.0) {
                *x += y;
            }
            for (x, y) in a.1.iter_mut().zip(&b.1) {
                *x += y;
            }
        }
        for (a, b) in self.fc.iter_mut().zip(&other.fc) {
            for (x, y) in a.0.iter_mut().zip(&b.0) {
                *x += y;
            }
            for (x, y) in a.1.iter_mut().zip(&b.1) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f32) {
        for (w, b) in self.convs.iter_mut().chain(self.fc.iter_mut()) {
            for v in w.iter_mut().chain(b.iter_mut()) {
                *v *= factor;
            }
        }
    }
}

fn conv_forward(
    conv: &Conv3dLayer,
    input: &[f32],
    in_shape: Volume,
    out_shape: Volume,
) -> Vec<f32> {
    let (it, ih, iw) = in_shape;
    let (ot, oh, ow) = out_shape;
    let (kt, kh, kw) = conv.kernel;
    let (st, sh, sw) = conv.stride;
    let in_vol = it * ih * iw;
    let out_vol = ot * oh * ow;
    let mut out = vec![0.0_f32; conv.out_channels * out_vol];

    for oc in 0..conv.out_channels {
        let out_base = oc * out_vol;
        out[out_base..out_base + out_vol].fill(conv.bias[oc]);
        for ic in 0..conv.in_channels {
            let in_base = ic * in_vol;
            for dt in 0..kt {
                for dh in 0..kh {
                    for dw in 0..kw {
                        let wv = conv.weights[conv.weight_index(oc, ic, dt, dh, dw)];
                        for t in 0..ot {
                            let it_off = in_base + (t * st + dt) * ih * iw;
                            for h in 0..oh {
                                let in_row = it_off + (h * sh + dh) * iw + dw;
                                let out_row = out_base + (t * oh + h) * ow;
                                for w in 0..ow {
                                    out[out_row + w] += wv * input[in_row + w * sw];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Returns the input gradient; accumulates weight/bias gradients in place.
fn conv_backward(
    conv: &Conv3dLayer,
    input: &[f32],
    in_shape: Volume,
    out_shape: Volume,
    d_out: &[f32],
    d_weights: &mut [f32],
    d_bias: &mut [f32],
) -> Vec<f32> {
    let (it, ih, iw) = in_shape;
    let (ot, oh, ow) = out_shape;
    let (kt, kh, kw) = conv.kernel;
    let (st, sh, sw) = conv.stride;
    let in_vol = it * ih * iw;
    let out_vol = ot * oh * ow;
    let mut d_input = vec![0.0_f32; conv.in_channels * in_vol];

    for oc in 0..conv.out_channels {
        let out_base = oc * out_vol;
        d_bias[oc] += d_out[out_base..out_base + out_vol].iter().sum::<f32>();
        for ic in 0..conv.in_channels {
            let in_base = ic * in_vol;
            for dt in 0..kt {
                for dh in 0..kh {
                    for dw in 0..kw {
                        let widx = conv.weight_index(oc, ic, dt, dh, dw);
                        let wv = conv.weights[widx];
                        let mut gw = 0.0_f32;
                        for t in 0..ot {
                            let it_off = in_base + (t * st + dt) * ih * iw;
                            for h in 0..oh {
                                let in_row = it_off + (h * sh + dh) * iw + dw;
                                let out_row = out_base + (t * oh + h) * ow;
                                for w in 0..ow {
                                    let d = d_out[out_row + w];
                                    gw += d * input[in_row + w * sw];
                                    d_input[in_row + w * sw] += wv * d;
                                }
                            }
                        }
                        d_weights[widx] += gw;
                    }
                }
            }
        }
    }
    d_input
}

/// Scale a u8 snippet tensor into `[0, 1]` floats.
pub fn stack_to_input(stack: &SnippetStack) -> (Vec<f32>, Volume) {
    let shape = (
        stack.frame_count(),
        stack.height() as usize,
        stack.width() as usize,
    );
    let mut out = Vec::with_capacity(shape.0 * shape.1 * shape.2);
    for frame in stack.frames() {
        out.extend(frame.iter().map(|&v| f32::from(v) / 255.0));
    }
    (out, shape)
}
