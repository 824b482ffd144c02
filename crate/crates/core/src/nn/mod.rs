//! From-scratch CNN-LSTM regressor mapping a 3×N velocity window to a
//! 3-axis acceleration vector.
//!
//! Pipeline: 1D conv (kernel 3, valid) → LeakyReLU → max pool (3,
//! non-overlapping) → two stacked LSTM layers (32 units each) → the last
//! time step's hidden state → FC → LeakyReLU → FC to 3 outputs, no final
//! activation. Forward evaluation and exact reverse-mode gradients for
//! every parameter are implemented directly; there is no autodiff graph.

mod checkpoint;
mod layers;

pub use layers::{
    conv1d_backward, conv1d_forward, leaky_relu, leaky_relu_backward, lstm_backward, lstm_forward,
    maxpool1d_backward, maxpool1d_forward, LstmForward, LstmLayerCache, LstmStepCache,
};

use std::path::PathBuf;

use thiserror::Error;

use crate::rng::SeededRng;
use crate::types::{AccelerationVector, VelocityWindow};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("window length {got} does not match the checkpoint's window length {expected}")]
    WindowLenMismatch { got: usize, expected: usize },
    #[error("invalid architecture: {0}")]
    BadArchitecture(String),
    #[error("checkpoint parse error at line {line}: {msg}")]
    CheckpointParse { line: usize, msg: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A dense row-major tensor of f64 values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self, NnError> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(NnError::ShapeMismatch(format!(
                "shape {shape:?} requires {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            values: vec![0.0; len],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn dims2(&self) -> Result<[usize; 2], NnError> {
        match self.shape[..] {
            [a, b] => Ok([a, b]),
            _ => Err(NnError::ShapeMismatch(format!(
                "expected a 2-D tensor, got shape {:?}",
                self.shape
            ))),
        }
    }

    /// Element of a 2-D tensor.
    pub fn at2(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.shape[1] + col]
    }

    /// Row slice of a 2-D tensor.
    pub fn row(&self, row: usize) -> &[f64] {
        let cols = self.shape[1];
        &self.values[row * cols..(row + 1) * cols]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn debug_assert_finite(&self, context: &str) {
        debug_assert!(
            self.values.iter().all(|v| v.is_finite()),
            "non-finite value after {context}"
        );
    }
}

/// Architecture hyperparameters. Kernel, pool size, activation slope, and
/// the LSTM stack (2 layers × 32 units) are fixed by the design; the conv
/// filter count and FC hidden width are free knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArchitectureConfig {
    pub in_channels: usize,
    pub conv_filters: usize,
    pub kernel: usize,
    pub leaky_slope: f64,
    pub pool: usize,
    pub lstm_hidden: usize,
    pub lstm_layers: usize,
    pub fc_hidden: usize,
    pub output: usize,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        Self {
            in_channels: 3,
            conv_filters: 32,
            kernel: 3,
            leaky_slope: 0.01,
            pool: 3,
            lstm_hidden: 32,
            lstm_layers: 2,
            fc_hidden: 16,
            output: 3,
        }
    }
}

/// Sequence lengths through the front end for a given window length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeqDims {
    pub conv_len: usize,
    pub pool_len: usize,
}

impl ArchitectureConfig {
    /// Checks internal consistency and the shape law for a window of N
    /// samples: conv output N-k+1 must admit at least one pool window.
    pub fn validate(&self, window_len: usize) -> Result<SeqDims, NnError> {
        if self.in_channels != 3 || self.output != 3 {
            return Err(NnError::BadArchitecture(
                "input channels and outputs are the 3 body axes".into(),
            ));
        }
        for (name, v) in [
            ("conv_filters", self.conv_filters),
            ("kernel", self.kernel),
            ("pool", self.pool),
            ("lstm_hidden", self.lstm_hidden),
            ("lstm_layers", self.lstm_layers),
            ("fc_hidden", self.fc_hidden),
        ] {
            if v == 0 {
                return Err(NnError::BadArchitecture(format!("{name} must be positive")));
            }
        }
        if !self.leaky_slope.is_finite() {
            return Err(NnError::BadArchitecture("leaky_slope must be finite".into()));
        }
        if window_len < self.kernel || window_len - self.kernel + 1 < self.pool {
            return Err(NnError::BadArchitecture(format!(
                "window length {window_len} too short: conv output must cover one pool window \
                 (need N - {} + 1 >= {})",
                self.kernel, self.pool
            )));
        }
        let conv_len = window_len - self.kernel + 1;
        Ok(SeqDims {
            conv_len,
            pool_len: conv_len / self.pool,
        })
    }

    fn lstm_input_dim(&self, layer: usize) -> usize {
        if layer == 0 {
            self.conv_filters
        } else {
            self.lstm_hidden
        }
    }
}

/// Weights and biases of one LSTM layer. Gate weight matrices are
/// row-major `[hidden, hidden + input_dim]`; the previous hidden state
/// occupies the first `hidden` columns of the concatenated input.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    pub input_dim: usize,
    pub hidden: usize,
    pub w_f: Vec<f64>,
    pub w_i: Vec<f64>,
    pub w_c: Vec<f64>,
    pub w_o: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_c: Vec<f64>,
    pub b_o: Vec<f64>,
}

impl LstmLayerParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        let w = vec![0.0; hidden * (hidden + input_dim)];
        let b = vec![0.0; hidden];
        Self {
            input_dim,
            hidden,
            w_f: w.clone(),
            w_i: w.clone(),
            w_c: w.clone(),
            w_o: w,
            b_f: b.clone(),
            b_i: b.clone(),
            b_c: b.clone(),
            b_o: b,
        }
    }
}

/// Every learnable array of the model. The same structure serves as the
/// gradient and optimizer-state container; arrays are always visited in
/// the fixed order produced by [`Self::arrays`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Conv weights, flat `[filters, in_channels, kernel]`.
    pub conv_w: Vec<f64>,
    pub conv_b: Vec<f64>,
    pub lstm: Vec<LstmLayerParams>,
    /// FC1 weights, row-major `[fc_hidden, lstm_hidden]`.
    pub fc1_w: Vec<f64>,
    pub fc1_b: Vec<f64>,
    /// FC2 weights, row-major `[output, fc_hidden]`.
    pub fc2_w: Vec<f64>,
    pub fc2_b: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(arch: &ArchitectureConfig) -> Self {
        let lstm = (0..arch.lstm_layers)
            .map(|l| LstmLayerParams::zeros(arch.lstm_input_dim(l), arch.lstm_hidden))
            .collect();
        Self {
            conv_w: vec![0.0; arch.conv_filters * arch.in_channels * arch.kernel],
            conv_b: vec![0.0; arch.conv_filters],
            lstm,
            fc1_w: vec![0.0; arch.fc_hidden * arch.lstm_hidden],
            fc1_b: vec![0.0; arch.fc_hidden],
            fc2_w: vec![0.0; arch.output * arch.fc_hidden],
            fc2_b: vec![0.0; arch.output],
        }
    }

    /// All parameter arrays with their canonical names, in canonical order.
    pub fn named_arrays(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = vec![
            ("conv.w".into(), &self.conv_w),
            ("conv.b".into(), &self.conv_b),
        ];
        for (l, layer) in self.lstm.iter().enumerate() {
            out.push((format!("lstm{l}.w_f"), &layer.w_f));
            out.push((format!("lstm{l}.w_i"), &layer.w_i));
            out.push((format!("lstm{l}.w_c"), &layer.w_c));
            out.push((format!("lstm{l}.w_o"), &layer.w_o));
            out.push((format!("lstm{l}.b_f"), &layer.b_f));
            out.push((format!("lstm{l}.b_i"), &layer.b_i));
            out.push((format!("lstm{l}.b_c"), &layer.b_c));
            out.push((format!("lstm{l}.b_o"), &layer.b_o));
        }
        out.push(("fc1.w".into(), &self.fc1_w));
        out.push(("fc1.b".into(), &self.fc1_b));
        out.push(("fc2.w".into(), &self.fc2_w));
        out.push(("fc2.b".into(), &self.fc2_b));
        out
    }

    /// Mutable views of all arrays, in the same order as [`Self::named_arrays`].
    pub fn arrays_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = vec![&mut self.conv_w, &mut self.conv_b];
        for layer in &mut self.lstm {
            out.push(&mut layer.w_f);
            out.push(&mut layer.w_i);
            out.push(&mut layer.w_c);
            out.push(&mut layer.w_o);
            out.push(&mut layer.b_f);
            out.push(&mut layer.b_i);
            out.push(&mut layer.b_c);
            out.push(&mut layer.b_o);
        }
        out.push(&mut self.fc1_w);
        out.push(&mut self.fc1_b);
        out.push(&mut self.fc2_w);
        out.push(&mut self.fc2_b);
        out
    }

    pub fn arrays(&self) -> Vec<&[f64]> {
        self.named_arrays().into_iter().map(|(_, a)| a).collect()
    }

    /// `self += factor * other`, array by array.
    pub fn add_scaled(&mut self, other: &ModelParams, factor: f64) {
        for (dst, src) in self.arrays_mut().into_iter().zip(other.arrays()) {
            debug_assert_eq!(dst.len(), src.len());
            for (d, s) in dst.iter_mut().zip(src) {
                *d += factor * s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for arr in self.arrays_mut() {
            for v in arr.iter_mut() {
                *v *= factor;
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.arrays().iter().map(|a| a.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.arrays()
            .iter()
            .all(|a| a.iter().all(|v| v.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.arrays()
            .iter()
            .flat_map(|a| a.iter())
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// Optional per-axis affine standardization of the input window, fitted on
/// the training split and stored with the checkpoint so inference applies
/// the same transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputNorm {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

/// All learnable parameters plus the architecture and window length they
/// were built for.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub version: u32,
    pub arch: ArchitectureConfig,
    pub window_len: usize,
    pub input_norm: Option<InputNorm>,
    pub params: ModelParams,
}

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Fresh parameters: weights uniform in (-1/√fan_in, +1/√fan_in), biases
/// zero except the LSTM forget-gate biases, which start at 1. Deterministic
/// given the seed; draw order is conv weights, then each layer's gate
/// weights (f, i, c, o), then FC1 and FC2 weights.
pub fn init_parameters(
    arch: &ArchitectureConfig,
    window_len: usize,
    seed: u64,
) -> Result<ModelCheckpoint, NnError> {
    arch.validate(window_len)?;
    let mut params = ModelParams::zeros(arch);
    let mut rng = SeededRng::new(seed);
    let fill = |arr: &mut [f64], fan_in: usize, rng: &mut SeededRng| {
        let bound = 1.0 / (fan_in as f64).sqrt();
        for v in arr.iter_mut() {
            *v = rng.uniform_in(-bound, bound);
        }
    };
    fill(
        &mut params.conv_w,
        arch.in_channels * arch.kernel,
        &mut rng,
    );
    for layer in &mut params.lstm {
        let fan_in = layer.hidden + layer.input_dim;
        fill(&mut layer.w_f, fan_in, &mut rng);
        fill(&mut layer.w_i, fan_in, &mut rng);
        fill(&mut layer.w_c, fan_in, &mut rng);
        fill(&mut layer.w_o, fan_in, &mut rng);
        layer.b_f.fill(1.0);
    }
    fill(&mut params.fc1_w, arch.lstm_hidden, &mut rng);
    fill(&mut params.fc2_w, arch.fc_hidden, &mut rng);
    Ok(ModelCheckpoint {
        version: CHECKPOINT_FORMAT_VERSION,
        arch: *arch,
        window_len,
        input_norm: None,
        params,
    })
}

/// Intermediates of one forward pass, consumed by [`model_backward`].
pub struct ForwardCache {
    /// The (possibly standardized) input actually fed to the conv layer.
    x: Tensor,
    conv_z: Tensor,
    pool_argmax: Vec<usize>,
    conv_dims: SeqDims,
    lstm: Vec<LstmLayerCache>,
    h_last: Vec<f64>,
    fc1_z: Vec<f64>,
    fc1_a: Vec<f64>,
    y_hat: [f64; 3],
}

impl ForwardCache {
    pub fn prediction(&self) -> AccelerationVector {
        AccelerationVector::new(self.y_hat)
    }
}

/// Forward pass returning the prediction and the cached intermediates
/// needed for the backward pass.
pub fn forward_cached(
    window: &VelocityWindow,
    checkpoint: &ModelCheckpoint,
) -> Result<(AccelerationVector, ForwardCache), NnError> {
    let arch = &checkpoint.arch;
    if window.len() != checkpoint.window_len {
        return Err(NnError::WindowLenMismatch {
            got: window.len(),
            expected: checkpoint.window_len,
        });
    }
    let dims = arch.validate(checkpoint.window_len)?;
    let n = window.len();
    let mut x = Tensor::new(vec![arch.in_channels, n], window.stacked_series())?;
    if let Some(norm) = &checkpoint.input_norm {
        for axis in 0..3 {
            for t in 0..n {
                let v = &mut x.values_mut()[axis * n + t];
                *v = (*v - norm.mean[axis]) / norm.std[axis];
            }
        }
    }
    x.debug_assert_finite("input standardization");

    let p = &checkpoint.params;
    let conv_z = conv1d_forward(&x, &p.conv_w, &p.conv_b, arch.conv_filters, arch.kernel)?;
    conv_z.debug_assert_finite("conv");
    let conv_a = leaky_relu(&conv_z, arch.leaky_slope);
    let (pool_out, pool_argmax) = maxpool1d_forward(&conv_a, arch.pool)?;
    pool_out.debug_assert_finite("pool");

    // step-major sequence for the recurrence: seq[t][f] = pool_out[f][t]
    let steps = dims.pool_len;
    let mut seq_values = vec![0.0; steps * arch.conv_filters];
    for f in 0..arch.conv_filters {
        for t in 0..steps {
            seq_values[t * arch.conv_filters + f] = pool_out.at2(f, t);
        }
    }
    let mut seq = Tensor::new(vec![steps, arch.conv_filters], seq_values)?;

    let mut lstm_caches = Vec::with_capacity(arch.lstm_layers);
    let mut h_last = Vec::new();
    for layer in &p.lstm {
        let out = lstm_forward(&seq, layer)?;
        out.hidden_seq.debug_assert_finite("lstm layer");
        h_last = out.final_h;
        lstm_caches.push(out.cache);
        seq = out.hidden_seq;
    }

    let fc1_z: Vec<f64> = (0..arch.fc_hidden)
        .map(|j| {
            let row = &p.fc1_w[j * arch.lstm_hidden..(j + 1) * arch.lstm_hidden];
            p.fc1_b[j] + row.iter().zip(&h_last).map(|(w, h)| w * h).sum::<f64>()
        })
        .collect();
    let fc1_a: Vec<f64> = fc1_z
        .iter()
        .map(|&z| if z >= 0.0 { z } else { arch.leaky_slope * z })
        .collect();

    let mut y_hat = [0.0; 3];
    for (k, y) in y_hat.iter_mut().enumerate() {
        let row = &p.fc2_w[k * arch.fc_hidden..(k + 1) * arch.fc_hidden];
        *y = p.fc2_b[k] + row.iter().zip(&fc1_a).map(|(w, a)| w * a).sum::<f64>();
    }
    debug_assert!(y_hat.iter().all(|v| v.is_finite()), "non-finite prediction");

    let cache = ForwardCache {
        x,
        conv_z,
        pool_argmax,
        conv_dims: dims,
        lstm: lstm_caches,
        h_last,
        fc1_z,
        fc1_a,
        y_hat,
    };
    Ok((AccelerationVector::new(y_hat), cache))
}

/// Forward pass without keeping intermediates.
pub fn model_forward(
    window: &VelocityWindow,
    checkpoint: &ModelCheckpoint,
) -> Result<AccelerationVector, NnError> {
    forward_cached(window, checkpoint).map(|(pred, _)| pred)
}

/// Gradient of the single-example squared error ‖ŷ − y‖² with respect to
/// every parameter, from the intermediates of [`forward_cached`]. The max
/// pool routes gradient only to the stored argmax positions; LeakyReLU
/// multiplies by 1 or the slope depending on the cached pre-activation;
/// the LSTM layers backpropagate through all time steps.
pub fn model_backward(
    checkpoint: &ModelCheckpoint,
    cache: &ForwardCache,
    target: &AccelerationVector,
) -> Result<ModelParams, NnError> {
    let arch = &checkpoint.arch;
    let p = &checkpoint.params;
    let mut grads = ModelParams::zeros(arch);

    let d_y: [f64; 3] = [0, 1, 2].map(|k| 2.0 * (cache.y_hat[k] - target.a[k]));

    // FC2
    let mut d_fc1_a = vec![0.0; arch.fc_hidden];
    for k in 0..3 {
        grads.fc2_b[k] = d_y[k];
        for j in 0..arch.fc_hidden {
            grads.fc2_w[k * arch.fc_hidden + j] = d_y[k] * cache.fc1_a[j];
            d_fc1_a[j] += p.fc2_w[k * arch.fc_hidden + j] * d_y[k];
        }
    }

    // FC1 through its LeakyReLU
    let mut d_h_last = vec![0.0; arch.lstm_hidden];
    for j in 0..arch.fc_hidden {
        let d_z = if cache.fc1_z[j] >= 0.0 {
            d_fc1_a[j]
        } else {
            arch.leaky_slope * d_fc1_a[j]
        };
        grads.fc1_b[j] = d_z;
        for m in 0..arch.lstm_hidden {
            grads.fc1_w[j * arch.lstm_hidden + m] = d_z * cache.h_last[m];
            d_h_last[m] += p.fc1_w[j * arch.lstm_hidden + m] * d_z;
        }
    }

    // LSTM stack, top down. Only the last step of the top layer receives
    // gradient from the head; lower layers receive it at every step.
    let steps = cache.conv_dims.pool_len;
    let mut grad_hidden = Tensor::zeros(vec![steps, arch.lstm_hidden]);
    grad_hidden.values_mut()[(steps - 1) * arch.lstm_hidden..].copy_from_slice(&d_h_last);
    let mut grad_seq = grad_hidden;
    for (layer_idx, layer) in p.lstm.iter().enumerate().rev() {
        let (layer_grads, grad_inputs) = lstm_backward(layer, &cache.lstm[layer_idx], &grad_seq)?;
        grads.lstm[layer_idx] = layer_grads;
        grad_seq = grad_inputs;
    }

    // undo the step-major transpose: d_pool[f][t] = grad_seq[t][f]
    let mut d_pool = vec![0.0; arch.conv_filters * steps];
    for t in 0..steps {
        for f in 0..arch.conv_filters {
            d_pool[f * steps + t] = grad_seq.at2(t, f);
        }
    }
    let d_pool = Tensor::new(vec![arch.conv_filters, steps], d_pool)?;
    let d_conv_a = maxpool1d_backward(
        arch.conv_filters,
        cache.conv_dims.conv_len,
        &cache.pool_argmax,
        &d_pool,
    )?;
    let d_conv_z = leaky_relu_backward(&cache.conv_z, &d_conv_a, arch.leaky_slope);
    let (d_conv_w, d_conv_b) =
        conv1d_backward(&cache.x, arch.conv_filters, arch.kernel, &d_conv_z)?;
    grads.conv_w = d_conv_w;
    grads.conv_b = d_conv_b;

    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::BodyVelocitySample;

    fn window(n: usize, seed: u64) -> VelocityWindow {
        let mut rng = SeededRng::new(seed);
        let samples = (0..n)
            .map(|k| {
                BodyVelocitySample::new(
                    k as f64,
                    [
                        rng.uniform_in(-2.0, 2.0),
                        rng.uniform_in(-2.0, 2.0),
                        rng.uniform_in(-2.0, 2.0),
                    ],
                )
                .unwrap()
            })
            .collect();
        VelocityWindow::new(samples).unwrap()
    }

    #[test]
    fn shape_law_for_default_window() {
        let arch = ArchitectureConfig::default();
        let dims = arch.validate(12).unwrap();
        assert_eq!(dims.conv_len, 10);
        assert_eq!(dims.pool_len, 3);
        assert!(arch.validate(4).is_err()); // conv out 2 < pool 3
    }

    #[test]
    fn zero_checkpoint_outputs_final_bias() {
        let arch = ArchitectureConfig::default();
        let mut ckpt = ModelCheckpoint {
            version: CHECKPOINT_FORMAT_VERSION,
            arch,
            window_len: 12,
            input_norm: None,
            params: ModelParams::zeros(&arch),
        };
        ckpt.params.fc2_b = vec![0.1, -0.2, 0.3];
        let pred = model_forward(&window(12, 1), &ckpt).unwrap();
        assert_eq!(pred.a, [0.1, -0.2, 0.3]);
    }

    #[test]
    fn forward_is_deterministic_and_stateless() {
        let arch = ArchitectureConfig::default();
        let ckpt = init_parameters(&arch, 12, 42).unwrap();
        let w1 = window(12, 1);
        let w2 = window(12, 2);
        let w3 = window(12, 3);
        let before = model_forward(&w3, &ckpt).unwrap();
        // evaluating other windows in between must not change anything
        let a = model_forward(&w1, &ckpt).unwrap();
        let b = model_forward(&w2, &ckpt).unwrap();
        let after = model_forward(&w3, &ckpt).unwrap();
        let _ = (a, b);
        for k in 0..3 {
            assert_eq!(before.a[k].to_bits(), after.a[k].to_bits());
        }
        let again = model_forward(&w3, &ckpt).unwrap();
        for k in 0..3 {
            assert_eq!(before.a[k].to_bits(), again.a[k].to_bits());
        }
    }

    #[test]
    fn window_length_mismatch_rejected() {
        let arch = ArchitectureConfig::default();
        let ckpt = init_parameters(&arch, 12, 0).unwrap();
        assert!(matches!(
            model_forward(&window(13, 0), &ckpt),
            Err(NnError::WindowLenMismatch {
                got: 13,
                expected: 12
            })
        ));
    }

    #[test]
    fn init_is_deterministic() {
        let arch = ArchitectureConfig::default();
        let a = init_parameters(&arch, 12, 7).unwrap();
        let b = init_parameters(&arch, 12, 7).unwrap();
        assert_eq!(a, b);
        let c = init_parameters(&arch, 12, 8).unwrap();
        assert_ne!(a.params.conv_w, c.params.conv_w);
    }

    #[test]
    fn init_forget_bias_is_one_and_conv_bounded() {
        let arch = ArchitectureConfig::default();
        let ckpt = init_parameters(&arch, 12, 3).unwrap();
        for layer in &ckpt.params.lstm {
            assert!(layer.b_f.iter().all(|&b| b == 1.0));
            assert!(layer.b_i.iter().all(|&b| b == 0.0));
        }
        // conv fan-in is 3 channels x 3 taps = 9
        let bound = 1.0 / 9f64.sqrt();
        assert!(ckpt.params.conv_w.iter().all(|w| w.abs() <= bound));
        assert!(ckpt.params.conv_w.iter().any(|w| w.abs() > 0.0));
    }

    #[test]
    fn gradients_vanish_at_the_minimum() {
        let arch = ArchitectureConfig::default();
        let mut ckpt = ModelCheckpoint {
            version: CHECKPOINT_FORMAT_VERSION,
            arch,
            window_len: 12,
            input_norm: None,
            params: ModelParams::zeros(&arch),
        };
        ckpt.params.fc2_b = vec![0.25, -0.5, 0.75];
        let w = window(12, 9);
        let (pred, cache) = forward_cached(&w, &ckpt).unwrap();
        let grads = model_backward(&ckpt, &cache, &pred).unwrap();
        for arr in grads.arrays() {
            assert!(arr.iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn fc2_bias_gradient_is_twice_the_residual() {
        let arch = ArchitectureConfig::default();
        let ckpt = init_parameters(&arch, 12, 5).unwrap();
        let w = window(12, 4);
        let (pred, cache) = forward_cached(&w, &ckpt).unwrap();
        let target = AccelerationVector::new([0.1, 0.2, -0.3]);
        let grads = model_backward(&ckpt, &cache, &target).unwrap();
        for k in 0..3 {
            let expected = 2.0 * (pred.a[k] - target.a[k]);
            assert!((grads.fc2_b[k] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn param_count_near_expected() {
        let arch = ArchitectureConfig::default();
        let ckpt = init_parameters(&arch, 12, 0).unwrap();
        // conv 288+32, lstm0 4*(32*64)+4*32, lstm1 same, fc1 512+16, fc2 48+3
        assert_eq!(ckpt.params.param_count(), 17_539);
    }

    #[test]
    fn input_norm_standardizes_before_conv() {
        let arch = ArchitectureConfig::default();
        let mut ckpt = init_parameters(&arch, 12, 0).unwrap();
        let w = window(12, 8);
        let raw = model_forward(&w, &ckpt).unwrap();
        ckpt.input_norm = Some(InputNorm {
            mean: [0.0; 3],
            std: [1.0; 3],
        });
        let normed = model_forward(&w, &ckpt).unwrap();
        // identity transform: predictions agree exactly
        for k in 0..3 {
            assert_eq!(raw.a[k].to_bits(), normed.a[k].to_bits());
        }
        ckpt.input_norm = Some(InputNorm {
            mean: [0.5, 0.0, 0.0],
            std: [2.0, 1.0, 1.0],
        });
        let shifted = model_forward(&w, &ckpt).unwrap();
        assert_ne!(raw.a, shifted.a);
    }
}
