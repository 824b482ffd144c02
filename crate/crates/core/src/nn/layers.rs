//! Layer primitives: 1D convolution, LeakyReLU, max pooling, and the LSTM
//! cell, each with forward evaluation and exact reverse-mode gradients.
//!
//! Shape conventions (all tensors row-major):
//! * conv input `[C, N]` (channels × time), weights flat `[F, C, K]`,
//!   output `[F, N-K+1]` — valid positions only, no padding;
//! * pool input `[F, L]`, output `[F, floor(L/p)]` over non-overlapping
//!   windows of `p` with stride `p`; a trailing remainder is dropped;
//! * LSTM sequence `[T, D]` (time-major), gate weights `[H, H+D]` with the
//!   previous hidden state occupying the first H columns of the
//!   concatenated input `[h_prev, y_t]`.

use super::{LstmLayerParams, NnError, Tensor};

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Valid 1D cross-correlation over all channels:
/// `y[f][t] = b[f] + Σ_c Σ_i w[f][c][i] · x[c][t+i]`.
pub fn conv1d_forward(
    x: &Tensor,
    weights: &[f64],
    biases: &[f64],
    filters: usize,
    kernel: usize,
) -> Result<Tensor, NnError> {
    let [channels, n] = x.dims2()?;
    if n < kernel {
        return Err(NnError::ShapeMismatch(format!(
            "conv input length {n} shorter than kernel {kernel}"
        )));
    }
    if weights.len() != filters * channels * kernel || biases.len() != filters {
        return Err(NnError::ShapeMismatch(format!(
            "conv weights/biases sized {}/{} do not match {filters} filters x {channels} channels x {kernel} taps",
            weights.len(),
            biases.len()
        )));
    }
    let out_len = n - kernel + 1;
    let mut out = vec![0.0; filters * out_len];
    let xv = x.values();
    for f in 0..filters {
        for t in 0..out_len {
            let mut acc = biases[f];
            for c in 0..channels {
                let w_base = (f * channels + c) * kernel;
                let x_base = c * n + t;
                for i in 0..kernel {
                    acc += weights[w_base + i] * xv[x_base + i];
                }
            }
            out[f * out_len + t] = acc;
        }
    }
    Tensor::new(vec![filters, out_len], out)
}

/// Gradients of the convolution parameters given the gradient at the
/// output: `(d_weights, d_biases)`. The gradient with respect to the input
/// is not produced — the convolution is the first layer of the model.
pub fn conv1d_backward(
    x: &Tensor,
    filters: usize,
    kernel: usize,
    grad_out: &Tensor,
) -> Result<(Vec<f64>, Vec<f64>), NnError> {
    let [channels, n] = x.dims2()?;
    let [gf, out_len] = grad_out.dims2()?;
    if gf != filters || out_len != n - kernel + 1 {
        return Err(NnError::ShapeMismatch(format!(
            "conv grad shape [{gf}, {out_len}] does not match [{filters}, {}]",
            n - kernel + 1
        )));
    }
    let mut d_w = vec![0.0; filters * channels * kernel];
    let mut d_b = vec![0.0; filters];
    let xv = x.values();
    let gv = grad_out.values();
    for f in 0..filters {
        for t in 0..out_len {
            let g = gv[f * out_len + t];
            d_b[f] += g;
            for c in 0..channels {
                let w_base = (f * channels + c) * kernel;
                let x_base = c * n + t;
                for i in 0..kernel {
                    d_w[w_base + i] += g * xv[x_base + i];
                }
            }
        }
    }
    Ok((d_w, d_b))
}

/// Elementwise `y = x` for `x ≥ 0`, else `slope · x`.
pub fn leaky_relu(x: &Tensor, slope: f64) -> Tensor {
    x.map(|v| if v >= 0.0 { v } else { slope * v })
}

/// Gradient through LeakyReLU; branches on the cached pre-activation.
pub fn leaky_relu_backward(pre: &Tensor, grad_out: &Tensor, slope: f64) -> Tensor {
    debug_assert_eq!(pre.shape(), grad_out.shape());
    let values = pre
        .values()
        .iter()
        .zip(grad_out.values())
        .map(|(&z, &g)| if z >= 0.0 { g } else { slope * g })
        .collect();
    Tensor::new(pre.shape().to_vec(), values).expect("shape preserved")
}

/// Non-overlapping max pooling with stride = pool size; returns the pooled
/// tensor and the within-row argmax time index of every pooled value (ties
/// resolve to the earliest position). A trailing remainder shorter than the
/// pool is dropped.
pub fn maxpool1d_forward(x: &Tensor, pool: usize) -> Result<(Tensor, Vec<usize>), NnError> {
    let [channels, len] = x.dims2()?;
    if pool == 0 || len < pool {
        return Err(NnError::ShapeMismatch(format!(
            "pool size {pool} invalid for input length {len}"
        )));
    }
    let out_len = len / pool;
    let mut out = vec![0.0; channels * out_len];
    let mut argmax = vec![0usize; channels * out_len];
    let xv = x.values();
    for c in 0..channels {
        for t in 0..out_len {
            let base = c * len + t * pool;
            let mut best = xv[base];
            let mut best_idx = t * pool;
            for i in 1..pool {
                if xv[base + i] > best {
                    best = xv[base + i];
                    best_idx = t * pool + i;
                }
            }
            out[c * out_len + t] = best;
            argmax[c * out_len + t] = best_idx;
        }
    }
    Ok((Tensor::new(vec![channels, out_len], out)?, argmax))
}

/// Routes each pooled gradient back to the argmax position recorded by the
/// forward pass; every other input position receives zero.
pub fn maxpool1d_backward(
    channels: usize,
    in_len: usize,
    argmax: &[usize],
    grad_out: &Tensor,
) -> Result<Tensor, NnError> {
    let [gc, out_len] = grad_out.dims2()?;
    if gc != channels || argmax.len() != channels * out_len {
        return Err(NnError::ShapeMismatch(format!(
            "pool grad shape [{gc}, {out_len}] does not match argmax of {}",
            argmax.len()
        )));
    }
    let mut grad_in = vec![0.0; channels * in_len];
    let gv = grad_out.values();
    for c in 0..channels {
        for t in 0..out_len {
            grad_in[c * in_len + argmax[c * out_len + t]] += gv[c * out_len + t];
        }
    }
    Tensor::new(vec![channels, in_len], grad_in)
}

/// Per-step intermediates kept for backpropagation through time.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    pub forget: Vec<f64>,
    pub input: Vec<f64>,
    pub candidate: Vec<f64>,
    pub cell: Vec<f64>,
    pub output: Vec<f64>,
    pub tanh_cell: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmLayerCache {
    pub inputs: Tensor,
    pub steps: Vec<LstmStepCache>,
}

pub struct LstmForward {
    pub hidden_seq: Tensor,
    pub final_h: Vec<f64>,
    pub final_c: Vec<f64>,
    pub cache: LstmLayerCache,
}

fn gate_preactivation(
    weights: &[f64],
    bias: &[f64],
    hidden: usize,
    input_dim: usize,
    h_prev: &[f64],
    x_t: &[f64],
) -> Vec<f64> {
    let cols = hidden + input_dim;
    (0..hidden)
        .map(|j| {
            let row = &weights[j * cols..(j + 1) * cols];
            let mut acc = bias[j];
            for k in 0..hidden {
                acc += row[k] * h_prev[k];
            }
            for k in 0..input_dim {
                acc += row[hidden + k] * x_t[k];
            }
            acc
        })
        .collect()
}

/// Runs one LSTM layer over a `[T, D]` sequence from zero initial hidden
/// and cell state. Per step:
///
/// ```text
/// f_t = σ(W_f·[h_prev, y_t] + b_f)        i_t = σ(W_i·[h_prev, y_t] + b_i)
/// c̃_t = tanh(W_c·[h_prev, y_t] + b_c)     c_t = f_t ⊙ c_prev + i_t ⊙ c̃_t
/// o_t = σ(W_o·[h_prev, y_t] + b_o)        h_t = o_t ⊙ tanh(c_t)
/// ```
pub fn lstm_forward(seq: &Tensor, params: &LstmLayerParams) -> Result<LstmForward, NnError> {
    let [steps, dim] = seq.dims2()?;
    if dim != params.input_dim {
        return Err(NnError::ShapeMismatch(format!(
            "lstm input dim {dim} does not match layer input dim {}",
            params.input_dim
        )));
    }
    let hidden = params.hidden;
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    let mut hidden_seq = vec![0.0; steps * hidden];
    let mut step_caches = Vec::with_capacity(steps);
    for t in 0..steps {
        let x_t = seq.row(t);
        let pre = |w: &[f64], b: &[f64]| gate_preactivation(w, b, hidden, dim, &h, x_t);
        let forget: Vec<f64> = pre(&params.w_f, &params.b_f).iter().map(|&z| sigmoid(z)).collect();
        let input: Vec<f64> = pre(&params.w_i, &params.b_i).iter().map(|&z| sigmoid(z)).collect();
        let candidate: Vec<f64> = pre(&params.w_c, &params.b_c).iter().map(|&z| z.tanh()).collect();
        let output: Vec<f64> = pre(&params.w_o, &params.b_o).iter().map(|&z| sigmoid(z)).collect();
        let c_prev = c.clone();
        let h_prev = h.clone();
        for j in 0..hidden {
            c[j] = forget[j] * c_prev[j] + input[j] * candidate[j];
        }
        let tanh_cell: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        for j in 0..hidden {
            h[j] = output[j] * tanh_cell[j];
            hidden_seq[t * hidden + j] = h[j];
        }
        step_caches.push(LstmStepCache {
            forget,
            input,
            candidate,
            cell: c.clone(),
            output,
            tanh_cell,
            h_prev,
            c_prev,
        });
    }
    Ok(LstmForward {
        hidden_seq: Tensor::new(vec![steps, hidden], hidden_seq)?,
        final_h: h,
        final_c: c,
        cache: LstmLayerCache {
            inputs: seq.clone(),
            steps: step_caches,
        },
    })
}

/// Backpropagation through time for one layer. `grad_hidden` is the loss
/// gradient with respect to every hidden state (`[T, H]`); returns the
/// parameter gradients and the gradient with respect to the input sequence.
pub fn lstm_backward(
    params: &LstmLayerParams,
    cache: &LstmLayerCache,
    grad_hidden: &Tensor,
) -> Result<(LstmLayerParams, Tensor), NnError> {
    let [steps, hidden] = grad_hidden.dims2()?;
    let dim = params.input_dim;
    if hidden != params.hidden || steps != cache.steps.len() {
        return Err(NnError::ShapeMismatch(format!(
            "lstm grad shape [{steps}, {hidden}] does not match cache of {} steps x {} units",
            cache.steps.len(),
            params.hidden
        )));
    }
    let cols = hidden + dim;
    let mut grads = LstmLayerParams::zeros(dim, hidden);
    let mut grad_seq = vec![0.0; steps * dim];
    let mut dh_next = vec![0.0; hidden];
    let mut dc_next = vec![0.0; hidden];

    for t in (0..steps).rev() {
        let step = &cache.steps[t];
        let x_t = cache.inputs.row(t);
        let gh = grad_hidden.row(t);

        let mut dh = vec![0.0; hidden];
        let mut dc = vec![0.0; hidden];
        let mut raw_f = vec![0.0; hidden];
        let mut raw_i = vec![0.0; hidden];
        let mut raw_c = vec![0.0; hidden];
        let mut raw_o = vec![0.0; hidden];
        for j in 0..hidden {
            dh[j] = gh[j] + dh_next[j];
            let d_out = dh[j] * step.tanh_cell[j];
            raw_o[j] = d_out * step.output[j] * (1.0 - step.output[j]);
            dc[j] = dc_next[j] + dh[j] * step.output[j] * (1.0 - step.tanh_cell[j] * step.tanh_cell[j]);
            let d_forget = dc[j] * step.c_prev[j];
            raw_f[j] = d_forget * step.forget[j] * (1.0 - step.forget[j]);
            let d_input = dc[j] * step.candidate[j];
            raw_i[j] = d_input * step.input[j] * (1.0 - step.input[j]);
            let d_candidate = dc[j] * step.input[j];
            raw_c[j] = d_candidate * (1.0 - step.candidate[j] * step.candidate[j]);
        }

        let mut dh_prev = vec![0.0; hidden];
        let mut dx_t = vec![0.0; dim];
        for (weights, grad_w, grad_b, raw) in [
            (&params.w_f, &mut grads.w_f, &mut grads.b_f, &raw_f),
            (&params.w_i, &mut grads.w_i, &mut grads.b_i, &raw_i),
            (&params.w_c, &mut grads.w_c, &mut grads.b_c, &raw_c),
            (&params.w_o, &mut grads.w_o, &mut grads.b_o, &raw_o),
        ] {
            for j in 0..hidden {
                let g = raw[j];
                grad_b[j] += g;
                let row = j * cols;
                for k in 0..hidden {
                    grad_w[row + k] += g * step.h_prev[k];
                    dh_prev[k] += weights[row + k] * g;
                }
                for k in 0..dim {
                    grad_w[row + hidden + k] += g * x_t[k];
                    dx_t[k] += weights[row + hidden + k] * g;
                }
            }
        }
        grad_seq[t * dim..(t + 1) * dim].copy_from_slice(&dx_t);
        for j in 0..hidden {
            dc_next[j] = dc[j] * step.forget[j];
        }
        dh_next = dh_prev;
    }

    Ok((grads, Tensor::new(vec![steps, dim], grad_seq)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn random_tensor(rng: &mut SeededRng, shape: Vec<usize>, scale: f64) -> Tensor {
        let len = shape.iter().product();
        let values = (0..len).map(|_| rng.uniform_in(-scale, scale)).collect();
        Tensor::new(shape, values).unwrap()
    }

    #[test]
    fn conv_zero_input_yields_biases() {
        let x = Tensor::zeros(vec![3, 8]);
        let weights = vec![0.5; 4 * 3 * 3];
        let biases = vec![0.1, -0.2, 0.3, 0.0];
        let out = conv1d_forward(&x, &weights, &biases, 4, 3).unwrap();
        assert_eq!(out.shape(), &[4, 6]);
        for f in 0..4 {
            for t in 0..6 {
                assert_eq!(out.at2(f, t), biases[f]);
            }
        }
    }

    #[test]
    fn conv_delta_kernel_is_identity_tap() {
        // single channel, single filter, w = (0, 1, 0): output is the input
        // shifted to the middle tap
        let x = Tensor::new(vec![1, 6], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let out = conv1d_forward(&x, &[0.0, 1.0, 0.0], &[0.0], 1, 3).unwrap();
        assert_eq!(out.values(), &[2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn conv_matches_naive_oracle() {
        let mut rng = SeededRng::new(21);
        for _ in 0..10 {
            let (c, n, f, k) = (3, 12, 5, 3);
            let x = random_tensor(&mut rng, vec![c, n], 1.0);
            let w = random_tensor(&mut rng, vec![f, c, k], 0.5);
            let b: Vec<f64> = (0..f).map(|_| rng.uniform_in(-0.5, 0.5)).collect();
            let out = conv1d_forward(&x, w.values(), &b, f, k).unwrap();
            for fi in 0..f {
                for t in 0..(n - k + 1) {
                    // oracle: taps outermost, channels innermost
                    let mut acc = b[fi];
                    for i in 0..k {
                        for ci in 0..c {
                            acc += w.values()[(fi * c + ci) * k + i] * x.at2(ci, t + i);
                        }
                    }
                    let got = out.at2(fi, t);
                    assert!(
                        (got - acc).abs() <= 1e-12 * got.abs().max(acc.abs()).max(1.0),
                        "filter {fi} t {t}: {got} vs {acc}"
                    );
                }
            }
        }
    }

    #[test]
    fn leaky_relu_worked_values() {
        let x = Tensor::new(vec![1, 3], vec![5.0, -1.0, 0.0]).unwrap();
        let y = leaky_relu(&x, 0.01);
        assert_eq!(y.values(), &[5.0, -0.01, 0.0]);
    }

    #[test]
    fn leaky_relu_negative_ratio_is_slope() {
        let mut rng = SeededRng::new(3);
        for _ in 0..100 {
            let v = rng.uniform_in(-10.0, 10.0);
            let x = Tensor::new(vec![1, 1], vec![v]).unwrap();
            let y = leaky_relu(&x, 0.01).values()[0];
            if v >= 0.0 {
                assert_eq!(y, v);
            } else {
                assert_eq!(y, 0.01 * v);
            }
        }
    }

    #[test]
    fn leaky_relu_monotone() {
        let mut rng = SeededRng::new(4);
        for _ in 0..100 {
            let a = rng.uniform_in(-5.0, 5.0);
            let b = rng.uniform_in(-5.0, 5.0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let y = leaky_relu(&Tensor::new(vec![1, 2], vec![lo, hi]).unwrap(), 0.01);
            assert!(y.values()[0] <= y.values()[1]);
        }
    }

    #[test]
    fn pool_worked_example() {
        let x = Tensor::new(
            vec![1, 9],
            vec![1.0, 5.0, 2.0, 4.0, 4.0, 4.0, 0.0, -1.0, -2.0],
        )
        .unwrap();
        let (out, argmax) = maxpool1d_forward(&x, 3).unwrap();
        assert_eq!(out.values(), &[5.0, 4.0, 0.0]);
        assert_eq!(argmax, vec![1, 3, 6]); // ties take the earliest position
    }

    #[test]
    fn pool_constant_input() {
        let x = Tensor::new(vec![2, 6], vec![0.7; 12]).unwrap();
        let (out, _) = maxpool1d_forward(&x, 3).unwrap();
        assert_eq!(out.values(), &[0.7, 0.7, 0.7, 0.7]);
    }

    #[test]
    fn pool_drops_remainder() {
        let x = Tensor::new(vec![1, 10], (0..10).map(|i| i as f64).collect()).unwrap();
        let (out, _) = maxpool1d_forward(&x, 3).unwrap();
        assert_eq!(out.shape(), &[1, 3]);
        assert_eq!(out.values(), &[2.0, 5.0, 8.0]); // position 9 dropped
    }

    #[test]
    fn pool_rejects_short_input() {
        let x = Tensor::new(vec![1, 2], vec![1.0, 2.0]).unwrap();
        assert!(maxpool1d_forward(&x, 3).is_err());
    }

    #[test]
    fn pool_backward_routes_to_argmax() {
        let x = Tensor::new(vec![1, 6], vec![1.0, 5.0, 2.0, 0.0, 0.0, 9.0]).unwrap();
        let (_, argmax) = maxpool1d_forward(&x, 3).unwrap();
        let grad = Tensor::new(vec![1, 2], vec![10.0, 20.0]).unwrap();
        let back = maxpool1d_backward(1, 6, &argmax, &grad).unwrap();
        assert_eq!(back.values(), &[0.0, 10.0, 0.0, 0.0, 0.0, 20.0]);
    }

    #[test]
    fn lstm_zero_weights_zero_input_gives_zero_hidden() {
        let params = LstmLayerParams::zeros(4, 3);
        let seq = Tensor::zeros(vec![5, 4]);
        let out = lstm_forward(&seq, &params).unwrap();
        // all gate preactivations are 0: sigmoid -> 0.5, tanh candidate -> 0,
        // so the cell and hidden states stay exactly 0
        assert!(out.hidden_seq.values().iter().all(|&h| h == 0.0));
        assert!(out.final_c.iter().all(|&c| c == 0.0));
        for step in &out.cache.steps {
            assert!(step.forget.iter().all(|&g| g == 0.5));
            assert!(step.input.iter().all(|&g| g == 0.5));
            assert!(step.output.iter().all(|&g| g == 0.5));
            assert!(step.candidate.iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn lstm_single_step_matches_scalar_oracle() {
        let mut rng = SeededRng::new(17);
        let (dim, hidden) = (4, 3);
        let mut params = LstmLayerParams::zeros(dim, hidden);
        for arr in [
            &mut params.w_f,
            &mut params.w_i,
            &mut params.w_c,
            &mut params.w_o,
        ] {
            for v in arr.iter_mut() {
                *v = rng.uniform_in(-0.8, 0.8);
            }
        }
        for arr in [
            &mut params.b_f,
            &mut params.b_i,
            &mut params.b_c,
            &mut params.b_o,
        ] {
            for v in arr.iter_mut() {
                *v = rng.uniform_in(-0.5, 0.5);
            }
        }
        let x: Vec<f64> = (0..dim).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let seq = Tensor::new(vec![1, dim], x.clone()).unwrap();
        let out = lstm_forward(&seq, &params).unwrap();

        let cols = hidden + dim;
        for j in 0..hidden {
            // oracle: scalar evaluation of the six gate equations with
            // h_prev = c_prev = 0
            let dot = |w: &[f64], b: &[f64]| {
                let mut acc = b[j];
                for k in 0..dim {
                    acc += w[j * cols + hidden + k] * x[k];
                }
                acc
            };
            let f = sigmoid(dot(&params.w_f, &params.b_f));
            let i = sigmoid(dot(&params.w_i, &params.b_i));
            let c_tilde = dot(&params.w_c, &params.b_c).tanh();
            let o = sigmoid(dot(&params.w_o, &params.b_o));
            let c = f * 0.0 + i * c_tilde;
            let h = o * c.tanh();
            let got = out.hidden_seq.at2(0, j);
            assert!(
                (got - h).abs() <= 1e-12 * got.abs().max(h.abs()).max(1.0),
                "unit {j}: {got} vs {h}"
            );
            assert!((0.0..=1.0).contains(&f) && f > 0.0 && f < 1.0);
            assert!(i > 0.0 && i < 1.0 && o > 0.0 && o < 1.0);
            assert!(c_tilde.abs() < 1.0);
        }
    }

    #[test]
    fn lstm_gates_stay_in_open_interval() {
        let mut rng = SeededRng::new(23);
        let mut params = LstmLayerParams::zeros(3, 5);
        for arr in [
            &mut params.w_f,
            &mut params.w_i,
            &mut params.w_c,
            &mut params.w_o,
            &mut params.b_f,
            &mut params.b_i,
            &mut params.b_c,
            &mut params.b_o,
        ] {
            for v in arr.iter_mut() {
                *v = rng.uniform_in(-2.0, 2.0);
            }
        }
        let seq = random_tensor(&mut rng, vec![6, 3], 3.0);
        let out = lstm_forward(&seq, &params).unwrap();
        for step in &out.cache.steps {
            for gate in [&step.forget, &step.input, &step.output] {
                assert!(gate.iter().all(|&g| g > 0.0 && g < 1.0));
            }
            assert!(step.candidate.iter().all(|&g| g.abs() < 1.0));
            assert!(step.tanh_cell.iter().all(|&g| g.abs() < 1.0));
        }
    }
}
