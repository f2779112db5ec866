//! A minimal dense CNN: `λ x (conv -> maxpool)`, one Leaky ReLU, then a
//! fixed four-layer perceptron `F -> 1000 -> 100 -> 10 -> m`.
//!
//! Everything runs in f64 and is bit-deterministic in single-threaded use:
//! convolution accumulates in kernel row-major order, the fully connected
//! layers accumulate inputs in ascending index order, and no optimization
//! is allowed to change those orders.

mod adam;
mod error;
mod ops;
mod tensor;

pub mod checkpoint;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use error::NetError;
pub use ops::{conv2d_forward, cross_entropy, leaky_relu, maxpool2d, maxpool2d_with_argmax};
pub use tensor::Tensor;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::rng::Xoshiro256;

/// Widths of the hidden perceptron layers; the head is `10 -> m` regardless
/// of `m`.
pub const FC_WIDTHS: [usize; 3] = [1000, 100, 10];

/// Default negative slope of the Leaky ReLU.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

/// Architecture hyperparameters: context length `B`, grid width `N`, conv
/// channels and kernel sizes per layer, and the number of output classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchConfig {
    pub context_len: usize,
    pub grid_width: usize,
    pub channels: Vec<usize>,
    pub kernels: Vec<usize>,
    pub classes: usize,
    pub leaky_slope: f64,
}

/// Feature-map dimensions after one conv + pool stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageDims {
    pub channels: usize,
    pub conv_h: usize,
    pub conv_w: usize,
    pub pool_h: usize,
    pub pool_w: usize,
}

impl ArchConfig {
    pub fn new(
        context_len: usize,
        grid_width: usize,
        channels: Vec<usize>,
        kernels: Vec<usize>,
        classes: usize,
    ) -> Result<Self, NetError> {
        let arch = ArchConfig {
            context_len,
            grid_width,
            channels,
            kernels,
            classes,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.channels.is_empty() || self.channels.len() != self.kernels.len() {
            return Err(NetError::Config(
                "need at least one conv layer, with one kernel size per layer".into(),
            ));
        }
        if self.classes < 2 {
            return Err(NetError::Config("need at least two output classes".into()));
        }
        if !(self.leaky_slope.is_finite()) {
            return Err(NetError::Config("leaky slope must be finite".into()));
        }
        self.stage_dims().map(|_| ())
    }

    /// Walks the conv block and returns the dimensions after every stage.
    /// Fails if any kernel exceeds its feature map.
    pub fn stage_dims(&self) -> Result<Vec<StageDims>, NetError> {
        if self.context_len == 0 || self.grid_width == 0 {
            return Err(NetError::Config("context length and grid width must be >= 1".into()));
        }
        let (mut h, mut w) = (self.context_len, self.grid_width);
        let mut dims = Vec::with_capacity(self.channels.len());
        for (i, (&c, &k)) in self.channels.iter().zip(&self.kernels).enumerate() {
            if c == 0 {
                return Err(NetError::Config(format!("layer {} has zero channels", i + 1)));
            }
            if k == 0 || k > h || k > w {
                return Err(NetError::Config(format!(
                    "kernel {k} of layer {} does not fit its {h}x{w} feature map",
                    i + 1
                )));
            }
            let (ch, cw) = (h - k + 1, w - k + 1);
            let (ph, pw) = (ops::pooled_extent(ch), ops::pooled_extent(cw));
            dims.push(StageDims {
                channels: c,
                conv_h: ch,
                conv_w: cw,
                pool_h: ph,
                pool_w: pw,
            });
            h = ph;
            w = pw;
        }
        Ok(dims)
    }

    /// `F`: length of the flattened feature vector entering the perceptron.
    pub fn flatten_dim(&self) -> Result<usize, NetError> {
        let dims = self.stage_dims()?;
        let last = dims.last().unwrap();
        Ok(last.channels * last.pool_h * last.pool_w)
    }

    /// `(input, output)` widths of the four fully connected layers.
    pub fn fc_dims(&self) -> Result<[(usize, usize); 4], NetError> {
        let f = self.flatten_dim()?;
        Ok([
            (f, FC_WIDTHS[0]),
            (FC_WIDTHS[0], FC_WIDTHS[1]),
            (FC_WIDTHS[1], FC_WIDTHS[2]),
            (FC_WIDTHS[2], self.classes),
        ])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    /// `[Cout, Cin, k, k]`
    pub weights: Tensor,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcLayer {
    /// `[out, in]`, row-major
    pub weights: Tensor,
    pub bias: Vec<f64>,
}

/// All learnable parameters plus the architecture they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub arch: ArchConfig,
    pub conv: Vec<ConvLayer>,
    pub fc: Vec<FcLayer>,
}

impl ModelState {
    /// Parameter slices in declaration order (conv weight, conv bias per
    /// layer, then fc weight, fc bias per layer).
    pub(crate) fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.conv {
            out.push(layer.weights.data_mut());
            out.push(layer.bias.as_mut_slice());
        }
        for layer in &mut self.fc {
            out.push(layer.weights.data_mut());
            out.push(layer.bias.as_mut_slice());
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.conv
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .chain(self.fc.iter().map(|l| l.weights.len() + l.bias.len()))
            .sum()
    }
}

/// Gradient (or moment) buffers shaped like a model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub conv_w: Vec<Tensor>,
    pub conv_b: Vec<Vec<f64>>,
    pub fc_w: Vec<Tensor>,
    pub fc_b: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &ModelState) -> Self {
        Gradients {
            conv_w: model
                .conv
                .iter()
                .map(|l| Tensor::zeros(l.weights.shape()))
                .collect(),
            conv_b: model.conv.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
            fc_w: model
                .fc
                .iter()
                .map(|l| Tensor::zeros(l.weights.shape()))
                .collect(),
            fc_b: model.fc.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        fn add(a: &mut [f64], b: &[f64]) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
        for (a, b) in self.conv_w.iter_mut().zip(&other.conv_w) {
            add(a.data_mut(), b.data());
        }
        for (a, b) in self.conv_b.iter_mut().zip(&other.conv_b) {
            add(a, b);
        }
        for (a, b) in self.fc_w.iter_mut().zip(&other.fc_w) {
            add(a.data_mut(), b.data());
        }
        for (a, b) in self.fc_b.iter_mut().zip(&other.fc_b) {
            add(a, b);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.slices_mut() {
            for v in s {
                *v *= factor;
            }
        }
    }

    pub(crate) fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for (w, b) in self.conv_w.iter().zip(&self.conv_b) {
            out.push(w.data());
            out.push(b.as_slice());
        }
        for (w, b) in self.fc_w.iter().zip(&self.fc_b) {
            out.push(w.data());
            out.push(b.as_slice());
        }
        out
    }

    pub(crate) fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for (w, b) in self.conv_w.iter_mut().zip(self.conv_b.iter_mut()) {
            out.push(w.data_mut());
            out.push(b.as_mut_slice());
        }
        for (w, b) in self.fc_w.iter_mut().zip(self.fc_b.iter_mut()) {
            out.push(w.data_mut());
            out.push(b.as_mut_slice());
        }
        out
    }
}

/// Kaiming-style fan-in scaled uniform initialization, deterministic in the
/// seed. Weights are `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, biases zero.
pub fn init_weights(arch: &ArchConfig, seed: u64) -> Result<ModelState, NetError> {
    arch.validate()?;
    let mut rng = Xoshiro256::from_seed(seed);
    let mut conv = Vec::new();
    let mut cin = 1usize;
    for (&c, &k) in arch.channels.iter().zip(&arch.kernels) {
        let bound = libm::sqrt(6.0 / (cin * k * k) as f64);
        let mut weights = Tensor::zeros(&[c, cin, k, k]);
        for v in weights.data_mut() {
            *v = rng.uniform(-bound, bound);
        }
        conv.push(ConvLayer {
            weights,
            bias: vec![0.0; c],
        });
        cin = c;
    }
    let mut fc = Vec::new();
    for (in_dim, out_dim) in arch.fc_dims()? {
        let bound = libm::sqrt(6.0 / in_dim as f64);
        let mut weights = Tensor::zeros(&[out_dim, in_dim]);
        for v in weights.data_mut() {
            *v = rng.uniform(-bound, bound);
        }
        fc.push(FcLayer {
            weights,
            bias: vec![0.0; out_dim],
        });
    }
    Ok(ModelState { arch: arch.clone(), conv, fc })
}

// ---------------------------------------------------------------------------
// Fully connected kernels
// ---------------------------------------------------------------------------

/// `y[i] = bias[i] + sum_j w[i][j] x[j]`, inputs accumulated in ascending
/// index order per output. Outputs are processed four at a time for
/// instruction-level parallelism; that does not change per-output order.
fn fc_forward_row(weights: &[f64], bias: &[f64], x: &[f64], y: &mut [f64]) {
    let in_dim = x.len();
    let out_dim = y.len();
    let mut i = 0;
    while i + 4 <= out_dim {
        let r0 = &weights[i * in_dim..(i + 1) * in_dim];
        let r1 = &weights[(i + 1) * in_dim..(i + 2) * in_dim];
        let r2 = &weights[(i + 2) * in_dim..(i + 3) * in_dim];
        let r3 = &weights[(i + 3) * in_dim..(i + 4) * in_dim];
        let (mut a0, mut a1, mut a2, mut a3) = (bias[i], bias[i + 1], bias[i + 2], bias[i + 3]);
        for (j, &xj) in x.iter().enumerate() {
            a0 += r0[j] * xj;
            a1 += r1[j] * xj;
            a2 += r2[j] * xj;
            a3 += r3[j] * xj;
        }
        y[i] = a0;
        y[i + 1] = a1;
        y[i + 2] = a2;
        y[i + 3] = a3;
        i += 4;
    }
    while i < out_dim {
        let row = &weights[i * in_dim..(i + 1) * in_dim];
        let mut acc = bias[i];
        for (j, &xj) in x.iter().enumerate() {
            acc += row[j] * xj;
        }
        y[i] = acc;
        i += 1;
    }
}

/// Accumulates `gw += d (x) x`, `gb += d`, and optionally `dx += W^T d` for
/// one sample.
fn fc_backward_row(
    weights: &[f64],
    x: &[f64],
    d: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    mut dx: Option<&mut [f64]>,
) {
    let in_dim = x.len();
    for (i, &dv) in d.iter().enumerate() {
        gb[i] += dv;
        let gw_row = &mut gw[i * in_dim..(i + 1) * in_dim];
        for (g, &xv) in gw_row.iter_mut().zip(x) {
            *g += dv * xv;
        }
        if let Some(dx) = dx.as_deref_mut() {
            let w_row = &weights[i * in_dim..(i + 1) * in_dim];
            for (out, &wv) in dx.iter_mut().zip(w_row) {
                *out += dv * wv;
            }
        }
    }
}

/// Gradients of the loss w.r.t. conv weights, bias, and (optionally) input
/// for one sample.
#[allow(clippy::too_many_arguments)]
fn conv2d_backward_slice(
    input: &[f64],
    cin: usize,
    h: usize,
    w: usize,
    weights: &[f64],
    cout: usize,
    k: usize,
    dout: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    mut dinput: Option<&mut [f64]>,
) {
    let (oh, ow) = (h - k + 1, w - k + 1);
    for co in 0..cout {
        let mut bias_acc = 0.0;
        for oi in 0..oh {
            let dout_row = &dout[(co * oh + oi) * ow..(co * oh + oi + 1) * ow];
            for &d in dout_row {
                bias_acc += d;
            }
            for ci in 0..cin {
                for ki in 0..k {
                    let in_row = &input[(ci * h + oi + ki) * w..(ci * h + oi + ki + 1) * w];
                    let w_base = ((co * cin + ci) * k + ki) * k;
                    for kj in 0..k {
                        let mut acc = 0.0;
                        for (d, xv) in dout_row.iter().zip(&in_row[kj..kj + ow]) {
                            acc += d * xv;
                        }
                        gw[w_base + kj] += acc;
                    }
                    if let Some(dinp) = dinput.as_deref_mut() {
                        let din_row =
                            &mut dinp[(ci * h + oi + ki) * w..(ci * h + oi + ki + 1) * w];
                        let w_row = &weights[w_base..w_base + k];
                        for (kj, &wv) in w_row.iter().enumerate() {
                            for (dd, &d) in din_row[kj..kj + ow].iter_mut().zip(dout_row) {
                                *dd += wv * d;
                            }
                        }
                    }
                }
            }
        }
        gb[co] += bias_acc;
    }
}

// ---------------------------------------------------------------------------
// Forward and backward over a batch
// ---------------------------------------------------------------------------

struct StageTrace {
    pooled: Tensor,
    /// Per flat pooled element, the sample-local index of its source in the
    /// (discarded) conv output.
    argmax: Vec<usize>,
}

struct ForwardTrace {
    stages: Vec<StageTrace>,
    /// Flattened post-activation features, `[batch, F]`.
    activated: Tensor,
    /// Pre-activation outputs of the four fc layers.
    fc_pre: Vec<Tensor>,
    /// Post-activation outputs of the first three fc layers.
    fc_act: Vec<Tensor>,
}

fn check_batch_shape(model: &ModelState, batch: &Tensor) -> Result<usize, NetError> {
    let arch = &model.arch;
    match *batch.shape() {
        [bs, 1, h, w] if h == arch.context_len && w == arch.grid_width => Ok(bs),
        _ => Err(NetError::shape(
            "batch must be [n, 1, context_len, grid_width]",
            batch.shape(),
        )),
    }
}

fn forward_trace(model: &ModelState, batch: &Tensor) -> Result<ForwardTrace, NetError> {
    let bs = check_batch_shape(model, batch)?;
    let arch = &model.arch;
    let dims = arch.stage_dims()?;

    let mut stages: Vec<StageTrace> = Vec::with_capacity(dims.len());
    let (mut cin, mut h, mut w) = (1usize, arch.context_len, arch.grid_width);
    for (li, d) in dims.iter().enumerate() {
        let k = arch.kernels[li];
        let in_len = cin * h * w;
        let conv_len = d.channels * d.conv_h * d.conv_w;
        let pool_len = d.channels * d.pool_h * d.pool_w;
        let mut conv_out = Tensor::zeros(&[bs, d.channels, d.conv_h, d.conv_w]);
        let mut pooled = Tensor::zeros(&[bs, d.channels, d.pool_h, d.pool_w]);
        let mut argmax = vec![0usize; bs * pool_len];
        {
            let layer = &model.conv[li];
            for s in 0..bs {
                let input = if li == 0 {
                    &batch.data()[s * in_len..(s + 1) * in_len]
                } else {
                    &stages[li - 1].pooled.data()[s * in_len..(s + 1) * in_len]
                };
                ops::conv2d_forward_slice(
                    input,
                    cin,
                    h,
                    w,
                    layer.weights.data(),
                    d.channels,
                    k,
                    &layer.bias,
                    &mut conv_out.data_mut()[s * conv_len..(s + 1) * conv_len],
                );
            }
            for s in 0..bs {
                ops::maxpool2d_slice(
                    &conv_out.data()[s * conv_len..(s + 1) * conv_len],
                    d.channels,
                    d.conv_h,
                    d.conv_w,
                    &mut pooled.data_mut()[s * pool_len..(s + 1) * pool_len],
                    &mut argmax[s * pool_len..(s + 1) * pool_len],
                );
            }
        }
        stages.push(StageTrace { pooled, argmax });
        cin = d.channels;
        h = d.pool_h;
        w = d.pool_w;
    }

    // Leaky ReLU after the last stage, then flatten.
    let f = arch.flatten_dim()?;
    let last_pooled = &stages.last().unwrap().pooled;
    let mut activated = Tensor::from_vec(&[bs, f], last_pooled.data().to_vec());
    ops::leaky_relu_slice(activated.data_mut(), arch.leaky_slope);

    let mut fc_pre = Vec::with_capacity(4);
    let mut fc_act = Vec::with_capacity(3);
    let mut cur = &activated;
    for (li, layer) in model.fc.iter().enumerate() {
        let in_dim = layer.weights.shape()[1];
        let out_dim = layer.weights.shape()[0];
        let mut z = Tensor::zeros(&[bs, out_dim]);
        for s in 0..bs {
            fc_forward_row(
                layer.weights.data(),
                &layer.bias,
                &cur.data()[s * in_dim..(s + 1) * in_dim],
                &mut z.data_mut()[s * out_dim..(s + 1) * out_dim],
            );
        }
        fc_pre.push(z);
        if li < 3 {
            let mut h = fc_pre[li].clone();
            ops::leaky_relu_slice(h.data_mut(), arch.leaky_slope);
            fc_act.push(h);
            cur = &fc_act[li];
        }
    }

    Ok(ForwardTrace {
        stages,
        activated,
        fc_pre,
        fc_act,
    })
}

/// Runs the full network on a `[n, 1, B, N]` batch and returns `[n, m]`
/// logits.
pub fn forward(model: &ModelState, batch: &Tensor) -> Result<Tensor, NetError> {
    let trace = forward_trace(model, batch)?;
    Ok(trace.fc_pre.into_iter().next_back().unwrap())
}

/// Sum (not mean) of per-sample cross-entropy losses and parameter
/// gradients. Summing lets callers split a batch into chunks and reduce the
/// partial results in a fixed order; divide by the batch size for means.
pub fn grad_sums(
    model: &ModelState,
    batch: &Tensor,
    labels: &[usize],
) -> Result<(f64, Gradients), NetError> {
    let bs = check_batch_shape(model, batch)?;
    if labels.len() != bs {
        return Err(NetError::shape("one label per sample required", &[labels.len()]));
    }
    let m = model.arch.classes;
    if let Some(&bad) = labels.iter().find(|&&l| l >= m) {
        return Err(NetError::shape("label out of range", &[bad]));
    }
    let arch = &model.arch;
    let trace = forward_trace(model, batch)?;
    let mut grads = Gradients::zeros_like(model);

    // Loss and its gradient at the logits.
    let mut d = trace.fc_pre[3].clone();
    let mut loss_sum = 0.0;
    for (row, &label) in d.data_mut().chunks_mut(m).zip(labels) {
        loss_sum += ops::softmax_row_in_place(row, label);
    }

    // Perceptron block, last layer first.
    for li in (0..4).rev() {
        let layer = &model.fc[li];
        let in_dim = layer.weights.shape()[1];
        let out_dim = layer.weights.shape()[0];
        let input = if li == 0 {
            &trace.activated
        } else {
            &trace.fc_act[li - 1]
        };
        let mut d_input = Tensor::zeros(&[bs, in_dim]);
        for s in 0..bs {
            fc_backward_row(
                layer.weights.data(),
                &input.data()[s * in_dim..(s + 1) * in_dim],
                &d.data()[s * out_dim..(s + 1) * out_dim],
                grads.fc_w[li].data_mut(),
                &mut grads.fc_b[li],
                Some(&mut d_input.data_mut()[s * in_dim..(s + 1) * in_dim]),
            );
        }
        if li > 0 {
            for (g, &pre) in d_input.data_mut().iter_mut().zip(trace.fc_pre[li - 1].data()) {
                *g *= ops::leaky_relu_grad(pre, arch.leaky_slope);
            }
        } else {
            // Through the activation after the last pooling stage.
            let last_pooled = trace.stages.last().unwrap().pooled.data();
            for (g, &pre) in d_input.data_mut().iter_mut().zip(last_pooled) {
                *g *= ops::leaky_relu_grad(pre, arch.leaky_slope);
            }
        }
        d = d_input;
    }

    // Conv block, last stage first. `d` now matches the last pooled shape.
    let dims = arch.stage_dims()?;
    for li in (0..dims.len()).rev() {
        let sd = dims[li];
        let k = arch.kernels[li];
        let (cin, in_h, in_w) = if li == 0 {
            (1, arch.context_len, arch.grid_width)
        } else {
            (dims[li - 1].channels, dims[li - 1].pool_h, dims[li - 1].pool_w)
        };
        let conv_len = sd.channels * sd.conv_h * sd.conv_w;
        let pool_len = sd.channels * sd.pool_h * sd.pool_w;
        let in_len = cin * in_h * in_w;

        // Scatter the pooled gradient back through the argmax routes.
        let stage = &trace.stages[li];
        let mut d_conv = Tensor::zeros(&[bs, sd.channels, sd.conv_h, sd.conv_w]);
        for s in 0..bs {
            let src = &d.data()[s * pool_len..(s + 1) * pool_len];
            let dst = &mut d_conv.data_mut()[s * conv_len..(s + 1) * conv_len];
            let routes = &stage.argmax[s * pool_len..(s + 1) * pool_len];
            for (&route, &g) in routes.iter().zip(src) {
                dst[route] += g;
            }
        }

        let layer = &model.conv[li];
        let mut d_input = if li > 0 {
            Some(Tensor::zeros(&[bs, cin, in_h, in_w]))
        } else {
            None
        };
        for s in 0..bs {
            let input = if li == 0 {
                &batch.data()[s * in_len..(s + 1) * in_len]
            } else {
                &trace.stages[li - 1].pooled.data()[s * in_len..(s + 1) * in_len]
            };
            conv2d_backward_slice(
                input,
                cin,
                in_h,
                in_w,
                layer.weights.data(),
                sd.channels,
                k,
                &d_conv.data()[s * conv_len..(s + 1) * conv_len],
                grads.conv_w[li].data_mut(),
                &mut grads.conv_b[li],
                d_input
                    .as_mut()
                    .map(|t| &mut t.data_mut()[s * in_len..(s + 1) * in_len]),
            );
        }
        if let Some(di) = d_input {
            d = di;
        }
    }

    Ok((loss_sum, grads))
}

/// Mean cross-entropy loss over the batch and exact gradients of that mean
/// w.r.t. every parameter.
pub fn backward(
    model: &ModelState,
    batch: &Tensor,
    labels: &[usize],
) -> Result<(f64, Gradients), NetError> {
    let bs = batch.shape()[0];
    let (loss_sum, mut grads) = grad_sums(model, batch, labels)?;
    let scale = 1.0 / bs as f64;
    grads.scale(scale);
    Ok((loss_sum * scale, grads))
}
