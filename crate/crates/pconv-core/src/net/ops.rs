//! Forward kernels: valid cross-correlation, 2x2 max-pooling, Leaky ReLU,
//! and softmax cross-entropy.
//!
//! The convolution accumulates each output element strictly in kernel
//! row-major order (input channel, kernel row, kernel column) and adds the
//! bias last. Tests pin the results bit-for-bit against naive reference
//! loops, so any rewrite must preserve that summation order.

use alloc::vec;
use alloc::vec::Vec;

use super::error::NetError;
use super::tensor::Tensor;

/// Valid (no padding, stride 1) cross-correlation of a `[Cin, H, W]` input
/// with `[Cout, Cin, k, k]` weights plus a per-channel bias.
pub fn conv2d_forward(input: &Tensor, weights: &Tensor, bias: &[f64]) -> Result<Tensor, NetError> {
    let &[cin, h, w] = input.shape() else {
        return Err(NetError::shape("conv input must be [C, H, W]", input.shape()));
    };
    let &[cout, wcin, kh, kw] = weights.shape() else {
        return Err(NetError::shape(
            "conv weights must be [Cout, Cin, k, k]",
            weights.shape(),
        ));
    };
    if wcin != cin || kh != kw || bias.len() != cout {
        return Err(NetError::shape(
            "conv weights do not match the input channels",
            weights.shape(),
        ));
    }
    if kh > h || kw > w {
        return Err(NetError::shape("kernel larger than its input", input.shape()));
    }
    let (oh, ow) = (h - kh + 1, w - kw + 1);
    let mut out = Tensor::zeros(&[cout, oh, ow]);
    conv2d_forward_slice(
        input.data(),
        cin,
        h,
        w,
        weights.data(),
        cout,
        kh,
        bias,
        out.data_mut(),
    );
    Ok(out)
}

/// Slice-level convolution kernel; `out` must hold `cout*(h-k+1)*(w-k+1)`
/// zeros on entry.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv2d_forward_slice(
    input: &[f64],
    cin: usize,
    h: usize,
    w: usize,
    weights: &[f64],
    cout: usize,
    k: usize,
    bias: &[f64],
    out: &mut [f64],
) {
    let (oh, ow) = (h - k + 1, w - k + 1);
    for co in 0..cout {
        for oi in 0..oh {
            let out_row = &mut out[(co * oh + oi) * ow..(co * oh + oi + 1) * ow];
            // Accumulate in (ci, ki, kj) order for every output element; the
            // inner loop over the row keeps that order per element while
            // staying vectorizable.
            for ci in 0..cin {
                for ki in 0..k {
                    let in_row = &input[(ci * h + oi + ki) * w..(ci * h + oi + ki + 1) * w];
                    let w_row = &weights[((co * cin + ci) * k + ki) * k..((co * cin + ci) * k + ki + 1) * k];
                    for (kj, &wv) in w_row.iter().enumerate() {
                        let shifted = &in_row[kj..kj + ow];
                        for (o, &x) in out_row.iter_mut().zip(shifted) {
                            *o += wv * x;
                        }
                    }
                }
            }
            let b = bias[co];
            for o in out_row.iter_mut() {
                *o += b;
            }
        }
    }
}

/// Output height/width of the pooling stage: 2x2 windows with stride two,
/// trailing odd row/column dropped, size-1 axes passed through.
pub(crate) fn pooled_extent(d: usize) -> usize {
    if d == 1 {
        1
    } else {
        d / 2
    }
}

/// Max-pooling of a `[C, H, W]` tensor.
pub fn maxpool2d(input: &Tensor) -> Result<Tensor, NetError> {
    let (out, _) = maxpool2d_with_argmax(input)?;
    Ok(out)
}

/// Max-pooling that also records, per output element, the flat input index
/// of the maximum (first occurrence in row-major window order).
pub fn maxpool2d_with_argmax(input: &Tensor) -> Result<(Tensor, Vec<usize>), NetError> {
    let &[c, h, w] = input.shape() else {
        return Err(NetError::shape("pool input must be [C, H, W]", input.shape()));
    };
    let (ph, pw) = (pooled_extent(h), pooled_extent(w));
    let mut out = Tensor::zeros(&[c, ph, pw]);
    let mut argmax = vec![0usize; c * ph * pw];
    maxpool2d_slice(input.data(), c, h, w, out.data_mut(), &mut argmax);
    Ok((out, argmax))
}

pub(crate) fn maxpool2d_slice(
    input: &[f64],
    c: usize,
    h: usize,
    w: usize,
    out: &mut [f64],
    argmax: &mut [usize],
) {
    let (ph, pw) = (pooled_extent(h), pooled_extent(w));
    let rows_per_window = if h == 1 { 1 } else { 2 };
    let cols_per_window = if w == 1 { 1 } else { 2 };
    for ch in 0..c {
        for pi in 0..ph {
            for pj in 0..pw {
                let (i0, j0) = (pi * rows_per_window, pj * cols_per_window);
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = 0usize;
                for di in 0..rows_per_window {
                    for dj in 0..cols_per_window {
                        let idx = (ch * h + i0 + di) * w + j0 + dj;
                        let v = input[idx];
                        if v > best {
                            best = v;
                            best_idx = idx;
                        }
                    }
                }
                let o = (ch * ph + pi) * pw + pj;
                out[o] = best;
                argmax[o] = best_idx;
            }
        }
    }
}

/// Elementwise Leaky ReLU: `x` if `x >= 0`, else `slope * x`.
pub fn leaky_relu(input: &Tensor, slope: f64) -> Tensor {
    let mut out = input.clone();
    leaky_relu_slice(out.data_mut(), slope);
    out
}

pub(crate) fn leaky_relu_slice(xs: &mut [f64], slope: f64) {
    for x in xs {
        if *x < 0.0 {
            *x *= slope;
        }
    }
}

/// Derivative of Leaky ReLU evaluated at the pre-activation value.
#[inline]
pub(crate) fn leaky_relu_grad(pre: f64, slope: f64) -> f64 {
    if pre >= 0.0 {
        1.0
    } else {
        slope
    }
}

/// Softmax cross-entropy over a `[batch, m]` logit matrix.
///
/// Returns the mean loss and its gradient `(softmax - onehot) / batch`.
pub fn cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor), NetError> {
    let &[batch, m] = logits.shape() else {
        return Err(NetError::shape("logits must be [batch, m]", logits.shape()));
    };
    if labels.len() != batch {
        return Err(NetError::shape("one label per sample required", &[labels.len()]));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= m) {
        return Err(NetError::shape("label out of range", &[bad]));
    }
    let mut grad = logits.clone();
    let mut loss_sum = 0.0;
    for (row, &label) in grad.data_mut().chunks_mut(m).zip(labels) {
        loss_sum += softmax_row_in_place(row, label);
    }
    let scale = 1.0 / batch as f64;
    for g in grad.data_mut() {
        *g *= scale;
    }
    Ok((loss_sum * scale, grad))
}

/// Turns one logit row into `softmax - onehot` in place and returns the
/// sample's cross-entropy loss, using log-sum-exp stabilization.
pub(crate) fn softmax_row_in_place(row: &mut [f64], label: usize) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted_label = row[label] - max;
    let mut sum = 0.0;
    for x in row.iter_mut() {
        *x = libm::exp(*x - max);
        sum += *x;
    }
    let loss = libm::log(sum) - shifted_label;
    let inv = 1.0 / sum;
    for x in row.iter_mut() {
        *x *= inv;
    }
    row[label] -= 1.0;
    loss
}
