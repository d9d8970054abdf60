//! Forward and backward kernels for the layer types used by the network.
//!
//! Activations are stored channel-major (`C x H x W`) in flat `f64` slices.
//! Backward kernels accumulate into their gradient outputs.

/// `x + sin^2(a x) / a`
pub fn snake(x: f64, a: f64) -> f64 {
    let s = (a * x).sin();
    x + s * s / a
}

/// Derivative of [`snake`]: `1 + sin(2 a x)`.
pub fn snake_grad(x: f64, a: f64) -> f64 {
    1.0 + (2.0 * a * x).sin()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn tanh_inplace(x: &mut [f64]) {
    for v in x {
        *v = v.tanh();
    }
}

/// Turns `d_y` into `d_x` for `y = tanh(x)`, given the outputs `y`.
pub fn tanh_backward_inplace(y: &[f64], d: &mut [f64]) {
    for (g, &v) in d.iter_mut().zip(y) {
        *g *= 1.0 - v * v;
    }
}

/// 3x3 convolution, stride 1, zero "same" padding. `weight` is laid out
/// `[cout][cin][3][3]`.
pub fn conv3x3(
    input: &[f64],
    cin: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    bias: &[f64],
    cout: usize,
) -> Vec<f64> {
    let plane = h * w;
    debug_assert_eq!(input.len(), cin * plane);
    debug_assert_eq!(weight.len(), cout * cin * 9);
    let mut out = vec![0.0; cout * plane];
    for (o, out_plane) in out.chunks_exact_mut(plane).enumerate() {
        out_plane.fill(bias[o]);
        for (i, in_plane) in input.chunks_exact(plane).enumerate() {
            let k = &weight[(o * cin + i) * 9..(o * cin + i + 1) * 9];
            for ky in 0..3 {
                for kx in 0..3 {
                    let wv = k[ky * 3 + kx];
                    if wv == 0.0 {
                        continue;
                    }
                    // output (y, x) reads input (y + ky - 1, x + kx - 1)
                    let (x_lo, x_hi) = shifted_range(w, kx);
                    let (y_lo, y_hi) = shifted_range(h, ky);
                    for y in y_lo..y_hi {
                        let sy = y + ky - 1;
                        let dst = &mut out_plane[y * w + x_lo..y * w + x_hi];
                        let src = &in_plane[sy * w + x_lo + kx - 1..sy * w + x_hi + kx - 1];
                        for (d, &s) in dst.iter_mut().zip(src) {
                            *d += wv * s;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Output index range along one axis whose tap `k` stays inside `[0, n)`.
#[inline]
fn shifted_range(n: usize, k: usize) -> (usize, usize) {
    match k {
        0 => (1.min(n), n),
        1 => (0, n),
        _ => (0, n.saturating_sub(1)),
    }
}

/// Backward pass of [`conv3x3`]. Accumulates weight and bias gradients and
/// returns the input gradient when `need_input_grad` is set.
#[allow(clippy::too_many_arguments)]
pub fn conv3x3_backward(
    input: &[f64],
    cin: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    cout: usize,
    d_out: &[f64],
    d_weight: &mut [f64],
    d_bias: &mut [f64],
    need_input_grad: bool,
) -> Option<Vec<f64>> {
    let plane = h * w;
    debug_assert_eq!(d_out.len(), cout * plane);
    let mut d_in = need_input_grad.then(|| vec![0.0; cin * plane]);
    for (o, g_plane) in d_out.chunks_exact(plane).enumerate() {
        d_bias[o] += g_plane.iter().sum::<f64>();
        for (i, in_plane) in input.chunks_exact(plane).enumerate() {
            let base = (o * cin + i) * 9;
            for ky in 0..3 {
                for kx in 0..3 {
                    let (x_lo, x_hi) = shifted_range(w, kx);
                    let (y_lo, y_hi) = shifted_range(h, ky);
                    let wv = weight[base + ky * 3 + kx];
                    let mut acc = 0.0;
                    for y in y_lo..y_hi {
                        let sy = y + ky - 1;
                        let g = &g_plane[y * w + x_lo..y * w + x_hi];
                        let src_range = sy * w + x_lo + kx - 1..sy * w + x_hi + kx - 1;
                        let src = &in_plane[src_range.clone()];
                        acc += g.iter().zip(src).map(|(a, b)| a * b).sum::<f64>();
                        if let Some(d_in) = d_in.as_mut() {
                            let dst = &mut d_in[i * plane..(i + 1) * plane][src_range];
                            for (d, &gv) in dst.iter_mut().zip(g) {
                                *d += wv * gv;
                            }
                        }
                    }
                    d_weight[base + ky * 3 + kx] += acc;
                }
            }
        }
    }
    d_in
}

/// 1x1 projection of `cin` channels down to one plane.
pub fn conv1x1_to_single(
    input: &[f64],
    cin: usize,
    plane: usize,
    weight: &[f64],
    bias: f64,
) -> Vec<f64> {
    let mut out = vec![bias; plane];
    for (c, in_plane) in input.chunks_exact(plane).enumerate().take(cin) {
        let wv = weight[c];
        for (o, &v) in out.iter_mut().zip(in_plane) {
            *o += wv * v;
        }
    }
    out
}

pub fn conv1x1_to_single_backward(
    input: &[f64],
    plane: usize,
    weight: &[f64],
    d_out: &[f64],
    d_weight: &mut [f64],
    d_bias: &mut f64,
) -> Vec<f64> {
    *d_bias += d_out.iter().sum::<f64>();
    let mut d_in = vec![0.0; input.len()];
    for (c, (in_plane, d_plane)) in input
        .chunks_exact(plane)
        .zip(d_in.chunks_exact_mut(plane))
        .enumerate()
    {
        d_weight[c] += in_plane.iter().zip(d_out).map(|(a, b)| a * b).sum::<f64>();
        for (d, &g) in d_plane.iter_mut().zip(d_out) {
            *d += weight[c] * g;
        }
    }
    d_in
}

/// Soft-attention mask `area * sigmoid(z) / (2 * sum |sigmoid(z)|)`.
/// Returns the mask and the sigmoid values needed for the backward pass.
pub fn attention_mask(z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let s: Vec<f64> = z.iter().map(|&v| sigmoid(v)).collect();
    let total: f64 = s.iter().map(|v| v.abs()).sum();
    let scale = z.len() as f64 / (2.0 * total);
    (s.iter().map(|v| v * scale).collect(), s)
}

/// Gradient with respect to the pre-sigmoid projection `z`.
pub fn attention_mask_backward(sig: &[f64], d_mask: &[f64]) -> Vec<f64> {
    // sigmoid is positive, so |s| = s and d|s|/ds = 1
    let k = sig.len() as f64 / 2.0;
    let total: f64 = sig.iter().sum();
    let weighted: f64 = d_mask.iter().zip(sig).map(|(g, s)| g * s).sum();
    sig.iter()
        .zip(d_mask)
        .map(|(&s, &g)| {
            let d_s = k / total * g - k / (total * total) * weighted;
            d_s * s * (1.0 - s)
        })
        .collect()
}

/// 2x2 mean pooling with stride 2 (`h` and `w` even).
pub fn mean_pool2(input: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0; c * oh * ow];
    for ch in 0..c {
        let src = &input[ch * h * w..(ch + 1) * h * w];
        let dst = &mut out[ch * oh * ow..(ch + 1) * oh * ow];
        for y in 0..oh {
            for x in 0..ow {
                let r0 = 2 * y * w + 2 * x;
                let r1 = r0 + w;
                dst[y * ow + x] = 0.25 * (src[r0] + src[r0 + 1] + src[r1] + src[r1 + 1]);
            }
        }
    }
    out
}

pub fn mean_pool2_backward(d_out: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let (oh, ow) = (h / 2, w / 2);
    let mut d_in = vec![0.0; c * h * w];
    for ch in 0..c {
        let g = &d_out[ch * oh * ow..(ch + 1) * oh * ow];
        let dst = &mut d_in[ch * h * w..(ch + 1) * h * w];
        for y in 0..oh {
            for x in 0..ow {
                let v = 0.25 * g[y * ow + x];
                let r0 = 2 * y * w + 2 * x;
                let r1 = r0 + w;
                dst[r0] = v;
                dst[r0 + 1] = v;
                dst[r1] = v;
                dst[r1 + 1] = v;
            }
        }
    }
    d_in
}

/// `y = W x + b` with `W` laid out `[out][in]`.
pub fn dense(input: &[f64], weight: &[f64], bias: &[f64]) -> Vec<f64> {
    bias.iter()
        .zip(weight.chunks_exact(input.len()))
        .map(|(&b, row)| b + row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>())
        .collect()
}

pub fn dense_backward(
    input: &[f64],
    weight: &[f64],
    d_out: &[f64],
    d_weight: &mut [f64],
    d_bias: &mut [f64],
) -> Vec<f64> {
    let n_in = input.len();
    let mut d_in = vec![0.0; n_in];
    for (o, &g) in d_out.iter().enumerate() {
        d_bias[o] += g;
        let row = &weight[o * n_in..(o + 1) * n_in];
        let d_row = &mut d_weight[o * n_in..(o + 1) * n_in];
        for ((dw, &x), (di, &wv)) in d_row.iter_mut().zip(input).zip(d_in.iter_mut().zip(row)) {
            *dw += g * x;
            *di += g * wv;
        }
    }
    d_in
}

/// Multiplies every channel plane by `mask`.
pub fn apply_mask(features: &[f64], mask: &[f64]) -> Vec<f64> {
    features
        .chunks_exact(mask.len())
        .flat_map(|plane| plane.iter().zip(mask).map(|(f, m)| f * m))
        .collect()
}

/// Returns `(d_features, d_mask)` for [`apply_mask`].
pub fn apply_mask_backward(features: &[f64], mask: &[f64], d_out: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let plane = mask.len();
    let mut d_mask = vec![0.0; plane];
    let mut d_feat = Vec::with_capacity(features.len());
    for (f_plane, g_plane) in features.chunks_exact(plane).zip(d_out.chunks_exact(plane)) {
        for (((&f, &g), &m), dm) in f_plane.iter().zip(g_plane).zip(mask).zip(d_mask.iter_mut()) {
            d_feat.push(g * m);
            *dm += g * f;
        }
    }
    (d_feat, d_mask)
}
