//! Layer kernels: 3×3 / 1×1 convolution, leaky rectifier, 2×2 average
//! pooling, nearest-neighbor upsampling and channel concatenation, each with
//! its exact reverse-mode counterpart.
//!
//! The 3×3 kernels fuse all nine taps into one pass per (output, input)
//! channel pair: the interior of each row is a straight-line expression over
//! shifted slices that the compiler vectorizes, and reductions use a fixed
//! eight-lane partial-sum layout so results are bit-identical regardless of
//! target width. Boundary columns and degenerate shapes take a scalar path.

use super::tensor::Tensor4;

const LANES: usize = 8;

/// dst[y][x] += Σ_{ky,kx} w9[ky*3+kx] · src[y+ky-1][x+kx-1], zero padded.
fn corr3_accum(dst: &mut [f64], src: &[f64], w9: &[f64; 9], h: usize, w: usize, zero_row: &[f64]) {
    debug_assert_eq!(dst.len(), h * w);
    debug_assert_eq!(src.len(), h * w);
    debug_assert_eq!(zero_row.len(), w);
    if w < 2 {
        corr3_accum_scalar(dst, src, w9, h, w);
        return;
    }
    let [w00, w01, w02, w10, w11, w12, w20, w21, w22] = *w9;
    for y in 0..h {
        let top = if y > 0 { &src[(y - 1) * w..y * w] } else { zero_row };
        let mid = &src[y * w..(y + 1) * w];
        let bot = if y + 1 < h { &src[(y + 1) * w..(y + 2) * w] } else { zero_row };
        let drow = &mut dst[y * w..(y + 1) * w];

        // left edge: kx = 0 tap falls on padding
        drow[0] += w01 * top[0] + w02 * top[1] + w11 * mid[0] + w12 * mid[1] + w21 * bot[0] + w22 * bot[1];
        // interior
        let n = w - 2;
        let (t0, t1, t2) = (&top[..n], &top[1..n + 1], &top[2..n + 2]);
        let (m0, m1, m2) = (&mid[..n], &mid[1..n + 1], &mid[2..n + 2]);
        let (b0, b1, b2) = (&bot[..n], &bot[1..n + 1], &bot[2..n + 2]);
        let di = &mut drow[1..n + 1];
        for i in 0..n {
            di[i] += w00 * t0[i]
                + w01 * t1[i]
                + w02 * t2[i]
                + w10 * m0[i]
                + w11 * m1[i]
                + w12 * m2[i]
                + w20 * b0[i]
                + w21 * b1[i]
                + w22 * b2[i];
        }
        // right edge: kx = 2 tap falls on padding
        drow[w - 1] += w00 * top[w - 2] + w01 * top[w - 1] + w10 * mid[w - 2] + w11 * mid[w - 1]
            + w20 * bot[w - 2]
            + w21 * bot[w - 1];
    }
}

fn corr3_accum_scalar(dst: &mut [f64], src: &[f64], w9: &[f64; 9], h: usize, w: usize) {
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for ky in 0..3usize {
                for kx in 0..3usize {
                    let sy = y as isize + ky as isize - 1;
                    let sx = x as isize + kx as isize - 1;
                    if sy >= 0 && sy < h as isize && sx >= 0 && sx < w as isize {
                        acc += w9[ky * 3 + kx] * src[sy as usize * w + sx as usize];
                    }
                }
            }
            dst[y * w + x] += acc;
        }
    }
}

/// Deterministic lane-partitioned dot product: fixed tree regardless of
/// slice length, vector friendly.
fn dot_lanes(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let chunks = a.len() / LANES;
    for c in 0..chunks {
        let ac = &a[c * LANES..(c + 1) * LANES];
        let bc = &b[c * LANES..(c + 1) * LANES];
        for j in 0..LANES {
            acc[j] += ac[j] * bc[j];
        }
    }
    let mut tail = 0.0;
    for i in chunks * LANES..a.len() {
        tail += a[i] * b[i];
    }
    let partial = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    partial + tail
}

fn sum_lanes(a: &[f64]) -> f64 {
    let mut acc = [0.0f64; LANES];
    let chunks = a.len() / LANES;
    for c in 0..chunks {
        let ac = &a[c * LANES..(c + 1) * LANES];
        for j in 0..LANES {
            acc[j] += ac[j];
        }
    }
    let mut tail = 0.0;
    for i in chunks * LANES..a.len() {
        tail += a[i];
    }
    let partial = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    partial + tail
}

/// Forward 2D convolution, stride 1. `pad` must be k/2 (1 for 3×3, 0 for
/// 1×1) so spatial dims are preserved. Weights are [co][ci][k][k] flattened,
/// bias has one entry per output channel.
pub fn conv_forward(
    input: &Tensor4,
    weights: &[f64],
    bias: &[f64],
    c_out: usize,
    k: usize,
    pad: usize,
) -> Tensor4 {
    let (n, _, h, w) = input.dims();
    let mut out = Tensor4::zeros(n, c_out, h, w);
    conv_forward_into(&mut out, input, weights, bias, c_out, k, pad);
    out
}

/// In-place variant: `out` must already have the right dims; every value is
/// overwritten.
pub fn conv_forward_into(
    out: &mut Tensor4,
    input: &Tensor4,
    weights: &[f64],
    bias: &[f64],
    c_out: usize,
    k: usize,
    pad: usize,
) {
    let (n, c_in, h, w) = input.dims();
    debug_assert_eq!(out.dims(), (n, c_out, h, w));
    debug_assert_eq!(weights.len(), c_out * c_in * k * k);
    debug_assert_eq!(bias.len(), c_out);
    debug_assert_eq!(pad, k / 2);
    assert!(k == 1 || k == 3, "kernel sizes 1 and 3 are supported");
    let zero_row = vec![0.0f64; w];
    for b in 0..n {
        for co in 0..c_out {
            out.plane_mut(b, co).fill(bias[co]);
            for ci in 0..c_in {
                let src = input.plane(b, ci);
                let dst = out.plane_mut(b, co);
                if k == 1 {
                    let wv = weights[co * c_in + ci];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += wv * s;
                    }
                } else {
                    let wbase = ((co * c_in) + ci) * 9;
                    let w9: &[f64; 9] = weights[wbase..wbase + 9].try_into().unwrap();
                    corr3_accum(dst, src, w9, h, w, &zero_row);
                }
            }
        }
    }
}

/// Gradient of the convolution with respect to its input: correlation of the
/// output gradient with the 180°-rotated kernel, channel roles swapped.
pub fn conv_backward_input(
    grad_out: &Tensor4,
    weights: &[f64],
    c_in: usize,
    k: usize,
    pad: usize,
) -> Tensor4 {
    let (n, _, h, w) = grad_out.dims();
    let mut grad_in = Tensor4::zeros(n, c_in, h, w);
    conv_backward_input_acc(&mut grad_in, grad_out, weights, c_in, k, pad);
    grad_in
}

/// Accumulating variant: adds the input gradient into `grad_in`.
pub fn conv_backward_input_acc(
    grad_in: &mut Tensor4,
    grad_out: &Tensor4,
    weights: &[f64],
    c_in: usize,
    k: usize,
    pad: usize,
) {
    let (n, c_out, h, w) = grad_out.dims();
    debug_assert_eq!(grad_in.dims(), (n, c_in, h, w));
    debug_assert_eq!(pad, k / 2);
    let zero_row = vec![0.0f64; w];
    for b in 0..n {
        for ci in 0..c_in {
            let dst = grad_in.plane_mut(b, ci);
            for co in 0..c_out {
                let src = grad_out.plane(b, co);
                if k == 1 {
                    let wv = weights[co * c_in + ci];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += wv * s;
                    }
                } else {
                    let wbase = ((co * c_in) + ci) * 9;
                    let rot: [f64; 9] = [
                        weights[wbase + 8],
                        weights[wbase + 7],
                        weights[wbase + 6],
                        weights[wbase + 5],
                        weights[wbase + 4],
                        weights[wbase + 3],
                        weights[wbase + 2],
                        weights[wbase + 1],
                        weights[wbase],
                    ];
                    corr3_accum(dst, src, &rot, h, w, &zero_row);
                }
            }
        }
    }
}

/// Gradients with respect to weights and bias. All nine 3×3 taps are
/// accumulated in one pass per (co, ci) pair: per output row, the gradient
/// row is paired with the three source rows it touches, with four-lane
/// partial sums in a fixed combination order.
pub fn conv_backward_params(
    input: &Tensor4,
    grad_out: &Tensor4,
    c_out: usize,
    k: usize,
    pad: usize,
    grad_weights: &mut [f64],
    grad_bias: &mut [f64],
) {
    let (n, c_in, h, w) = input.dims();
    debug_assert_eq!(grad_weights.len(), c_out * c_in * k * k);
    debug_assert_eq!(grad_bias.len(), c_out);
    debug_assert_eq!(pad, k / 2);
    let zero_row = vec![0.0f64; w];
    for b in 0..n {
        for co in 0..c_out {
            let gout = grad_out.plane(b, co);
            grad_bias[co] += sum_lanes(gout);
            for ci in 0..c_in {
                let src = input.plane(b, ci);
                if k == 1 {
                    grad_weights[co * c_in + ci] += dot_lanes(gout, src);
                    continue;
                }
                let wbase = ((co * c_in) + ci) * 9;
                let taps = tap_grads_3x3(gout, src, h, w, &zero_row);
                for (t, g) in taps.iter().enumerate() {
                    grad_weights[wbase + t] += g;
                }
            }
        }
    }
}

/// Σ_y,x gout[y][x] · src[y+ky-1][x+kx-1] for all nine (ky, kx) taps of a
/// padded 3×3 kernel, in one pass over the rows.
fn tap_grads_3x3(gout: &[f64], src: &[f64], h: usize, w: usize, zero_row: &[f64]) -> [f64; 9] {
    const L: usize = 4;
    let mut taps = [0.0f64; 9];
    if w < 2 {
        for y in 0..h {
            for x in 0..w {
                let g = gout[y * w + x];
                for ky in 0..3usize {
                    for kx in 0..3usize {
                        let sy = y as isize + ky as isize - 1;
                        let sx = x as isize + kx as isize - 1;
                        if sy >= 0 && sy < h as isize && sx >= 0 && sx < w as isize {
                            taps[ky * 3 + kx] += g * src[sy as usize * w + sx as usize];
                        }
                    }
                }
            }
        }
        return taps;
    }
    let mut acc = [[0.0f64; L]; 9];
    let mut edge = [0.0f64; 9];
    for y in 0..h {
        let rows: [&[f64]; 3] = [
            if y > 0 { &src[(y - 1) * w..y * w] } else { zero_row },
            &src[y * w..(y + 1) * w],
            if y + 1 < h { &src[(y + 1) * w..(y + 2) * w] } else { zero_row },
        ];
        let grow = &gout[y * w..(y + 1) * w];
        // boundary columns (taps falling on padding contribute nothing)
        let g0 = grow[0];
        let g1 = grow[w - 1];
        for (r, row) in rows.iter().enumerate() {
            edge[r * 3 + 1] += g0 * row[0];
            edge[r * 3 + 2] += g0 * row[1];
            edge[r * 3] += g1 * row[w - 2];
            edge[r * 3 + 1] += g1 * row[w - 1];
        }
        // interior: x in 1..w-1, vector lanes of four
        let n_int = w - 2;
        let gi = &grow[1..1 + n_int];
        let chunks = n_int / L;
        for c in 0..chunks {
            let base = c * L;
            let gc = &gi[base..base + L];
            for (r, row) in rows.iter().enumerate() {
                let r0 = &row[base..base + L];
                let r1 = &row[base + 1..base + 1 + L];
                let r2 = &row[base + 2..base + 2 + L];
                let a = &mut acc[r * 3];
                for j in 0..L {
                    a[j] += gc[j] * r0[j];
                }
                let a = &mut acc[r * 3 + 1];
                for j in 0..L {
                    a[j] += gc[j] * r1[j];
                }
                let a = &mut acc[r * 3 + 2];
                for j in 0..L {
                    a[j] += gc[j] * r2[j];
                }
            }
        }
        for x in chunks * L..n_int {
            let g = gi[x];
            for (r, row) in rows.iter().enumerate() {
                edge[r * 3] += g * row[x];
                edge[r * 3 + 1] += g * row[x + 1];
                edge[r * 3 + 2] += g * row[x + 2];
            }
        }
    }
    for t in 0..9 {
        taps[t] = ((acc[t][0] + acc[t][1]) + (acc[t][2] + acc[t][3])) + edge[t];
    }
    taps
}

/// Leaky rectifier, slope applied to negative inputs.
pub fn leaky_relu_forward(input: &Tensor4, slope: f64) -> Tensor4 {
    let (n, c, h, w) = input.dims();
    let mut out = Tensor4::zeros(n, c, h, w);
    leaky_relu_forward_into(&mut out, input, slope);
    out
}

pub fn leaky_relu_forward_into(out: &mut Tensor4, input: &Tensor4, slope: f64) {
    debug_assert_eq!(out.dims(), input.dims());
    for (o, &v) in out.values_mut().iter_mut().zip(input.values()) {
        *o = if v >= 0.0 { v } else { slope * v };
    }
}

/// Backward pass masks on the sign of the forward *input*.
pub fn leaky_relu_backward(input: &Tensor4, grad_out: &Tensor4, slope: f64) -> Tensor4 {
    let (n, c, h, w) = input.dims();
    let mut grad_in = Tensor4::zeros(n, c, h, w);
    leaky_relu_backward_acc(&mut grad_in, input, grad_out, slope);
    grad_in
}

pub fn leaky_relu_backward_acc(grad_in: &mut Tensor4, input: &Tensor4, grad_out: &Tensor4, slope: f64) {
    debug_assert_eq!(grad_in.dims(), input.dims());
    for ((gi, &v), &go) in
        grad_in.values_mut().iter_mut().zip(input.values()).zip(grad_out.values())
    {
        *gi += if v >= 0.0 { go } else { slope * go };
    }
}

/// 2×2 average pooling; spatial dims must be even.
pub fn avg_pool2_forward(input: &Tensor4) -> Tensor4 {
    let (n, c, h, w) = input.dims();
    let mut out = Tensor4::zeros(n, c, h / 2, w / 2);
    avg_pool2_forward_into(&mut out, input);
    out
}

pub fn avg_pool2_forward_into(out: &mut Tensor4, input: &Tensor4) {
    let (n, c, h, w) = input.dims();
    debug_assert!(h % 2 == 0 && w % 2 == 0);
    let (oh, ow) = (h / 2, w / 2);
    debug_assert_eq!(out.dims(), (n, c, oh, ow));
    for b in 0..n {
        for ch in 0..c {
            let src = input.plane(b, ch);
            let dst = out.plane_mut(b, ch);
            for y in 0..oh {
                let r0 = &src[(2 * y) * w..(2 * y) * w + w];
                let r1 = &src[(2 * y + 1) * w..(2 * y + 1) * w + w];
                let drow = &mut dst[y * ow..(y + 1) * ow];
                for x in 0..ow {
                    drow[x] = 0.25 * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
                }
            }
        }
    }
}

pub fn avg_pool2_backward(grad_out: &Tensor4) -> Tensor4 {
    let (n, c, oh, ow) = grad_out.dims();
    let mut grad_in = Tensor4::zeros(n, c, oh * 2, ow * 2);
    avg_pool2_backward_acc(&mut grad_in, grad_out);
    grad_in
}

pub fn avg_pool2_backward_acc(grad_in: &mut Tensor4, grad_out: &Tensor4) {
    let (n, c, oh, ow) = grad_out.dims();
    let (h, w) = (oh * 2, ow * 2);
    debug_assert_eq!(grad_in.dims(), (n, c, h, w));
    for b in 0..n {
        for ch in 0..c {
            let src = grad_out.plane(b, ch);
            let dst = grad_in.plane_mut(b, ch);
            for y in 0..oh {
                for x in 0..ow {
                    let g = 0.25 * src[y * ow + x];
                    dst[(2 * y) * w + 2 * x] += g;
                    dst[(2 * y) * w + 2 * x + 1] += g;
                    dst[(2 * y + 1) * w + 2 * x] += g;
                    dst[(2 * y + 1) * w + 2 * x + 1] += g;
                }
            }
        }
    }
}

/// Nearest-neighbor ×2 upsampling.
pub fn upsample2_forward(input: &Tensor4) -> Tensor4 {
    let (n, c, h, w) = input.dims();
    let mut out = Tensor4::zeros(n, c, h * 2, w * 2);
    upsample2_forward_into(&mut out, input);
    out
}

pub fn upsample2_forward_into(out: &mut Tensor4, input: &Tensor4) {
    let (n, c, h, w) = input.dims();
    let (oh, ow) = (h * 2, w * 2);
    debug_assert_eq!(out.dims(), (n, c, oh, ow));
    for b in 0..n {
        for ch in 0..c {
            let src = input.plane(b, ch);
            let dst = out.plane_mut(b, ch);
            for y in 0..h {
                for x in 0..w {
                    let v = src[y * w + x];
                    dst[(2 * y) * ow + 2 * x] = v;
                    dst[(2 * y) * ow + 2 * x + 1] = v;
                    dst[(2 * y + 1) * ow + 2 * x] = v;
                    dst[(2 * y + 1) * ow + 2 * x + 1] = v;
                }
            }
        }
    }
}

pub fn upsample2_backward(grad_out: &Tensor4) -> Tensor4 {
    let (n, c, oh, ow) = grad_out.dims();
    let mut grad_in = Tensor4::zeros(n, c, oh / 2, ow / 2);
    upsample2_backward_acc(&mut grad_in, grad_out);
    grad_in
}

pub fn upsample2_backward_acc(grad_in: &mut Tensor4, grad_out: &Tensor4) {
    let (n, c, oh, ow) = grad_out.dims();
    let (h, w) = (oh / 2, ow / 2);
    debug_assert_eq!(grad_in.dims(), (n, c, h, w));
    for b in 0..n {
        for ch in 0..c {
            let src = grad_out.plane(b, ch);
            let dst = grad_in.plane_mut(b, ch);
            for y in 0..h {
                for x in 0..w {
                    dst[y * w + x] += src[(2 * y) * ow + 2 * x]
                        + src[(2 * y) * ow + 2 * x + 1]
                        + src[(2 * y + 1) * ow + 2 * x]
                        + src[(2 * y + 1) * ow + 2 * x + 1];
                }
            }
        }
    }
}

/// Channel concatenation [a; b].
pub fn concat_forward(a: &Tensor4, b: &Tensor4) -> Tensor4 {
    let (n, ca, h, w) = a.dims();
    let (_, cb, _, _) = b.dims();
    let mut out = Tensor4::zeros(n, ca + cb, h, w);
    concat_forward_into(&mut out, a, b);
    out
}

pub fn concat_forward_into(out: &mut Tensor4, a: &Tensor4, b: &Tensor4) {
    let (n, ca, h, w) = a.dims();
    let (nb, cb, hb, wb) = b.dims();
    debug_assert_eq!((n, h, w), (nb, hb, wb));
    debug_assert_eq!(out.dims(), (n, ca + cb, h, w));
    for bi in 0..n {
        for c in 0..ca {
            out.plane_mut(bi, c).copy_from_slice(a.plane(bi, c));
        }
        for c in 0..cb {
            out.plane_mut(bi, ca + c).copy_from_slice(b.plane(bi, c));
        }
    }
}

/// Splits the concatenated gradient back into the two sources.
pub fn concat_backward(grad_out: &Tensor4, ca: usize, cb: usize) -> (Tensor4, Tensor4) {
    let (n, _, h, w) = grad_out.dims();
    let mut ga = Tensor4::zeros(n, ca, h, w);
    let mut gb = Tensor4::zeros(n, cb, h, w);
    concat_backward_acc(&mut ga, &mut gb, grad_out);
    (ga, gb)
}

pub fn concat_backward_acc(ga: &mut Tensor4, gb: &mut Tensor4, grad_out: &Tensor4) {
    let (n, c, _, _) = grad_out.dims();
    let ca = ga.channels();
    let cb = gb.channels();
    debug_assert_eq!(c, ca + cb);
    for bi in 0..n {
        for ch in 0..ca {
            for (d, s) in ga.plane_mut(bi, ch).iter_mut().zip(grad_out.plane(bi, ch)) {
                *d += s;
            }
        }
        for ch in 0..cb {
            for (d, s) in gb.plane_mut(bi, ch).iter_mut().zip(grad_out.plane(bi, ca + ch)) {
                *d += s;
            }
        }
    }
}
