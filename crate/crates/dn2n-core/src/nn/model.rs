//! The encoder-decoder network.
//!
//! Fixed family: `levels.len()` encoder stages of two 3×3 convs + leaky
//! rectifier, 2×2 average-pool downsampling between stages, a decoder that
//! mirrors the encoder with nearest-neighbor ×2 upsampling followed by a 3×3
//! conv, skip connections by channel concatenation, and a final 1×1 conv
//! with no output activation. The network is built once from a [`ModelSpec`]
//! as a flat op list evaluated in order; the [`Tape`] of node values is all
//! the state reverse mode needs.

use super::layers;
use super::tensor::Tensor4;
use crate::error::{CoreError, Result};
use crate::rng::StreamRng;

pub const DEFAULT_KERNEL: usize = 3;
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    /// Image channels plus the constant time plane.
    pub in_channels: usize,
    pub out_channels: usize,
    /// Channel width per encoder level, outermost first.
    pub levels: Vec<usize>,
    pub kernel: usize,
    pub leaky_slope: f64,
}

impl ModelSpec {
    /// Default desk-scale network: one grayscale channel plus the time
    /// plane in, three levels. Widths are deliberately small so a full
    /// training run stays tractable on one CPU core; widen via `levels`
    /// when more capacity is needed.
    pub fn small_default() -> Self {
        ModelSpec {
            in_channels: 2,
            out_channels: 1,
            levels: vec![4, 8, 16],
            kernel: DEFAULT_KERNEL,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    pub fn with_levels(levels: Vec<usize>) -> Self {
        ModelSpec { levels, ..ModelSpec::small_default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(CoreError::InvalidArgument("model needs at least one level".into()));
        }
        if self.levels.iter().any(|&w| w == 0) {
            return Err(CoreError::InvalidArgument("level widths must be positive".into()));
        }
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(CoreError::InvalidArgument("channel counts must be positive".into()));
        }
        if self.kernel % 2 == 0 {
            return Err(CoreError::InvalidArgument("kernel must be odd".into()));
        }
        Ok(())
    }

    /// Spatial dims must divide by this (one pooling per level transition).
    pub fn pool_factor(&self) -> usize {
        1 << (self.levels.len() - 1)
    }
}

#[derive(Debug, Clone)]
pub struct ParamMeta {
    pub name: String,
    /// [c_out, c_in, k, k] for weights, [c_out] for biases.
    pub shape: Vec<usize>,
}

impl ParamMeta {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parameter values in the deterministic order defined by the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    slots: Vec<Vec<f64>>,
}

impl ParamStore {
    pub fn slots(&self) -> &[Vec<f64>] {
        &self.slots
    }

    pub fn slot(&self, i: usize) -> &[f64] {
        &self.slots[i]
    }

    pub fn slot_mut(&mut self, i: usize) -> &mut Vec<f64> {
        &mut self.slots[i]
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn flat_len(&self) -> usize {
        self.slots.iter().map(|s| s.len()).sum()
    }

    fn locate(&self, flat: usize) -> (usize, usize) {
        let mut rest = flat;
        for (i, s) in self.slots.iter().enumerate() {
            if rest < s.len() {
                return (i, rest);
            }
            rest -= s.len();
        }
        panic!("flat index {flat} out of range");
    }

    pub fn flat_get(&self, flat: usize) -> f64 {
        let (i, o) = self.locate(flat);
        self.slots[i][o]
    }

    pub fn flat_set(&mut self, flat: usize, value: f64) {
        let (i, o) = self.locate(flat);
        self.slots[i][o] = value;
    }

    pub fn congruent_with(&self, grads: &GradStore) -> bool {
        self.slots.len() == grads.slots.len()
            && self.slots.iter().zip(&grads.slots).all(|(a, b)| a.len() == b.len())
    }
}

/// Gradients, shape-congruent with a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradStore {
    slots: Vec<Vec<f64>>,
}

impl GradStore {
    pub fn zeros_like(params: &ParamStore) -> Self {
        GradStore { slots: params.slots.iter().map(|s| vec![0.0; s.len()]).collect() }
    }

    pub fn slots(&self) -> &[Vec<f64>] {
        &self.slots
    }

    pub fn slot(&self, i: usize) -> &[f64] {
        &self.slots[i]
    }

    pub fn slot_mut(&mut self, i: usize) -> &mut Vec<f64> {
        &mut self.slots[i]
    }

    pub fn flat_len(&self) -> usize {
        self.slots.iter().map(|s| s.len()).sum()
    }

    pub fn flat_get(&self, flat: usize) -> f64 {
        let mut rest = flat;
        for s in &self.slots {
            if rest < s.len() {
                return s[rest];
            }
            rest -= s.len();
        }
        panic!("flat index {flat} out of range");
    }

    /// self += other * scale, slot by slot.
    pub fn accumulate(&mut self, other: &GradStore, scale: f64) {
        debug_assert_eq!(self.slots.len(), other.slots.len());
        for (dst, src) in self.slots.iter_mut().zip(&other.slots) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s * scale;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for s in &mut self.slots {
            for v in s.iter_mut() {
                *v *= factor;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slots.iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone)]
enum Op {
    Input,
    Conv { src: usize, w: usize, b: usize, c_out: usize, k: usize },
    LeakyRelu { src: usize },
    AvgPool2 { src: usize },
    Upsample2 { src: usize },
    Concat { a: usize, b: usize },
}

/// Node values recorded during a forward pass.
pub struct Tape {
    nodes: Vec<Tensor4>,
    output_node: usize,
}

impl Tape {
    pub fn output(&self) -> &Tensor4 {
        &self.nodes[self.output_node]
    }
}

/// Reusable forward/backward buffers. A training loop keeps one of these
/// alive so no activation or node-gradient memory is reallocated between
/// steps; buffers are rebuilt only when the input shape changes.
pub struct Workspace {
    values: Vec<Tensor4>,
    grads: Vec<Tensor4>,
    key: Option<(usize, usize, usize)>,
    output_node: usize,
}

impl Workspace {
    pub fn new() -> Self {
        Workspace { values: Vec::new(), grads: Vec::new(), key: None, output_node: 0 }
    }

    /// Network output of the most recent `forward_ws`.
    pub fn output(&self) -> &Tensor4 {
        &self.values[self.output_node]
    }
}

impl Default for Workspace {
    fn default() -> Self {
        Workspace::new()
    }
}

pub struct UNet {
    spec: ModelSpec,
    ops: Vec<Op>,
    metas: Vec<ParamMeta>,
    output_node: usize,
}

impl UNet {
    pub fn new(spec: ModelSpec) -> Result<UNet> {
        spec.validate()?;
        let k = spec.kernel;
        let mut ops = vec![Op::Input];
        let mut metas: Vec<ParamMeta> = Vec::new();

        let mut conv = |ops: &mut Vec<Op>, src: usize, name: &str, c_in: usize, c_out: usize, kk: usize| {
            metas.push(ParamMeta { name: format!("{name}.weight"), shape: vec![c_out, c_in, kk, kk] });
            metas.push(ParamMeta { name: format!("{name}.bias"), shape: vec![c_out] });
            ops.push(Op::Conv { src, w: metas.len() - 2, b: metas.len() - 1, c_out, k: kk });
            ops.len() - 1
        };
        let lrelu = |ops: &mut Vec<Op>, src: usize| {
            ops.push(Op::LeakyRelu { src });
            ops.len() - 1
        };

        let depth = spec.levels.len();
        let mut cur = 0usize;
        let mut c_cur = spec.in_channels;
        let mut skips = Vec::with_capacity(depth);
        for (lv, &width) in spec.levels.iter().enumerate() {
            cur = conv(&mut ops, cur, &format!("enc{lv}.conv1"), c_cur, width, k);
            cur = lrelu(&mut ops, cur);
            cur = conv(&mut ops, cur, &format!("enc{lv}.conv2"), width, width, k);
            cur = lrelu(&mut ops, cur);
            skips.push(cur);
            if lv + 1 < depth {
                ops.push(Op::AvgPool2 { src: cur });
                cur = ops.len() - 1;
            }
            c_cur = width;
        }
        for lv in (0..depth.saturating_sub(1)).rev() {
            let width = spec.levels[lv];
            ops.push(Op::Upsample2 { src: cur });
            cur = ops.len() - 1;
            cur = conv(&mut ops, cur, &format!("up{lv}.conv"), spec.levels[lv + 1], width, k);
            cur = lrelu(&mut ops, cur);
            ops.push(Op::Concat { a: cur, b: skips[lv] });
            cur = ops.len() - 1;
            cur = conv(&mut ops, cur, &format!("dec{lv}.conv1"), 2 * width, width, k);
            cur = lrelu(&mut ops, cur);
            cur = conv(&mut ops, cur, &format!("dec{lv}.conv2"), width, width, k);
            cur = lrelu(&mut ops, cur);
        }
        let out = conv(&mut ops, cur, "out", spec.levels[0], spec.out_channels, 1);

        Ok(UNet { spec, ops, metas, output_node: out })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn param_metas(&self) -> &[ParamMeta] {
        &self.metas
    }

    pub fn param_count(&self) -> usize {
        self.metas.iter().map(|m| m.len()).sum()
    }

    /// Seeded Glorot-uniform weights (±√(6/(fan_in+fan_out))), zero biases.
    pub fn init_params(&self, seed: u64) -> ParamStore {
        let slots = self
            .metas
            .iter()
            .enumerate()
            .map(|(idx, meta)| {
                if meta.shape.len() == 4 {
                    let (c_out, c_in, k) = (meta.shape[0], meta.shape[1], meta.shape[2]);
                    let fan_in = (c_in * k * k) as f64;
                    let fan_out = (c_out * k * k) as f64;
                    let bound = (6.0 / (fan_in + fan_out)).sqrt();
                    let mut rng = StreamRng::new(seed, "init", &[idx as u64]);
                    (0..meta.len()).map(|_| (2.0 * rng.next_f64() - 1.0) * bound).collect()
                } else {
                    vec![0.0; meta.len()]
                }
            })
            .collect();
        ParamStore { slots }
    }

    pub fn zero_params(&self) -> ParamStore {
        ParamStore { slots: self.metas.iter().map(|m| vec![0.0; m.len()]).collect() }
    }

    /// Builds a ParamStore from raw slot values, validating shapes.
    pub fn params_from_slots(&self, slots: Vec<Vec<f64>>) -> Result<ParamStore> {
        if slots.len() != self.metas.len() {
            return Err(CoreError::ShapeMismatch(format!(
                "expected {} parameter tensors, got {}",
                self.metas.len(),
                slots.len()
            )));
        }
        for (m, s) in self.metas.iter().zip(&slots) {
            if m.len() != s.len() {
                return Err(CoreError::ShapeMismatch(format!(
                    "parameter {} expects {} values, got {}",
                    m.name,
                    m.len(),
                    s.len()
                )));
            }
        }
        Ok(ParamStore { slots })
    }

    /// (channels, height, width) of every graph node for an H×W input.
    fn node_dims(&self, h: usize, w: usize) -> Vec<(usize, usize, usize)> {
        let mut dims: Vec<(usize, usize, usize)> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let d = match *op {
                Op::Input => (self.spec.in_channels, h, w),
                Op::Conv { src, c_out, .. } => {
                    let (_, sh, sw) = dims[src];
                    (c_out, sh, sw)
                }
                Op::LeakyRelu { src } => dims[src],
                Op::AvgPool2 { src } => {
                    let (c, sh, sw) = dims[src];
                    (c, sh / 2, sw / 2)
                }
                Op::Upsample2 { src } => {
                    let (c, sh, sw) = dims[src];
                    (c, sh * 2, sw * 2)
                }
                Op::Concat { a, b } => {
                    let (ca, sh, sw) = dims[a];
                    let (cb, _, _) = dims[b];
                    (ca + cb, sh, sw)
                }
            };
            dims.push(d);
        }
        dims
    }

    /// Total tape elements per batch entry for an H×W input, used to decide
    /// whether caching tapes is affordable.
    pub fn tape_elems_per_entry(&self, h: usize, w: usize) -> usize {
        self.node_dims(h, w).iter().map(|&(c, hh, ww)| c * hh * ww).sum()
    }

    pub fn new_workspace(&self) -> Workspace {
        Workspace::new()
    }

    fn ensure_workspace(&self, ws: &mut Workspace, n: usize, h: usize, w: usize) {
        if ws.key == Some((n, h, w)) {
            return;
        }
        let dims = self.node_dims(h, w);
        ws.values = dims.iter().map(|&(c, hh, ww)| Tensor4::zeros(n, c, hh, ww)).collect();
        ws.grads = dims.iter().map(|&(c, hh, ww)| Tensor4::zeros(n, c, hh, ww)).collect();
        ws.key = Some((n, h, w));
        ws.output_node = self.output_node;
    }

    /// Forward pass into reusable buffers; read the result via
    /// [`Workspace::output`]. Numerically identical to [`UNet::forward`].
    pub fn forward_ws(&self, params: &ParamStore, input: &Tensor4, ws: &mut Workspace) -> Result<()> {
        self.check_input(input)?;
        let (n, _, h, w) = input.dims();
        self.ensure_workspace(ws, n, h, w);
        for (idx, op) in self.ops.iter().enumerate() {
            let (head, tail) = ws.values.split_at_mut(idx);
            let dst = &mut tail[0];
            match *op {
                Op::Input => dst.values_mut().copy_from_slice(input.values()),
                Op::Conv { src, w: wi, b, c_out, k } => {
                    layers::conv_forward_into(dst, &head[src], params.slot(wi), params.slot(b), c_out, k, k / 2)
                }
                Op::LeakyRelu { src } => {
                    layers::leaky_relu_forward_into(dst, &head[src], self.spec.leaky_slope)
                }
                Op::AvgPool2 { src } => layers::avg_pool2_forward_into(dst, &head[src]),
                Op::Upsample2 { src } => layers::upsample2_forward_into(dst, &head[src]),
                Op::Concat { a, b } => layers::concat_forward_into(dst, &head[a], &head[b]),
            }
        }
        Ok(())
    }

    /// Reverse pass over the workspace of the immediately preceding
    /// `forward_ws` call; parameter gradients are *added* into `acc`.
    pub fn backward_ws(
        &self,
        params: &ParamStore,
        ws: &mut Workspace,
        grad_out: &Tensor4,
        acc: &mut GradStore,
    ) -> Result<()> {
        if ws.key.is_none() || grad_out.dims() != ws.output().dims() {
            return Err(CoreError::ShapeMismatch(format!(
                "output grad dims {:?} do not match workspace output",
                grad_out.dims()
            )));
        }
        if !params.congruent_with(acc) {
            return Err(CoreError::ShapeMismatch("gradient accumulator not congruent".into()));
        }
        for g in ws.grads.iter_mut() {
            g.values_mut().fill(0.0);
        }
        ws.grads[self.output_node]
            .values_mut()
            .copy_from_slice(grad_out.values());

        for (idx, op) in self.ops.iter().enumerate().rev() {
            let (ghead, gtail) = ws.grads.split_at_mut(idx);
            let gout = &gtail[0];
            match *op {
                Op::Input => {}
                Op::Conv { src, w: wi, b, c_out, k } => {
                    let (whead, wtail) = acc.slots.split_at_mut(b);
                    layers::conv_backward_params(
                        &ws.values[src],
                        gout,
                        c_out,
                        k,
                        k / 2,
                        whead[wi].as_mut_slice(),
                        wtail[0].as_mut_slice(),
                    );
                    let c_in = ws.values[src].channels();
                    layers::conv_backward_input_acc(&mut ghead[src], gout, params.slot(wi), c_in, k, k / 2);
                }
                Op::LeakyRelu { src } => {
                    layers::leaky_relu_backward_acc(&mut ghead[src], &ws.values[src], gout, self.spec.leaky_slope)
                }
                Op::AvgPool2 { src } => layers::avg_pool2_backward_acc(&mut ghead[src], gout),
                Op::Upsample2 { src } => layers::upsample2_backward_acc(&mut ghead[src], gout),
                Op::Concat { a, b } => {
                    if a < b {
                        let (first, second) = ghead.split_at_mut(b);
                        layers::concat_backward_acc(&mut first[a], &mut second[0], gout);
                    } else {
                        let (first, second) = ghead.split_at_mut(a);
                        layers::concat_backward_acc(&mut second[0], &mut first[b], gout);
                    }
                }
            }
        }
        Ok(())
    }

    fn check_input(&self, input: &Tensor4) -> Result<()> {
        let (_, c, h, w) = input.dims();
        if c != self.spec.in_channels {
            return Err(CoreError::ShapeMismatch(format!(
                "input has {c} channels, model expects {}",
                self.spec.in_channels
            )));
        }
        let f = self.spec.pool_factor();
        if h % f != 0 || w % f != 0 {
            return Err(CoreError::ShapeMismatch(format!(
                "spatial dims {h}x{w} not divisible by pooling factor {f}"
            )));
        }
        Ok(())
    }

    pub fn forward(&self, params: &ParamStore, input: &Tensor4) -> Result<(Tensor4, Tape)> {
        self.check_input(input)?;
        let mut nodes: Vec<Tensor4> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let value = match *op {
                Op::Input => input.clone(),
                Op::Conv { src, w, b, c_out, k } => layers::conv_forward(
                    &nodes[src],
                    params.slot(w),
                    params.slot(b),
                    c_out,
                    k,
                    k / 2,
                ),
                Op::LeakyRelu { src } => layers::leaky_relu_forward(&nodes[src], self.spec.leaky_slope),
                Op::AvgPool2 { src } => layers::avg_pool2_forward(&nodes[src]),
                Op::Upsample2 { src } => layers::upsample2_forward(&nodes[src]),
                Op::Concat { a, b } => layers::concat_forward(&nodes[a], &nodes[b]),
            };
            nodes.push(value);
        }
        let output = nodes[self.output_node].clone();
        Ok((output, Tape { nodes, output_node: self.output_node }))
    }

    /// Exact reverse-mode gradients of every parameter for the scalar loss
    /// whose gradient with respect to the network output is `grad_out`.
    pub fn backward(&self, params: &ParamStore, tape: &Tape, grad_out: &Tensor4) -> Result<GradStore> {
        if grad_out.dims() != tape.output().dims() {
            return Err(CoreError::ShapeMismatch(format!(
                "output grad dims {:?} vs output {:?}",
                grad_out.dims(),
                tape.output().dims()
            )));
        }
        let mut grads = GradStore { slots: self.metas.iter().map(|m| vec![0.0; m.len()]).collect() };
        let mut node_grads: Vec<Option<Tensor4>> = vec![None; self.ops.len()];
        node_grads[self.output_node] = Some(grad_out.clone());

        let add_grad = |slot: &mut Option<Tensor4>, g: Tensor4| match slot {
            None => *slot = Some(g),
            Some(existing) => {
                for (d, s) in existing.values_mut().iter_mut().zip(g.values()) {
                    *d += s;
                }
            }
        };

        for (idx, op) in self.ops.iter().enumerate().rev() {
            let Some(gout) = node_grads[idx].take() else { continue };
            match *op {
                Op::Input => {}
                Op::Conv { src, w, b, c_out, k } => {
                    // w and b are always adjacent slots (w = b - 1).
                    let (head, tail) = grads.slots.split_at_mut(b);
                    layers::conv_backward_params(
                        &tape.nodes[src],
                        &gout,
                        c_out,
                        k,
                        k / 2,
                        head[w].as_mut_slice(),
                        tail[0].as_mut_slice(),
                    );
                    let c_in = tape.nodes[src].channels();
                    let gin = layers::conv_backward_input(&gout, params.slot(w), c_in, k, k / 2);
                    add_grad(&mut node_grads[src], gin);
                }
                Op::LeakyRelu { src } => {
                    let gin = layers::leaky_relu_backward(&tape.nodes[src], &gout, self.spec.leaky_slope);
                    add_grad(&mut node_grads[src], gin);
                }
                Op::AvgPool2 { src } => {
                    add_grad(&mut node_grads[src], layers::avg_pool2_backward(&gout));
                }
                Op::Upsample2 { src } => {
                    add_grad(&mut node_grads[src], layers::upsample2_backward(&gout));
                }
                Op::Concat { a, b } => {
                    let ca = tape.nodes[a].channels();
                    let cb = tape.nodes[b].channels();
                    let (ga, gb) = layers::concat_backward(&gout, ca, cb);
                    add_grad(&mut node_grads[a], ga);
                    add_grad(&mut node_grads[b], gb);
                }
            }
        }
        Ok(grads)
    }
}
