//! Loss kernels.
//!
//! The transformed-input loss regresses f(m(y_0), τ_i) onto m′(y_{τ_i});
//! the averaging loss matches the mean reconstruction over all τ against
//! the mean transformed target. Every squared norm is divided by the pixel
//! count, so reported values are on a per-pixel scale regardless of image
//! size. Transform noise fields are drawn from streams keyed by
//! (epoch, transform k, τ slot, sequence j): evaluation order and thread
//! count cannot change the bytes, and a finite-difference probe sees frozen
//! noise.

use super::TrainConfig;
use crate::error::{CoreError, Result};
use crate::imaging::{Domain, FrameSequence, Image};
use crate::nn::{GradStore, Tensor4, UNet, Workspace};
use crate::rng::StreamRng;

/// Stacks the image as channel 0 and a constant plane holding `t` as
/// channel 1, ready for the network.
pub fn time_plane_concat(im: &Image, t: f64) -> Result<Tensor4> {
    if im.domain() != Domain::Unit {
        return Err(CoreError::InvalidArgument("network inputs are Unit-domain images".into()));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(CoreError::InvalidArgument(format!("time must be >= 0, got {t}")));
    }
    let (h, w) = (im.height(), im.width());
    let mut values = Vec::with_capacity(2 * h * w);
    values.extend_from_slice(im.pixels());
    values.extend(std::iter::repeat(t).take(h * w));
    Tensor4::from_values(1, 2, h, w, values)
}

/// m(y) = y + ε with ε i.i.d. zero-mean Gaussian of deviation `sigma_tilde`
/// (0..255 scale). σ̃ = 0 returns the input unchanged.
pub fn transform_input(im: &Image, sigma_tilde: f64, rng: &mut StreamRng) -> Result<Image> {
    if sigma_tilde < 0.0 {
        return Err(CoreError::InvalidArgument("sigma_tilde must be >= 0".into()));
    }
    if im.domain() != Domain::Raw255 {
        return Err(CoreError::InvalidArgument("transform noise is defined on the Raw255 scale".into()));
    }
    if sigma_tilde == 0.0 {
        return Ok(im.clone());
    }
    let pixels = im.pixels().iter().map(|v| v + sigma_tilde * rng.next_gaussian()).collect();
    Image::new(im.height(), im.width(), Domain::Raw255, pixels)
}

/// One empirical-risk item: transform index k, sequence index j, τ slot i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LossItem {
    pub k: usize,
    pub j: usize,
    pub i: usize,
}

/// The training data a loss evaluation reads: M noisy sequences (Raw255,
/// N+1 frames each) and the per-run τ permutation. τ_i is the sequence time
/// of the permuted frame, so non-toy time scales work unchanged.
pub struct TrainData<'a> {
    pub sequences: &'a [FrameSequence],
    pub tau: &'a crate::synth::TauSampler,
}

impl<'a> TrainData<'a> {
    pub fn new(sequences: &'a [FrameSequence], tau: &'a crate::synth::TauSampler) -> Result<Self> {
        if sequences.is_empty() {
            return Err(CoreError::InvalidArgument("need at least one sequence".into()));
        }
        for (j, s) in sequences.iter().enumerate() {
            if s.frame(0).domain() != Domain::Raw255 {
                return Err(CoreError::InvalidArgument("training frames must be Raw255".into()));
            }
            if s.len() != tau.len() + 1 {
                return Err(CoreError::ShapeMismatch(format!(
                    "sequence {j} has {} frames but the τ permutation covers {}",
                    s.len(),
                    tau.len() + 1
                )));
            }
            if !s.frame(0).same_shape(sequences[0].frame(0)) {
                return Err(CoreError::ShapeMismatch("sequences must share frame shape".into()));
            }
        }
        Ok(TrainData { sequences, tau })
    }

    pub fn n_tau(&self) -> usize {
        self.tau.len()
    }

    pub fn n_seq(&self) -> usize {
        self.sequences.len()
    }

    pub fn frame_shape(&self) -> (usize, usize) {
        (self.sequences[0].frame(0).height(), self.sequences[0].frame(0).width())
    }

    /// (τ value, frame index) for slot i.
    pub fn tau_of(&self, j: usize, i: usize) -> (f64, usize) {
        let (_, frame) = self.tau.tau(i);
        (self.sequences[j].time(frame), frame)
    }

    /// m_k(y_{0,j}) for the epoch, normalized to Unit. The same field is
    /// shared by every τ slot of the pair (k, j) within one epoch.
    fn transformed_base(&self, cfg: &TrainConfig, epoch_key: u64, k: usize, j: usize) -> Result<Image> {
        let mut rng = StreamRng::new(cfg.seed, "m-in", &[epoch_key, k as u64, j as u64]);
        transform_input(self.sequences[j].frame(0), cfg.sigma_tilde, &mut rng)?.normalize()
    }

    /// m′_k(y_{τ_i,j}), normalized to Unit; fresh field per (k, i, j).
    fn transformed_target(
        &self,
        cfg: &TrainConfig,
        epoch_key: u64,
        k: usize,
        i: usize,
        j: usize,
    ) -> Result<Image> {
        let (_, frame) = self.tau.tau(i);
        let mut rng = StreamRng::new(cfg.seed, "m-tgt", &[epoch_key, k as u64, i as u64, j as u64]);
        transform_input(self.sequences[j].frame(frame), cfg.sigma_tilde, &mut rng)?.normalize()
    }
}

fn write_input_entry(batch: &mut Tensor4, slot: usize, base: &Image, t: f64) {
    let hw = base.pixels().len();
    batch.plane_mut(slot, 0).copy_from_slice(base.pixels());
    batch.plane_mut(slot, 1).fill(t);
    debug_assert_eq!(batch.plane(slot, 0).len(), hw);
}

/// Per-item per-pixel squared error, plus the output gradient of the batch
/// mean: g = 2·(f − t)/(d·n_items).
fn mse_per_item(output: &Tensor4, targets: &Tensor4) -> (Vec<f64>, Tensor4) {
    let (n, c, h, w) = output.dims();
    let d = (c * h * w) as f64;
    let mut grads = Tensor4::zeros(n, c, h, w);
    let mut items = Vec::with_capacity(n);
    let scale = 2.0 / (d * n as f64);
    for slot in 0..n {
        let mut acc = 0.0;
        for ch in 0..c {
            let f = output.plane(slot, ch);
            let t = targets.plane(slot, ch);
            let g = grads.plane_mut(slot, ch);
            for idx in 0..f.len() {
                let r = f[idx] - t[idx];
                acc += r * r;
                g[idx] = scale * r;
            }
        }
        items.push(acc / d);
    }
    (items, grads)
}

/// Owns the reusable forward/backward buffers and the per-epoch cache of
/// transformed base frames. A training loop keeps one engine alive; the
/// free functions below are one-shot conveniences over a fresh engine and
/// produce identical bytes.
pub struct LossEngine<'n> {
    net: &'n UNet,
    ws: Workspace,
    base_cache: Vec<((u64, usize, usize), Image)>,
}

impl<'n> LossEngine<'n> {
    pub fn new(net: &'n UNet) -> Self {
        LossEngine { net, ws: net.new_workspace(), base_cache: Vec::new() }
    }

    fn base(&mut self, data: &TrainData, cfg: &TrainConfig, epoch_key: u64, k: usize, j: usize) -> Result<Image> {
        let key = (epoch_key, k, j);
        if let Some((_, im)) = self.base_cache.iter().find(|(c, _)| *c == key) {
            return Ok(im.clone());
        }
        if self.base_cache.first().is_some_and(|((e, _, _), _)| *e != epoch_key) {
            self.base_cache.clear();
        }
        let im = data.transformed_base(cfg, epoch_key, k, j)?;
        self.base_cache.push((key, im.clone()));
        Ok(im)
    }

    /// Mean transformed-input loss over a minibatch of items, with exact
    /// gradients. Items are canonicalized to (k, j, i) order first, so the
    /// value is bit-identical for any enumeration of the same multiset.
    pub fn loss_d_batch(
        &mut self,
        params: &crate::nn::ParamStore,
        items: &[LossItem],
        data: &TrainData,
        cfg: &TrainConfig,
        epoch_key: u64,
    ) -> Result<(f64, GradStore)> {
        if items.is_empty() {
            return Err(CoreError::InvalidArgument("empty loss batch".into()));
        }
        let mut items = items.to_vec();
        items.sort_unstable();
        let (h, w) = data.frame_shape();
        let n = items.len();
        let mut inputs = Tensor4::zeros(n, 2, h, w);
        let mut targets = Tensor4::zeros(n, 1, h, w);
        for (slot, it) in items.iter().enumerate() {
            let base = self.base(data, cfg, epoch_key, it.k, it.j)?;
            let (t_val, _) = data.tau_of(it.j, it.i);
            write_input_entry(&mut inputs, slot, &base, t_val);
            let target = data.transformed_target(cfg, epoch_key, it.k, it.i, it.j)?;
            targets.plane_mut(slot, 0).copy_from_slice(target.pixels());
        }
        self.net.forward_ws(params, &inputs, &mut self.ws)?;
        let (per_item, grad_out) = mse_per_item(self.ws.output(), &targets);
        let loss = per_item.iter().sum::<f64>() / n as f64;
        let mut grads = GradStore::zeros_like(params);
        self.net.backward_ws(params, &mut self.ws, &grad_out, &mut grads)?;
        Ok((loss, grads))
    }

    /// One averaging-loss term a_{k,j} = per-pixel ‖(1/N)Σ_i f(m_k(y_0), τ_i)
    /// − (1/N)Σ_i m′_k(y_{τ_i})‖², with its unscaled parameter gradient.
    /// Two passes over the τ values in chunks of `cfg.batch`: the first
    /// accumulates the mean reconstruction, the second reruns each chunk and
    /// backpropagates the shared residual.
    pub fn loss_a_term(
        &mut self,
        params: &crate::nn::ParamStore,
        k: usize,
        j: usize,
        data: &TrainData,
        cfg: &TrainConfig,
        epoch_key: u64,
    ) -> Result<(f64, GradStore)> {
        let n_tau = data.n_tau();
        if n_tau == 0 {
            return Err(CoreError::InvalidArgument("averaging loss needs N >= 1".into()));
        }
        let (h, w) = data.frame_shape();
        let d = (h * w) as f64;
        let base = self.base(data, cfg, epoch_key, k, j)?;

        let mut mean_target = vec![0.0f64; h * w];
        for i in 0..n_tau {
            let target = data.transformed_target(cfg, epoch_key, k, i, j)?;
            for (m, v) in mean_target.iter_mut().zip(target.pixels()) {
                *m += v;
            }
        }
        for m in mean_target.iter_mut() {
            *m /= n_tau as f64;
        }

        let chunk_size = cfg.batch.max(1);
        let slots: Vec<usize> = (0..n_tau).collect();
        let build_chunk = |chunk: &[usize]| -> Tensor4 {
            let mut inputs = Tensor4::zeros(chunk.len(), 2, h, w);
            for (pos, &i) in chunk.iter().enumerate() {
                let (t_val, _) = data.tau_of(j, i);
                write_input_entry(&mut inputs, pos, &base, t_val);
            }
            inputs
        };

        let mut mean_f = vec![0.0f64; h * w];
        for chunk in slots.chunks(chunk_size) {
            let inputs = build_chunk(chunk);
            self.net.forward_ws(params, &inputs, &mut self.ws)?;
            let out = self.ws.output();
            for pos in 0..chunk.len() {
                for (m, v) in mean_f.iter_mut().zip(out.plane(pos, 0)) {
                    *m += v;
                }
            }
        }
        for m in mean_f.iter_mut() {
            *m /= n_tau as f64;
        }

        let mut loss = 0.0;
        let mut residual = vec![0.0f64; h * w];
        for idx in 0..h * w {
            let r = mean_f[idx] - mean_target[idx];
            loss += r * r;
            // d a / d f_i = 2·(mean_f − mean_t)/(d·N) for every i
            residual[idx] = 2.0 * r / (d * n_tau as f64);
        }
        loss /= d;

        let mut grads = GradStore::zeros_like(params);
        for chunk in slots.chunks(chunk_size) {
            let inputs = build_chunk(chunk);
            self.net.forward_ws(params, &inputs, &mut self.ws)?;
            let mut grad_out = Tensor4::zeros(chunk.len(), 1, h, w);
            for pos in 0..chunk.len() {
                grad_out.plane_mut(pos, 0).copy_from_slice(&residual);
            }
            self.net.backward_ws(params, &mut self.ws, &grad_out, &mut grads)?;
        }
        Ok((loss, grads))
    }

    /// Full-batch transformed-input loss: the mean over every (k, j, i)
    /// item in canonical order, evaluated in chunks of `cfg.batch`.
    pub fn loss_d_full(
        &mut self,
        params: &crate::nn::ParamStore,
        data: &TrainData,
        cfg: &TrainConfig,
        epoch_key: u64,
    ) -> Result<(f64, GradStore)> {
        let mut all = Vec::new();
        for k in 0..cfg.l_transforms {
            for j in 0..data.n_seq() {
                for i in 0..data.n_tau() {
                    all.push(LossItem { k, j, i });
                }
            }
        }
        let total = all.len() as f64;
        let mut loss_acc = 0.0;
        let mut grads = GradStore::zeros_like(params);
        for chunk in all.chunks(cfg.batch.max(1)) {
            let (l, g) = self.loss_d_batch(params, chunk, data, cfg, epoch_key)?;
            let weight = chunk.len() as f64 / total;
            loss_acc += l * weight;
            grads.accumulate(&g, weight);
        }
        Ok((loss_acc, grads))
    }

    /// Full-batch total loss L_D + (μ/(LMN))·L_A with combined exact
    /// gradients.
    pub fn total_loss_full(
        &mut self,
        params: &crate::nn::ParamStore,
        data: &TrainData,
        cfg: &TrainConfig,
        epoch_key: u64,
    ) -> Result<(f64, GradStore)> {
        let (ld, mut grads) = self.loss_d_full(params, data, cfg, epoch_key)?;
        if cfg.mu == 0.0 {
            return Ok((ld, grads));
        }
        let (l, m, n) = (cfg.l_transforms, data.n_seq(), data.n_tau());
        let coeff = cfg.mu / (l * m * n) as f64;
        let mut la_sum = 0.0;
        for k in 0..l {
            for j in 0..m {
                let (a, ga) = self.loss_a_term(params, k, j, data, cfg, epoch_key)?;
                la_sum += a;
                // ∇L̂_A = (1/LM)·Σ ∇a_{k,j}
                grads.accumulate(&ga, coeff / (l * m) as f64);
            }
        }
        let la = la_sum / (l * m) as f64;
        Ok((ld + coeff * la, grads))
    }
}

/// One-shot wrapper over a fresh [`LossEngine`].
pub fn loss_d_batch(
    net: &UNet,
    params: &crate::nn::ParamStore,
    items: &[LossItem],
    data: &TrainData,
    cfg: &TrainConfig,
    epoch_key: u64,
) -> Result<(f64, GradStore)> {
    LossEngine::new(net).loss_d_batch(params, items, data, cfg, epoch_key)
}

/// One-shot wrapper over a fresh [`LossEngine`].
pub fn loss_d_full(
    net: &UNet,
    params: &crate::nn::ParamStore,
    data: &TrainData,
    cfg: &TrainConfig,
    epoch_key: u64,
) -> Result<(f64, GradStore)> {
    LossEngine::new(net).loss_d_full(params, data, cfg, epoch_key)
}

/// One-shot wrapper over a fresh [`LossEngine`].
pub fn loss_a_term(
    net: &UNet,
    params: &crate::nn::ParamStore,
    k: usize,
    j: usize,
    data: &TrainData,
    cfg: &TrainConfig,
    epoch_key: u64,
) -> Result<(f64, GradStore)> {
    LossEngine::new(net).loss_a_term(params, k, j, data, cfg, epoch_key)
}

/// One-shot wrapper over a fresh [`LossEngine`].
pub fn total_loss_full(
    net: &UNet,
    params: &crate::nn::ParamStore,
    data: &TrainData,
    cfg: &TrainConfig,
    epoch_key: u64,
) -> Result<(f64, GradStore)> {
    LossEngine::new(net).total_loss_full(params, data, cfg, epoch_key)
}
