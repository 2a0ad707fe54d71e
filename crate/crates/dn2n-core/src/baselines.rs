//! Comparison baselines: adjacent-frame pairing (the burst-denoising style
//! of training on consecutive frames) and plain frame averaging.

use crate::dn2n::{EpochLoss, TrainConfig, TrainedModel};
use crate::error::{CoreError, Result};
use crate::imaging::{Domain, FrameSequence, Image};
use crate::nn::{AdamState, Tensor4, UNet};
use crate::rng::StreamRng;

/// Adjacent-frame training pairs: every (i, i+1) with index gap exactly 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingPlan {
    pairs: Vec<(usize, usize)>,
}

impl PairingPlan {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Builds the (i → i+1) plan over a sequence.
pub fn build_td_pairs(seq: &FrameSequence) -> Result<PairingPlan> {
    if seq.len() < 2 {
        return Err(CoreError::InvalidArgument("pairing needs at least two frames".into()));
    }
    Ok(PairingPlan { pairs: (0..seq.len() - 1).map(|i| (i, i + 1)).collect() })
}

/// Trains the same network on adjacent pairs: input is the source frame with
/// the time plane forced to 0, target is the next frame; no auxiliary
/// transforms and no averaging term. σ̃, μ and K in the config are ignored.
/// Prediction for the result is the shared prediction path with σ̃ = 0,
/// K = 1.
pub fn train_td(plan: &PairingPlan, config: &TrainConfig, seq: &FrameSequence) -> Result<TrainedModel> {
    config.validate()?;
    if plan.is_empty() {
        return Err(CoreError::InvalidArgument("empty pairing plan".into()));
    }
    for &(a, b) in plan.pairs() {
        if b >= seq.len() || a >= seq.len() {
            return Err(CoreError::InvalidArgument(format!("pair ({a},{b}) out of range")));
        }
    }
    if seq.frame(0).domain() != Domain::Raw255 {
        return Err(CoreError::InvalidArgument("training frames must be Raw255".into()));
    }
    let net = UNet::new(config.model.clone())?;
    let mut params = net.init_params(config.seed);
    let mut adam = AdamState::new(&params, config.lr);
    let (h, w) = (seq.frame(0).height(), seq.frame(0).width());
    let d = (h * w) as f64;
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..plan.len()).collect();
        StreamRng::new(config.seed, "td-shuffle", &[epoch as u64]).shuffle(&mut order);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch) {
            // canonical order within the minibatch
            let mut chunk = chunk.to_vec();
            chunk.sort_unstable();
            let n = chunk.len();
            let mut inputs = Tensor4::zeros(n, 2, h, w);
            let mut targets = Tensor4::zeros(n, 1, h, w);
            for (slot, &p) in chunk.iter().enumerate() {
                let (src, tgt) = plan.pairs()[p];
                for (dst, v) in inputs.plane_mut(slot, 0).iter_mut().zip(seq.frame(src).pixels()) {
                    *dst = v / 255.0;
                }
                // time plane stays 0
                for (dst, v) in targets.plane_mut(slot, 0).iter_mut().zip(seq.frame(tgt).pixels()) {
                    *dst = v / 255.0;
                }
            }
            let (out, tape) = net.forward(&params, &inputs)?;
            let mut grad_out = Tensor4::zeros(n, 1, h, w);
            let mut loss = 0.0;
            let scale = 2.0 / (d * n as f64);
            for slot in 0..n {
                let f = out.plane(slot, 0);
                let t = targets.plane(slot, 0);
                let g = grad_out.plane_mut(slot, 0);
                for idx in 0..f.len() {
                    let r = f[idx] - t[idx];
                    loss += r * r;
                    g[idx] = scale * r;
                }
            }
            loss /= d * n as f64;
            if !loss.is_finite() {
                return Err(CoreError::NumericFailure(format!(
                    "non-finite pair loss at epoch {epoch}, pairs {chunk:?}"
                )));
            }
            let grads = net.backward(&params, &tape, &grad_out)?;
            adam.step(&mut params, &grads)?;
            loss_sum += loss * n as f64;
        }
        let ld = loss_sum / plan.len() as f64;
        epoch_losses.push(EpochLoss { ld, la: None, lt: ld });
    }

    Ok(TrainedModel {
        spec: config.model.clone(),
        params,
        epoch_losses,
        config_hash: config.config_hash(),
    })
}

/// Pixel-wise arithmetic mean over all frames.
pub fn frame_average(seq: &FrameSequence) -> Result<Image> {
    if seq.is_empty() {
        return Err(CoreError::InvalidArgument("cannot average an empty sequence".into()));
    }
    let first = seq.frame(0);
    let mut acc = vec![0.0f64; first.pixels().len()];
    for frame in seq.frames() {
        for (a, v) in acc.iter_mut().zip(frame.pixels()) {
            *a += v;
        }
    }
    let n = seq.len() as f64;
    for a in acc.iter_mut() {
        *a /= n;
    }
    Image::new(first.height(), first.width(), first.domain(), acc)
}
