//! The training loop.
//!
//! Per epoch: every (k, j, i) item, shuffled, consumed in minibatches with
//! one Adam step each; then, when μ > 0, one Adam step per (k, j) for the
//! scaled averaging-loss gradient, accumulated over all N τ values in
//! chunks. Transform noise fields are redrawn per epoch unless the config
//! pins them. A non-finite loss aborts with the offending epoch and items.

use super::loss::{LossEngine, LossItem, TrainData};
use super::{EpochLoss, TrainConfig, TrainedModel};
use crate::error::{CoreError, Result};
use crate::imaging::FrameSequence;
use crate::nn::{AdamState, UNet};
use crate::rng::StreamRng;
use crate::synth::TauSampler;

pub fn train(config: &TrainConfig, noisy: &[FrameSequence], tau: &TauSampler) -> Result<TrainedModel> {
    config.validate()?;
    let data = TrainData::new(noisy, tau)?;
    let net = UNet::new(config.model.clone())?;
    let mut params = net.init_params(config.seed);
    let mut adam = AdamState::new(&params, config.lr);
    let mut engine = LossEngine::new(&net);
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    let (l, m, n) = (config.l_transforms, data.n_seq(), data.n_tau());
    let a_coeff = config.mu / (l * m * n) as f64;

    for epoch in 0..config.epochs {
        let epoch_key = if config.static_transforms { 0 } else { epoch as u64 + 1 };

        let mut items: Vec<LossItem> = (0..l)
            .flat_map(|k| (0..m).flat_map(move |j| (0..n).map(move |i| LossItem { k, j, i })))
            .collect();
        StreamRng::new(config.seed, "epoch-shuffle", &[epoch as u64]).shuffle(&mut items);

        let mut ld_sum = 0.0;
        for batch in items.chunks(config.batch) {
            let (loss, grads) = engine.loss_d_batch(&params, batch, &data, config, epoch_key)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(CoreError::NumericFailure(format!(
                    "non-finite transformed-input loss at epoch {epoch}, items {batch:?}"
                )));
            }
            adam.step(&mut params, &grads)?;
            ld_sum += loss * batch.len() as f64;
        }
        let ld = ld_sum / items.len() as f64;

        let la = if config.mu > 0.0 {
            let mut la_sum = 0.0;
            for k in 0..l {
                for j in 0..m {
                    let (a, mut grads) = engine.loss_a_term(&params, k, j, &data, config, epoch_key)?;
                    if !a.is_finite() || !grads.is_finite() {
                        return Err(CoreError::NumericFailure(format!(
                            "non-finite averaging loss at epoch {epoch}, transform {k}, sequence {j}"
                        )));
                    }
                    grads.scale(a_coeff);
                    adam.step(&mut params, &grads)?;
                    la_sum += a;
                }
            }
            Some(la_sum / (l * m) as f64)
        } else {
            None
        };

        let lt = ld + la.map_or(0.0, |v| a_coeff * v);
        epoch_losses.push(EpochLoss { ld, la, lt });
    }

    Ok(TrainedModel {
        spec: config.model.clone(),
        params,
        epoch_losses,
        config_hash: config.config_hash(),
    })
}
