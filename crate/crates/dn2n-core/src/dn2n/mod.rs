//! The time-aware denoising objective, its training loop and the
//! noise-ensemble prediction rule.
//!
//! Training regresses the transformed time-0 frame onto the transformed
//! frame at a permuted time τ (per-pixel squared error), optionally
//! regularized by an averaging term that matches the mean reconstruction
//! over all τ against the mean transformed target. Prediction queries the
//! trained network at time 0 and averages over a fresh-noise ensemble.

mod loss;
mod predict;
mod train;

pub use loss::{
    loss_a_term, loss_d_batch, loss_d_full, time_plane_concat, total_loss_full, transform_input,
    LossEngine, LossItem, TrainData,
};
pub use predict::predict;
pub use train::train;

use crate::error::{CoreError, Result};
use crate::nn::ModelSpec;

/// Everything a training run depends on. The shipped defaults are the
/// primary-experiment values: (σ̃, μ, L, K) = (100, 100, 2, 100), learning
/// rate 1e-4, minibatch 4, 1000 epochs.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Auxiliary transform noise deviation, on the 0..255 scale.
    pub sigma_tilde: f64,
    /// Weight of the averaging loss; 0 disables it.
    pub mu: f64,
    /// Number of independent transform pairs per epoch (L).
    pub l_transforms: usize,
    /// Ensemble size for prediction (K).
    pub k_pred: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
    /// Keep the transform noise fields fixed across epochs instead of
    /// redrawing them.
    pub static_transforms: bool,
    pub threads: usize,
    pub model: ModelSpec,
}

impl TrainConfig {
    pub fn expt_defaults() -> Self {
        TrainConfig {
            sigma_tilde: 100.0,
            mu: 100.0,
            l_transforms: 2,
            k_pred: 100,
            epochs: 1000,
            lr: 1e-4,
            batch: 4,
            seed: 1,
            static_transforms: false,
            threads: 1,
            model: ModelSpec::small_default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_tilde < 0.0 || self.mu < 0.0 {
            return Err(CoreError::InvalidArgument("sigma_tilde and mu must be >= 0".into()));
        }
        if self.l_transforms == 0 || self.k_pred == 0 || self.batch == 0 {
            return Err(CoreError::InvalidArgument("counts must be positive".into()));
        }
        if !(self.lr > 0.0) {
            return Err(CoreError::InvalidArgument("learning rate must be positive".into()));
        }
        self.model.validate()
    }

    /// Canonical flat echo of the configuration; hashed into manifests.
    pub fn echo(&self) -> String {
        let levels: Vec<String> = self.model.levels.iter().map(|w| w.to_string()).collect();
        format!(
            "sigma_tilde={}\nmu={}\nl_transforms={}\nk_pred={}\nepochs={}\nlr={}\nbatch={}\nseed={}\nstatic_transforms={}\nlevels={}\nin_channels={}\nout_channels={}\nkernel={}\nleaky_slope={}\n",
            self.sigma_tilde,
            self.mu,
            self.l_transforms,
            self.k_pred,
            self.epochs,
            self.lr,
            self.batch,
            self.seed,
            self.static_transforms,
            levels.join(","),
            self.model.in_channels,
            self.model.out_channels,
            self.model.kernel,
            self.model.leaky_slope,
        )
    }

    pub fn config_hash(&self) -> u64 {
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        for &b in self.echo().as_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100_0000_01B3);
        }
        h
    }
}

/// Per-epoch loss record. `la` is absent when μ = 0 (the averaging phase is
/// skipped entirely).
#[derive(Debug, Clone, Copy)]
pub struct EpochLoss {
    pub ld: f64,
    pub la: Option<f64>,
    pub lt: f64,
}

/// A trained network plus the training trace.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub params: crate::nn::ParamStore,
    pub epoch_losses: Vec<EpochLoss>,
    pub config_hash: u64,
}
