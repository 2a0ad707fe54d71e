//! Self-supervised denoising for time-indexed, denatured noisy image sequences.
//!
//! The crate provides:
//!
//! - [`imaging`]: grayscale image containers, PSNR/SSIM, normalization and
//!   bit-exact frame file I/O (binary PGM and the `DNF1` float format);
//! - [`nn`]: a minimal differentiable convolutional encoder-decoder with skip
//!   connections, Adam, gradient checking and model serialization;
//! - [`synth`]: the synthetic denaturation datasets (slow/fast ellipse
//!   schedules, Poisson-Gaussian noise channel) and a generic frame loader;
//! - [`dn2n`]: the time-aware denoising objective (transformed-input loss,
//!   averaging loss), training loop and noise-ensemble prediction;
//! - [`baselines`]: adjacent-frame pairing and plain frame averaging;
//! - [`theory`]: a brute-force oracle for the population-risk minimizer on
//!   discrete instances, plus the observable risk-bound terms (denaturation
//!   gap, mean squared time, empirical-risk proxy).
//!
//! Everything is deterministic for a fixed seed: randomness comes from named
//! counter-based streams ([`rng::StreamRng`]) so results do not depend on
//! thread count or evaluation order.

pub mod baselines;
pub mod dn2n;
pub mod error;
pub mod imaging;
pub mod nn;
pub mod parallel;
pub mod rng;
pub mod synth;
pub mod theory;

pub use error::{CoreError, Result};
