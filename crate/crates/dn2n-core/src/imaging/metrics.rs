//! PSNR and SSIM.

use super::Image;
use crate::error::{CoreError, Result};

pub const SSIM_DEFAULT_WINDOW: usize = 7;
pub const SSIM_DEFAULT_K1: f64 = 0.01;
pub const SSIM_DEFAULT_K2: f64 = 0.03;

fn check_pair(reference: &Image, test: &Image) -> Result<()> {
    if !reference.same_shape(test) {
        return Err(CoreError::ShapeMismatch(format!(
            "reference {}x{} vs test {}x{}",
            reference.height(),
            reference.width(),
            test.height(),
            test.width()
        )));
    }
    Ok(())
}

/// Peak signal-to-noise ratio in decibels: 10·log10(data_range² / MSE).
/// Identical images yield the `f64::INFINITY` sentinel.
pub fn psnr(reference: &Image, test: &Image, data_range: f64) -> Result<f64> {
    check_pair(reference, test)?;
    if !(data_range > 0.0) || !data_range.is_finite() {
        return Err(CoreError::InvalidArgument("data_range must be positive and finite".into()));
    }
    let n = reference.pixels().len() as f64;
    let mse: f64 = reference
        .pixels()
        .iter()
        .zip(test.pixels())
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (data_range * data_range / mse).log10())
}

/// Mean structural similarity with a uniform square window.
///
/// Local statistics use the unbiased (sample) covariance normalization and
/// the mean is taken over every fully contained window position, matching
/// the common reference implementation with its defaults
/// (window 7, k1 = 0.01, k2 = 0.03).
pub fn ssim(
    reference: &Image,
    test: &Image,
    data_range: f64,
    window: usize,
    k1: f64,
    k2: f64,
) -> Result<f64> {
    check_pair(reference, test)?;
    if !(data_range > 0.0) || !data_range.is_finite() {
        return Err(CoreError::InvalidArgument("data_range must be positive and finite".into()));
    }
    if window % 2 == 0 || window == 0 {
        return Err(CoreError::InvalidArgument(format!("window must be odd, got {window}")));
    }
    let (h, w) = (reference.height(), reference.width());
    if window > h.min(w) {
        return Err(CoreError::InvalidArgument(format!(
            "window {window} exceeds image side {}",
            h.min(w)
        )));
    }

    // Summed-area tables over x, y, x², y², xy.
    let x = reference.pixels();
    let y = test.pixels();
    let sat_w = w + 1;
    let mut sums = vec![[0.0f64; 5]; (h + 1) * sat_w];
    for r in 0..h {
        let mut row_acc = [0.0f64; 5];
        for c in 0..w {
            let (a, b) = (x[r * w + c], y[r * w + c]);
            let vals = [a, b, a * a, b * b, a * b];
            for k in 0..5 {
                row_acc[k] += vals[k];
            }
            let above = sums[r * sat_w + c + 1];
            let cur = &mut sums[(r + 1) * sat_w + c + 1];
            for k in 0..5 {
                cur[k] = above[k] + row_acc[k];
            }
        }
    }
    let window_sum = |r0: usize, c0: usize| -> [f64; 5] {
        let (r1, c1) = (r0 + window, c0 + window);
        let mut out = [0.0f64; 5];
        for k in 0..5 {
            out[k] = sums[r1 * sat_w + c1][k] - sums[r0 * sat_w + c1][k]
                - sums[r1 * sat_w + c0][k]
                + sums[r0 * sat_w + c0][k];
        }
        out
    };

    let np = (window * window) as f64;
    let cov_norm = np / (np - 1.0); // sample covariance
    let c1 = (k1 * data_range).powi(2);
    let c2 = (k2 * data_range).powi(2);
    let mut total = 0.0f64;
    let mut count = 0usize;
    for r0 in 0..=(h - window) {
        for c0 in 0..=(w - window) {
            let s = window_sum(r0, c0);
            let ux = s[0] / np;
            let uy = s[1] / np;
            let vx = cov_norm * (s[2] / np - ux * ux);
            let vy = cov_norm * (s[3] / np - uy * uy);
            let vxy = cov_norm * (s[4] / np - ux * uy);
            let a1 = 2.0 * ux * uy + c1;
            let a2 = 2.0 * vxy + c2;
            let b1 = ux * ux + uy * uy + c1;
            let b2 = vx + vy + c2;
            total += (a1 * a2) / (b1 * b2);
            count += 1;
        }
    }
    Ok(total / count as f64)
}
