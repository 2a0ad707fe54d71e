//! Noise-ensemble prediction: x̂_0 = (1/KM)·Σ_{i,j} f(y_{0,j} + ε_i, 0).

use crate::error::{CoreError, Result};
use crate::imaging::{Domain, Image};
use crate::nn::{ParamStore, Tensor4, UNet};
use crate::parallel::par_map;
use crate::rng::StreamRng;

/// Averages K forward passes at time 0 over fresh auxiliary noise ε_i
/// (shared across the M frames within one ensemble member, per the
/// prediction rule). With σ̃ = 0 every member is identical, so a single
/// pass per frame is returned exactly — the result is then independent of
/// both K and the seed by construction.
pub fn predict(
    net: &UNet,
    params: &ParamStore,
    y0_frames: &[&Image],
    sigma_tilde: f64,
    k_pred: usize,
    seed: u64,
    threads: usize,
) -> Result<Image> {
    if y0_frames.is_empty() {
        return Err(CoreError::InvalidArgument("prediction needs at least one frame".into()));
    }
    if k_pred == 0 {
        return Err(CoreError::InvalidArgument("ensemble size K must be >= 1".into()));
    }
    if sigma_tilde < 0.0 {
        return Err(CoreError::InvalidArgument("sigma_tilde must be >= 0".into()));
    }
    let (h, w) = (y0_frames[0].height(), y0_frames[0].width());
    for f in y0_frames {
        if f.domain() != Domain::Raw255 || f.height() != h || f.width() != w {
            return Err(CoreError::ShapeMismatch("frames must be same-shape Raw255".into()));
        }
    }
    let m = y0_frames.len();

    let forward_at_zero = |frame_px: &[f64], ws: &mut crate::nn::Workspace| -> Result<Vec<f64>> {
        let mut values = Vec::with_capacity(2 * h * w);
        values.extend(frame_px.iter().map(|v| v / 255.0));
        values.extend(std::iter::repeat(0.0).take(h * w));
        let input = Tensor4::from_values(1, 2, h, w, values)?;
        net.forward_ws(params, &input, ws)?;
        Ok(ws.output().plane(0, 0).to_vec())
    };

    // Each worker keeps its own reusable buffers; chunked index ranges keep
    // the reduction order fixed.
    let members: Vec<Result<Vec<f64>>> = if sigma_tilde == 0.0 {
        let mut ws = net.new_workspace();
        (0..m).map(|j| forward_at_zero(y0_frames[j].pixels(), &mut ws)).collect()
    } else if threads <= 1 {
        let mut ws = net.new_workspace();
        (0..k_pred * m)
            .map(|idx| {
                let (i, j) = (idx / m, idx % m);
                let mut rng = StreamRng::new(seed, "predict-noise", &[i as u64]);
                let mut noisy: Vec<f64> = Vec::with_capacity(h * w);
                for &v in y0_frames[j].pixels() {
                    noisy.push(v + sigma_tilde * rng.next_gaussian());
                }
                forward_at_zero(&noisy, &mut ws)
            })
            .collect()
    } else {
        par_map(threads, k_pred * m, |idx| {
            let (i, j) = (idx / m, idx % m);
            let mut rng = StreamRng::new(seed, "predict-noise", &[i as u64]);
            let mut noisy: Vec<f64> = Vec::with_capacity(h * w);
            for &v in y0_frames[j].pixels() {
                noisy.push(v + sigma_tilde * rng.next_gaussian());
            }
            let mut ws = net.new_workspace();
            forward_at_zero(&noisy, &mut ws)
        })
    };

    let mut acc = vec![0.0f64; h * w];
    let mut count = 0usize;
    for member in members {
        let out = member?;
        for (a, v) in acc.iter_mut().zip(&out) {
            *a += v;
        }
        count += 1;
    }
    for a in acc.iter_mut() {
        *a /= count as f64;
    }
    Image::new(h, w, Domain::Unit, acc)
}
