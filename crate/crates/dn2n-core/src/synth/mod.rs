//! Synthetic denaturation datasets and the Poisson-Gaussian noise channel.
//!
//! A dataset is N+1 frames of a two-valued image whose bright disc shrinks
//! horizontally into an ellipse as the frame index grows; the axis ratio q_i
//! follows a slow (logarithmic) or fast (exponential) schedule. Each frame is
//! corrupted independently: y = z/λ + δ with z Poisson at rate λ·x and δ
//! zero-mean Gaussian with deviation σ, both on the 0..255 scale, unclamped.

mod dataset;

pub use dataset::{load_dataset, load_frame_directory, read_dataset_manifest, write_dataset, DatasetManifest, FrameOrdering};

use crate::error::{CoreError, Result};
use crate::imaging::{Domain, FrameSequence, Image};
use crate::parallel::par_map;
use crate::rng::StreamRng;

/// Frame index ↦ time: t_i = i/10, so an N=24 dataset spans (0, 2.4].
pub const TIME_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenatureMode {
    Slow,
    Fast,
}

impl DenatureMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DenatureMode::Slow => "slow",
            DenatureMode::Fast => "fast",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "slow" => Ok(DenatureMode::Slow),
            "fast" => Ok(DenatureMode::Fast),
            other => Err(CoreError::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

/// Horizontal axis ratio of the ellipse at frame i of N.
///
/// Slow: q_i = ln(√i·(√e − e)/N + e); fast: q_i = exp(−i^1.1·ln2/N). Both
/// use natural logarithms and give q_0 = 1 exactly.
pub fn q_schedule(mode: DenatureMode, i: usize, n: usize) -> Result<f64> {
    if i > n {
        return Err(CoreError::InvalidArgument(format!("frame index {i} out of range 0..={n}")));
    }
    if i == 0 {
        return Ok(1.0);
    }
    let (i, n) = (i as f64, n as f64);
    Ok(match mode {
        DenatureMode::Slow => {
            let e = std::f64::consts::E;
            (i.sqrt() * (e.sqrt() - e) / n + e).ln()
        }
        DenatureMode::Fast => (-i.powf(1.1) * std::f64::consts::LN_2 / n).exp(),
    })
}

/// Denaturing schedule: mode plus frame count, with q_i per [`q_schedule`].
#[derive(Debug, Clone)]
pub struct DenatureSchedule {
    pub mode: DenatureMode,
    pub n: usize,
}

impl DenatureSchedule {
    pub fn new(mode: DenatureMode, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::InvalidArgument("schedule needs n >= 1".into()));
        }
        Ok(DenatureSchedule { mode, n })
    }

    pub fn q(&self, i: usize) -> Result<f64> {
        q_schedule(self.mode, i, self.n)
    }
}

/// Geometry and pixel values of the toy frames.
#[derive(Debug, Clone)]
pub struct ToySpec {
    /// Image side ℓ; frames are ℓ×ℓ.
    pub side: usize,
    /// Ellipse center in 1-based (a, b) = (horizontal, vertical) coordinates.
    pub center: (usize, usize),
    /// Vertical semi-axis, (3/4)·(ℓ/2).
    pub radius: f64,
    pub inside_value: f64,
    pub outside_value: f64,
    /// Number of denatured frames; the dataset holds n + 1 frames.
    pub n: usize,
}

impl ToySpec {
    /// The reference geometry: 192×192, center (97,97), radius 72, values
    /// 175 inside / 75 outside, 24 denatured frames.
    pub fn default_192() -> Self {
        ToySpec::with_side(192)
    }

    /// Same construction at an arbitrary even side: center (ℓ/2+1, ℓ/2+1),
    /// radius (3/4)·(ℓ/2).
    pub fn with_side(side: usize) -> Self {
        ToySpec {
            side,
            center: (side / 2 + 1, side / 2 + 1),
            radius: 0.75 * side as f64 / 2.0,
            inside_value: 175.0,
            outside_value: 75.0,
            n: 24,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.side == 0 || self.n == 0 {
            return Err(CoreError::InvalidArgument("side and n must be positive".into()));
        }
        if self.center.0 == 0 || self.center.0 > self.side || self.center.1 == 0 || self.center.1 > self.side {
            return Err(CoreError::InvalidArgument("center must lie within the image".into()));
        }
        if !(self.radius > 0.0) {
            return Err(CoreError::InvalidArgument("radius must be positive".into()));
        }
        if self.inside_value == self.outside_value {
            return Err(CoreError::InvalidArgument("inside and outside values must differ".into()));
        }
        Ok(())
    }
}

/// Renders the clean frame with horizontal axis ratio `q`: pixel (a, b)
/// (1-based, a horizontal, b vertical, (1,1) top-left) is inside when
/// (a−ca)²/q² + (b−cb)² ≤ radius².
pub fn render_clean_frame(spec: &ToySpec, q: f64) -> Result<Image> {
    spec.validate()?;
    if !(q > 0.0) {
        return Err(CoreError::InvalidArgument(format!("q must be positive, got {q}")));
    }
    let (ca, cb) = (spec.center.0 as f64, spec.center.1 as f64);
    let r2 = spec.radius * spec.radius;
    let q2 = q * q;
    let mut pixels = Vec::with_capacity(spec.side * spec.side);
    for row in 0..spec.side {
        let b = (row + 1) as f64;
        let db2 = (b - cb) * (b - cb);
        for col in 0..spec.side {
            let a = (col + 1) as f64;
            let da2 = (a - ca) * (a - ca);
            let inside = da2 / q2 + db2 <= r2;
            pixels.push(if inside { spec.inside_value } else { spec.outside_value });
        }
    }
    Image::new(spec.side, spec.side, Domain::Raw255, pixels)
}

/// Poisson-Gaussian channel parameters, on the 0..255 scale.
#[derive(Debug, Clone)]
pub struct NoiseSpec {
    pub lambda: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(lambda: f64, sigma: f64, seed: u64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(CoreError::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(CoreError::InvalidArgument(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(NoiseSpec { lambda, sigma, seed })
    }
}

/// y = z/λ + δ per pixel, z ~ Poisson(λ·x), δ ~ N(0, σ²), independent.
/// Output is unclamped; E[y] = x and Var[y] = x/λ + σ².
pub fn add_poisson_gaussian(clean: &Image, noise: &NoiseSpec, rng: &mut StreamRng) -> Result<Image> {
    if clean.domain() != Domain::Raw255 {
        return Err(CoreError::InvalidArgument("noise is defined on the Raw255 scale".into()));
    }
    if let Some(bad) = clean.pixels().iter().find(|v| **v < 0.0) {
        return Err(CoreError::InvalidArgument(format!(
            "clean pixel {bad} is negative; Poisson rate must be >= 0"
        )));
    }
    let pixels = clean
        .pixels()
        .iter()
        .map(|&x| {
            let z = rng.next_poisson(noise.lambda * x) as f64;
            let delta = if noise.sigma > 0.0 { noise.sigma * rng.next_gaussian() } else { 0.0 };
            z / noise.lambda + delta
        })
        .collect();
    Image::new(clean.height(), clean.width(), Domain::Raw255, pixels)
}

/// Generates the clean and noisy sequences for one mode. Frames are noised
/// independently with per-frame derived streams, so generation may run in
/// parallel without affecting the bytes.
pub fn make_toy_dataset(
    mode: DenatureMode,
    toy: &ToySpec,
    noise: &NoiseSpec,
    threads: usize,
) -> Result<(FrameSequence, FrameSequence)> {
    toy.validate()?;
    let schedule = DenatureSchedule::new(mode, toy.n)?;
    let frames: Vec<Result<(Image, Image)>> = par_map(threads, toy.n + 1, |i| {
        let clean = render_clean_frame(toy, schedule.q(i)?)?;
        let mut rng = StreamRng::new(noise.seed, "frame-noise", &[mode as u64, i as u64]);
        let noisy = add_poisson_gaussian(&clean, noise, &mut rng)?;
        Ok((clean, noisy))
    });
    let mut clean_frames = Vec::with_capacity(toy.n + 1);
    let mut noisy_frames = Vec::with_capacity(toy.n + 1);
    for r in frames {
        let (c, y) = r?;
        clean_frames.push(c);
        noisy_frames.push(y);
    }
    Ok((
        FrameSequence::with_uniform_times(clean_frames, TIME_STEP)?,
        FrameSequence::with_uniform_times(noisy_frames, TIME_STEP)?,
    ))
}

/// The training-time permutation of {1..N}: τ_i = π(i)/10 and τ_i maps to
/// frame index π(i). Fixed per run, derived from the seed.
#[derive(Debug, Clone)]
pub struct TauSampler {
    n: usize,
    permutation: Vec<usize>,
}

impl TauSampler {
    /// Seeded uniform permutation of {1..n}.
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::InvalidArgument("tau sampler needs n >= 1".into()));
        }
        let mut permutation: Vec<usize> = (1..=n).collect();
        let mut rng = StreamRng::new(seed, "tau-permutation", &[]);
        rng.shuffle(&mut permutation);
        Ok(TauSampler { n, permutation })
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::InvalidArgument("tau sampler needs n >= 1".into()));
        }
        Ok(TauSampler { n, permutation: (1..=n).collect() })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// (τ_i, frame index) for slot i = 0..N-1.
    pub fn tau(&self, i: usize) -> (f64, usize) {
        let frame = self.permutation[i];
        (frame as f64 * TIME_STEP, frame)
    }

    /// The ordered list ((τ_i, frame index))_{i=1..N}.
    pub fn samples(&self) -> Vec<(f64, usize)> {
        (0..self.n).map(|i| self.tau(i)).collect()
    }

    pub fn tau_values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.tau(i).0).collect()
    }
}
