//! Grayscale image containers, quality metrics and frame file I/O.

mod io;
mod metrics;

pub use io::{read_dnf, read_frame, read_pgm, write_dnf, write_pgm, DNF_MAGIC};
pub use metrics::{psnr, ssim, SSIM_DEFAULT_K1, SSIM_DEFAULT_K2, SSIM_DEFAULT_WINDOW};

use crate::error::{CoreError, Result};

/// Nominal pixel scale of an image. `Raw255` values live on the 0..255 scale
/// but are unclamped reals once noise has been applied; `Unit` is the 0..1
/// scale fed to the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Raw255,
    Unit,
}

/// A dense grayscale raster. Immutable once constructed; constructors check
/// that every value is finite and that the buffer matches the dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    domain: Domain,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, domain: Domain, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(CoreError::InvalidArgument("image dimensions must be positive".into()));
        }
        if pixels.len() != height * width {
            return Err(CoreError::ShapeMismatch(format!(
                "expected {} pixels for {}x{}, got {}",
                height * width,
                height,
                width,
                pixels.len()
            )));
        }
        if !pixels.iter().all(|v| v.is_finite()) {
            return Err(CoreError::NonFinite("image contains NaN or infinite pixels".into()));
        }
        Ok(Image { height, width, domain, pixels })
    }

    pub fn constant(height: usize, width: usize, domain: Domain, value: f64) -> Result<Self> {
        Image::new(height, width, domain, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Pixel at (row, col), 0-based.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Raw255 -> Unit, dividing every pixel by 255.
    pub fn normalize(&self) -> Result<Image> {
        if self.domain != Domain::Raw255 {
            return Err(CoreError::InvalidArgument("normalize expects a Raw255 image".into()));
        }
        let pixels = self.pixels.iter().map(|v| v / 255.0).collect();
        Image::new(self.height, self.width, Domain::Unit, pixels)
    }

    /// Unit -> Raw255. Values are clamped to [0, 255] only when `clamp` is
    /// set (8-bit export); training data stays unclamped.
    pub fn denormalize(&self, clamp: bool) -> Result<Image> {
        if self.domain != Domain::Unit {
            return Err(CoreError::InvalidArgument("denormalize expects a Unit image".into()));
        }
        let pixels = self
            .pixels
            .iter()
            .map(|v| {
                let r = v * 255.0;
                if clamp {
                    r.clamp(0.0, 255.0)
                } else {
                    r
                }
            })
            .collect();
        Image::new(self.height, self.width, Domain::Raw255, pixels)
    }
}

/// An ordered, time-indexed sequence of same-shape frames.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    frames: Vec<Image>,
    times: Vec<f64>,
}

impl FrameSequence {
    pub fn new(frames: Vec<Image>, times: Vec<f64>) -> Result<Self> {
        if frames.is_empty() {
            return Err(CoreError::InvalidArgument("frame sequence may not be empty".into()));
        }
        if frames.len() != times.len() {
            return Err(CoreError::ShapeMismatch(format!(
                "{} frames but {} time stamps",
                frames.len(),
                times.len()
            )));
        }
        let first = &frames[0];
        for (i, f) in frames.iter().enumerate() {
            if !f.same_shape(first) || f.domain() != first.domain() {
                return Err(CoreError::ShapeMismatch(format!(
                    "frame {i} does not match frame 0 in shape or domain"
                )));
            }
        }
        if times[0] != 0.0 {
            return Err(CoreError::InvalidArgument("times[0] must be 0".into()));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(CoreError::InvalidArgument("times must be strictly increasing".into()));
        }
        Ok(FrameSequence { frames, times })
    }

    /// Frames at default spacing t_i = i * time_step.
    pub fn with_uniform_times(frames: Vec<Image>, time_step: f64) -> Result<Self> {
        if time_step <= 0.0 {
            return Err(CoreError::InvalidArgument("time_step must be positive".into()));
        }
        let times = (0..frames.len()).map(|i| i as f64 * time_step).collect();
        FrameSequence::new(frames, times)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, i: usize) -> &Image {
        &self.frames[i]
    }

    pub fn frames(&self) -> &[Image] {
        &self.frames
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}
