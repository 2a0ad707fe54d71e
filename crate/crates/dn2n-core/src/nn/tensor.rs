//! Dense NCHW activation tensor.

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    batch: usize,
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(batch: usize, channels: usize, height: usize, width: usize) -> Self {
        Tensor4 { batch, channels, height, width, values: vec![0.0; batch * channels * height * width] }
    }

    pub fn from_values(
        batch: usize,
        channels: usize,
        height: usize,
        width: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if batch == 0 || channels == 0 || height == 0 || width == 0 {
            return Err(CoreError::InvalidArgument("tensor dims must be positive".into()));
        }
        if values.len() != batch * channels * height * width {
            return Err(CoreError::ShapeMismatch(format!(
                "expected {} values, got {}",
                batch * channels * height * width,
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(CoreError::NonFinite("tensor contains NaN or Inf".into()));
        }
        Ok(Tensor4 { batch, channels, height, width, values })
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.batch, self.channels, self.height, self.width)
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Immutable view of one channel plane of one batch item.
    pub fn plane(&self, n: usize, c: usize) -> &[f64] {
        let hw = self.height * self.width;
        let off = (n * self.channels + c) * hw;
        &self.values[off..off + hw]
    }

    pub fn plane_mut(&mut self, n: usize, c: usize) -> &mut [f64] {
        let hw = self.height * self.width;
        let off = (n * self.channels + c) * hw;
        &mut self.values[off..off + hw]
    }
}
