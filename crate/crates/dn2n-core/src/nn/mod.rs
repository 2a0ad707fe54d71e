//! Minimal differentiable convolutional encoder-decoder.

pub mod adam;
pub mod gradcheck;
pub mod layers;
pub mod model;
pub mod serialize;
pub mod tensor;

pub use adam::AdamState;
pub use gradcheck::{grad_check, GradCheckReport};
pub use model::{GradStore, ModelSpec, ParamStore, Tape, UNet, Workspace};
pub use serialize::{load_model, save_model};
pub use tensor::Tensor4;
