pub mod denoise;
pub mod diagnose;
pub mod eval;
pub mod report;
pub mod synth;
pub mod train;

use std::path::Path;

use dn2n_core::imaging::{Domain, FrameSequence};
use dn2n_core::synth::{load_frame_directory, FrameOrdering, TIME_STEP};

use crate::CliError;

/// Loads the noisy half of a dataset directory (synth layout, `DIR/noisy`)
/// or, failing that, treats DIR itself as a frame directory.
pub fn load_noisy_data(dir: &Path) -> Result<FrameSequence, CliError> {
    let noisy_dir = dir.join("noisy");
    let frames_from = if noisy_dir.is_dir() { noisy_dir } else { dir.to_path_buf() };
    Ok(load_frame_directory(&frames_from, &FrameOrdering::Lexicographic, Domain::Raw255, TIME_STEP)?)
}
