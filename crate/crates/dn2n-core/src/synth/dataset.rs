//! On-disk dataset layout and the generic frame-directory loader.
//!
//! A dataset directory holds `clean/frame_%03d.dnf`, `noisy/frame_%03d.dnf`
//! and a flat `manifest.txt` (mode, lambda, sigma, seed, n, size, times).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{DenatureMode, NoiseSpec, TIME_STEP};
use crate::error::{CoreError, Result};
use crate::imaging::{read_frame, write_dnf, Domain, FrameSequence, Image};

#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub mode: DenatureMode,
    pub lambda: f64,
    pub sigma: f64,
    pub seed: u64,
    pub n: usize,
    pub size: usize,
    pub times: Vec<f64>,
}

impl DatasetManifest {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode={}", self.mode.as_str());
        let _ = writeln!(s, "lambda={}", self.lambda);
        let _ = writeln!(s, "sigma={}", self.sigma);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "size={}", self.size);
        let times: Vec<String> = self.times.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(s, "times={}", times.join(","));
        s
    }
}

/// Writes clean/, noisy/ and manifest.txt under `dir`.
pub fn write_dataset(
    dir: &Path,
    clean: &FrameSequence,
    noisy: &FrameSequence,
    mode: DenatureMode,
    noise: &NoiseSpec,
) -> Result<()> {
    if clean.len() != noisy.len() {
        return Err(CoreError::ShapeMismatch("clean and noisy frame counts differ".into()));
    }
    let clean_dir = dir.join("clean");
    let noisy_dir = dir.join("noisy");
    fs::create_dir_all(&clean_dir)?;
    fs::create_dir_all(&noisy_dir)?;
    for i in 0..clean.len() {
        write_dnf(&clean_dir.join(format!("frame_{i:03}.dnf")), clean.frame(i))?;
        write_dnf(&noisy_dir.join(format!("frame_{i:03}.dnf")), noisy.frame(i))?;
    }
    let manifest = DatasetManifest {
        mode,
        lambda: noise.lambda,
        sigma: noise.sigma,
        seed: noise.seed,
        n: clean.len() - 1,
        size: clean.frame(0).height(),
        times: clean.times().to_vec(),
    };
    fs::write(dir.join("manifest.txt"), manifest.render())?;
    Ok(())
}

fn parse_kv(text: &str) -> Vec<(String, String)> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())))
        .collect()
}

pub fn read_dataset_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join("manifest.txt");
    let text = fs::read_to_string(&path)
        .map_err(|e| CoreError::Format(format!("cannot read {}: {e}", path.display())))?;
    let kv = parse_kv(&text);
    let get = |key: &str| -> Result<&str> {
        kv.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| CoreError::Format(format!("manifest missing key {key}")))
    };
    let mode = DenatureMode::parse(get("mode")?)?;
    let parse_f = |key: &str| -> Result<f64> {
        get(key)?.parse().map_err(|_| CoreError::Format(format!("bad numeric value for {key}")))
    };
    let parse_u = |key: &str| -> Result<u64> {
        get(key)?.parse().map_err(|_| CoreError::Format(format!("bad integer value for {key}")))
    };
    let times = get("times")?
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|_| CoreError::Format("bad times list".into()))?;
    Ok(DatasetManifest {
        mode,
        lambda: parse_f("lambda")?,
        sigma: parse_f("sigma")?,
        seed: parse_u("seed")?,
        n: parse_u("n")? as usize,
        size: parse_u("size")? as usize,
        times,
    })
}

/// How to order the frame files of a directory.
#[derive(Debug, Clone)]
pub enum FrameOrdering {
    /// Lexicographic by file name.
    Lexicographic,
    /// Explicit list: a text file with one frame file name per line.
    ManifestFile(PathBuf),
}

/// Loads every `.dnf`/`.pgm` frame in a directory into a sequence with
/// uniform times i·time_step. `.dnf` payloads are tagged with `dnf_domain`.
pub fn load_frame_directory(
    dir: &Path,
    ordering: &FrameOrdering,
    dnf_domain: Domain,
    time_step: f64,
) -> Result<FrameSequence> {
    let names: Vec<String> = match ordering {
        FrameOrdering::Lexicographic => {
            let mut names: Vec<String> = fs::read_dir(dir)
                .map_err(|e| CoreError::Format(format!("cannot list {}: {e}", dir.display())))?
                .filter_map(|entry| entry.ok())
                .filter_map(|entry| entry.file_name().into_string().ok())
                .filter(|name| name.ends_with(".dnf") || name.ends_with(".pgm"))
                .collect();
            names.sort();
            names
        }
        FrameOrdering::ManifestFile(path) => fs::read_to_string(path)
            .map_err(|e| CoreError::Format(format!("cannot read ordering manifest: {e}")))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect(),
    };
    if names.is_empty() {
        return Err(CoreError::Format(format!("no frames found in {}", dir.display())));
    }
    let mut frames: Vec<Image> = Vec::with_capacity(names.len());
    for name in &names {
        let frame = read_frame(&dir.join(name), dnf_domain)?;
        if let Some(first) = frames.first() {
            if !frame.same_shape(first) {
                return Err(CoreError::ShapeMismatch(format!(
                    "frame {name} is {}x{}, expected {}x{}",
                    frame.height(),
                    frame.width(),
                    first.height(),
                    first.width()
                )));
            }
        }
        frames.push(frame);
    }
    FrameSequence::with_uniform_times(frames, time_step)
}

/// Convenience: loads the `noisy/` (and optionally `clean/`) halves of a
/// dataset directory written by [`write_dataset`].
pub fn load_dataset(dir: &Path, with_clean: bool) -> Result<(Option<FrameSequence>, FrameSequence)> {
    let noisy = load_frame_directory(
        &dir.join("noisy"),
        &FrameOrdering::Lexicographic,
        Domain::Raw255,
        TIME_STEP,
    )?;
    let clean = if with_clean {
        Some(load_frame_directory(
            &dir.join("clean"),
            &FrameOrdering::Lexicographic,
            Domain::Raw255,
            TIME_STEP,
        )?)
    } else {
        None
    };
    Ok((clean, noisy))
}
