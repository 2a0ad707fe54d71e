//! `dn2n diagnose`: observable risk-bound terms for a trained model on a
//! toy dataset (clean frames required).

use std::path::{Path, PathBuf};

use dn2n_core::dn2n::{TrainConfig, TrainedModel};
use dn2n_core::imaging::Domain;
use dn2n_core::nn::load_model;
use dn2n_core::parallel::resolve_threads;
use dn2n_core::synth::{load_frame_directory, read_dataset_manifest, FrameOrdering, TIME_STEP};
use dn2n_core::theory::bound_report;

use crate::args::{flag, Kind, ParsedArgs};
use crate::CliError;

const FLAGS: &[crate::args::Flag] = &[
    flag("model", Kind::Single),
    flag("clean", Kind::Single),
    flag("noisy", Kind::Single),
    flag("out", Kind::Single),
    flag("k", Kind::Single),
    flag("sigma-tilde", Kind::Single),
    flag("seed", Kind::Single),
    flag("threads", Kind::Single),
];

pub fn run(argv: &[String]) -> Result<(), CliError> {
    let args = ParsedArgs::parse(argv, FLAGS)?;
    let model_path = PathBuf::from(args.require("model")?);
    let clean_dir = PathBuf::from(args.require("clean")?);
    let noisy_dir = PathBuf::from(args.require("noisy")?);
    if !clean_dir.is_dir() {
        return Err(CliError::data(format!(
            "clean frames unavailable: {} is not a directory (diagnosis needs ground truth)",
            clean_dir.display()
        )));
    }

    let clean =
        load_frame_directory(&clean_dir, &FrameOrdering::Lexicographic, Domain::Raw255, TIME_STEP)?;
    let noisy =
        load_frame_directory(&noisy_dir, &FrameOrdering::Lexicographic, Domain::Raw255, TIME_STEP)?;

    // Dataset metadata sits in the parent of the frame directory when the
    // synth layout is used.
    let (mode, lambda, sigma) = match noisy_dir
        .parent()
        .map(Path::to_path_buf)
        .map(|p| read_dataset_manifest(&p))
    {
        Some(Ok(m)) => (m.mode.as_str().to_string(), m.lambda, m.sigma),
        _ => ("unknown".to_string(), f64::NAN, f64::NAN),
    };

    let (spec, params) = load_model(&model_path)?;
    let mut config = TrainConfig::expt_defaults();
    config.model = spec.clone();
    if let Some(v) = args.parse_f64("sigma-tilde")? {
        config.sigma_tilde = v;
    }
    if let Some(v) = args.parse_usize("k")? {
        config.k_pred = v;
    }
    if let Some(v) = args.parse_u64("seed")? {
        config.seed = v;
    }
    config.threads = resolve_threads(args.parse_usize("threads")?);

    let trained = TrainedModel {
        spec,
        params,
        epoch_losses: vec![],
        config_hash: config.config_hash(),
    };
    let report = bound_report(&trained, &clean, &noisy, &config, &mode, lambda, sigma)?;
    print!("{report}");
    if let Some(out) = args.get("out") {
        std::fs::write(out, format!("{report}"))?;
    }
    Ok(())
}
