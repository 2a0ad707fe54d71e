//! `dn2n denoise`: predict the clean time-0 frame with a trained model.

use std::path::PathBuf;

use dn2n_core::dn2n::predict;
use dn2n_core::imaging::{write_dnf, write_pgm};
use dn2n_core::nn::{load_model, UNet};
use dn2n_core::parallel::resolve_threads;

use crate::args::{flag, Kind, ParsedArgs};
use crate::commands::load_noisy_data;
use crate::CliError;

const FLAGS: &[crate::args::Flag] = &[
    flag("model", Kind::Single),
    flag("data", Kind::Single),
    flag("out", Kind::Single),
    flag("k", Kind::Single),
    flag("sigma-tilde", Kind::Single),
    flag("seed", Kind::Single),
    flag("threads", Kind::Single),
];

pub fn run(argv: &[String]) -> Result<(), CliError> {
    let args = ParsedArgs::parse(argv, FLAGS)?;
    let model_path = PathBuf::from(args.require("model")?);
    let data_dir = PathBuf::from(args.require("data")?);
    let out = PathBuf::from(args.require("out")?);
    let k = args.parse_usize("k")?.unwrap_or(100);
    let sigma_tilde = args.parse_f64("sigma-tilde")?.unwrap_or(100.0);
    let seed = args.parse_u64("seed")?.unwrap_or(1);
    let threads = resolve_threads(args.parse_usize("threads")?);

    let (spec, params) = load_model(&model_path)?;
    let net = UNet::new(spec)?;
    let noisy = load_noisy_data(&data_dir)?;
    let prediction = predict(&net, &params, &[noisy.frame(0)], sigma_tilde, k, seed, threads)?;

    write_dnf(&out, &prediction)?;
    write_pgm(&out.with_extension("pgm"), &prediction)?;
    let manifest = format!(
        "model={}\ndata={}\nk={}\nsigma_tilde={}\nseed={}\nheight={}\nwidth={}\n",
        args.get("model").unwrap_or("-"),
        args.get("data").unwrap_or("-"),
        k,
        sigma_tilde,
        seed,
        prediction.height(),
        prediction.width(),
    );
    std::fs::write(out.with_extension("manifest.txt"), manifest)?;
    println!("prediction written to {}", out.display());
    Ok(())
}
