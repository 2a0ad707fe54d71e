//! `dn2n synth`: generate a toy denaturation dataset.

use std::path::PathBuf;

use dn2n_core::parallel::resolve_threads;
use dn2n_core::synth::{make_toy_dataset, write_dataset, DenatureMode, NoiseSpec, ToySpec};

use crate::args::{flag, Kind, ParsedArgs};
use crate::CliError;

const FLAGS: &[crate::args::Flag] = &[
    flag("mode", Kind::Single),
    flag("lambda", Kind::Single),
    flag("sigma", Kind::Single),
    flag("size", Kind::Single),
    flag("frames", Kind::Single),
    flag("seed", Kind::Single),
    flag("out", Kind::Single),
    flag("threads", Kind::Single),
];

pub fn run(argv: &[String]) -> Result<(), CliError> {
    let args = ParsedArgs::parse(argv, FLAGS)?;
    let mode = DenatureMode::parse(args.require("mode")?)?;
    let lambda = args
        .parse_f64("lambda")?
        .ok_or_else(|| CliError::usage("missing required flag --lambda"))?;
    let sigma =
        args.parse_f64("sigma")?.ok_or_else(|| CliError::usage("missing required flag --sigma"))?;
    let out = PathBuf::from(args.require("out")?);
    let size = args.parse_usize("size")?.unwrap_or(192);
    let frames = args.parse_usize("frames")?.unwrap_or(24);
    let seed = args.parse_u64("seed")?.unwrap_or(1);
    let threads = resolve_threads(args.parse_usize("threads")?);

    if size < 2 || size % 2 != 0 {
        return Err(CliError::usage(format!("--size must be even and >= 2, got {size}")));
    }
    if frames == 0 {
        return Err(CliError::usage("--frames must be >= 1"));
    }
    let noise = NoiseSpec::new(lambda, sigma, seed)?;
    let mut toy = ToySpec::with_side(size);
    toy.n = frames;

    let (clean, noisy) = make_toy_dataset(mode, &toy, &noise, threads)?;
    write_dataset(&out, &clean, &noisy, mode, &noise)?;
    println!(
        "wrote {} clean + {} noisy frames ({}x{}, mode {}) to {}",
        clean.len(),
        noisy.len(),
        size,
        size,
        mode.as_str(),
        out.display()
    );
    Ok(())
}
