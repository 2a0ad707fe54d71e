//! `dn2n eval`: PSNR/SSIM between a prediction and a reference frame.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dn2n_core::imaging::{
    psnr, read_frame, ssim, Domain, Image, SSIM_DEFAULT_K1, SSIM_DEFAULT_K2, SSIM_DEFAULT_WINDOW,
};

use crate::args::{flag, Kind, ParsedArgs};
use crate::CliError;

const FLAGS: &[crate::args::Flag] = &[
    flag("pred", Kind::Single),
    flag("ref", Kind::Single),
    flag("data-range", Kind::Single),
    flag("pred-domain", Kind::Single),
    flag("ref-domain", Kind::Single),
    flag("out", Kind::Single),
    flag("meta", Kind::Multi),
];

fn parse_domain(s: &str) -> Result<Domain, CliError> {
    match s {
        "unit" => Ok(Domain::Unit),
        "raw255" => Ok(Domain::Raw255),
        other => Err(CliError::usage(format!("domain must be unit or raw255, got {other:?}"))),
    }
}

fn load(path: &Path, domain: Domain) -> Result<Image, CliError> {
    let im = read_frame(path, domain)?;
    Ok(im)
}

pub fn run(argv: &[String]) -> Result<(), CliError> {
    let args = ParsedArgs::parse(argv, FLAGS)?;
    let pred_path = PathBuf::from(args.require("pred")?);
    let ref_path = PathBuf::from(args.require("ref")?);
    let pred_domain = parse_domain(args.get("pred-domain").unwrap_or("unit"))?;
    let ref_domain = parse_domain(args.get("ref-domain").unwrap_or("unit"))?;

    let mut pred = load(&pred_path, pred_domain)?;
    let mut reference = load(&ref_path, ref_domain)?;
    // Comparison happens in the Unit domain unless both frames are raw.
    let raw_comparison = pred.domain() == Domain::Raw255 && reference.domain() == Domain::Raw255;
    if !raw_comparison {
        if pred.domain() == Domain::Raw255 {
            pred = pred.normalize()?;
        }
        if reference.domain() == Domain::Raw255 {
            reference = reference.normalize()?;
        }
    }
    let data_range =
        args.parse_f64("data-range")?.unwrap_or(if raw_comparison { 255.0 } else { 1.0 });

    let psnr_db = psnr(&reference, &pred, data_range)?;
    let ssim_val = ssim(
        &reference,
        &pred,
        data_range,
        SSIM_DEFAULT_WINDOW,
        SSIM_DEFAULT_K1,
        SSIM_DEFAULT_K2,
    )?;
    println!("psnr_db={psnr_db}");
    println!("ssim={ssim_val}");

    if let Some(out) = args.get("out") {
        let mut text = String::new();
        for meta in args.get_all("meta") {
            let Some((k, v)) = meta.split_once('=') else {
                return Err(CliError::usage(format!("--meta expects KEY=VALUE, got {meta:?}")));
            };
            let _ = writeln!(text, "{}={}", k.trim(), v.trim());
        }
        let _ = writeln!(text, "psnr_db={psnr_db}");
        let _ = writeln!(text, "ssim={ssim_val}");
        std::fs::write(out, text)?;
    }
    Ok(())
}
