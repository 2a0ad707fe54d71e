//! `dn2n train`: fit a model to a noisy sequence.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dn2n_core::baselines::{build_td_pairs, train_td};
use dn2n_core::dn2n::{train, TrainConfig, TrainedModel};
use dn2n_core::nn::save_model;
use dn2n_core::synth::TauSampler;

use crate::args::{flag, Kind, ParsedArgs};
use crate::commands::load_noisy_data;
use crate::config::resolve_train_config;
use crate::CliError;

const FLAGS: &[crate::args::Flag] = &[
    flag("data", Kind::Single),
    flag("config", Kind::Single),
    flag("out", Kind::Single),
    flag("method", Kind::Single),
    flag("static-transforms", Kind::Switch),
    flag("sigma-tilde", Kind::Single),
    flag("mu", Kind::Single),
    flag("l", Kind::Single),
    flag("k", Kind::Single),
    flag("epochs", Kind::Single),
    flag("lr", Kind::Single),
    flag("batch", Kind::Single),
    flag("seed", Kind::Single),
    flag("levels", Kind::Single),
    flag("threads", Kind::Single),
    flag("stamp", Kind::Switch),
    flag("quiet", Kind::Switch),
];

pub fn run(argv: &[String]) -> Result<(), CliError> {
    let args = ParsedArgs::parse(argv, FLAGS)?;
    let data_dir = PathBuf::from(args.require("data")?);
    let out = PathBuf::from(args.require("out")?);
    let method = args.get("method").unwrap_or("dn2n");
    if method != "dn2n" && method != "td" {
        return Err(CliError::usage(format!("--method must be dn2n or td, got {method:?}")));
    }
    let config = resolve_train_config(&args)?;

    let noisy = load_noisy_data(&data_dir)?;
    if !args.has("quiet") {
        println!(
            "training method={method} on {} frames ({}x{}), {} epochs",
            noisy.len(),
            noisy.frame(0).height(),
            noisy.frame(0).width(),
            config.epochs
        );
    }

    let trained: TrainedModel = if method == "td" {
        if args.get("sigma-tilde").is_some() || args.get("mu").is_some() || args.get("k").is_some() {
            eprintln!("warning: method td ignores --sigma-tilde, --mu and --k");
        } else {
            eprintln!("note: method td ignores sigma_tilde, mu and k_pred");
        }
        let plan = build_td_pairs(&noisy)?;
        train_td(&plan, &config, &noisy)?
    } else {
        let tau = TauSampler::new(noisy.len() - 1, config.seed)?;
        let seqs = std::slice::from_ref(&noisy);
        train(&config, seqs, &tau)?
    };

    save_model(&out, &trained.spec, &trained.params)?;
    write_manifest(&out, method, args.get("data").unwrap_or("-"), &config, &trained, args.has("stamp"))?;
    if !args.has("quiet") {
        if let Some(last) = trained.epoch_losses.last() {
            println!("final losses: ld={} lt={}", last.ld, last.lt);
        }
        println!("model written to {}", out.display());
    }
    Ok(())
}

fn write_manifest(
    model_path: &Path,
    method: &str,
    data: &str,
    config: &TrainConfig,
    trained: &TrainedModel,
    stamp: bool,
) -> Result<(), CliError> {
    let mut text = String::new();
    let _ = writeln!(text, "method={method}");
    let _ = writeln!(text, "data={data}");
    text.push_str(&config.echo());
    let _ = writeln!(text, "config_hash={:016x}", config.config_hash());
    if stamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let _ = writeln!(text, "stamp={secs}");
    }
    for (i, e) in trained.epoch_losses.iter().enumerate() {
        let la = e.la.map_or("na".to_string(), |v| v.to_string());
        let _ = writeln!(text, "epoch={} ld={} la={} lt={}", i + 1, e.ld, la, e.lt);
    }
    std::fs::write(model_path.with_extension("manifest.txt"), text)?;
    Ok(())
}
