//! Flat key=value configuration files (# comments, blank lines allowed) and
//! their merge with command-line overrides into a TrainConfig.

use std::collections::BTreeMap;
use std::path::Path;

use dn2n_core::dn2n::TrainConfig;
use dn2n_core::nn::ModelSpec;

use crate::args::ParsedArgs;
use crate::CliError;

pub fn parse_kv_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read config {}: {e}", path.display())))?;
    parse_kv(&text)
}

pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::data(format!("config line {}: expected key=value", lineno + 1)));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn parse_levels(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| CliError::usage(format!("bad levels list {s:?}"))))
        .collect()
}

/// Defaults ← config file ← command-line flags.
pub fn resolve_train_config(args: &ParsedArgs) -> Result<TrainConfig, CliError> {
    let mut cfg = TrainConfig::expt_defaults();
    cfg.model = ModelSpec::small_default();

    if let Some(path) = args.get("config") {
        let kv = parse_kv_file(Path::new(path))?;
        let num = |key: &str| -> Result<Option<f64>, CliError> {
            kv.get(key)
                .map(|v| v.parse::<f64>().map_err(|_| CliError::data(format!("config {key}: bad number {v:?}"))))
                .transpose()
        };
        let int = |key: &str| -> Result<Option<u64>, CliError> {
            kv.get(key)
                .map(|v| v.parse::<u64>().map_err(|_| CliError::data(format!("config {key}: bad integer {v:?}"))))
                .transpose()
        };
        if let Some(v) = num("sigma_tilde")? {
            cfg.sigma_tilde = v;
        }
        if let Some(v) = num("mu")? {
            cfg.mu = v;
        }
        if let Some(v) = int("l_transforms")? {
            cfg.l_transforms = v as usize;
        }
        if let Some(v) = int("k_pred")? {
            cfg.k_pred = v as usize;
        }
        if let Some(v) = int("epochs")? {
            cfg.epochs = v as usize;
        }
        if let Some(v) = num("lr")? {
            cfg.lr = v;
        }
        if let Some(v) = int("batch")? {
            cfg.batch = v as usize;
        }
        if let Some(v) = int("seed")? {
            cfg.seed = v;
        }
        if let Some(v) = kv.get("static_transforms") {
            cfg.static_transforms = v == "true" || v == "1";
        }
        if let Some(v) = kv.get("levels") {
            cfg.model.levels = parse_levels(v)?;
        }
    }

    if let Some(v) = args.parse_f64("sigma-tilde")? {
        cfg.sigma_tilde = v;
    }
    if let Some(v) = args.parse_f64("mu")? {
        cfg.mu = v;
    }
    if let Some(v) = args.parse_usize("l")? {
        cfg.l_transforms = v;
    }
    if let Some(v) = args.parse_usize("k")? {
        cfg.k_pred = v;
    }
    if let Some(v) = args.parse_usize("epochs")? {
        cfg.epochs = v;
    }
    if let Some(v) = args.parse_f64("lr")? {
        cfg.lr = v;
    }
    if let Some(v) = args.parse_usize("batch")? {
        cfg.batch = v;
    }
    if let Some(v) = args.parse_u64("seed")? {
        cfg.seed = v;
    }
    if args.has("static-transforms") {
        cfg.static_transforms = true;
    }
    if let Some(v) = args.get("levels") {
        cfg.model.levels = parse_levels(v)?;
    }
    cfg.threads = dn2n_core::parallel::resolve_threads(args.parse_usize("threads")?);
    cfg.validate()?;
    Ok(cfg)
}
