//! `dn2n report`: aggregate run manifests into aligned text tables.
//!
//! A run manifest is any `*.run.txt` file of key=value lines carrying at
//! least psnr_db and ssim, usually written by `dn2n eval --out`. Expected
//! metadata keys: method, mode, lambda, sigma, seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::args::{flag, Kind, ParsedArgs};
use crate::config::parse_kv;
use crate::CliError;

const FLAGS: &[crate::args::Flag] = &[flag("runs", Kind::Rest)];

#[derive(Debug, Clone)]
struct Run {
    file: String,
    method: String,
    mode: String,
    lambda: String,
    sigma: String,
    seed: String,
    psnr: f64,
    ssim: f64,
}

fn collect_runs(dirs: &[String]) -> Result<Vec<Run>, CliError> {
    let mut runs = Vec::new();
    for dir in dirs {
        let dir = Path::new(dir);
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| CliError::data(format!("cannot list {}: {e}", dir.display())))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(".run.txt")))
            .collect();
        files.sort();
        for file in files {
            let kv = parse_kv(&std::fs::read_to_string(&file)?)?;
            let get = |k: &str| kv.get(k).cloned().unwrap_or_else(|| "?".to_string());
            let num = |k: &str| -> Result<f64, CliError> {
                kv.get(k)
                    .ok_or_else(|| CliError::data(format!("{}: missing {k}", file.display())))?
                    .parse::<f64>()
                    .map_err(|_| CliError::data(format!("{}: bad {k}", file.display())))
            };
            runs.push(Run {
                file: file.file_name().unwrap().to_string_lossy().into_owned(),
                method: get("method"),
                mode: get("mode"),
                lambda: get("lambda"),
                sigma: get("sigma"),
                seed: get("seed"),
                psnr: num("psnr_db")?,
                ssim: num("ssim")?,
            });
        }
    }
    if runs.is_empty() {
        return Err(CliError::data("no *.run.txt manifests found"));
    }
    Ok(runs)
}

fn print_aligned(rows: &[Vec<String>]) {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; cols];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    for row in rows {
        let line: Vec<String> =
            row.iter().enumerate().map(|(i, c)| format!("{:<width$}", c, width = widths[i])).collect();
        println!("{}", line.join("  ").trim_end());
    }
}

pub fn run(argv: &[String]) -> Result<(), CliError> {
    let args = ParsedArgs::parse(argv, FLAGS)?;
    let dirs = args.get_all("runs");
    if dirs.is_empty() {
        return Err(CliError::usage("missing required flag --runs"));
    }
    let runs = collect_runs(dirs)?;

    // flat listing, one row per manifest
    let mut rows = vec![vec![
        "run".to_string(),
        "mode".to_string(),
        "lambda".to_string(),
        "sigma".to_string(),
        "method".to_string(),
        "seed".to_string(),
        "psnr_db".to_string(),
        "ssim".to_string(),
    ]];
    for r in &runs {
        rows.push(vec![
            r.file.clone(),
            r.mode.clone(),
            r.lambda.clone(),
            r.sigma.clone(),
            r.method.clone(),
            r.seed.clone(),
            format!("{:.2}", r.psnr),
            format!("{:.3}", r.ssim),
        ]);
    }
    print_aligned(&rows);

    // pivot: (mode, lambda, sigma) rows x method columns, means over seeds
    let mut methods: Vec<String> = runs.iter().map(|r| r.method.clone()).collect();
    methods.sort();
    methods.dedup();
    let mut cells: BTreeMap<(String, String, String), BTreeMap<String, Vec<(f64, f64)>>> =
        BTreeMap::new();
    for r in &runs {
        cells
            .entry((r.mode.clone(), r.lambda.clone(), r.sigma.clone()))
            .or_default()
            .entry(r.method.clone())
            .or_default()
            .push((r.psnr, r.ssim));
    }
    println!();
    let mut pivot = Vec::new();
    let mut header = vec!["mode".to_string(), "(lambda,sigma)".to_string()];
    for m in &methods {
        header.push(format!("{m} psnr/ssim"));
    }
    pivot.push(header);
    for ((mode, lambda, sigma), per_method) in &cells {
        let mut row = vec![mode.clone(), format!("({lambda},{sigma})")];
        for m in &methods {
            match per_method.get(m) {
                Some(vals) => {
                    let n = vals.len() as f64;
                    let p = vals.iter().map(|v| v.0).sum::<f64>() / n;
                    let s = vals.iter().map(|v| v.1).sum::<f64>() / n;
                    row.push(format!("{p:.2}/{s:.3}"));
                }
                None => row.push("-".to_string()),
            }
        }
        pivot.push(row);
    }
    print_aligned(&pivot);
    Ok(())
}
