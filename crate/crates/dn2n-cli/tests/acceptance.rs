//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs as a harness-less test target so every line is always printed:
//! `cargo test -p dn2n-cli --test acceptance` (included in plain
//! `cargo test --workspace`). Criteria 1-5 and 7 are exact property checks;
//! 8 exercises the CLI binary for byte reproducibility; 9 runs the reduced
//! ablation sweep; 6 is the full desk-scale trend experiment and dominates
//! the runtime (tens of minutes on one core).

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use dn2n_core::dn2n::{
    loss_a_term, loss_d_full, predict, total_loss_full, train, TrainConfig, TrainData,
};
use dn2n_core::imaging::{psnr, ssim, Domain, Image};
use dn2n_core::nn::{GradStore, ModelSpec, ParamStore, UNet};
use dn2n_core::rng::StreamRng;
use dn2n_core::synth::{
    make_toy_dataset, q_schedule, render_clean_frame, DenatureMode, NoiseSpec, TauSampler, ToySpec,
};
use dn2n_core::theory::{bound_report, expected_tau_sq, g_phi, population_minimizer_oracle, DiscreteInstance};

fn main() {
    let criteria: Vec<(u32, &str, fn() -> Result<String, String>)> = vec![
        (1, "gradient-oracle", criterion_1),
        (2, "noise-moments", criterion_2),
        (3, "schedule-exactness", criterion_3),
        (4, "population-minimizer-oracle", criterion_4),
        (5, "theory-term-ordering", criterion_5),
        (7, "metric-fixtures", criterion_7),
        (8, "pipeline-determinism", criterion_8),
        (9, "ablation-sweep", criterion_9),
        (6, "slow-vs-fast-trend", criterion_6),
    ];
    // Optional positional filters (criterion numbers) for running a subset,
    // e.g. `cargo test --test acceptance -- 3 5`. No filters runs the gate.
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (id, name, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".to_string());
            Err(msg)
        });
        let dt = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("ACCEPTANCE {id} {name}: PASS ({detail}; {dt:.1}s)"),
            Err(detail) => {
                failures += 1;
                println!("ACCEPTANCE {id} {name}: FAIL ({detail}; {dt:.1}s)");
            }
        }
    }
    if failures > 0 {
        println!("acceptance: {failures} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}

fn check(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

// ---------------------------------------------------------------------------
// 1. Analytic gradients of the three losses vs central finite differences
//    (h = 1e-5) on a sub-10^4-parameter model: max relative error < 1e-6,
//    every parameter checked, within a minute.
// ---------------------------------------------------------------------------
fn criterion_1() -> Result<String, String> {
    let t0 = Instant::now();
    // The rectifier is piecewise linear, so a finite difference straddling a
    // kink is off by O(h) no matter how exact the analytic gradient is. The
    // frozen (data, init) seeds keep every pre-activation clear of zero at
    // the probe scale; at these seeds the observed error is ~1e-8, and an
    // h-convergence study confirms the analytic value is the h→0 limit.
    let t0_seed = 21u64;
    let init_seed = 7u64;
    let mut toy = ToySpec::with_side(8);
    toy.n = 4;
    let noise = NoiseSpec::new(25.0, 20.0, t0_seed).map_err(|e| e.to_string())?;
    let (_, noisy) = make_toy_dataset(DenatureMode::Fast, &toy, &noise, 1).map_err(|e| e.to_string())?;
    let tau = TauSampler::new(4, t0_seed).map_err(|e| e.to_string())?;
    let spec = ModelSpec::with_levels(vec![3, 5]);
    let net = UNet::new(spec.clone()).map_err(|e| e.to_string())?;
    let params = net.init_params(init_seed);
    check(net.param_count() <= 10_000, format!("model too large: {}", net.param_count()))?;
    let config = TrainConfig {
        sigma_tilde: 30.0,
        mu: 7.0,
        l_transforms: 2,
        seed: t0_seed,
        model: spec,
        ..TrainConfig::expt_defaults()
    };
    let seqs = [noisy];
    let data = TrainData::new(&seqs, &tau).map_err(|e| e.to_string())?;

    let h = 1e-5;
    let perturbed = |params: &ParamStore, idx: usize, delta: f64| -> ParamStore {
        let mut p = params.clone();
        p.flat_set(idx, p.flat_get(idx) + delta);
        p
    };
    let mut worst_overall = 0.0f64;
    let evals: [(&str, Box<dyn Fn(&ParamStore) -> (f64, GradStore)>); 3] = [
        ("L_D", Box::new(|p: &ParamStore| loss_d_full(&net, p, &data, &config, 0).unwrap())),
        ("L_A", Box::new(|p: &ParamStore| loss_a_term(&net, p, 0, 0, &data, &config, 0).unwrap())),
        ("L_T", Box::new(|p: &ParamStore| total_loss_full(&net, p, &data, &config, 0).unwrap())),
    ];
    for (name, eval) in &evals {
        let (_, grads) = eval(&params);
        let mut worst = 0.0f64;
        for idx in 0..params.flat_len() {
            let plus = eval(&perturbed(&params, idx, h)).0;
            let minus = eval(&perturbed(&params, idx, -h)).0;
            let numeric = (plus - minus) / (2.0 * h);
            let analytic = grads.flat_get(idx);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max(rel);
        }
        check(worst < 1e-6, format!("{name}: max relative error {worst:.3e} >= 1e-6"))?;
        worst_overall = worst_overall.max(worst);
    }
    let dt = t0.elapsed().as_secs_f64();
    check(dt < 60.0, format!("runtime {dt:.1}s exceeds 1 min"))?;
    Ok(format!(
        "{} params x 3 losses, max rel err {worst_overall:.3e} < 1e-6",
        params.flat_len()
    ))
}

// ---------------------------------------------------------------------------
// 2. Poisson-Gaussian moments at x = 175 over 1e5 draws for the four noise
//    grid points: mean within 3 SE of x, variance within 3 SE of x/λ + σ².
// ---------------------------------------------------------------------------
fn criterion_2() -> Result<String, String> {
    let t0 = Instant::now();
    let draws = 100_000usize;
    let x = 175.0;
    let mut summary = Vec::new();
    for (pair, &(lambda, sigma)) in
        [(25.0, 10.0), (10.0, 10.0), (25.0, 25.0), (10.0, 25.0)].iter().enumerate()
    {
        let noise = NoiseSpec::new(lambda, sigma, 42).map_err(|e| e.to_string())?;
        let clean = Image::constant(1, 1, Domain::Raw255, x).map_err(|e| e.to_string())?;
        let mut rng = StreamRng::new(42, "acceptance-moments", &[pair as u64]);
        let mut samples = Vec::with_capacity(draws);
        for _ in 0..draws {
            let y = dn2n_core::synth::add_poisson_gaussian(&clean, &noise, &mut rng)
                .map_err(|e| e.to_string())?;
            samples.push(y.pixels()[0]);
        }
        let n = draws as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let m4 = samples.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
        let se_mean = (var / n).sqrt();
        let se_var = ((m4 - var * var) / n).sqrt();
        let want_var = x / lambda + sigma * sigma;
        check(
            (mean - x).abs() <= 3.0 * se_mean,
            format!("(λ,σ)=({lambda},{sigma}): mean {mean:.3} off {x} by >3SE ({:.3})", 3.0 * se_mean),
        )?;
        check(
            (var - want_var).abs() <= 3.0 * se_var,
            format!("(λ,σ)=({lambda},{sigma}): var {var:.2} off {want_var} by >3SE ({:.2})", 3.0 * se_var),
        )?;
        summary.push(format!("({lambda},{sigma})"));
    }
    let dt = t0.elapsed().as_secs_f64();
    check(dt < 60.0, format!("runtime {dt:.1}s exceeds 1 min"))?;
    Ok(format!("mean and variance within 3 SE at {}", summary.join(", ")))
}

// ---------------------------------------------------------------------------
// 3. Denaturing-schedule exactness under the natural-log reading. The spec
//    prints q_24^fast as 0.385756, but direct evaluation of its own formula
//    exp(−24^1.1·ln2/24) gives 0.3857909457…, so the oracle value is the
//    direct evaluation; both numbers are printed for the record.
// ---------------------------------------------------------------------------
fn criterion_3() -> Result<String, String> {
    let q = |mode, i| q_schedule(mode, i, 24).map_err(|e| e.to_string());
    check(q(DenatureMode::Slow, 0)? == 1.0, "q_0 slow != 1".into())?;
    check(q(DenatureMode::Fast, 0)? == 1.0, "q_0 fast != 1".into())?;

    // independent direct evaluations of the closed forms
    let e = std::f64::consts::E;
    let slow_direct = (24.0f64.sqrt() * (e.sqrt() - e) / 24.0 + e).ln();
    let fast_direct = (-(24.0f64.powf(1.1)) * std::f64::consts::LN_2 / 24.0).exp();
    let qs = q(DenatureMode::Slow, 24)?;
    let qf = q(DenatureMode::Fast, 24)?;
    check((qs - slow_direct).abs() < 1e-12, format!("slow {qs} vs direct {slow_direct}"))?;
    check((qf - fast_direct).abs() < 1e-12, format!("fast {qf} vs direct {fast_direct}"))?;
    check((qs - 0.916274).abs() < 1e-6, format!("q_24 slow {qs:.9} vs printed 0.916274"))?;
    check(
        (qf - 0.3857909457108601).abs() < 1e-6,
        format!("q_24 fast {qf:.9} vs direct-evaluation oracle 0.3857909457"),
    )?;

    for mode in [DenatureMode::Slow, DenatureMode::Fast] {
        let mut last = q(mode, 0)?;
        for i in 1..=24 {
            let qi = q(mode, i)?;
            check(qi < last, format!("{mode:?} not strictly decreasing at i={i}"))?;
            last = qi;
        }
    }
    for i in 1..=24 {
        check(
            q(DenatureMode::Slow, i)? > q(DenatureMode::Fast, i)?,
            format!("slow does not dominate fast at i={i}"),
        )?;
    }
    Ok(format!(
        "q_24 slow {qs:.9}, fast {qf:.9} (spec prints 0.385756; direct evaluation differs from it by 3.5e-5)"
    ))
}

// ---------------------------------------------------------------------------
// 4. Population-minimizer oracle on the three discrete instances: the
//    enumerated per-cell minimizer equals the analytic conditional
//    expectation within 1e-12 and the τ→0 extrapolation recovers x₀.
// ---------------------------------------------------------------------------
fn criterion_4() -> Result<String, String> {
    let instances: Vec<(&str, DiscreteInstance)> = vec![
        (
            "linear-shrink",
            DiscreteInstance::new(
                1.0,
                vec![(-1.0, 0.5), (1.0, 0.5)],
                vec![(0.2, 0.5), (0.5, 0.5)],
                |t, x| (1.0 - t) * x,
            )
            .map_err(|e| e.to_string())?,
        ),
        (
            "tau-zero-special-case",
            DiscreteInstance::new(2.5, vec![(-0.5, 0.5), (0.5, 0.5)], vec![(0.0, 1.0)], |_t, x| x)
                .map_err(|e| e.to_string())?,
        ),
        (
            "asymmetric-noise",
            DiscreteInstance::new(
                1.0,
                vec![(-1.0, 2.0 / 3.0), (2.0, 1.0 / 3.0)],
                vec![(0.2, 0.5), (0.5, 0.5)],
                |t, x| (1.0 - t) * x,
            )
            .map_err(|e| e.to_string())?,
        ),
    ];
    let mut worst_cell = 0.0f64;
    let mut worst_extrap = 0.0f64;
    for (name, instance) in &instances {
        let report = population_minimizer_oracle(instance).map_err(|e| e.to_string())?;
        check(
            report.max_cell_error <= 1e-12,
            format!("{name}: cell error {:.3e}", report.max_cell_error),
        )?;
        let extrap = report
            .extrapolation_error
            .ok_or_else(|| format!("{name}: extrapolation not evaluated"))?;
        check(extrap <= 1e-12, format!("{name}: extrapolation error {extrap:.3e}"))?;
        check(report.verdict, format!("{name}: verdict false"))?;
        worst_cell = worst_cell.max(report.max_cell_error);
        worst_extrap = worst_extrap.max(extrap);
    }
    // spot-check the expected minimizer values of the first instance
    let report = population_minimizer_oracle(&instances[0].1).map_err(|e| e.to_string())?;
    for cell in &report.cells {
        let want = if cell.tau == 0.2 { 0.8 } else { 0.5 };
        check(
            (cell.minimizer - want).abs() <= 1e-12,
            format!("cell ({}, {}) = {}", cell.y0, cell.tau, cell.minimizer),
        )?;
    }
    Ok(format!("3 instances, max cell err {worst_cell:.1e}, max τ→0 err {worst_extrap:.1e}"))
}

// ---------------------------------------------------------------------------
// 5. Exact theory terms: G_φ(slow) < G_φ(fast) for the N = 24 toy schedules
//    at 192×192, and E[τ²] equals the closed form 4900/2400 within 1e-9
//    (the spec's display rounds this to 2.04167).
// ---------------------------------------------------------------------------
fn criterion_5() -> Result<String, String> {
    let spec = ToySpec::default_192();
    let frames = |mode| -> Result<dn2n_core::imaging::FrameSequence, String> {
        let frames: Vec<Image> = (0..=spec.n)
            .map(|i| render_clean_frame(&spec, q_schedule(mode, i, spec.n).unwrap()).unwrap())
            .collect();
        dn2n_core::imaging::FrameSequence::with_uniform_times(frames, 0.1).map_err(|e| e.to_string())
    };
    let w = vec![1.0 / spec.n as f64; spec.n];
    let slow = g_phi(&frames(DenatureMode::Slow)?, &w).map_err(|e| e.to_string())?;
    let fast = g_phi(&frames(DenatureMode::Fast)?, &w).map_err(|e| e.to_string())?;
    check(slow < fast, format!("G_φ(slow) {slow:.6} not below G_φ(fast) {fast:.6}"))?;

    let taus: Vec<f64> = (1..=24).map(|i| i as f64 / 10.0).collect();
    let uniform = vec![1.0 / 24.0; 24];
    let e_tau = expected_tau_sq(&taus, &uniform).map_err(|e| e.to_string())?;
    let exact = 4900.0 / 2400.0;
    check((e_tau - exact).abs() <= 1e-9, format!("E[τ²] {e_tau:.12} vs 4900/2400 {exact:.12}"))?;
    Ok(format!("G_φ slow {slow:.3} < fast {fast:.3}; E[τ²] = {e_tau:.6}"))
}

// ---------------------------------------------------------------------------
// 7. Metric fixtures.
// ---------------------------------------------------------------------------
fn criterion_7() -> Result<String, String> {
    let a = Image::new(1, 2, Domain::Raw255, vec![0.0, 0.0]).map_err(|e| e.to_string())?;
    let b = Image::new(1, 2, Domain::Raw255, vec![10.0, 0.0]).map_err(|e| e.to_string())?;
    let p = psnr(&a, &b, 255.0).map_err(|e| e.to_string())?;
    check((p - 31.1411).abs() <= 1e-3, format!("PSNR fixture {p:.5} vs 31.1411"))?;

    let c = Image::constant(8, 8, Domain::Unit, 0.5).map_err(|e| e.to_string())?;
    let d = Image::constant(8, 8, Domain::Unit, 0.25).map_err(|e| e.to_string())?;
    let s = ssim(&c, &d, 1.0, 7, 0.01, 0.03).map_err(|e| e.to_string())?;
    check((s - 0.80006).abs() <= 1e-4, format!("SSIM fixture {s:.6} vs 0.80006"))?;

    let mut rng = StreamRng::new(7, "acceptance-ssim", &[]);
    let px: Vec<f64> = (0..121).map(|_| rng.next_f64()).collect();
    let im = Image::new(11, 11, Domain::Unit, px).map_err(|e| e.to_string())?;
    let s1 = ssim(&im, &im, 1.0, 7, 0.01, 0.03).map_err(|e| e.to_string())?;
    check(s1 == 1.0, format!("SSIM(identical) = {s1}, expected exactly 1"))?;
    Ok(format!("psnr {p:.4}, ssim-const {s:.5}, ssim-identical {s1}"))
}

// ---------------------------------------------------------------------------
// 8. Byte reproducibility of the CLI pipeline, including across --threads.
// ---------------------------------------------------------------------------
fn criterion_8() -> Result<String, String> {
    let bin = env!("CARGO_BIN_EXE_dn2n");
    let base = std::env::temp_dir().join("dn2n-acceptance-determinism");
    let _ = std::fs::remove_dir_all(&base);
    std::fs::create_dir_all(&base).map_err(|e| e.to_string())?;

    let run = |label: &str, threads: &str| -> Result<PathBuf, String> {
        let dir = base.join(label);
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        let data = dir.join("data");
        let sh = |args: &[&str]| -> Result<(), String> {
            let out = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(format!(
                    "{:?} failed: {}",
                    args.first().unwrap_or(&""),
                    String::from_utf8_lossy(&out.stderr)
                ));
            }
            Ok(())
        };
        sh(&[
            "synth", "--mode", "fast", "--lambda", "25", "--sigma", "25", "--seed", "9", "--out",
            data.to_str().unwrap(), "--size", "32", "--frames", "8", "--threads", threads,
        ])?;
        sh(&[
            "train", "--data", data.to_str().unwrap(), "--out",
            dir.join("model.dnm").to_str().unwrap(), "--epochs", "2", "--seed", "9", "--threads",
            threads, "--quiet",
        ])?;
        sh(&[
            "denoise", "--model", dir.join("model.dnm").to_str().unwrap(), "--data",
            data.to_str().unwrap(), "--out", dir.join("pred.dnf").to_str().unwrap(), "--k", "8",
            "--sigma-tilde", "60", "--seed", "9", "--threads", threads,
        ])?;
        Ok(dir)
    };

    let a = run("t1", "1")?;
    let b = run("t1-rerun", "1")?;
    let c = run("t4", "4")?;

    let artifacts = [
        "data/noisy/frame_000.dnf",
        "data/noisy/frame_007.dnf",
        "data/clean/frame_004.dnf",
        "data/manifest.txt",
        "model.dnm",
        "pred.dnf",
        "pred.pgm",
    ];
    // The train manifest embeds the data path, which differs per run dir;
    // compare it with that line masked.
    let manifest = |d: &Path| -> Result<String, String> {
        let text =
            std::fs::read_to_string(d.join("model.manifest.txt")).map_err(|e| e.to_string())?;
        Ok(text.lines().filter(|l| !l.starts_with("data=")).collect::<Vec<_>>().join("\n"))
    };
    for rel in &artifacts {
        let bytes_a = std::fs::read(a.join(rel)).map_err(|e| format!("{rel}: {e}"))?;
        let bytes_b = std::fs::read(b.join(rel)).map_err(|e| format!("{rel}: {e}"))?;
        let bytes_c = std::fs::read(c.join(rel)).map_err(|e| format!("{rel}: {e}"))?;
        check(bytes_a == bytes_b, format!("{rel}: rerun differs"))?;
        check(bytes_a == bytes_c, format!("{rel}: --threads 4 differs from --threads 1"))?;
    }
    check(manifest(&a)? == manifest(&b)?, "train manifest: rerun differs".into())?;
    check(manifest(&a)? == manifest(&c)?, "train manifest: thread count leaked".into())?;
    Ok(format!(
        "{} artifacts byte-identical across rerun and threads 1 vs 4",
        artifacts.len() + 1
    ))
}

// ---------------------------------------------------------------------------
// 9. Reduced-scale ablation sweep over μ ∈ {0, 100} × σ̃ ∈ {0, 75}:
//    must complete and emit SSIM values in [0, 1]; no ordering asserted.
// ---------------------------------------------------------------------------
fn criterion_9() -> Result<String, String> {
    let mut toy = ToySpec::with_side(48);
    toy.n = 12;
    let noise = NoiseSpec::new(25.0, 25.0, 5).map_err(|e| e.to_string())?;
    let (clean, noisy) =
        make_toy_dataset(DenatureMode::Fast, &toy, &noise, 1).map_err(|e| e.to_string())?;
    let x0 = clean.frame(0).normalize().map_err(|e| e.to_string())?;
    let tau = TauSampler::new(toy.n, 5).map_err(|e| e.to_string())?;

    println!("  ablation sweep (48x48 fast toy, (λ,σ)=(25,25), 150 epochs, seed 5):");
    println!("  mu     sigma_tilde  psnr_db  ssim");
    let mut ssims = Vec::new();
    for &mu in &[0.0, 100.0] {
        for &sigma_tilde in &[0.0, 75.0] {
            let config = TrainConfig {
                sigma_tilde,
                mu,
                epochs: 150,
                k_pred: 50,
                seed: 5,
                model: ModelSpec::with_levels(vec![4, 8]),
                ..TrainConfig::expt_defaults()
            };
            let seqs = [noisy.clone()];
            let trained = train(&config, &seqs, &tau).map_err(|e| e.to_string())?;
            let net = UNet::new(trained.spec.clone()).map_err(|e| e.to_string())?;
            let pred = predict(
                &net,
                &trained.params,
                &[seqs[0].frame(0)],
                sigma_tilde,
                config.k_pred,
                5,
                1,
            )
            .map_err(|e| e.to_string())?;
            let p = psnr(&x0, &pred, 1.0).map_err(|e| e.to_string())?;
            let s = ssim(&x0, &pred, 1.0, 7, 0.01, 0.03).map_err(|e| e.to_string())?;
            println!("  {mu:<5} {sigma_tilde:<12} {p:<8.2} {s:.4}");
            check(
                (0.0..=1.0).contains(&s),
                format!("ssim {s} outside [0,1] at mu={mu}, sigma_tilde={sigma_tilde}"),
            )?;
            ssims.push(s);
        }
    }
    println!("  note: rows differ only in (mu, sigma_tilde); compare mu=0 against mu=100 —");
    println!("  a positive effect of the averaging loss is the expected pattern.");
    let lo = ssims.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ssims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(format!("4 configurations completed, SSIM range [{lo:.3}, {hi:.3}] within [0,1]"))
}

// ---------------------------------------------------------------------------
// 6. Desk-scale trend: mean prediction PSNR over seeds {1,2,3} on the slow
//    dataset exceeds the fast dataset by at least 0.5 dB (96×96, (λ,σ) =
//    (25,25), 300 epochs, shipped defaults). Budget: 60 min of CPU.
// ---------------------------------------------------------------------------
fn criterion_6() -> Result<String, String> {
    let t0 = Instant::now();
    let seeds = [1u64, 2, 3];
    let mut means = Vec::new();
    let mut bound_side = Vec::new();
    let mut pred_gaps = Vec::new();
    for mode in [DenatureMode::Slow, DenatureMode::Fast] {
        let mut psnrs = Vec::new();
        for &seed in &seeds {
            let run_t = Instant::now();
            let toy = ToySpec::with_side(96);
            let noise = NoiseSpec::new(25.0, 25.0, seed).map_err(|e| e.to_string())?;
            let (clean, noisy) =
                make_toy_dataset(mode, &toy, &noise, 1).map_err(|e| e.to_string())?;
            let tau = TauSampler::new(toy.n, seed).map_err(|e| e.to_string())?;
            let config = TrainConfig { epochs: 300, seed, ..TrainConfig::expt_defaults() };
            let seqs = [noisy];
            let trained = train(&config, &seqs, &tau).map_err(|e| e.to_string())?;

            // optimization sanity on the standard run: the transformed-input
            // loss trends downward
            let ld: Vec<f64> = trained.epoch_losses.iter().map(|e| e.ld).collect();
            let first10: f64 = ld[..10].iter().sum::<f64>() / 10.0;
            let last10: f64 = ld[ld.len() - 10..].iter().sum::<f64>() / 10.0;
            check(
                last10 < first10,
                format!(
                    "{}/{seed}: loss trend not downward ({first10:.4} -> {last10:.4})",
                    mode.as_str()
                ),
            )?;

            let net = UNet::new(trained.spec.clone()).map_err(|e| e.to_string())?;
            let pred = predict(
                &net,
                &trained.params,
                &[seqs[0].frame(0)],
                config.sigma_tilde,
                config.k_pred,
                seed,
                1,
            )
            .map_err(|e| e.to_string())?;
            let x0 = clean.frame(0).normalize().map_err(|e| e.to_string())?;
            let p = psnr(&x0, &pred, 1.0).map_err(|e| e.to_string())?;
            let s = ssim(&x0, &pred, 1.0, 7, 0.01, 0.03).map_err(|e| e.to_string())?;
            let report =
                bound_report(&trained, &clean, &seqs[0], &config, mode.as_str(), 25.0, 25.0)
                    .map_err(|e| e.to_string())?;
            println!(
                "  run mode={} seed={seed}: psnr {p:.2} dB, ssim {s:.3}, e_f_proxy {:.4}, g_phi/px {:.5}, pred_gap/px {:.5} ({:.0}s)",
                mode.as_str(),
                report.e_f_proxy,
                report.g_phi_per_pixel,
                report.pred_gap_per_pixel,
                run_t.elapsed().as_secs_f64()
            );
            psnrs.push(p);
            bound_side.push((mode, report.g_phi_per_pixel + report.e_f_proxy));
            pred_gaps.push((mode, report.pred_gap_per_pixel));
        }
        let mean = psnrs.iter().sum::<f64>() / psnrs.len() as f64;
        println!("  mean psnr mode={}: {mean:.3} dB", mode.as_str());
        means.push(mean);
    }
    let (slow_mean, fast_mean) = (means[0], means[1]);
    let gap = slow_mean - fast_mean;

    // informational: bound-side ordering vs realized prediction-gap ordering
    let avg = |items: &[(DenatureMode, f64)], mode: DenatureMode| -> f64 {
        let v: Vec<f64> = items.iter().filter(|(m, _)| *m == mode).map(|&(_, x)| x).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let bound_slow = avg(&bound_side, DenatureMode::Slow);
    let bound_fast = avg(&bound_side, DenatureMode::Fast);
    let gap_slow = avg(&pred_gaps, DenatureMode::Slow);
    let gap_fast = avg(&pred_gaps, DenatureMode::Fast);
    println!(
        "  bound-side ordering: slow {bound_slow:.5} vs fast {bound_fast:.5} ({}); pred-gap ordering: slow {gap_slow:.5} vs fast {gap_fast:.5} ({}); co-occurrence: {}",
        if bound_slow <= bound_fast { "slow <= fast" } else { "fast < slow" },
        if gap_slow <= gap_fast { "slow <= fast" } else { "fast < slow" },
        (bound_slow <= bound_fast) == (gap_slow <= gap_fast)
    );

    let dt = t0.elapsed().as_secs_f64();
    check(
        gap >= 0.5,
        format!("slow mean {slow_mean:.3} dB - fast mean {fast_mean:.3} dB = {gap:.3} dB < 0.5 dB"),
    )?;
    check(dt < 3600.0, format!("runtime {:.1} min exceeds the 60 min budget", dt / 60.0))?;
    Ok(format!(
        "slow {slow_mean:.2} dB vs fast {fast_mean:.2} dB (gap {gap:.2} dB >= 0.5), {:.1} min",
        dt / 60.0
    ))
}
