//! Command runners behind the `hitchin-lab` binary. Each returns the
//! process exit code: 0 success, 1 checked failure, 2 usage or config error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::json;

use crate::error::{LabError, Result};
use crate::flow::{gradient_flow_from, seed_solution, FlowState, FlowStatus};
use crate::hitchin::random_configuration;
use crate::lie::{random_field, random_gauge, seeded_rng, GaugeElement, Smoothness};
use crate::quillen::{check_spectrum_caps, laplacian_spectrum_invariance, ReferenceConnection};
use crate::runconfig::{Command, GaugeChoice, RunConfig, SolveConfig, SpectrumConfig, StartSpec, VerifyConfig};
use crate::store::{load_configuration, save_configuration};
use crate::suite::run_suite;
use crate::surface::Degree;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "HITCHIN_LAB_THREADS";

/// Outcome of a command before it is turned into an exit code.
enum Outcome {
    Passed,
    Failed,
}

fn exit_code_for(err: &LabError) -> i32 {
    match err {
        LabError::Domain(_) | LabError::Format(_) | LabError::Io(_) => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

/// Loads the config, applies the CLI overrides and runs `command`,
/// printing a one-line summary or diagnostic to stderr.
pub fn run(command: Command, config: &Path, seed: Option<u64>, out: Option<&Path>) -> i32 {
    let mut cfg = match RunConfig::load(config, command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("hitchin-lab: {e}");
            return EXIT_USAGE;
        }
    };
    if let Some(s) = seed {
        cfg.set_seed(s);
    }
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    match run_config(&cfg, &dir) {
        Ok(Outcome::Passed) => EXIT_OK,
        Ok(Outcome::Failed) => EXIT_FAILED,
        Err(e) => {
            eprintln!("hitchin-lab: {e}");
            exit_code_for(&e)
        }
    }
}

fn run_config(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    fs::create_dir_all(dir)?;
    let pool = thread_pool()?;
    pool.install(|| match cfg {
        RunConfig::Verify(c) => verify(c, dir),
        RunConfig::Solve(c) => solve(c, dir),
        RunConfig::Spectrum(c) => spectrum(c, dir),
    })
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| LabError::Format(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| LabError::Numerical(format!("thread pool: {e}")))
}

fn unix_seconds() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Timing and environment details, kept out of the deterministic outputs.
fn write_meta(path: &Path, command: &str, started: f64, clock: Instant, extra: serde_json::Value) -> Result<()> {
    let meta = json!({
        "command": command,
        "started_unix": started,
        "elapsed_seconds": clock.elapsed().as_secs_f64(),
        "threads": rayon::current_num_threads(),
        "details": extra,
    });
    fs::write(path, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

fn verify(cfg: &VerifyConfig, dir: &Path) -> Result<Outcome> {
    let (started, clock) = (unix_seconds(), Instant::now());
    let reports = run_suite(cfg)?;
    let mut out = std::io::BufWriter::new(fs::File::create(dir.join(&cfg.report))?);
    for r in &reports {
        writeln!(out, "{}", r.to_json_line())?;
    }
    out.flush()?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.identity_name.as_str()).collect();
    write_meta(&dir.join(&cfg.meta), "verify", started, clock, json!({ "failed": failed }))?;
    eprintln!(
        "verify: {}/{} checks passed over {} trials{}",
        reports.len() - failed.len(),
        reports.len(),
        cfg.trials,
        if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
    );
    Ok(if failed.is_empty() { Outcome::Passed } else { Outcome::Failed })
}

fn solve(cfg: &SolveConfig, dir: &Path) -> Result<Outcome> {
    let (started, clock) = (unix_seconds(), Instant::now());
    let grid = cfg.grid.grid()?;
    let (c0, state) = match &cfg.start {
        StartSpec::Random => {
            let mut rng = seeded_rng(cfg.seed);
            let c = random_configuration(grid, cfg.grid.rank, Smoothness::Smooth { max_mode: cfg.max_mode }, cfg.amplitude, &mut rng);
            (c, FlowState { iteration: 0, step: cfg.flow.step_size })
        }
        StartSpec::RankOneSeed(z) => (seed_solution(grid, cfg.grid.rank, *z)?, FlowState { iteration: 0, step: cfg.flow.step_size }),
        StartSpec::Resume(path) => {
            let (c, state, _) = load_configuration(path)?;
            if c.grid() != grid || c.rank() != cfg.grid.rank {
                return Err(LabError::Format(format!(
                    "resume file {} does not match the configured grid and rank",
                    path.display()
                )));
            }
            (c, state)
        }
    };
    let (c, trace) = gradient_flow_from(&c0, &cfg.flow, state)?;
    fs::write(dir.join(&cfg.trace), trace.to_csv())?;
    fs::write(dir.join(&cfg.status), trace.status_json() + "\n")?;
    save_configuration(&dir.join(&cfg.output), &c, trace.final_state, cfg.seed)?;
    let last = trace.last();
    write_meta(&dir.join(&cfg.meta), "solve", started, clock, json!({ "iterations": last.iter }))?;
    eprintln!(
        "solve: {} after {} iterations, r1 = {:.3e}, r2 = {:.3e}",
        trace.status, last.iter, last.r1_norm, last.r2_norm
    );
    Ok(if trace.status == FlowStatus::Converged { Outcome::Passed } else { Outcome::Failed })
}

fn spectrum(cfg: &SpectrumConfig, dir: &Path) -> Result<Outcome> {
    let (started, clock) = (unix_seconds(), Instant::now());
    check_spectrum_caps(cfg.grid.sides, cfg.grid.rank)?;
    let grid = cfg.grid.grid()?;
    let n = cfg.grid.rank;
    let mut rng = seeded_rng(cfg.seed);
    let smooth = Smoothness::Smooth { max_mode: 1 };
    let raw_a = random_field(grid, Degree::ZeroOne, n, smooth, &mut rng);
    let raw_phi = random_field(grid, Degree::OneZero, n, smooth, &mut rng);
    let scale = |w: crate::surface::LatticeForm| {
        let peak = w.max_abs();
        if peak > 0.0 {
            w.scale_real(cfg.field_amplitude / peak)
        } else {
            w
        }
    };
    let a0 = ReferenceConnection::new(scale(raw_a))?;
    let phi10 = scale(raw_phi);
    let g = match cfg.gauge {
        GaugeChoice::Identity => GaugeElement::identity(grid, n),
        GaugeChoice::Random => random_gauge(grid, n, cfg.seed.wrapping_add(1), Smoothness::Rough, cfg.gauge_amplitude),
    };
    let report = laplacian_spectrum_invariance(&a0, &phi10, &g, cfg.k)?;
    let digest = format!("N={} L={} n={} seed={} k={}", cfg.grid.sides, cfg.grid.length, n, cfg.seed, cfg.k);
    let body = json!({
        "spectrum": &report,
        "identity_report": report.identity_report(&digest),
    });
    fs::write(dir.join(&cfg.report), serde_json::to_string_pretty(&body)? + "\n")?;
    write_meta(&dir.join(&cfg.meta), "spectrum", started, clock, json!({ "pass": report.pass }))?;
    eprintln!(
        "spectrum: {} lowest eigenvalues, max relative discrepancy {:.3e}, kernel {} vs {}",
        cfg.k, report.max_rel_discrepancy, report.kernel_dim_base, report.kernel_dim_gauged
    );
    Ok(if report.pass { Outcome::Passed } else { Outcome::Failed })
}
