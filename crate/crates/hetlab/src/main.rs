//! Command-line front end: condition checking, coefficient search, trajectory
//! export and full adjudication, all with seeded, reproducible outputs.
//!
//! Exit codes: 0 success / verdict reached, 1 input or configuration error,
//! 2 condition-check failure, 3 search exhausted.

use clap::{Parser, Subcommand};
use hetlab::analysis::{
    check_construction, find_coefficients, CoefficientBox, ConditionReport, SearchConfig,
    SearchMode, SearchOutcome,
};
use hetlab::experiments::{adjudicate, AdjudicationBudget};
use hetlab::integrator::{integrate, IntegratorConfig};
use hetlab::manifest::RunManifest;
use hetlab::{CoefficientSet, StateVector};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "hetlab", version, about = "Heteroclinic-cycle verification laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Omit timestamps and durations from manifests (for byte-for-byte
    /// reproducible outputs).
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the condition table, construction items and hypotheses for a
    /// coefficient file.
    Check {
        /// JSON file with exactly the 22 coefficient keys.
        #[arg(long)]
        coeffs: PathBuf,
    },
    /// Search a coefficient box for a set passing the selected conditions.
    Find {
        /// "table1_literal" or "direct_conditions".
        #[arg(long)]
        mode: String,
        /// JSON file mapping each coefficient to [lower, upper].
        #[arg(long = "box", value_name = "PATH")]
        box_file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample budget.
        #[arg(long, default_value_t = 100_000)]
        max: u64,
        /// Write the found coefficient set (flat JSON) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate one trajectory and export it as CSV.
    Simulate {
        #[arg(long)]
        coeffs: PathBuf,
        /// Initial state "x1,x2,x3,x4".
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long, allow_negative_numbers = true)]
        tmax: f64,
        /// Output CSV path; a sibling .manifest.json is written next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        rel_tol: f64,
        #[arg(long, default_value_t = 1e-11)]
        abs_tol: f64,
    },
    /// Run the full pipeline and write every report into a directory.
    Adjudicate {
        #[arg(long)]
        coeffs: PathBuf,
        /// Output directory for the report files.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Tube radii (repeatable); the two smallest are measured.
        #[arg(long = "eps", value_name = "X")]
        eps_levels: Vec<f64>,
        /// Monte Carlo samples per tube radius.
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        /// Loop budget per classified sample.
        #[arg(long, default_value_t = 50)]
        loops_max: usize,
        /// Skip the Monte Carlo basin measurements (analytic sections only).
        #[arg(long)]
        skip_basin: bool,
        /// Also write one CSV of per-sample outcomes per basin run.
        #[arg(long)]
        sample_logs: bool,
    },
}

fn fail(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn load_coeffs(path: &Path) -> Result<CoefficientSet, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    CoefficientSet::from_json_str(&text).map_err(|e| e.to_string())
}

fn print_envelope(manifest: &RunManifest, payload: serde_json::Value) {
    let doc = manifest.envelope(payload);
    println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
}

fn parse_state(text: &str) -> Result<StateVector, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!(
            "x0 must have exactly four comma-separated components, got {}",
            parts.len()
        ));
    }
    let mut vals = [0.0; 4];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p
            .parse::<f64>()
            .map_err(|e| format!("bad component {p:?} in x0: {e}"))?;
        if !v.is_finite() {
            return Err(format!("non-finite component {p:?} in x0"));
        }
    }
    Ok(StateVector::from_array(vals))
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("HETLAB_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => return fail(&format!("HETLAB_THREADS must be a positive integer, got {threads:?}")),
        }
    }
    // argument errors are input errors: exit 1, not clap's default 2
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let with_timestamp = !cli.no_timestamp;
    match cli.command {
        Command::Check { coeffs } => cmd_check(&coeffs, with_timestamp),
        Command::Find {
            mode,
            box_file,
            seed,
            max,
            out,
        } => cmd_find(&mode, &box_file, seed, max, out.as_deref(), with_timestamp),
        Command::Simulate {
            coeffs,
            x0,
            tmax,
            out,
            rel_tol,
            abs_tol,
        } => cmd_simulate(&coeffs, &x0, tmax, &out, rel_tol, abs_tol, with_timestamp),
        Command::Adjudicate {
            coeffs,
            out,
            seed,
            eps_levels,
            samples,
            loops_max,
            skip_basin,
            sample_logs,
        } => cmd_adjudicate(
            &coeffs,
            &out,
            seed,
            eps_levels,
            samples,
            loops_max,
            skip_basin,
            sample_logs,
            with_timestamp,
        ),
    }
}

fn cmd_check(coeffs_path: &Path, with_timestamp: bool) -> ExitCode {
    let started = Instant::now();
    let c = match load_coeffs(coeffs_path) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let report = ConditionReport::build(&c);
    let construction = check_construction(&c);
    let all_pass = report.table1.all_pass();
    let mut manifest = RunManifest::new(
        "check",
        vec![coeffs_path.display().to_string()],
        serde_json::json!({}),
        None,
        with_timestamp,
    );
    manifest.set_duration(started.elapsed().as_secs_f64());
    print_envelope(
        &manifest,
        serde_json::json!({
            "conditions": report.rows(),
            "construction": construction,
            "all_table1_pass": all_pass,
        }),
    );
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn cmd_find(
    mode: &str,
    box_path: &Path,
    seed: u64,
    max: u64,
    out: Option<&Path>,
    with_timestamp: bool,
) -> ExitCode {
    let started = Instant::now();
    let mode = match mode {
        "table1_literal" => SearchMode::Table1Literal,
        "direct_conditions" => SearchMode::DirectConditions,
        other => {
            return fail(&format!(
                "unknown mode {other:?}; use table1_literal or direct_conditions"
            ))
        }
    };
    let text = match fs::read_to_string(box_path) {
        Ok(t) => t,
        Err(e) => return fail(&format!("cannot read {}: {e}", box_path.display())),
    };
    let sample_box: CoefficientBox = match serde_json::from_str(&text) {
        Ok(b) => b,
        Err(e) => return fail(&format!("bad box file: {e}")),
    };
    let cfg = SearchConfig {
        mode,
        sample_box,
        max_samples: max,
        rng_seed: seed,
    };
    let outcome = match find_coefficients(&cfg) {
        Ok(o) => o,
        Err(e) => return fail(&e.to_string()),
    };
    let mut manifest = RunManifest::new(
        "find",
        vec![box_path.display().to_string()],
        serde_json::json!({"mode": mode, "max_samples": max}),
        Some(seed),
        with_timestamp,
    );
    manifest.set_duration(started.elapsed().as_secs_f64());
    match &outcome {
        SearchOutcome::Found { coeffs, .. } => {
            if let Some(path) = out {
                let flat = serde_json::to_string_pretty(coeffs).expect("serializable");
                if let Err(e) = fs::write(path, flat + "\n") {
                    return fail(&format!("cannot write {}: {e}", path.display()));
                }
            }
            print_envelope(&manifest, serde_json::to_value(&outcome).expect("serializable"));
            ExitCode::SUCCESS
        }
        SearchOutcome::Exhausted { .. } => {
            print_envelope(&manifest, serde_json::to_value(&outcome).expect("serializable"));
            ExitCode::from(3)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    coeffs_path: &Path,
    x0_text: &str,
    tmax: f64,
    out: &Path,
    rel_tol: f64,
    abs_tol: f64,
    with_timestamp: bool,
) -> ExitCode {
    let started = Instant::now();
    let c = match load_coeffs(coeffs_path) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let x0 = match parse_state(x0_text) {
        Ok(x) => x,
        Err(e) => return fail(&e),
    };
    if !(tmax > 0.0) || !tmax.is_finite() {
        return fail(&format!("tmax = {tmax} must be positive and finite"));
    }
    let cfg = IntegratorConfig {
        rel_tol,
        abs_tol,
        max_time: tmax,
        ..Default::default()
    };
    let traj = match integrate(&c, &x0, &cfg) {
        Ok(t) => t,
        Err(e) => return fail(&e.to_string()),
    };
    let mut csv = Vec::new();
    if traj.write_csv(&mut csv).is_err() {
        return fail("cannot format trajectory CSV");
    }
    if let Err(e) = fs::write(out, &csv) {
        return fail(&format!("cannot write {}: {e}", out.display()));
    }
    let mut manifest = RunManifest::new(
        "simulate",
        vec![coeffs_path.display().to_string()],
        serde_json::json!({
            "x0": x0,
            "tmax": tmax,
            "rel_tol": rel_tol,
            "abs_tol": abs_tol,
            "out": out.display().to_string(),
        }),
        None,
        with_timestamp,
    );
    manifest.set_duration(started.elapsed().as_secs_f64());
    let payload = serde_json::json!({
        "termination": traj.termination,
        "final_time": traj.final_time(),
        "final_state": traj.final_state(),
        "rows": traj.states.len(),
        "steps_accepted": traj.steps_accepted,
        "steps_rejected": traj.steps_rejected,
        "csv_path": out.display().to_string(),
    });
    let sidecar = manifest.envelope(payload.clone());
    let sidecar_path = out.with_extension("manifest.json");
    if let Err(e) = fs::write(
        &sidecar_path,
        serde_json::to_string_pretty(&sidecar).expect("serializable") + "\n",
    ) {
        return fail(&format!("cannot write {}: {e}", sidecar_path.display()));
    }
    print_envelope(&manifest, payload);
    ExitCode::SUCCESS
}

#[allow(clippy::too_many_arguments)]
fn cmd_adjudicate(
    coeffs_path: &Path,
    out_dir: &Path,
    seed: u64,
    eps_levels: Vec<f64>,
    samples: u64,
    loops_max: usize,
    skip_basin: bool,
    sample_logs: bool,
    with_timestamp: bool,
) -> ExitCode {
    let started = Instant::now();
    let c = match load_coeffs(coeffs_path) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if eps_levels.iter().any(|&e| !(e > 0.0)) {
        return fail("every --eps must be positive");
    }
    if samples == 0 {
        return fail("--samples must be at least 1");
    }
    // fail fast on an unusable output directory, before any integration
    if let Err(e) = fs::create_dir_all(out_dir) {
        return fail(&format!("cannot create {}: {e}", out_dir.display()));
    }
    let probe = out_dir.join(".write_probe");
    if let Err(e) = fs::write(&probe, b"ok") {
        return fail(&format!("output directory not writable: {e}"));
    }
    let _ = fs::remove_file(&probe);

    let mut budget = AdjudicationBudget {
        samples_per_eps: samples,
        seed,
        skip_basin,
        ..Default::default()
    };
    if !eps_levels.is_empty() {
        budget.eps_levels = eps_levels;
    }
    budget.tube.loops_max = loops_max;

    let report = adjudicate(&c, &budget);

    let mut manifest = RunManifest::new(
        "adjudicate",
        vec![coeffs_path.display().to_string()],
        serde_json::json!({
            "eps_levels": budget.eps_levels,
            "samples_per_eps": budget.samples_per_eps,
            "loops_max": loops_max,
            "skip_basin": skip_basin,
            "out": out_dir.display().to_string(),
        }),
        Some(seed),
        with_timestamp,
    );
    manifest.set_duration(started.elapsed().as_secs_f64());

    let write = |name: &str, payload: serde_json::Value| -> Result<(), String> {
        let doc = manifest.envelope(payload);
        let path = out_dir.join(name);
        fs::write(
            &path,
            serde_json::to_string_pretty(&doc).expect("serializable") + "\n",
        )
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
    };

    let steps: Vec<(&str, serde_json::Value)> = vec![
        (
            "conditions.json",
            serde_json::json!({
                "conditions": report.conditions.rows(),
            }),
        ),
        (
            "construction.json",
            serde_json::to_value(&report.construction).expect("serializable"),
        ),
        (
            "connections.json",
            serde_json::to_value(&report.connections).expect("serializable"),
        ),
        (
            "basins.json",
            serde_json::to_value(&report.basin_reports).expect("serializable"),
        ),
        (
            "adjudication.json",
            serde_json::to_value(&report).expect("serializable"),
        ),
    ];
    for (name, payload) in steps {
        if let Err(e) = write(name, payload) {
            return fail(&e);
        }
    }
    if sample_logs {
        for rep in &report.basin_reports {
            let cycle = match rep.cycle {
                hetlab::experiments::CycleId::P13Cycle => "p13",
                hetlab::experiments::CycleId::P14Cycle => "p14",
            };
            let mut csv = Vec::new();
            if rep.write_sample_csv(&mut csv).is_err() {
                return fail("cannot format sample log");
            }
            let path = out_dir.join(format!("basin_{cycle}_eps{:e}.csv", rep.eps));
            if let Err(e) = fs::write(&path, csv) {
                return fail(&format!("cannot write {}: {e}", path.display()));
            }
        }
    }
    print_envelope(
        &manifest,
        serde_json::json!({
            "out_dir": out_dir.display().to_string(),
            "principal_plane": report.principal_plane,
            "predicted_attracting_cycle": report.predicted_attracting_cycle,
            "simulated_attracting_cycle": report.simulated_attracting_cycle,
            "anomalies": report.anomalies,
            "skipped": report.skipped,
        }),
    );
    ExitCode::SUCCESS
}
