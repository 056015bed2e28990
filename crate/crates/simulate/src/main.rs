// SPDX-License-Identifier: Apache-2.0

//! `simulate`: runs a scenario file through simulation, both detectors and the
//! certificate suite, and writes CSV and SVG artifacts.
//!
//! Exit codes: `0` success, `1` I/O or runtime failure, `2` invalid input or
//! scenario, `3` at least one certificate violated.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use source_scope::exec::{with_threads, Execution};
use source_scope::experiment::{
    emit_run, emit_sweeps, load_scenario, parse_sweep, reproduce_figures, run_scenario, run_sweep, AlgorithmChoice,
    RunOptions, RunReport, Scenario, SweepResult,
};
use source_scope::Error;

/// Environment variable that overrides `--threads`.
const THREADS_ENV: &str = "SOURCE_SCOPE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "simulate", version, about = "Simulate, detect and certify source intakes")]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if absent.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Detectors to run: 1, 2 or both.
    #[arg(long)]
    algorithm: Option<AlgorithmChoice>,
    /// Parameter sweep `axis=v1,v2,...` with axis in beta, L, sigma, N.
    /// Repeatable; replaces the sweeps declared in the scenario.
    #[arg(long = "sweep")]
    sweeps: Vec<String>,
    /// Seeds per sweep point; overrides the scenario.
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads; `SOURCE_SCOPE_THREADS` takes precedence.
    #[arg(long)]
    threads: Option<usize>,
    /// Also writes the six figure analogs.
    #[arg(long)]
    figures: bool,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
    Certificates(usize),
}

impl Failure {
    fn from_lib(err: Error, context: String) -> Failure {
        let validation = matches!(
            err,
            Error::Input(_) | Error::Invariant { .. } | Error::Parse { .. } | Error::Range { .. } | Error::Dimension { .. }
        );
        let err = anyhow::Error::new(err).context(context);
        if validation {
            Failure::Validation(err)
        } else {
            Failure::Runtime(err)
        }
    }
}

fn lib<T>(r: source_scope::Result<T>, context: impl FnOnce() -> String) -> Result<T, Failure> {
    r.map_err(|e| Failure::from_lib(e, context()))
}

fn thread_count(cli: &Cli) -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| Failure::Validation(anyhow::anyhow!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(cli.threads),
    }
}

fn print_report(report: &RunReport) {
    println!("scenario {} (seed {}, beta {})", report.name, report.seed, report.beta);
    if let Some(o) = &report.alg1 {
        println!("  threshold detector: {} events", o.events.len());
        for e in &o.events {
            let rho = e.rho_hat.map_or("-".to_string(), |r| format!("{r:.6}"));
            println!("    t_hat = {:.4}  rho_hat = {rho}", e.t_hat);
        }
    }
    if let Some(o) = &report.alg2 {
        println!("  Prony-Laplace detector: {} events", o.events.len());
        for e in &o.events {
            let rho = e.rho_tilde.map_or("-".to_string(), |r| format!("{r:.6}"));
            println!("    t_hat = {:.4}  rho_hat = {rho}", e.t_hat);
        }
    }
    let total = report.certificates().count();
    let failed = report.certificates().filter(|c| !c.satisfied).count();
    println!("  certificates: {} of {total} satisfied", total - failed);
}

fn sweep_violations(results: &[SweepResult]) -> usize {
    results
        .iter()
        .flat_map(|r| &r.rows)
        .filter(|row| row.outcome.as_ref().is_ok_and(|m| m.cert_pass_rate < 1.0))
        .count()
}

fn run(cli: &Cli, scenario: &Scenario) -> Result<(), Failure> {
    let out = &cli.out;
    let exec = Execution::Parallel;
    let opts = RunOptions { seed: cli.seed, algorithm: cli.algorithm, exec };
    let report = lib(run_scenario(scenario, opts), || format!("running {}", cli.scenario.display()))?;
    print_report(&report);
    let mut written = lib(emit_run(&report, out), || "writing run artifacts".into())?;
    let mut violations = report.certificates().filter(|c| !c.satisfied).count();

    let mut base = scenario.clone();
    if let Some(seed) = cli.seed {
        base.seed = seed;
    }
    let reps = cli.reps.unwrap_or(base.run.reps);
    let algorithm = cli.algorithm.unwrap_or(base.run.algorithm);
    let sweeps: Vec<String> = if cli.sweeps.is_empty() {
        base.run.sweeps.iter().map(|s| format!("{}={}", s.axis, join(&s.values))).collect()
    } else {
        cli.sweeps.clone()
    };
    for spec in &sweeps {
        let (axis, values) = lib(parse_sweep(spec), || format!("parsing --sweep {spec}"))?;
        let results = lib(run_sweep(&base, axis, &values, reps, algorithm, exec), || format!("sweep {spec}"))?;
        for r in &results {
            let failed = r.rows.iter().filter(|row| row.outcome.is_err()).count();
            println!("  sweep {} (detector {}): {} runs, {failed} failed", r.axis, r.algorithm, r.rows.len());
        }
        violations += sweep_violations(&results);
        written.extend(lib(emit_sweeps(&results, base.run.reference_sensor, out, ""), || "writing sweep".into())?);
    }
    if cli.figures {
        written.extend(lib(reproduce_figures(&base, out, reps, exec), || "reproducing figures".into())?);
    }
    for p in &written {
        println!("  wrote {}", p.display());
    }
    if violations > 0 {
        return Err(Failure::Certificates(violations));
    }
    Ok(())
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    lib(load_scenario(path), || "loading scenario".into())
}

fn main_inner(cli: &Cli) -> Result<(), Failure> {
    let threads = thread_count(cli)?;
    let scenario = load(&cli.scenario)?;
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating {}", cli.out.display()))
        .map_err(Failure::Runtime)?;
    match threads {
        Some(n) => lib(with_threads(n, || run(cli, &scenario)), || "configuring threads".into())?,
        None => run(cli, &scenario),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Certificates(n)) => {
            eprintln!("error: {n} certificate violation(s); see certificates_alg*.csv");
            ExitCode::from(3)
        }
    }
}
