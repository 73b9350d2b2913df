//! Command line front end for the verification suites and parameter scans.
//!
//! Three subcommands: `verify <suite>` runs a named check battery and
//! writes `report-<suite>.json`, `scan <family>` walks a parameter grid
//! into CSV plus a JSON summary, and `report <dir>` aggregates previously
//! written reports. All output files are deterministic for a fixed seed
//! and config; wall clock timing goes to stderr only so that stdout and
//! the JSON artifacts stay byte-reproducible.
//!
//! Exit codes: 0 success, 1 check or runtime failure, 2 usage error,
//! 3 configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::builder::PossibleValuesParser;
use clap::{Parser, Subcommand};

use cylab_core::config::Config;
use cylab_core::scan::{run_scan, FAMILIES};
use cylab_core::suite::{run_suite, CheckStatus, SUITES};
use cylab_core::{GeomError, Result};

#[derive(Parser)]
#[command(
    name = "cylab",
    version,
    about = "Verification suites and parameter scans for the resolved torus geometry",
    after_help = "Exit codes: 0 success, 1 check/runtime failure, 2 usage, 3 config."
)]
struct Cli {
    /// TOML config file; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Seed for randomized sample points; fixed seed gives identical output.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    /// Directory for reports, CSVs and summaries.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out: PathBuf,

    /// Multiplier applied to numeric check thresholds (bands are not scaled).
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one check suite and write report-<suite>.json.
    Verify {
        #[arg(value_parser = PossibleValuesParser::new(SUITES))]
        suite: String,
    },
    /// Run one scan family and write scan-<family>.csv plus scan-<family>.json.
    Scan {
        #[arg(value_parser = PossibleValuesParser::new(FAMILIES))]
        family: String,
    },
    /// Summarize every report-*.json in a directory.
    Report { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                GeomError::Config(_) => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match &cli.command {
        Command::Verify { suite } => verify(suite, &cfg, &cli),
        Command::Scan { family } => scan(family, &cfg, &cli),
        Command::Report { dir } => summarize(dir),
    }
}

fn verify(suite: &str, cfg: &Config, cli: &Cli) -> Result<ExitCode> {
    let start = Instant::now();
    let report = run_suite(suite, cfg, cli.seed, cli.tol_scale)?;
    std::fs::create_dir_all(&cli.out)?;
    let path = cli.out.join(format!("report-{suite}.json"));
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| GeomError::Domain(format!("report serialization: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text)?;

    for check in &report.checks {
        print_check(check);
    }
    let failed = report
        .checks
        .iter()
        .filter(|c| c.status == CheckStatus::Fail)
        .count();
    println!(
        "verify {suite}: {} checks, {failed} failed (seed {}, tol-scale {})",
        report.checks.len(),
        report.seed,
        report.tol_scale
    );
    println!("report: {}", path.display());
    eprintln!("wall time: {:.2}s", start.elapsed().as_secs_f64());
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn print_check(check: &cylab_core::suite::Check) {
    let tag = match check.status {
        CheckStatus::Pass => "pass",
        CheckStatus::Fail => "FAIL",
        CheckStatus::Measured => "meas",
    };
    let bound = if let Some(t) = check.threshold {
        format!("{:.3e} <= {:.1e}", check.value, t)
    } else if let Some([lo, hi]) = check.band {
        format!("{:.4} in [{lo}, {hi}]", check.value)
    } else {
        format!("{:.4}", check.value)
    };
    println!("  {tag}  {:<34} {bound}", check.name);
    if check.status == CheckStatus::Fail {
        println!("        claim: {}", check.claim);
        println!("        {}", check.detail);
    }
}

fn scan(family: &str, cfg: &Config, cli: &Cli) -> Result<ExitCode> {
    let start = Instant::now();
    let outcome = run_scan(family, cfg, cli.seed, &cli.out)?;
    println!(
        "scan {family}: {} rows (seed {})",
        outcome.rows, cli.seed
    );
    println!("csv: {}", outcome.csv_path.display());
    println!("summary: {}", outcome.summary_path.display());
    eprintln!("wall time: {:.2}s", start.elapsed().as_secs_f64());
    Ok(ExitCode::SUCCESS)
}

/// Minimal shape read back from report-*.json; tolerates extra fields so
/// the schema can grow without breaking older aggregation.
#[derive(serde::Deserialize)]
struct StoredReport {
    suite: String,
    passed: bool,
    checks: Vec<StoredCheck>,
}

#[derive(serde::Deserialize)]
struct StoredCheck {
    name: String,
    status: String,
}

fn summarize(dir: &Path) -> Result<ExitCode> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| GeomError::Domain(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("report-") && n.ends_with(".json"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(GeomError::Domain(format!(
            "no report-*.json files in {}",
            dir.display()
        )));
    }

    let mut any_failed = false;
    for path in &paths {
        let text = std::fs::read_to_string(path)?;
        let report: StoredReport = serde_json::from_str(&text)
            .map_err(|e| GeomError::Domain(format!("{}: {e}", path.display())))?;
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| c.status == "fail")
            .map(|c| c.name.as_str())
            .collect();
        println!(
            "  {}  {:<10} {} checks, {} failed",
            if report.passed { "pass" } else { "FAIL" },
            report.suite,
            report.checks.len(),
            failed.len()
        );
        for name in failed {
            println!("        fail: {name}");
        }
        any_failed |= !report.passed;
    }
    println!(
        "{} reports in {}{}",
        paths.len(),
        dir.display(),
        if any_failed { ", with failures" } else { "" }
    );
    Ok(if any_failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}
