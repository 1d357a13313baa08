//! `carnot-gmt`: run geometric checks described by scenario files and write
//! deterministic report rows.
//!
//! Exit codes: 0 when the run completed (a "violated" verdict is a finding,
//! not a failure), 1 for malformed input, 2 when a well-formed scenario hits
//! a precondition the computation cannot work around.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use carnot_gmt::catalog;
use carnot_gmt::error::{Error, Result};
use carnot_gmt::exec::{self, ExecMode};
use carnot_gmt::report::{write_profile_csv, write_reports_csv, CheckOutcome, CheckReport};
use carnot_gmt::scenario::{self, Scenario};

#[derive(Parser)]
#[command(
    name = "carnot-gmt",
    version,
    about = "Geometric-measure checks on hypersurfaces in Carnot groups"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario file and write its report and profile
    Run {
        scenario: PathBuf,
        /// Directory for the report JSON/CSV and profile CSV
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Validate and run every scenario in a manifest, aggregating one CSV
    Suite {
        manifest: PathBuf,
        /// Directory for the aggregated CSV, summary and profiles
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// List built-in groups, surfaces, norms, fields and checks
    Catalog,
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run { scenario, out } => run_one(&scenario, &out),
        Cmd::Suite { manifest, out } => run_suite(&manifest, &out),
        Cmd::Catalog => {
            print_catalog();
            Ok(())
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

/// `CARNOT_GMT_THREADS` caps the worker pool; ignored when unset, empty, or
/// when the pool was already initialized.
fn configure_threads() {
    #[cfg(feature = "parallel")]
    if let Ok(v) = std::env::var("CARNOT_GMT_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string())
}

fn write_outcome(out_dir: &Path, name: &str, outcome: &CheckOutcome) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let json_path = out_dir.join(format!("{name}.report.json"));
    let json = serde_json::to_string_pretty(&outcome.report)
        .map_err(|e| Error::Input(format!("serializing report: {e}")))?;
    fs::write(&json_path, json + "\n")?;
    written.push(json_path);

    let csv_path = out_dir.join(format!("{name}.report.csv"));
    let mut buf = Vec::new();
    write_reports_csv(&mut buf, std::slice::from_ref(&outcome.report))?;
    fs::write(&csv_path, buf)?;
    written.push(csv_path);

    if let Some(profile) = &outcome.profile {
        let prof_path = out_dir.join(format!("{name}.profile.csv"));
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, profile)?;
        fs::write(&prof_path, buf)?;
        written.push(prof_path);
    }
    Ok(written)
}

fn describe(report: &CheckReport) -> String {
    format!(
        "{}: {} [{}] lhs={:.6e} rhs={:.6e} margin={:.3e} error={:.3e}",
        report.name,
        report.check,
        report.verdict.as_str(),
        report.lhs,
        report.rhs,
        report.margin,
        report.error
    )
}

fn run_one(path: &Path, out_dir: &Path) -> Result<()> {
    let sc = Scenario::from_path(path)?;
    scenario::validate_scenario(&sc).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    let outcome = scenario::run_scenario(&sc, &file_stem(path))?;
    println!("{}", describe(&outcome.report));
    for p in write_outcome(out_dir, &outcome.report.name, &outcome)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run_suite(manifest: &Path, out_dir: &Path) -> Result<()> {
    // Every scenario is loaded and validated before any check runs; the
    // first malformed entry aborts the whole suite.
    let entries = scenario::load_manifest(manifest)?;
    fs::create_dir_all(out_dir)?;
    let outcomes: Vec<Result<CheckOutcome>> = exec::map_indexed(
        entries.len(),
        ExecMode::Parallel,
        |i| {
            let (name, sc) = &entries[i];
            scenario::run_scenario(sc, name)
        },
    );
    let mut reports = Vec::with_capacity(entries.len());
    for ((name, _), outcome) in entries.iter().zip(outcomes) {
        let outcome = outcome.map_err(|e| match e {
            Error::Input(msg) => Error::Input(format!("{name}: {msg}")),
            Error::Precondition(msg) => Error::Precondition(format!("{name}: {msg}")),
            other => other,
        })?;
        println!("{}", describe(&outcome.report));
        if let Some(profile) = &outcome.profile {
            let prof_path = out_dir.join(format!("{name}.profile.csv"));
            let mut buf = Vec::new();
            write_profile_csv(&mut buf, profile)?;
            fs::write(&prof_path, buf)?;
        }
        let mut report = outcome.report;
        report.name = name.clone();
        reports.push(report);
    }

    let csv_path = out_dir.join("suite.csv");
    let mut buf = Vec::new();
    write_reports_csv(&mut buf, &reports)?;
    fs::write(&csv_path, buf)?;

    let holds = reports.iter().filter(|r| r.verdict.as_str() == "holds").count();
    let violated = reports
        .iter()
        .filter(|r| r.verdict.as_str() == "violated")
        .count();
    let inconclusive = reports.len() - holds - violated;
    let summary_path = out_dir.join("suite_summary.json");
    let mut summary = Vec::new();
    writeln!(
        summary,
        "{{\n  \"rows\": {},\n  \"holds\": {},\n  \"violated\": {},\n  \"inconclusive\": {}\n}}",
        reports.len(),
        holds,
        violated,
        inconclusive
    )?;
    fs::write(&summary_path, summary)?;

    println!(
        "suite: {} rows ({holds} holds, {violated} violated, {inconclusive} inconclusive)",
        reports.len()
    );
    println!("wrote {}", csv_path.display());
    println!("wrote {}", summary_path.display());
    Ok(())
}

fn print_catalog() {
    println!("groups:");
    for g in catalog::GROUPS {
        println!("  {g}");
    }
    println!("surfaces:");
    for s in catalog::SURFACES {
        println!("  {s}");
    }
    println!("norms:");
    println!("  koranyi");
    println!("  power (lambda, coefficients c)");
    println!("fields:");
    for f in catalog::FIELDS {
        println!("  {f}");
    }
    println!("level functions:");
    for l in catalog::LEVEL_FUNCTIONS {
        println!("  {l}");
    }
    println!("weights:");
    for w in catalog::WEIGHTS {
        println!("  {w}");
    }
    println!("checks:");
    for c in scenario::CHECKS {
        println!("  {c}");
    }
}
