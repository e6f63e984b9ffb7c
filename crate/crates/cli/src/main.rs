use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use accretia_cli::catalog;
use accretia_cli::config::ScenarioConfig;
use accretia_cli::output::{fmt_f64, write_report_json, write_trace_csv};
use accretia_cli::scenario::{run_scenario, scenario_rate, RunOverrides, ScenarioError};
use accretia_core::certify::CertStatus;
use clap::{Parser, Subcommand};

/// Iterative zero-finding for uniformly accretive operators, with
/// certified rates of convergence.
#[derive(Parser)]
#[command(name = "accretia", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for trace CSV and report JSON (overrides the
    /// ACCRETIA_OUT environment variable and the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Horizon override.
    #[arg(long, global = true)]
    horizon: Option<u64>,
    /// Seed for the sampling-based verifications (never affects traces).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// List the bundled scenarios and their rate constructions.
    ListScenarios,
    /// Run a scenario (bundled id or config path): verify hypotheses,
    /// iterate, certify the rate, write artifacts.
    Run { config: String },
    /// Print a per-ε table: theoretical index, empirical first entry,
    /// slack ratio, verdict.
    RateTable {
        config: String,
        /// Comma-separated ε values; defaults to the scenario grid.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
    },
}

fn output_dir(cli_out: &Option<PathBuf>, config: &ScenarioConfig) -> Option<PathBuf> {
    if let Some(dir) = cli_out {
        return Some(dir.clone());
    }
    if let Ok(dir) = std::env::var("ACCRETIA_OUT") {
        if !dir.is_empty() {
            return Some(PathBuf::from(dir));
        }
    }
    config.output_dir.as_ref().map(PathBuf::from)
}

fn cmd_list() -> ExitCode {
    for entry in catalog::CATALOG {
        println!(
            "{} → {} ({})",
            entry.id,
            entry.theorem.display(),
            entry.summary
        );
    }
    ExitCode::SUCCESS
}

fn cmd_run(spec: &str, out: Option<PathBuf>, overrides: RunOverrides) -> Result<ExitCode, ScenarioError> {
    let config = catalog::load(spec)?;
    let out = output_dir(&out, &config);
    let outcome = run_scenario(&config, &overrides)?;

    if let Some(dir) = &out {
        fs::create_dir_all(dir).map_err(io_to_config)?;
        if let Some(trace) = &outcome.trace {
            let path = dir.join(format!("{}.trace.csv", outcome.report.scenario_id));
            let mut f = fs::File::create(&path).map_err(io_to_config)?;
            write_trace_csv(&mut f, trace, &outcome.built.schedule).map_err(io_to_config)?;
        }
        let path = dir.join(format!("{}.report.json", outcome.report.scenario_id));
        let mut f = fs::File::create(&path).map_err(io_to_config)?;
        write_report_json(&mut f, &outcome.report).map_err(io_to_config)?;
    }

    let report = &outcome.report;
    if !report.verification.passed {
        if report.certification.is_none() {
            eprintln!(
                "{}: hypothesis verification failed ({} modulus violations); scenario rejected before iteration",
                report.scenario_id, report.verification.theta.violation_count
            );
        } else {
            eprintln!("{}: declared bounds violated by the run", report.scenario_id);
        }
    }
    if let Some(cert) = &report.certification {
        let mut certified = 0;
        let mut vacuous = 0;
        let mut failed = 0;
        for e in &cert.entries {
            match e.status {
                CertStatus::Certified => certified += 1,
                CertStatus::Vacuous => vacuous += 1,
                CertStatus::Failed => failed += 1,
            }
        }
        println!(
            "{}: {} certified, {} vacuous, {} failed over horizon {}",
            report.scenario_id, certified, vacuous, failed, report.horizon
        );
        for e in &cert.entries {
            if e.status == CertStatus::Failed {
                let c = &e.counterexamples[0];
                println!(
                    "  counterexample: eps={} n={} residual={}",
                    fmt_f64(e.eps),
                    c.n,
                    fmt_f64(c.residual)
                );
            }
        }
    }
    Ok(ExitCode::from(outcome.exit_code() as u8))
}

fn cmd_rate_table(
    spec: &str,
    eps: &[f64],
    out: Option<PathBuf>,
    overrides: RunOverrides,
) -> Result<ExitCode, ScenarioError> {
    let config = catalog::load(spec)?;
    let _ = out;
    let outcome = run_scenario(&config, &overrides)?;
    if !outcome.report.verification.passed && outcome.trace.is_none() {
        eprintln!(
            "{}: hypothesis verification failed; no table",
            outcome.report.scenario_id
        );
        return Ok(ExitCode::from(1));
    }
    let rate = scenario_rate(&outcome.built);
    let trace = outcome.trace.as_ref().expect("verification passed");
    let grid: Vec<f64> = if eps.is_empty() {
        outcome.built.eps_grid.clone()
    } else {
        eps.to_vec()
    };
    println!("eps,phi,first_entry,slack_ratio,status");
    for &e in &grid {
        let phi = rate.at(e);
        let first = accretia_core::certify::first_stable_entry(trace, e);
        let status = if phi > trace.horizon {
            "vacuous"
        } else {
            let bad = (phi..=trace.horizon)
                .any(|n| trace.residuals[n as usize] > e + 1e-9);
            if bad {
                "failed"
            } else {
                "certified"
            }
        };
        let first_str = first.map(|v| v.to_string()).unwrap_or_default();
        let slack = match first {
            Some(f) if f > 0 && status == "certified" => fmt_f64(phi as f64 / f as f64),
            _ => String::new(),
        };
        println!("{},{phi},{first_str},{slack},{status}", fmt_f64(e));
    }
    Ok(ExitCode::from(outcome.exit_code() as u8))
}

fn io_to_config(e: std::io::Error) -> ScenarioError {
    ScenarioError::Config(accretia_cli::config::ConfigError::Invalid(format!(
        "io error: {e}"
    )))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = RunOverrides {
        horizon: cli.horizon,
        seed: cli.seed,
    };
    let result = match &cli.command {
        Command::ListScenarios => return cmd_list(),
        Command::Run { config } => cmd_run(config, cli.out.clone(), overrides),
        Command::RateTable { config, eps } => {
            cmd_rate_table(config, eps, cli.out.clone(), overrides)
        }
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
