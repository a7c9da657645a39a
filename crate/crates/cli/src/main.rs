use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use infoloss::entropy::{BRACKET_TOLERANCE, IDENTITY_TOLERANCE};
use infoloss::reconstruction::reconstruct;
use infoloss::{check_partial_invertibility, Symbol};
use infoloss_cli::config::{env_caps, AnalysisConfig};
use infoloss_cli::experiment::{filter_report, first_mismatch, round_trip, FILTER_AGREEMENT};
use infoloss_cli::output::{experiment_text, suite_text, value_text};
use infoloss_cli::{
    run_experiment, run_suite, CliError, ExperimentConfig, OutputFormat, RunOptions, SuiteName,
    SuiteOptions,
};

/// Information-loss analysis of finite-memory deterministic systems.
#[derive(Parser)]
#[command(name = "infoloss", version)]
struct Cli {
    /// Report format; overrides `format` in the config.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,

    /// Add wall-clock timings to the report (breaks byte-for-byte
    /// reproducibility).
    #[arg(long, global = true)]
    timings: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis listed in an experiment config.
    Analyze { config: PathBuf },

    /// Run a randomized invariant suite.
    Suite {
        #[arg(value_enum)]
        name: SuiteName,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        instances: usize,
    },

    /// Reconstruct inputs of the config's system from its outputs.
    Roundtrip {
        config: PathBuf,
        /// Input labels, comma separated; random sequences when omitted.
        #[arg(long, value_delimiter = ',')]
        input: Option<Vec<String>>,
        /// Seed labels (the first max(M, N) inputs) to use instead of the
        /// true ones.
        #[arg(long, value_delimiter = ',')]
        seed_symbols: Option<Vec<String>>,
    },

    /// Differential-entropy-rate change of a stable linear filter.
    Filter {
        /// Numerator coefficients b_0, b_1, ...
        #[arg(long, num_args = 1.., allow_negative_numbers = true, required = true)]
        b: Vec<f64>,
        /// Feedback coefficients a_1, a_2, ... of 1 − Σ a_l z^{-l}.
        #[arg(long, num_args = 0.., allow_negative_numbers = true)]
        a: Vec<f64>,
    },
}

#[derive(Serialize)]
struct ExplicitRoundTrip {
    input: Vec<String>,
    output: Vec<String>,
    seed: Vec<String>,
    reconstruction: Option<Vec<String>>,
    passed: bool,
    first_mismatch: Option<usize>,
    error: Option<String>,
}

fn emit<T: Serialize>(format: OutputFormat, value: &T, text: impl FnOnce() -> String) {
    match format {
        OutputFormat::Json => println!(
            "{}",
            serde_json::to_string_pretty(value).expect("reports serialize")
        ),
        OutputFormat::Text => print!("{}", text()),
    }
}

fn status(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn labels_to_symbols(
    alphabet: &infoloss::Alphabet,
    labels: &[String],
) -> infoloss_cli::Result<Vec<Symbol>> {
    labels
        .iter()
        .map(|l| {
            alphabet
                .index_of(l.trim())
                .ok_or_else(|| CliError::Config(format!("symbol {l:?} is not in the input alphabet")))
        })
        .collect()
}

fn run(cli: Cli) -> infoloss_cli::Result<ExitCode> {
    match cli.command {
        Command::Analyze { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let format = cli.format.or(cfg.format).unwrap_or(OutputFormat::Json);
            let report = run_experiment(&cfg, RunOptions { timings: cli.timings })?;
            emit(format, &report, || experiment_text(&report));
            Ok(status(report.passed))
        }
        Command::Suite {
            name,
            seed,
            instances,
        } => {
            let start = Instant::now();
            let opts = SuiteOptions {
                identity_tol: IDENTITY_TOLERANCE,
                bracket_tol: BRACKET_TOLERANCE,
                caps: env_caps()?,
            };
            let report = run_suite(name, seed, instances, opts);
            let format = cli.format.unwrap_or(OutputFormat::Json);
            emit(format, &report, || suite_text(&report));
            if cli.timings {
                eprintln!("wall time {:.3}s", start.elapsed().as_secs_f64());
            }
            Ok(status(report.failed == 0))
        }
        Command::Roundtrip {
            config,
            input,
            seed_symbols,
        } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let format = cli.format.or(cfg.format).unwrap_or(OutputFormat::Json);
            let system = cfg
                .build_system()?
                .ok_or_else(|| CliError::Config("missing key `system`".into()))?;
            let Some(labels) = input else {
                let (sequences, length, seed) = cfg
                    .analysis
                    .iter()
                    .find_map(|a| match a {
                        AnalysisConfig::RoundTrip { sequences, length, seed } => {
                            Some((*sequences, *length, *seed))
                        }
                        _ => None,
                    })
                    .unwrap_or((1000, 64, 0));
                let rt = round_trip(&system, sequences, length, seed)?;
                emit(format, &rt, || value_text("round-trip", &rt));
                return Ok(status(rt.first_failure.is_none()));
            };
            let inv = check_partial_invertibility(&system)?.inverse.ok_or_else(|| {
                CliError::Core(infoloss::Error::Precondition(
                    "round trip needs a partially invertible system".into(),
                ))
            })?;
            let xa = system.input_alphabet();
            let ya = system.output_alphabet();
            let x = labels_to_symbols(xa, &labels)?;
            let init = system.initial_state();
            let y = system.simulate(&x, &init)?;
            let lead = system.memory().min(x.len());
            let seed = match seed_symbols {
                Some(s) => labels_to_symbols(xa, &s)?,
                None => x[..lead].to_vec(),
            };
            let honest = seed == x[..lead];
            let outcome = reconstruct(&inv, &y, &seed, honest.then_some(&init));
            let show = |s: &[Symbol], a: &infoloss::Alphabet| -> Vec<String> {
                s.iter().map(|&v| a.label(v).to_string()).collect()
            };
            let (reconstruction, mismatch, error) = match &outcome {
                Ok(r) => (Some(show(r, xa)), first_mismatch(r, &x), None),
                Err(infoloss::Error::InconsistentObservation { index, .. }) => (
                    None,
                    first_mismatch(&seed, &x[..lead]).or(Some(*index)),
                    Some(outcome.as_ref().unwrap_err().to_string()),
                ),
                Err(e) => (None, None, Some(e.to_string())),
            };
            let report = ExplicitRoundTrip {
                input: labels,
                output: show(&y, ya),
                seed: show(&seed, xa),
                passed: reconstruction.is_some() && mismatch.is_none(),
                reconstruction,
                first_mismatch: mismatch,
                error,
            };
            emit(format, &report, || value_text("round-trip", &report));
            Ok(status(report.passed))
        }
        Command::Filter { b, a } => {
            let report = filter_report(b, a)?;
            emit(cli.format.unwrap_or(OutputFormat::Json), &report, || {
                value_text("filter", &report)
            });
            Ok(status((report.integral - report.roots).abs() <= FILTER_AGREEMENT))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
