use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stratorder::cli::{reproduce_example, simulate, verify, ExperimentConfig, Mode, Theorem, VerifyOptions};
use stratorder::function_model::NoiseSpec;
use stratorder::{Error, Rational, Result, Scalar};

#[derive(Parser)]
#[command(name = "stratorder", version, about = "Exact and simulated comparison of stratified Monte Carlo estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact laws of the integral estimator on the two-stratum counterexample.
    Reproduce {
        /// Also report the ±1 construction on `n` strata.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Randomized exact sweep of one ordering theorem.
    Verify {
        #[arg(long)]
        theorem: Option<Theorem>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Fixed Gaussian noise variance, a rational such as `1/4`.
        #[arg(long)]
        noise_variance: Option<String>,
        /// Replace trial 0 by the non-monotone counterexample.
        #[arg(long)]
        inject_counterexample: bool,
        /// JSON config; command-line flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replicate estimators from a JSON config and compare with exact laws.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        emit_plot_data: bool,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Reproduce { n, json } => {
            let report = reproduce_example(n)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{report}");
            }
            Ok(true)
        }
        Command::Verify { theorem, trials, seed, noise_variance, inject_counterexample, config, out } => {
            let mut options = match &config {
                Some(path) => ExperimentConfig::load(path)?.verify_options()?,
                None => {
                    let theorem = theorem.ok_or_else(|| Error::Config("--theorem is required".into()))?;
                    let seed = seed.ok_or_else(|| Error::Config("--seed is required".into()))?;
                    VerifyOptions::new(theorem, 200, seed)
                }
            };
            if let Some(t) = theorem {
                if config.is_some() && t != options.theorem {
                    options.generator = t.default_generator();
                }
                options.theorem = t;
            }
            if let Some(t) = trials {
                options.trials = t;
            }
            if let Some(s) = seed {
                options.seed = s;
            }
            if let Some(v) = noise_variance {
                options.noise = Some(NoiseSpec::gaussian(
                    Rational::parse(&v).ok_or_else(|| Error::Config(format!("bad noise variance `{v}`")))?,
                )?);
            }
            options.inject_counterexample |= inject_counterexample;
            let report = verify(&options)?;
            print!("{report}");
            if let Some(path) = out {
                serde_json::to_writer_pretty(std::fs::File::create(path)?, &report)?;
            }
            Ok(report.success())
        }
        Command::Simulate { config, emit_plot_data, output_dir } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.mode = Mode::Simulate;
            if let Some(spec) = cfg.simulation.as_mut() {
                spec.emit_plot_data |= emit_plot_data;
            }
            if output_dir.is_some() {
                cfg.output_dir = output_dir;
            }
            let summary = simulate(&cfg)?;
            for r in &summary.runs {
                let dkw = r.dkw.as_ref().map_or("n/a".to_string(), |d| {
                    format!("D = {:.4} band {:.4} {}", d.discrepancy, d.band, if d.pass { "pass" } else { "FAIL" })
                });
                println!(
                    "{:>12} {:>9}  R = {}  mean {:.6}  var {:.6}  L1 {:.6}  L2 {:.6}  DKW {dkw}",
                    r.partition, r.estimator, r.replicates, r.empirical_mean, r.empirical_variance, r.empirical_l1, r.empirical_l2
                );
            }
            println!("DKW failures {} (budget {}): {}", summary.dkw_failures, summary.flake_budget, if summary.pass { "pass" } else { "FAIL" });
            Ok(summary.pass)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
