//! `odeasym` — analysis runs, fixed-point solves, coefficient transforms,
//! and example reproduction for the asymptotic ODE toolkit.
//!
//! Every run writes its artifacts into one output directory: CSV files for
//! machine consumption, text files for reading, and a summary whose lines
//! decide the exit status (0 iff all enabled checks pass). Outputs are
//! deterministic: no randomness is used anywhere in the pipelines.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use ode_asymptotics::expr::parse_expr;

use ode_asymptotics_cli::config::{Mode, ProblemConfig};
use ode_asymptotics_cli::examples::run_example;
use ode_asymptotics_cli::outputs::{write_error_record, OutDir, Summary};
use ode_asymptotics_cli::pipeline::{run_config, run_nonlinear3, run_poincare, run_unbounded, RunOptions};

#[derive(Parser)]
#[command(name = "odeasym", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Overrides shared by every run; flags take precedence over the config's
/// `[solver]` section.
#[derive(Args, Debug, Clone)]
struct CommonOpts {
    /// Envelope rate β (inside the admissible interval of the sign case).
    #[arg(long)]
    beta: Option<f64>,
    /// Case constant parameter η ∈ ]0, 1/2[.
    #[arg(long)]
    eta: Option<f64>,
    /// Fixed-point iteration tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Right end of the solve/report window.
    #[arg(long)]
    tmax: Option<f64>,
    /// Output directory for all artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the fourth-order reduction analysis described by a config file.
    Analyze {
        /// Analysis kind; `poincare` is the only fourth-order analysis.
        #[arg(value_parser = ["poincare", "unbounded"])]
        kind: String,
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Solve the third-order nonlinear integral equation from a config file.
    Solve {
        #[arg(value_parser = ["nonlinear3"])]
        kind: String,
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Transform a growing-coefficient equation and run the L¹ battery.
    Transform {
        #[arg(value_parser = ["unbounded"])]
        kind: String,
        /// Growing coefficient q(t), e.g. "t^2".
        #[arg(long)]
        q: String,
        /// Zeroth-order coefficient r(t), e.g. "1".
        #[arg(long)]
        r: String,
        /// Left end of the window.
        #[arg(long, default_value_t = 1.0)]
        t0: f64,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Re-run a worked example and compare claimed versus computed values.
    #[command(name = "reproduce-example")]
    ReproduceExample {
        /// Example number (1, 2, or 3).
        n: u8,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run a config's pipeline but write only the summary files.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
}

fn run_options(opts: &CommonOpts, artifacts: bool) -> RunOptions {
    RunOptions {
        beta: opts.beta,
        eta: opts.eta,
        tol: opts.tol,
        t_max: opts.tmax,
        artifacts,
    }
}

fn dispatch(cli: Cli) -> (PathBuf, Result<Summary>) {
    match cli.command {
        Command::Analyze { kind, config, opts } => {
            let out_path = opts.out.clone();
            let run = || -> Result<Summary> {
                let cfg = ProblemConfig::load(&config)?;
                let expected = if kind == "poincare" {
                    Mode::Poincare4
                } else {
                    Mode::Unbounded4
                };
                anyhow::ensure!(
                    cfg.mode == expected,
                    "config mode does not match `analyze {kind}`"
                );
                let out = OutDir::create(&opts.out)?;
                let ro = run_options(&opts, true);
                let summary = if kind == "poincare" {
                    run_poincare(&cfg, &ro, &out)?
                } else {
                    let (q, r) = cfg.unbounded4_parts()?;
                    run_unbounded(q, r, cfg.t0, ro.t_max, true, &out)?
                };
                summary.write(&out)?;
                Ok(summary)
            };
            (out_path, run())
        }
        Command::Solve { kind, config, opts } => {
            let _ = kind; // only nonlinear3 is accepted by the parser
            let out_path = opts.out.clone();
            let run = || -> Result<Summary> {
                let cfg = ProblemConfig::load(&config)?;
                anyhow::ensure!(
                    cfg.mode == Mode::Nonlinear3,
                    "config mode does not match `solve nonlinear3`"
                );
                let out = OutDir::create(&opts.out)?;
                let summary = run_nonlinear3(&cfg, &run_options(&opts, true), &out)?;
                summary.write(&out)?;
                Ok(summary)
            };
            (out_path, run())
        }
        Command::Transform {
            kind,
            q,
            r,
            t0,
            opts,
        } => {
            let _ = kind;
            let out_path = opts.out.clone();
            let run = || -> Result<Summary> {
                let q = parse_expr(&q).with_context(|| format!("expression q = {q:?}"))?;
                let r = parse_expr(&r).with_context(|| format!("expression r = {r:?}"))?;
                let out = OutDir::create(&opts.out)?;
                let summary = run_unbounded(q, r, t0, opts.tmax, true, &out)?;
                summary.write(&out)?;
                Ok(summary)
            };
            (out_path, run())
        }
        Command::ReproduceExample { n, opts } => {
            let out_path = opts.out.clone();
            let run = || -> Result<Summary> {
                let out = OutDir::create(&opts.out)?;
                let summary = run_example(n, opts.eta.unwrap_or(0.25), &out)?;
                summary.write(&out)?;
                Ok(summary)
            };
            (out_path, run())
        }
        Command::Report { config, opts } => {
            let out_path = opts.out.clone();
            let run = || -> Result<Summary> {
                let cfg = ProblemConfig::load(&config)?;
                let out = OutDir::create(&opts.out)?;
                let summary = run_config(&cfg, &run_options(&opts, false), &out)?;
                summary.write(&out)?;
                Ok(summary)
            };
            (out_path, run())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (out_path, result) = dispatch(cli);
    match result {
        Ok(summary) => {
            print!("{}", summary.render());
            if summary.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            write_error_record(&out_path, "run", &format!("{e:#}"));
            ExitCode::from(2)
        }
    }
}
