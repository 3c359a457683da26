//! `tel`: command-line front end of the inequality lab.
//!
//! Exit codes: 0 when every reported inequality holds, 1 when one fails, 2 on
//! any error (bad config, unreadable input, violated precondition).

mod config;
mod emit;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use tel_core::Grid1D;

use config::{Command, Ineq, Op, RunConfig, Which};
use run::Output;

#[derive(Parser)]
#[command(
    name = "tel",
    version,
    about = "Transport-entropy and restricted log-Sobolev inequality lab"
)]
struct Cli {
    /// Read the whole run configuration from a JSON file instead of flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Args)]
struct Common {
    /// Cost id: quadratic, power:<p>, alpha21 or scaled:<base>:<u>.
    #[arg(long, default_value = config::DEFAULT_COST)]
    cost: String,
    /// Write the main output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sub {
    /// Optimal transport cost between two measure specs.
    Transport {
        #[arg(long)]
        nu: PathBuf,
        #[arg(long)]
        mu: PathBuf,
        /// Replace the grid of both specs, as `lo,hi,n`.
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        grid: Option<Grid1D>,
        #[command(flatten)]
        common: Common,
    },
    /// Inf-convolution `Q^λ f` or sup-convolution `P_t f` of a CSV function.
    /// For `--op sup` the `--lambda` value is the time `t`.
    Semigroup {
        #[arg(long, value_enum)]
        op: Op,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long)]
        f: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Semi-convexity certificate of a CSV function.
    Certify {
        #[arg(long)]
        f: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check one inequality over the seeded test family.
    Verify {
        #[arg(long, value_enum)]
        ineq: Ineq,
        #[arg(long)]
        mu: PathBuf,
        #[arg(long = "C", allow_negative_numbers = true)]
        c: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replace the grid of the measure spec, as `lo,hi,n`.
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        grid: Option<Grid1D>,
        /// Tolerance for every report instead of the default.
        #[arg(long)]
        tol: Option<f64>,
        /// Also write a `name,constant,lhs,rhs,slack,pass` summary here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Scalar constants.
    Constants {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long = "C")]
        c: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        v: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Transport inequality, then ICLSI, then rMLSI at the same constant.
    Chain {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long = "C", allow_negative_numbers = true)]
        c: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        grid: Option<Grid1D>,
        #[command(flatten)]
        common: Common,
    },
    /// CSV summary of a JSON report array.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_grid(s: &str) -> Result<Grid1D, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err("expected `lo,hi,n`".into());
    };
    let lo: f64 = lo.parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("hi: {e}"))?;
    let n: usize = n.parse().map_err(|e| format!("n: {e}"))?;
    Grid1D::new(lo, hi, n).map_err(|e| e.to_string())
}

impl Sub {
    fn into_config(self) -> RunConfig {
        let with_common = |mut c: RunConfig, common: Common| {
            c.cost = common.cost;
            c.out = common.out;
            c
        };
        match self {
            Sub::Transport { nu, mu, grid, common } => with_common(
                RunConfig {
                    nu: Some(nu),
                    mu: Some(mu),
                    grid,
                    ..RunConfig::new(Command::Transport)
                },
                common,
            ),
            Sub::Semigroup { op, lambda, f, common } => with_common(
                RunConfig {
                    op: Some(op),
                    lambda: Some(lambda),
                    f: Some(f),
                    ..RunConfig::new(Command::Semigroup)
                },
                common,
            ),
            Sub::Certify { f, common } => with_common(
                RunConfig {
                    f: Some(f),
                    ..RunConfig::new(Command::Certify)
                },
                common,
            ),
            Sub::Verify {
                ineq,
                mu,
                c,
                seed,
                grid,
                tol,
                csv,
                common,
            } => with_common(
                RunConfig {
                    ineq: Some(ineq),
                    mu: Some(mu),
                    c: Some(c),
                    seed,
                    grid,
                    tol,
                    csv,
                    ..RunConfig::new(Command::Verify)
                },
                common,
            ),
            Sub::Constants {
                which,
                lambda,
                c,
                kappa,
                t,
                eta,
                v,
                out,
            } => RunConfig {
                which: Some(which),
                lambda,
                c,
                kappa,
                t,
                eta,
                v,
                out,
                ..RunConfig::new(Command::Constants)
            },
            Sub::Chain {
                mu,
                c,
                seed,
                grid,
                common,
            } => with_common(
                RunConfig {
                    mu: Some(mu),
                    c: Some(c),
                    seed,
                    grid,
                    ..RunConfig::new(Command::Chain)
                },
                common,
            ),
            Sub::Report { input, tol, out } => RunConfig {
                input: Some(input),
                tol,
                out,
                ..RunConfig::new(Command::Report)
            },
        }
    }
}

/// Sizes the global rayon pool from `TEL_THREADS` when it is set.
fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("TEL_THREADS") else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => bail!("TEL_THREADS must be a positive integer, got `{raw}`"),
    };
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn resolve(cli: Cli) -> Result<(RunConfig, bool)> {
    let config = match (cli.config, cli.command) {
        (Some(_), Some(_)) => bail!("give either a subcommand or --config, not both"),
        (Some(path), None) => RunConfig::from_file(&path)?,
        (None, Some(sub)) => {
            let config = sub.into_config();
            config.validate()?;
            config
        }
        (None, None) => bail!("give a subcommand or --config <file>; see `tel --help`"),
    };
    Ok((config, cli.print_config))
}

fn run(cli: Cli) -> Result<bool> {
    let (config, print_only) = resolve(cli)?;
    if print_only {
        emit::write(None, &config.to_json())?;
        return Ok(true);
    }
    init_threads()?;
    let out = config.out.as_deref();
    match run::execute(&config)? {
        Output::Json { body, pass } => {
            emit::write(out, &emit::json(&body)?)?;
            Ok(pass)
        }
        Output::Csv { body, pass } => {
            emit::write(out, &body)?;
            Ok(pass)
        }
        Output::Reports(reports) => {
            emit::write(out, &emit::json(&reports)?)?;
            if let Some(csv) = &config.csv {
                emit::write(Some(csv), &emit::summary_csv(&reports)?)?;
            }
            Ok(tel_core::report::all_pass(&reports))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
