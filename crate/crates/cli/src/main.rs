//! `normalvv` command-line front end.
//!
//! Exit codes: 0 success (grids may be partial), 2 usage or parse error,
//! 3 numerical or calibration failure.

// `!(x > 0.0)` style checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod format;
mod scenario;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::SmileKind;
use scenario::{Method, Scenario};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical {
        message: String,
        payload: serde_json::Value,
    },
    Io(String),
}

impl CliError {
    fn numerical(e: normalvv::Error) -> Self {
        CliError::Numerical {
            message: e.to_string(),
            payload: serde_json::json!({ "error": "numerical", "message": e.to_string() }),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "normalvv", version, about = "Normal vanna-volga smiles, Normal SABR and risk-neutral densities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct OptionArgs {
    #[arg(long, allow_hyphen_values = true)]
    forward: f64,
    #[arg(long, allow_hyphen_values = true)]
    strike: f64,
    #[arg(long)]
    expiry: f64,
    /// Discount factor P(0,T), in (0, 1].
    #[arg(long)]
    df: f64,
    /// Price a put instead of a call.
    #[arg(long)]
    put: bool,
}

#[derive(Debug, Args)]
struct ScenarioArg {
    /// Scenario JSON file, or `-` for stdin.
    scenario: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Price one option and print its Greeks as JSON.
    Price {
        #[command(flatten)]
        option: OptionArgs,
        #[arg(long)]
        vol: f64,
    },
    /// Implied normal volatility of an option price.
    Invert {
        #[arg(long, allow_hyphen_values = true)]
        price: f64,
        #[command(flatten)]
        option: OptionArgs,
    },
    /// Vanna-volga smile grid as CSV.
    VvSmile {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// vv-exact, vv-first or vv-second; repeatable. Defaults to the scenario's methods.
        #[arg(long = "method", value_parser = parse_vv_method)]
        methods: Vec<Method>,
    },
    /// Calibrate the reference vol to the scenario's fourth quote.
    VvFit(ScenarioArg),
    /// Normal SABR smile grid fitted to the pivots, as CSV.
    SabrSmile(ScenarioArg),
    /// Fit Normal SABR to the three pivots.
    SabrFit(ScenarioArg),
    /// Risk-neutral density grid as CSV; diagnostics go to stderr.
    Density {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long)]
        delta: Option<f64>,
        /// Also write the diagnostics JSON line to this file.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Vanna-volga and SABR grids in one CSV.
    Compare(ScenarioArg),
}

fn parse_vv_method(s: &str) -> Result<Method, String> {
    match Method::parse(s) {
        Some(m) if m.is_vv() => Ok(m),
        _ => Err(format!("unknown vanna-volga method `{s}`")),
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("NORMAL_VV_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // Fails only if a global pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Price { option: o, vol } => {
            commands::price(out, o.forward, o.strike, o.expiry, o.df, vol, o.put)
        }
        Command::Invert { price, option: o } => {
            commands::invert(out, price, o.forward, o.strike, o.expiry, o.df, o.put)
        }
        Command::VvSmile { scenario, methods } => commands::smile(
            out,
            &Scenario::load(&scenario.scenario)?,
            SmileKind::VannaVolga,
            &methods,
        ),
        Command::SabrSmile(s) => {
            commands::smile(out, &Scenario::load(&s.scenario)?, SmileKind::Sabr, &[])
        }
        Command::Compare(s) => {
            commands::smile(out, &Scenario::load(&s.scenario)?, SmileKind::Compare, &[])
        }
        Command::VvFit(s) => commands::vv_fit(out, &Scenario::load(&s.scenario)?),
        Command::SabrFit(s) => commands::sabr_fit_cmd(out, &Scenario::load(&s.scenario)?),
        Command::Density {
            scenario,
            delta,
            diagnostics,
        } => commands::density(
            out,
            err,
            &Scenario::load(&scenario.scenario)?,
            delta,
            diagnostics.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let mut err = std::io::stderr();
    let result = run(cli, &mut out, &mut err);
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Io(msg) => eprintln!("error: {msg}"),
                CliError::Numerical { message, payload } => {
                    eprintln!("error: {message}");
                    eprintln!("{payload}");
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
