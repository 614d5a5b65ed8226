//! Command-line front end: `ehor <verb> --config FILE [options]`.
//!
//! Exit codes are 0 on success, 1 on usage, parse or runtime errors and 2
//! when `analyze` meets a configuration without a stationary regime.

pub mod commands;
pub mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{Relay, RunOptions};

#[derive(Parser, Debug)]
#[command(name = "ehor", version, about = "Energy-harvesting opportunistic-routing relay network: theory and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Network config (or sweep spec for `sweep`), TOML.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Total simulated slots, warmup included.
    #[arg(long, default_value_t = 1_000_000)]
    pub slots: u64,
    /// Leading slots left out of the statistics.
    #[arg(long, default_value_t = 10_000)]
    pub warmup: u64,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RelayArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed-form steady state as one CSV row.
    Analyze(Common),
    /// Monte-Carlo estimates with batch-means standard errors.
    Simulate(Common),
    /// Theory next to simulation, one row per quantity.
    Compare(Common),
    /// Theory and simulation across one swept parameter.
    Sweep(Common),
    /// Limiting buffer density against the simulated histogram.
    Pdf {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        relay: RelayArg,
    },
    /// Rate maximizing the theoretical throughput.
    OptimalRate(Common),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNSTABLE: i32 = 2;

fn open_out<'a>(path: &Option<PathBuf>, stdout: &'a mut dyn Write) -> io::Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

/// Parses `args` (program name first) and runs the verb. Returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => {
            if code == EXIT_UNSTABLE {
                let _ = writeln!(stderr, "unstable: no stationary regime for this configuration (psi <= 1)");
            }
            code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> commands::CmdResult<i32> {
    let opts = |c: &Common| RunOptions {
        seed: c.seed,
        slots: c.slots,
        warmup: c.warmup,
    };
    let network = |c: &Common| -> commands::CmdResult<_> { Ok(config::load_config(&c.config)?.network()?) };

    match command {
        Command::Analyze(c) => {
            let cfg = network(&c)?;
            // buffer the row so an unstable config leaves the output untouched
            let mut buf = Vec::new();
            match commands::analyze_cmd(&cfg, &mut buf)? {
                Ok(()) => {
                    open_out(&c.out, stdout)?.write_all(&buf)?;
                    Ok(EXIT_OK)
                }
                Err(_) => Ok(EXIT_UNSTABLE),
            }
        }
        Command::Simulate(c) => {
            let cfg = network(&c)?;
            commands::simulate_cmd(&cfg, &opts(&c), open_out(&c.out, stdout)?)?;
            Ok(EXIT_OK)
        }
        Command::Compare(c) => {
            let cfg = network(&c)?;
            commands::compare_cmd(&cfg, &opts(&c), open_out(&c.out, stdout)?)?;
            Ok(EXIT_OK)
        }
        Command::Sweep(c) => {
            let spec = config::load_sweep(&c.config)?;
            commands::sweep_cmd(&spec, &opts(&c), open_out(&c.out, stdout)?)?;
            Ok(EXIT_OK)
        }
        Command::Pdf { common: c, relay } => {
            let cfg = network(&c)?;
            let relay = match relay {
                RelayArg::One => Relay::R1,
                RelayArg::Two => Relay::R2,
            };
            let mut buf = Vec::new();
            match commands::pdf_cmd(&cfg, relay, &opts(&c), &mut buf)? {
                Ok(()) => {
                    open_out(&c.out, stdout)?.write_all(&buf)?;
                    Ok(EXIT_OK)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::OptimalRate(c) => {
            let cfg = network(&c)?;
            commands::optimal_rate_cmd(&cfg, open_out(&c.out, stdout)?)?;
            Ok(EXIT_OK)
        }
    }
}
