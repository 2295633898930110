use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mlcons_cli::commands::{self, Options, Outcome, EXIT_ERROR};
use mlcons_cli::config::RunConfig;

/// Delay-margin analysis and simulation of multilayer consensus networks.
///
/// Exit codes: 0 success (analyze: consensus guaranteed), 1 error,
/// 2 analyze: instability guaranteed, 3 analyze: marginal or no closed-form claim.
#[derive(Parser)]
#[command(name = "mlc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectra, delay margins and verdict; writes analysis.json.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Cross-check with the characteristic-root oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// Integrate the delayed network; writes trajectory.csv, disagreement.csv, summary.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Seed for the random initial state (replaces any configured x0).
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
    },
    /// Evaluate the delay grid; writes sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Add the oracle verdict per grid point.
        #[arg(long)]
        oracle: bool,
        /// Add a simulation per grid point.
        #[arg(long)]
        sim: bool,
        /// Seed for the random initial state (replaces any configured x0).
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
    },
    /// Graph and pattern spectra; writes spectrum.json.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (default: the config's `output`, else ./out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let (common, opts, cmd): (Common, Options, fn(&RunConfig, &Options) -> anyhow::Result<Outcome>) =
        match cli.command {
            Command::Analyze { common, oracle } => (common, Options { oracle, ..Default::default() }, commands::analyze),
            Command::Simulate { common, seed } => (common, Options { seed, ..Default::default() }, commands::simulate_cmd),
            Command::Sweep { common, oracle, sim, seed } => (common, Options { oracle, sim, seed, out: None }, commands::sweep),
            Command::Spectrum { common } => (common, Options::default(), commands::spectrum),
        };
    let cfg = RunConfig::load(&common.config)?;
    cmd(&cfg, &Options { out: common.out, ..opts })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Keep 2 reserved for "instability guaranteed".
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    match run(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
