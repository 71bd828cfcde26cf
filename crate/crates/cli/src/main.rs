use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use drss_cli::{cmd_leakage, cmd_report, cmd_run, cmd_sweep, CliError, Common, LeakageArgs, SweepArgs};

#[derive(Parser, Debug)]
#[command(name = "drss", version, about = "Distributed randomized secure sum simulator")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// key=value parameter file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed (overrides the file)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Monte Carlo trials per grid point
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Runs per batch
    #[arg(long, global = true)]
    batch: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one batch and write runs.csv
    Run,
    /// Parameter sweeps; writes sweep.csv and sweep_*.svg
    Sweep {
        /// Vary the number of parties
        #[arg(long)]
        case1: bool,
        /// Vary packets per party for several party counts
        #[arg(long)]
        case2: bool,
        /// Vary the number of anonymizers
        #[arg(long)]
        case3: bool,
        /// Parameter to sweep: n, t_pk or m
        #[arg(long, requires = "values")]
        param: Option<String>,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', requires = "param")]
        values: Vec<usize>,
    },
    /// Collusion leakage grid; writes leakage.csv and leakage.svg
    Leakage {
        /// Number of anonymizers (default: from the configuration)
        #[arg(long)]
        m: Option<usize>,
        /// Parties per simulated run
        #[arg(long)]
        n: Option<usize>,
        /// Anonymizer capacity for the simulated runs
        #[arg(long)]
        m_x: Option<usize>,
        /// Coalition sizes, comma-separated (default 0..=m)
        #[arg(long = "l-values", value_delimiter = ',')]
        l_values: Vec<usize>,
        /// Randomization factors, comma-separated (default 1..=6)
        #[arg(long = "k-values", value_delimiter = ',')]
        k_values: Vec<usize>,
    },
    /// Rebuild charts and report.md from the CSVs in --out
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = Common {
        config: cli.common.config,
        seed: cli.common.seed,
        out: cli.common.out,
        trials: cli.common.trials,
        batch: cli.common.batch,
    };
    let result: Result<_, CliError> = match cli.command {
        Command::Run => cmd_run(&common),
        Command::Sweep {
            case1,
            case2,
            case3,
            param,
            values,
        } => cmd_sweep(
            &common,
            &SweepArgs {
                case1,
                case2,
                case3,
                param,
                values,
            },
        ),
        Command::Leakage {
            m,
            n,
            m_x,
            l_values,
            k_values,
        } => cmd_leakage(
            &common,
            &LeakageArgs {
                m,
                n,
                m_x,
                l_values,
                k_values,
            },
        ),
        Command::Report => cmd_report(&common),
    };
    match result {
        Ok(outcome) => {
            print!("{}", outcome.message);
            for path in outcome.written {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
