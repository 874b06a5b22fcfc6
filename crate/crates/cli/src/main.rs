use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fedmpc::sim::Mode;
use fedmpc_cli::{
    cmd_check_privacy, cmd_check_reduction, cmd_ideal, cmd_report, cmd_run, CliResult, Options,
    Outcome,
};

#[derive(Parser)]
#[command(name = "fedmpc", version, about = "Federated learning as secure multiparty computation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol and write transcript, model and report.
    Run(Common),
    /// Evaluate the composed ideal functionality.
    Ideal(Common),
    /// Check that the configured variant privately computes the functionality.
    CheckPrivacy(Common),
    /// Substitute the configured variant for the aggregation oracle and check.
    CheckReduction(Common),
    /// Summarize a transcript written by `run`.
    Report(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Det,
    General,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Dataset file; overrides `data` in the config.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Client-selection seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Enumeration worker threads.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

impl From<Common> for Options {
    fn from(c: Common) -> Self {
        Options {
            config: c.config,
            data: c.data,
            out: c.out,
            seed: c.seed,
            workers: c.workers,
            mode: c.mode.map(|m| match m {
                ModeArg::Det => Mode::Deterministic,
                ModeArg::General => Mode::General,
            }),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: CliResult<Outcome> = match cli.command {
        Command::Run(c) => cmd_run(&c.into()),
        Command::Ideal(c) => cmd_ideal(&c.into()),
        Command::CheckPrivacy(c) => cmd_check_privacy(&c.into()),
        Command::CheckReduction(c) => cmd_check_reduction(&c.into()),
        Command::Report(c) => cmd_report(&c.into()),
    };
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(e.exit_code())
        }
    }
}
