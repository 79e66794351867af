//! `dlsolve` — command-line front end for the solver library.
//!
//! Every subcommand reads its game from `--config` (a TOML descriptor file
//! or a preset name), is deterministic given `--seed`, prints a structured
//! `key: value` report to stdout, and exits 0 on success. Failures print
//! `error category=<category>: <message>` to stderr and exit nonzero; the
//! category strings are stable.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod agents;
mod cmd;
mod games;
mod report;

#[derive(Parser)]
#[command(name = "dlsolve", version, about = "Solver and match harness for \
two-player zero-sum imperfect-information games: blueprint training, \
depth-limited subgame re-solving with multi-valued leaf states, duplicate \
matches, and exploitability measurement")]
struct Cli {
    /// Game to operate on: a TOML descriptor file, or a preset
    /// (rps+, kuhn, leduc, mini-nlfh, mini-nlfh+075).
    #[arg(long, global = true, default_value = "kuhn")]
    config: String,

    /// Master random seed; every command's output is a pure function of
    /// its flags and this seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// File receiving the command's primary artifact: the trained strategy
    /// for `train`, the value table for `values`, and a copy of the report
    /// for the remaining commands.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a blueprint strategy and persist it to --out.
    Train(cmd::train::Args),
    /// Build a leaf value table for a depth-limited subgame.
    Values(cmd::values::Args),
    /// Serve a re-solving agent over a line protocol on stdin/stdout.
    Resolve(cmd::resolve::Args),
    /// Score two agents over duplicate hand pairs.
    Match(cmd::matches::Args),
    /// Measure best-response values and exploitability of a stored strategy.
    Exploit(cmd::exploit::Args),
    /// Sweep continuation-set sizes against an opponent bet the abstraction
    /// lacks, with translation and in-abstraction baselines.
    OfftreeExperiment(cmd::offtree::Args),
    /// The rock-paper-scissors contrast: single-valued vs multi-valued
    /// depth-limited solving vs solving the full game.
    DemoRps(cmd::demo::Args),
}

/// Global flags handed to every subcommand.
pub struct Ctx {
    pub config: String,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> dlsolve::Result<()> {
    let ctx = Ctx { config: cli.config, seed: cli.seed, out: cli.out };
    match cli.command {
        Command::Train(args) => cmd::train::run(&ctx, &args),
        Command::Values(args) => cmd::values::run(&ctx, &args),
        Command::Resolve(args) => cmd::resolve::run(&ctx, &args),
        Command::Match(args) => cmd::matches::run(&ctx, &args),
        Command::Exploit(args) => cmd::exploit::run(&ctx, &args),
        Command::OfftreeExperiment(args) => cmd::offtree::run(&ctx, &args),
        Command::DemoRps(args) => cmd::demo::run(&ctx, &args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            eprintln!("error category=invalid-parameter: unusable command line");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error category={}: {err}", err.category());
            ExitCode::FAILURE
        }
    }
}
