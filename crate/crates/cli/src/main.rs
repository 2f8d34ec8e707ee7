//! `mdclean`: load a cleaning problem, classify it, chase it, compile it.

mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "mdclean", version, about = "Entity resolution with matching dependencies")]
pub struct Cli {
    #[command(flatten)]
    pub inputs: Inputs,

    /// Seed for `chase --one`; 0 keeps MD declaration order.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, global = true, default_value_t = mdclean::chase::DEFAULT_STEP_LIMIT)]
    pub step_limit: usize,

    /// Write the result here instead of standard output.
    #[arg(long, short = 'o', global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Inputs {
    #[arg(long, global = true)]
    pub schema: Option<PathBuf>,
    /// Directory of `<Relation>.csv` files, one CSV file, or a JSON document.
    #[arg(long, global = true)]
    pub instance: Option<PathBuf>,
    #[arg(long, global = true)]
    pub mds: Option<PathBuf>,
    #[arg(long, global = true)]
    pub sim: Option<PathBuf>,
    #[arg(long, global = true)]
    pub mf: Option<PathBuf>,
    #[arg(long, global = true)]
    pub query: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load every input and check its invariants.
    Validate,
    /// Decide the single-clean-instance classes.
    Classify,
    /// Run the chase.
    Chase {
        /// Every clean instance (the default).
        #[arg(long, conflicts_with = "one")]
        all: bool,
        /// One chase run, ordered by `--seed`.
        #[arg(long)]
        one: bool,
    },
    /// Write the disjunctive cleaning program.
    EmitAsp,
    /// Write the residual Datalog program; needs a single-clean-instance input.
    EmitDatalog,
    /// Evaluate the residual program and print the clean instance.
    Solve,
    /// Certain answers to the queries of `--query`.
    Answer {
        /// Keep tuple identifiers in answers.
        #[arg(long)]
        include_tids: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MDCLEAN_LOG", "warn")).init();
    let cli = Cli::parse();
    match run::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.kind as u8)
        }
    }
}
