use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use agora_cli::{
    parse_scenario, resolve_tolerance, CliError, Concept, FormatArg, GameArg, ModeArg,
};

#[derive(Parser)]
#[command(
    name = "agora",
    version,
    about = "Equilibrium solvers for two-commodity exchange economies",
    after_help = "Exit codes: 0 success, 2 schema error, 3 solver failure, 4 verification failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario document (JSON)
    scenario: PathBuf,
    /// Absolute/relative solver tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Output format
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Write output to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one equilibrium concept on a scenario
    Solve {
        /// walras | cournot | cournot-walras | nash | spne
        #[arg(long, value_enum)]
        concept: Option<Concept>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve a game across replicated economies and extrapolate the limit
    Replicate {
        /// Which agents to replicate
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Which game to solve at each replication count
        #[arg(long, value_enum)]
        game: Option<GameArg>,
        /// Replication counts, comma separated and strictly increasing
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        /// Compare the extrapolated limit against this concept's equilibrium
        #[arg(long, value_enum)]
        benchmark: Option<Concept>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Utility table with MRS gaps and Pareto status
    Welfare {
        /// Evaluate every concept, not just the Walras benchmark
        #[arg(long)]
        all_concepts: bool,
        /// Grid step of the Pareto dominance search
        #[arg(long)]
        step: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Side-by-side comparison of two concepts
    Compare {
        /// Exactly two concepts, comma separated
        #[arg(long, value_enum, value_delimiter = ',')]
        concepts: Vec<Concept>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    let (common, output) = match cli.command {
        Command::Solve { concept, common } => {
            let (scenario, tol) = load(&common)?;
            (
                common,
                agora_cli::run_solve(&scenario, concept, &tol).map(|o| (scenario, o))?,
            )
        }
        Command::Replicate {
            mode,
            game,
            n,
            benchmark,
            common,
        } => {
            let (scenario, tol) = load(&common)?;
            (
                common,
                agora_cli::run_replicate(&scenario, mode, game, n, benchmark, &tol)
                    .map(|o| (scenario, o))?,
            )
        }
        Command::Welfare {
            all_concepts,
            step,
            common,
        } => {
            let (scenario, tol) = load(&common)?;
            (
                common,
                agora_cli::run_welfare(&scenario, all_concepts, step, &tol)
                    .map(|o| (scenario, o))?,
            )
        }
        Command::Compare { concepts, common } => {
            let (scenario, tol) = load(&common)?;
            (
                common,
                agora_cli::run_compare(&scenario, &concepts, &tol).map(|o| (scenario, o))?,
            )
        }
    };
    let (scenario, output) = output;
    let format = common.format.or(scenario.format).unwrap_or(FormatArg::Csv);
    let rendered = agora_cli::render_tables(&output.tables, format);
    match &common.out {
        Some(path) => std::fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    if output.verification_failed {
        eprintln!("error: verification failure: a benchmark gap exceeded its tolerance");
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}

fn load(common: &CommonArgs) -> Result<(agora_cli::Scenario, agora::Tolerance), CliError> {
    let text = std::fs::read_to_string(&common.scenario)?;
    let scenario = parse_scenario(&text)?;
    let tol = resolve_tolerance(&scenario, common.tol)?;
    Ok((scenario, tol))
}
