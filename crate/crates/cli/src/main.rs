mod analytic;
mod error;
mod eval;
mod output;
mod retrieval;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "bor-eval", version)]
#[command(about = "Chance-corrected retrieval evaluation: Bits-over-Random, baselines, ceilings and depth advice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Random baselines and selectivity ceilings for N, R_q and K
    Ceiling(analytic::CeilingArgs),
    /// Evaluate a run against judgments at one or more depths
    Eval(eval::EvalArgs),
    /// Collapse diagnostics and a recommended depth
    Advise(analytic::AdviseArgs),
    /// Monte Carlo estimate of the random baseline against the exact value
    Simulate(analytic::SimulateArgs),
    /// Ceilings and zones along a grid of depths
    Boundary(analytic::BoundaryArgs),
    /// Build a BM25 index snapshot from a corpus
    Index(retrieval::IndexArgs),
    /// Run BM25 queries and write a run file
    Search(retrieval::SearchArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ceiling(a) => analytic::ceiling(a),
        Command::Eval(a) => eval::run(a),
        Command::Advise(a) => analytic::advise(a),
        Command::Simulate(a) => analytic::simulate(a),
        Command::Boundary(a) => analytic::boundary(a),
        Command::Index(a) => retrieval::index(a),
        Command::Search(a) => retrieval::search(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.code);
    }
}
