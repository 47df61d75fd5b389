use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use epcag::harness::{self, Recipe};

/// Experiments on differential equations with piecewise constant argument.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// One of: simulate, continue-backward, manifold-F, manifold-G, phase,
    /// stability, reduce, conditions, example1, catalog.
    recipe: String,
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Do not echo tables to stdout.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { harness::EXIT_CONFIG as u8 } else { 0 });
        }
    };
    if cli.recipe == "catalog" {
        println!("{}", serde_json::to_string_pretty(&harness::catalog_list()).unwrap());
        return ExitCode::SUCCESS;
    }
    let Some(recipe) = Recipe::parse(&cli.recipe) else {
        eprintln!("epcag: unknown recipe `{}`", cli.recipe);
        return ExitCode::from(harness::EXIT_CONFIG as u8);
    };
    let (Some(config), Some(out)) = (cli.config, cli.out) else {
        eprintln!("epcag: `{}` needs --config and --out", recipe.name());
        return ExitCode::from(harness::EXIT_CONFIG as u8);
    };
    let code = harness::execute_file(recipe, &config, &out, (cli.seed, cli.step, cli.tol), cli.quiet);
    ExitCode::from(code as u8)
}
