use std::path::PathBuf;
use std::process::ExitCode;

use boa_bench::report::format_ranking;
use boa_bench::runner::{default_out_dir, render_grid_file};
use boa_bench::{compare, run_scenario, RunOptions, Scenario};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "boa-bench", about = "Run and compare grid exploration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every optimizer and seed of a scenario file.
    Run {
        scenario: PathBuf,
        /// Output directory (default: $BOA_BENCH_OUT/<scenario> or bench-out/<scenario>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write compute times as 0 so repeated runs give identical files.
        #[arg(long)]
        no_timing: bool,
        /// Runs executed concurrently.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Rank optimizers per map across summary CSV files.
    Compare {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
    },
    /// Render a belief-grid text file to PGM.
    Render {
        grid_file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            out,
            no_timing,
            jobs,
        } => Scenario::load(&scenario).and_then(|s| {
            let opts = RunOptions {
                out_dir: out.unwrap_or_else(|| default_out_dir(&s)),
                timing: !no_timing,
                jobs,
            };
            let report = run_scenario(&s, &opts)?;
            for row in &report.summary {
                println!(
                    "{:<6} runs={} mean={:.2} min={:.2} max={:.2} steps={:.1} evals={:.1}",
                    row.optimizer, row.runs, row.mean_rate, row.min_rate, row.max_rate, row.mean_steps, row.mean_fitness_evals
                );
            }
            println!("outputs in {}", report.out_dir.display());
            Ok(())
        }),
        Command::Compare { summaries } => compare(&summaries).map(|rows| print!("{}", format_ranking(&rows))),
        Command::Render { grid_file, out } => {
            render_grid_file(&grid_file, out.as_deref()).map(|p| println!("wrote {}", p.display()))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
