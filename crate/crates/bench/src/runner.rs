//! Executes every (optimizer, seed) run of a scenario and writes its outputs.
//!
//! Layout under the output directory:
//!
//! ```text
//! <run_id>/cycles.csv       one row per decision cycle (cycle 0 = initial scan)
//! <run_id>/final_map.pgm    belief grid render
//! <run_id>/final_grid.txt   belief grid as text ('#', '.', '?')
//! cycles.csv                all runs concatenated
//! summary.csv               one row per optimizer
//! failures.txt              only when a run failed
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use boa_explore::grid::render;
use boa_explore::mission::{run_multi_robot, MultiMissionRecord, OptimizerKind};
use rayon::prelude::*;

use crate::error::{BenchError, Result};
use crate::report::{write_csv, CycleCsvRow, RunTotals, SummaryRow, CYCLE_HEADER, SUMMARY_HEADER};
use crate::scenario::Scenario;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "BOA_BENCH_OUT";

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// When false, compute times are written as 0 so outputs are reproducible byte for byte.
    pub timing: bool,
    /// Worker threads for independent runs; `None` uses rayon's default.
    pub jobs: Option<usize>,
}

/// Output root used when no `--out` is given.
pub fn default_out_dir(scenario: &Scenario) -> PathBuf {
    let root = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("bench-out"), PathBuf::from);
    root.join(&scenario.name)
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub run_id: String,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub rows: Vec<CycleCsvRow>,
}

#[derive(Clone, Debug)]
pub struct ScenarioReport {
    pub runs: Vec<RunResult>,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<(String, String)>,
    pub out_dir: PathBuf,
}

pub fn run_id(optimizer: OptimizerKind, seed: u64) -> String {
    format!("{}-{seed}", optimizer.name())
}

fn cycle_rows(id: &str, rec: &MultiMissionRecord, timing: bool) -> Vec<CycleCsvRow> {
    let multi = rec.robots.len() > 1;
    rec.robots
        .iter()
        .flat_map(|robot| {
            let rid = if multi { format!("{id}:r{}", robot.robot) } else { id.to_string() };
            robot.rows.iter().map(move |r| CycleCsvRow {
                run_id: rid.clone(),
                cycle: r.cycle,
                step_number: r.step_number,
                exploration_rate: r.exploration_rate,
                fitness_evals: r.fitness_evaluations,
                compute_time_s: if timing { r.compute_time_s } else { 0.0 },
            })
        })
        .collect()
}

fn run_one(scenario: &Scenario, optimizer: OptimizerKind, seed: u64, opts: &RunOptions) -> Result<RunResult> {
    let id = run_id(optimizer, seed);
    let cfg = scenario.config_for(optimizer, seed);
    let rec = run_multi_robot(&cfg, &scenario.map)?;
    let rows = cycle_rows(&id, &rec, opts.timing);
    let dir = opts.out_dir.join(&id);
    fs::create_dir_all(&dir)?;
    write_csv(&dir.join("cycles.csv"), &rows, &CYCLE_HEADER)?;
    render(&rec.grid, dir.join("final_map.pgm"))?;
    fs::write(dir.join("final_grid.txt"), rec.grid.to_ascii())?;
    Ok(RunResult {
        run_id: id,
        optimizer,
        seed,
        rows,
    })
}

/// Runs a scenario. Failed runs are listed in `failures.txt` and the
/// remaining runs still complete; the call then returns
/// [`BenchError::RunsFailed`].
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<ScenarioReport> {
    fs::create_dir_all(&opts.out_dir)?;
    let jobs: Vec<(OptimizerKind, u64)> = scenario
        .optimizers
        .iter()
        .flat_map(|&o| scenario.seeds.iter().map(move |&s| (o, s)))
        .collect();
    let work = || -> Vec<Result<RunResult>> { jobs.par_iter().map(|&(o, s)| run_one(scenario, o, s, opts)).collect() };
    let results = match opts.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| std::io::Error::other(e.to_string()))?
            .install(work),
        None => work(),
    };

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for ((o, s), r) in jobs.iter().zip(results) {
        match r {
            Ok(run) => runs.push(run),
            Err(e) => failures.push((run_id(*o, *s), e.to_string())),
        }
    }

    let all: Vec<CycleCsvRow> = runs.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    write_csv(&opts.out_dir.join("cycles.csv"), &all, &CYCLE_HEADER)?;

    let strategy = scenario.strategy_name();
    let summary: Vec<SummaryRow> = scenario
        .optimizers
        .iter()
        .filter_map(|&o| {
            let totals: Vec<RunTotals> = runs
                .iter()
                .filter(|r| r.optimizer == o)
                .map(|r| RunTotals::from_rows(&r.rows))
                .collect();
            (!totals.is_empty()).then(|| {
                SummaryRow::from_runs(o.name(), &scenario.map_name, &strategy, scenario.mission.population_size, &totals)
            })
        })
        .collect();
    write_csv(&opts.out_dir.join("summary.csv"), &summary, &SUMMARY_HEADER)?;

    let failures_path = opts.out_dir.join("failures.txt");
    if failures.is_empty() {
        if failures_path.exists() {
            fs::remove_file(&failures_path)?;
        }
    } else {
        let text: String = failures.iter().map(|(id, e)| format!("{id}: {e}\n")).collect();
        fs::write(&failures_path, text)?;
        return Err(BenchError::RunsFailed {
            failed: failures.len(),
            total: jobs.len(),
        });
    }
    Ok(ScenarioReport {
        runs,
        summary,
        failures,
        out_dir: opts.out_dir.clone(),
    })
}

/// Renders a belief-grid text file (as written to `final_grid.txt`) to PGM.
pub fn render_grid_file(grid_file: &Path, out: Option<&Path>) -> Result<PathBuf> {
    let text = fs::read_to_string(grid_file)?;
    let grid = boa_explore::grid::OccupancyGrid::from_ascii(&text, grid_file)?;
    let target = out.map_or_else(|| grid_file.with_extension("pgm"), Path::to_path_buf);
    render(&grid, &target)?;
    Ok(target)
}
