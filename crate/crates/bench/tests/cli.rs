use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use boa_bench::report::SUMMARY_HEADER;
use boa_bench::runner::{default_out_dir, OUT_ENV};
use boa_bench::{run_scenario, RunOptions, Scenario};

const ROOM: &str = "\
############
#..........#
#..........#
#...##.....#
#...##.....#
#..........#
#.....###..#
#..........#
#..........#
#...#......#
#...#......#
############
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_boa-bench"))
}

/// Writes a small scenario plus its map into `dir`.
fn small_scenario(dir: &Path, name: &str, optimizers: &str, reps: usize) -> PathBuf {
    fs::write(dir.join("room.txt"), ROOM).unwrap();
    let path = dir.join(format!("{name}.toml"));
    fs::write(
        &path,
        format!(
            "map = \"room.txt\"\noptimizers = {optimizers}\npopulation_size = 5\nmax_generations = 5\n\
             patience = 3\nenergy_budget = 150\nrepetitions = {reps}\nbase_seed = 3\n"
        ),
    )
    .unwrap();
    path
}

fn raw_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn summary_recomputes_from_run_files() {
    let tmp = tempfile::tempdir().unwrap();
    let path = small_scenario(tmp.path(), "reps", "[\"xboa\", \"ga\"]", 10);
    let scenario = Scenario::load(&path).unwrap();
    let out = tmp.path().join("out");
    run_scenario(&scenario, &RunOptions { out_dir: out.clone(), timing: false, jobs: None }).unwrap();

    let mut per_opt: BTreeMap<String, Vec<(f64, f64, f64)>> = BTreeMap::new();
    let mut dirs = 0;
    for entry in fs::read_dir(&out).unwrap() {
        let entry = entry.unwrap();
        if !entry.file_type().unwrap().is_dir() {
            continue;
        }
        dirs += 1;
        let run = entry.file_name().to_string_lossy().into_owned();
        assert!(entry.path().join("final_map.pgm").is_file());
        assert!(entry.path().join("final_grid.txt").is_file());
        let (header, rows) = raw_rows(&entry.path().join("cycles.csv"));
        assert_eq!(header[0], "run_id");
        let rate = rows.iter().map(|r| r[3].parse::<f64>().unwrap()).fold(0.0, f64::max);
        let steps = rows.iter().map(|r| r[2].parse::<f64>().unwrap()).fold(0.0, f64::max);
        let evals: f64 = rows.iter().map(|r| r[4].parse::<f64>().unwrap()).sum();
        let opt = run.split('-').next().unwrap().to_string();
        per_opt.entry(opt).or_default().push((rate, steps, evals));
    }
    assert_eq!(dirs, 20);

    let (header, summary) = raw_rows(&out.join("summary.csv"));
    assert_eq!(header, SUMMARY_HEADER);
    assert_eq!(summary.len(), 2);
    for row in summary {
        let runs = &per_opt[&row[0]];
        assert_eq!(runs.len(), 10);
        assert_eq!(row[4].parse::<usize>().unwrap(), 10);
        let n = runs.len() as f64;
        let mean = |f: fn(&(f64, f64, f64)) -> f64| runs.iter().map(f).sum::<f64>() / n;
        let close = |a: &str, b: f64| (a.parse::<f64>().unwrap() - b).abs() <= 1e-9 * b.abs().max(1.0);
        assert!(close(&row[5], mean(|r| r.0)), "mean rate {}", row[0]);
        assert!(close(&row[6], runs.iter().map(|r| r.0).fold(f64::INFINITY, f64::min)));
        assert!(close(&row[7], runs.iter().map(|r| r.0).fold(0.0, f64::max)));
        assert!(close(&row[8], mean(|r| r.1)));
        assert!(close(&row[9], mean(|r| r.2)));
        assert_eq!(row[10].parse::<f64>().unwrap(), 0.0);
    }
    assert!(!out.join("failures.txt").exists());
}

#[test]
fn cli_run_compare_and_render() {
    let tmp = tempfile::tempdir().unwrap();
    let path = small_scenario(tmp.path(), "smoke", "[\"boa\", \"pso\"]", 2);
    let out = tmp.path().join("smoke-out");
    let status = bin().arg("run").arg(&path).arg("--out").arg(&out).arg("--no-timing").output().unwrap().status;
    assert!(status.success());
    assert!(out.join("summary.csv").is_file());
    assert!(out.join("boa-3").join("cycles.csv").is_file());

    let cmp = bin().arg("compare").arg(out.join("summary.csv")).output().unwrap();
    assert!(cmp.status.success());
    let text = String::from_utf8(cmp.stdout).unwrap();
    assert!(text.contains("boa") && text.contains("pso"));

    let grid = out.join("boa-3").join("final_grid.txt");
    let target = tmp.path().join("render.pgm");
    let status = bin().arg("render").arg(&grid).arg("--out").arg(&target).output().unwrap().status;
    assert!(status.success());
    let pgm = fs::read(&target).unwrap();
    assert!(pgm.starts_with(b"P5"));
}

#[test]
fn compare_rejects_wrong_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "optimizer,map,rate\nxboa,room,99\n").unwrap();
    let out = bin().arg("compare").arg(&bad).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected columns"));
}

#[test]
fn run_fails_on_missing_map() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("broken.toml");
    fs::write(&path, "map = \"nowhere.txt\"\n").unwrap();
    let out = bin().arg("run").arg(&path).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn output_root_comes_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let path = small_scenario(tmp.path(), "envcase", "[\"ga\"]", 1);
    let root = tmp.path().join("env-root");
    let status = bin().arg("run").arg(&path).arg("--no-timing").env(OUT_ENV, &root).output().unwrap().status;
    assert!(status.success());
    assert!(root.join("envcase").join("summary.csv").is_file());

    // Library default follows the same rule without touching this process's environment.
    let scenario = Scenario::load(&path).unwrap();
    assert!(default_out_dir(&scenario).ends_with("envcase"));
}
