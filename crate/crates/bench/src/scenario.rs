//! Scenario files.
//!
//! A scenario is a TOML document. Every key is optional except `map`:
//!
//! ```toml
//! map = "../maps/empty_24.txt"    # relative to the scenario file
//! optimizers = ["boa", "xboa"]
//! strategy = "short_term"         # or "long_term"
//! goals = 1                       # overrides the strategy's goal count
//! population_size = 20
//! max_generations = 30
//! patience = 10
//! energy_budget = 2000
//! exploration_target = 99.0
//! robots = 1
//! repetitions = 10
//! base_seed = 25                  # seeds base_seed .. base_seed + repetitions
//! # seeds = [25, 26, 27]          # or an explicit list
//! starts = [[1, 1]]
//!
//! [lidar]
//! range = 4.0
//! angular_span = 180.0
//! resolution = 1.0
//! noise_fraction = 0.05
//! noise_enabled = true
//! ```

use std::path::{Path, PathBuf};

use boa_explore::grid::{load_map, Cell, GroundTruthMap};
use boa_explore::mission::{MissionConfig, OptimizerKind, Strategy};
use boa_explore::optimizer::TerminationPolicy;
use boa_explore::robot::LidarConfig;
use serde::Deserialize;

use crate::error::{BenchError, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    map: PathBuf,
    #[serde(default = "default_optimizers")]
    optimizers: Vec<OptimizerKind>,
    #[serde(default)]
    strategy: Strategy,
    goals: Option<usize>,
    #[serde(default = "default_pop")]
    population_size: usize,
    #[serde(default = "default_generations")]
    max_generations: usize,
    #[serde(default = "default_patience")]
    patience: usize,
    #[serde(default = "default_energy")]
    energy_budget: u32,
    #[serde(default = "default_target")]
    exploration_target: f64,
    #[serde(default = "default_one")]
    robots: usize,
    #[serde(default = "default_one")]
    repetitions: usize,
    #[serde(default = "default_seed")]
    base_seed: u64,
    seeds: Option<Vec<u64>>,
    starts: Option<Vec<[i32; 2]>>,
    #[serde(default)]
    lidar: Option<LidarConfig>,
}

fn default_optimizers() -> Vec<OptimizerKind> {
    vec![OptimizerKind::Boa, OptimizerKind::Xboa, OptimizerKind::Ga, OptimizerKind::Pso]
}
fn default_pop() -> usize {
    20
}
fn default_generations() -> usize {
    30
}
fn default_patience() -> usize {
    10
}
fn default_energy() -> u32 {
    2000
}
fn default_target() -> f64 {
    99.0
}
fn default_one() -> usize {
    1
}
fn default_seed() -> u64 {
    25
}

#[derive(Clone, Debug)]
pub struct Scenario {
    /// File stem of the scenario.
    pub name: String,
    pub map_path: PathBuf,
    /// File stem of the map.
    pub map_name: String,
    pub map: GroundTruthMap,
    pub optimizers: Vec<OptimizerKind>,
    /// Shared settings; `optimizer` and `seed` are replaced per run.
    pub mission: MissionConfig,
    pub seeds: Vec<u64>,
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned())
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Scenario {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text, path)
    }

    /// Parses scenario text; `path` locates the map and names the scenario.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let bad = |message: String| BenchError::Scenario {
            path: path.to_path_buf(),
            message,
        };
        let file: ScenarioFile = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        if file.repetitions < 1 {
            return Err(bad("repetitions must be >= 1".into()));
        }
        if file.optimizers.is_empty() {
            return Err(bad("at least one optimizer is required".into()));
        }
        let seeds = match file.seeds {
            Some(s) if s.len() != file.repetitions => {
                return Err(bad(format!("{} seeds given for {} repetitions", s.len(), file.repetitions)))
            }
            Some(s) => s,
            None => (0..file.repetitions as u64).map(|i| file.base_seed + i).collect(),
        };
        let map_path = path.parent().unwrap_or(Path::new(".")).join(&file.map);
        if !map_path.is_file() {
            return Err(bad(format!("map file {} does not exist", map_path.display())));
        }
        let map = load_map(&map_path)?;
        let defaults = MissionConfig::default();
        let mission = MissionConfig {
            strategy: file.strategy,
            goals: file.goals,
            population_size: file.population_size,
            termination: TerminationPolicy {
                max_generations: file.max_generations,
                patience: file.patience,
                ..TerminationPolicy::default()
            },
            energy_budget: file.energy_budget,
            exploration_target: file.exploration_target,
            robots: file.robots,
            lidar: file.lidar.unwrap_or_default(),
            starts: file
                .starts
                .map(|s| s.into_iter().map(|[x, y]| Cell::new(x, y)).collect())
                .unwrap_or(defaults.starts.clone()),
            ..defaults
        };
        for &optimizer in &file.optimizers {
            MissionConfig { optimizer, ..mission.clone() }.validate()?;
        }
        mission.start_cells(&map)?;
        Ok(Scenario {
            name: stem(path),
            map_name: stem(&map_path),
            map_path,
            map,
            optimizers: file.optimizers,
            mission,
            seeds,
        })
    }

    pub fn strategy_name(&self) -> String {
        match self.mission.goals {
            Some(g) if g != self.mission.strategy.default_goals() => format!("{}_g{g}", self.mission.strategy.name()),
            _ => self.mission.strategy.name().to_string(),
        }
    }

    /// Mission settings for one optimizer and repetition.
    pub fn config_for(&self, optimizer: OptimizerKind, seed: u64) -> MissionConfig {
        MissionConfig {
            optimizer,
            seed,
            ..self.mission.clone()
        }
    }
}
