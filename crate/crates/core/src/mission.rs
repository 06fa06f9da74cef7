//! The exploration loop: optimize goals, plan, move, scan, repeat.
//!
//! Each decision cycle freezes a snapshot of the belief grid, evolves a
//! population of goal sets against [`ExplorationFitness`], and executes the
//! best route with a scan after every motion command. Several robots share
//! one grid and take decision cycles in round-robin order.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{Ga, GaParams, Pso, PsoParams};
use crate::boa::{Boa, BoaParams, Xboa};
use crate::error::{invalid, Error, Result};
use crate::grid::{integrate_scan, trace_ray, Cell, CellLabel, Direction, GroundTruthMap, OccupancyGrid, SensorModel, CORNER_EPS};
use crate::optimizer::{evolve, init_population, Bounds, Evaluator, GenerationOperator, TerminationPolicy};
use crate::planning::{astar, order_goals_with, plan_route, CostModel, Path, Route};
use crate::rng::{purpose, RngStream};
use crate::robot::{move_robot, simulate_scan, LidarConfig, RobotState};

/// Fitness of a candidate whose goals are all unreachable or unaffordable.
pub const PENALTY: f64 = -1.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// One goal per decision.
    #[default]
    ShortTerm,
    /// Three goals per decision.
    LongTerm,
}

impl Strategy {
    pub fn default_goals(self) -> usize {
        match self {
            Strategy::ShortTerm => 1,
            Strategy::LongTerm => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::ShortTerm => "short_term",
            Strategy::LongTerm => "long_term",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Boa,
    Xboa,
    Ga,
    Pso,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Boa => "boa",
            OptimizerKind::Xboa => "xboa",
            OptimizerKind::Ga => "ga",
            OptimizerKind::Pso => "pso",
        }
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "boa" => Ok(OptimizerKind::Boa),
            "xboa" => Ok(OptimizerKind::Xboa),
            "ga" => Ok(OptimizerKind::Ga),
            "pso" => Ok(OptimizerKind::Pso),
            other => Err(Error::Config(format!("unknown optimizer `{other}`"))),
        }
    }
}

/// Denominator used for the exploration rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateBasis {
    /// Every cell of the map, border included.
    #[default]
    AllCells,
    /// Cells off the outer ring.
    Interior,
}

impl RateBasis {
    pub fn rate(self, grid: &OccupancyGrid) -> f64 {
        match self {
            RateBasis::AllCells => grid.exploration_rate(),
            RateBasis::Interior => {
                let (w, h) = (grid.width() as i32, grid.height() as i32);
                let interior = (1..h - 1).flat_map(|y| (1..w - 1).map(move |x| Cell::new(x, y)));
                let (mut known, mut total) = (0usize, 0usize);
                for c in interior {
                    total += 1;
                    known += usize::from(grid.label(c) != CellLabel::Unknown);
                }
                if total == 0 {
                    0.0
                } else {
                    100.0 * known as f64 / total as f64
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionConfig {
    pub strategy: Strategy,
    /// Overrides the strategy's goal count.
    pub goals: Option<usize>,
    pub optimizer: OptimizerKind,
    pub population_size: usize,
    pub termination: TerminationPolicy,
    /// Steps per robot.
    pub energy_budget: u32,
    /// Percent.
    pub exploration_target: f64,
    pub rate_basis: RateBasis,
    pub robots: usize,
    pub seed: u64,
    pub lidar: LidarConfig,
    pub sensor_model: SensorModel,
    /// Meters per cell.
    pub cell_size: f64,
    /// Start cells; missing entries fall back to the map's inner corners.
    pub starts: Vec<Cell>,
    pub start_heading: Direction,
    /// Table parameters for the chosen population size when unset.
    pub boa_params: Option<BoaParams>,
    pub ga_params: GaParams,
    pub pso_params: PsoParams,
    /// Decision cycles per robot before giving up.
    pub max_cycles: usize,
    /// Consecutive cycles without any new cell before giving up.
    pub stall_cycles: usize,
    /// Replans allowed within one decision cycle.
    pub max_replans: usize,
    /// Also scan at every intermediate 45° heading while turning.
    pub scan_while_turning: bool,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::ShortTerm,
            goals: None,
            optimizer: OptimizerKind::Xboa,
            population_size: 20,
            termination: TerminationPolicy::default(),
            energy_budget: 2000,
            exploration_target: 99.0,
            rate_basis: RateBasis::AllCells,
            robots: 1,
            seed: 25,
            lidar: LidarConfig::default(),
            sensor_model: SensorModel::default(),
            cell_size: 1.0,
            starts: vec![Cell::new(1, 1)],
            start_heading: Direction::N,
            boa_params: None,
            ga_params: GaParams::default(),
            pso_params: PsoParams::default(),
            max_cycles: 500,
            stall_cycles: 3,
            max_replans: 10,
            scan_while_turning: false,
        }
    }
}

impl MissionConfig {
    pub fn goal_count(&self) -> usize {
        self.goals.unwrap_or_else(|| self.strategy.default_goals())
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: &str| Err(Error::Config(m.to_string()));
        if self.goal_count() < 1 {
            return cfg_err("at least one goal per decision is required");
        }
        if self.robots < 1 {
            return cfg_err("at least one robot is required");
        }
        if !(self.exploration_target > 0.0 && self.exploration_target <= 100.0) {
            return cfg_err("exploration_target must lie in (0, 100]");
        }
        let min_pop = match self.optimizer {
            OptimizerKind::Boa | OptimizerKind::Xboa => 3,
            _ => 2,
        };
        if self.population_size < min_pop {
            return Err(Error::Config(format!(
                "{} needs a population of at least {min_pop}",
                self.optimizer.name()
            )));
        }
        if !(self.cell_size > 0.0) {
            return cfg_err("cell_size must be positive");
        }
        if self.max_cycles < 1 || self.stall_cycles < 1 {
            return cfg_err("max_cycles and stall_cycles must be >= 1");
        }
        self.termination.validate()?;
        self.lidar.validate()?;
        Ok(())
    }

    fn operator(&self) -> Result<Box<dyn GenerationOperator>> {
        let n = self.population_size;
        let iters = self.termination.max_generations;
        Ok(match self.optimizer {
            OptimizerKind::Boa => {
                let p = self.boa_params.unwrap_or_else(|| BoaParams::boa_for_population(n));
                Box::new(Boa::new(p.with_max_iterations(iters))?)
            }
            OptimizerKind::Xboa => {
                let p = self.boa_params.unwrap_or_else(|| BoaParams::xboa_for_population(n));
                Box::new(Xboa::new(p.with_max_iterations(iters))?)
            }
            OptimizerKind::Ga => Box::new(Ga::new(self.ga_params)?),
            OptimizerKind::Pso => Box::new(Pso::new(self.pso_params)?),
        })
    }

    /// Start cells for every robot, filling gaps with the map's inner corners.
    pub fn start_cells(&self, truth: &GroundTruthMap) -> Result<Vec<Cell>> {
        let (w, h) = (truth.width() as i32, truth.height() as i32);
        let corners = [Cell::new(1, 1), Cell::new(w - 2, 1), Cell::new(1, h - 2), Cell::new(w - 2, h - 2)];
        let mut starts: Vec<Cell> = self.starts.iter().copied().take(self.robots).collect();
        for c in corners {
            if starts.len() >= self.robots {
                break;
            }
            if !starts.contains(&c) {
                starts.push(c);
            }
        }
        if starts.len() < self.robots {
            return Err(Error::Config(format!("{} robots need explicit start cells", self.robots)));
        }
        for (i, &c) in starts.iter().enumerate() {
            if truth.is_occupied(c) {
                return Err(Error::Config(format!("start cell {c} is not free")));
            }
            if starts[..i].contains(&c) {
                return Err(Error::Config(format!("start cell {c} is shared by two robots")));
            }
        }
        Ok(starts)
    }
}

fn decode_goals(genes: &[f64], width: usize, height: usize) -> Vec<Cell> {
    let (mx, my) = (width as i32 - 1, height as i32 - 1);
    genes
        .chunks_exact(2)
        .map(|xy| Cell::new((xy[0].round() as i32).clamp(0, mx), (xy[1].round() as i32).clamp(0, my)))
        .collect()
}

/// Headings held at each cell of a route: the start keeps the initial
/// heading, later cells face the direction of arrival.
pub fn route_poses(cells: &[Cell], heading: Direction) -> Vec<(Cell, Direction)> {
    let mut h = heading;
    let mut out = Vec::with_capacity(cells.len());
    for (i, &c) in cells.iter().enumerate() {
        if i > 0 {
            h = Direction::between(cells[i - 1], c).unwrap_or(h);
        }
        out.push((c, h));
    }
    out
}

/// Predicted newly observed cells for a goal set, evaluated on a frozen
/// snapshot of the belief grid.
///
/// Virtual scans are noiseless and see through unknown cells; a beam stops at
/// the first cell labelled occupied, and cells it touches at the same ray
/// parameter as that obstacle (a corner graze) are not counted.
pub struct ExplorationFitness<'a> {
    snapshot: &'a OccupancyGrid,
    state: RobotState,
    angles: Vec<f64>,
    range: f64,
    footprints: Vec<OnceLock<Vec<u32>>>,
    legs: Mutex<HashMap<(Cell, Direction, Cell), Option<Path>>>,
}

impl<'a> ExplorationFitness<'a> {
    pub fn new(snapshot: &'a OccupancyGrid, state: RobotState, lidar: &LidarConfig) -> Self {
        Self {
            snapshot,
            state,
            angles: lidar.beam_angles().collect(),
            range: lidar.range / snapshot.cell_size(),
            footprints: (0..snapshot.len() * 8).map(|_| OnceLock::new()).collect(),
            legs: Mutex::new(HashMap::new()),
        }
    }

    fn leg(&self, from: Cell, h: Direction, to: Cell) -> Option<Path> {
        let key = (from, h, to);
        if let Some(p) = self.legs.lock().expect("leg cache poisoned").get(&key) {
            return p.clone();
        }
        let p = astar(self.snapshot, from, h, to, CostModel::RotationAware);
        self.legs.lock().expect("leg cache poisoned").insert(key, p.clone());
        p
    }

    /// The route a candidate would follow, or `None` if no goal is reachable.
    pub fn route(&self, genes: &[f64]) -> Option<Route> {
        let goals = decode_goals(genes, self.snapshot.width(), self.snapshot.height());
        let order = order_goals_with(self.state.cell, self.state.heading, &goals, |a, h, b| self.leg(a, h, b));
        let route = Route::from(order);
        (!route.goals.is_empty()).then_some(route)
    }

    /// Unknown cells a noiseless scan from `(cell, heading)` would reach.
    pub fn footprint(&self, cell: Cell, heading: Direction) -> &[u32] {
        let slot = self.snapshot.index(cell) * 8 + heading.index();
        self.footprints[slot].get_or_init(|| {
            let g = self.snapshot;
            let origin = cell.center();
            let mut seen = Vec::new();
            for rel in &self.angles {
                let steps = trace_ray(origin, heading.degrees() + rel, self.range, g.width(), g.height());
                let block = steps
                    .iter()
                    .find(|s| g.label(s.cell) == CellLabel::Occupied)
                    .map_or(f64::INFINITY, |s| s.entry - CORNER_EPS);
                for s in steps.iter().take_while(|s| s.entry < block) {
                    if g.label(s.cell) == CellLabel::Unknown {
                        seen.push(g.index(s.cell) as u32);
                    }
                }
            }
            seen.sort_unstable();
            seen.dedup();
            seen
        })
    }

    /// Distinct unknown cells seen along a route.
    pub fn observed(&self, route: &Route) -> usize {
        let mut mark = vec![false; self.snapshot.len()];
        let mut count = 0;
        for (c, h) in route_poses(&route.cells, self.state.heading) {
            for &i in self.footprint(c, h) {
                if !std::mem::replace(&mut mark[i as usize], true) {
                    count += 1;
                }
            }
        }
        count
    }
}

impl Evaluator for ExplorationFitness<'_> {
    fn evaluate(&self, genes: &[f64]) -> Result<f64> {
        match self.route(genes) {
            Some(route) if route.steps < self.state.energy_remaining => Ok(self.observed(&route) as f64),
            _ => Ok(PENALTY),
        }
    }
}

/// Convenience wrapper: fitness of one candidate against a snapshot.
pub fn fitness(genes: &[f64], snapshot: &OccupancyGrid, state: &RobotState, lidar: &LidarConfig) -> f64 {
    ExplorationFitness::new(snapshot, *state, lidar)
        .evaluate(genes)
        .expect("exploration fitness never fails")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    TargetReached,
    EnergyExhausted,
    /// Every candidate of the last decision was infeasible.
    NoFeasibleGoal,
    /// Several decision cycles in a row revealed nothing.
    Stalled,
    CycleLimit,
}

impl TerminationReason {
    pub fn name(self) -> &'static str {
        match self {
            TerminationReason::TargetReached => "target_reached",
            TerminationReason::EnergyExhausted => "energy_exhausted",
            TerminationReason::NoFeasibleGoal => "no_feasible_goal",
            TerminationReason::Stalled => "stalled",
            TerminationReason::CycleLimit => "cycle_limit",
        }
    }
}

/// Metrics after one decision cycle. Cycle 0 is the initial scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRow {
    pub cycle: usize,
    pub step_number: u32,
    /// Seconds since the mission started.
    pub wall_time_s: f64,
    /// Percent, of the shared grid.
    pub exploration_rate: f64,
    pub fitness_evaluations: usize,
    pub compute_time_s: f64,
    pub best_fitness: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MissionRecord {
    pub robot: usize,
    pub rows: Vec<CycleRow>,
    pub final_grid: OccupancyGrid,
    pub final_state: RobotState,
    pub termination: TerminationReason,
    /// Every cell the robot occupied, in order.
    pub trajectory: Vec<Cell>,
}

impl MissionRecord {
    pub fn final_rate(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.exploration_rate)
    }

    /// Decision cycles run after the initial scan.
    pub fn cycles(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiMissionRecord {
    pub robots: Vec<MissionRecord>,
    pub grid: OccupancyGrid,
    /// Round-robin rounds; each active robot takes one decision cycle per round.
    pub rounds: usize,
    pub target_reached: bool,
}

impl MultiMissionRecord {
    pub fn exploration_rate(&self, basis: RateBasis) -> f64 {
        basis.rate(&self.grid)
    }
}

struct Agent {
    id: usize,
    state: RobotState,
    root: RngStream,
    sensor: RngStream,
    rows: Vec<CycleRow>,
    trajectory: Vec<Cell>,
    stalled: usize,
    done: Option<TerminationReason>,
}

struct World<'a> {
    cfg: &'a MissionConfig,
    truth: &'a GroundTruthMap,
    grid: OccupancyGrid,
    clock: Instant,
}

impl World<'_> {
    fn rate(&self) -> f64 {
        self.cfg.rate_basis.rate(&self.grid)
    }

    fn target_reached(&self) -> bool {
        self.rate() >= self.cfg.exploration_target
    }

    fn scan(&mut self, agent: &mut Agent) -> Result<()> {
        let scan = simulate_scan(self.truth, &agent.state, &self.cfg.lidar, self.cfg.cell_size, &mut agent.sensor)?;
        let origin = agent.state.position(self.cfg.cell_size);
        integrate_scan(&mut self.grid, origin, agent.state.heading.degrees(), &scan, &self.cfg.sensor_model);
        Ok(())
    }

    fn push_row(&self, agent: &mut Agent, cycle: usize, evals: usize, compute: f64, best: f64) {
        agent.rows.push(CycleRow {
            cycle,
            step_number: agent.state.steps_taken,
            wall_time_s: self.clock.elapsed().as_secs_f64(),
            exploration_rate: self.rate(),
            fitness_evaluations: evals,
            compute_time_s: compute,
            best_fitness: best,
        });
    }

    /// One decision cycle. Leaves `agent.done` set when the robot must stop.
    fn decide(&mut self, agent: &mut Agent) -> Result<()> {
        let cfg = self.cfg;
        let cycle = agent.rows.len();
        if agent.state.energy_remaining == 0 {
            agent.done = Some(TerminationReason::EnergyExhausted);
            return Ok(());
        }
        if cycle > cfg.max_cycles {
            agent.done = Some(TerminationReason::CycleLimit);
            return Ok(());
        }
        let before = self.grid.known_count();
        let snapshot = self.grid.clone();
        let fit = ExplorationFitness::new(&snapshot, agent.state, &cfg.lidar);
        let dim = snapshot.width().max(snapshot.height());
        let mut pop = init_population(
            &mut agent.root.derive(purpose::INIT_POPULATION, cycle as u64),
            cfg.population_size,
            cfg.goal_count(),
            dim,
        )?;
        let mut op = cfg.operator()?;
        let mut rng = agent.root.derive(purpose::OPTIMIZER, cycle as u64);
        let started = Instant::now();
        let out = evolve(&mut pop, op.as_mut(), &fit, Bounds::for_map(dim)?, &cfg.termination, &mut rng)?;
        let compute = started.elapsed().as_secs_f64();
        let best = out.best.fitness_or_min();

        if best < 0.0 {
            self.push_row(agent, cycle, out.evaluations, compute, best);
            agent.done = Some(if agent.state.energy_remaining == 0 {
                TerminationReason::EnergyExhausted
            } else {
                TerminationReason::NoFeasibleGoal
            });
            return Ok(());
        }
        let route = fit.route(&out.best.genes).expect("feasible candidate has a route");
        assert!(
            route.steps < agent.state.energy_remaining,
            "selected plan violates the energy constraint"
        );
        drop(fit);
        self.execute(agent, route)?;
        self.push_row(agent, cycle, out.evaluations, compute, best);

        if agent.done.is_some() {
            return Ok(());
        }
        if self.grid.known_count() > before {
            agent.stalled = 0;
        } else {
            agent.stalled += 1;
            if agent.stalled >= cfg.stall_cycles {
                agent.done = Some(TerminationReason::Stalled);
            }
        }
        Ok(())
    }

    /// Scans at each heading passed while turning toward `dir`, not counting
    /// the start and final headings. The turn itself is paid by the move.
    fn scan_turn(&mut self, agent: &mut Agent, dir: Direction) -> Result<()> {
        let from = agent.state.heading;
        let turns = from.rotation_steps(dir) as usize;
        let clockwise = (dir.index() + 8 - from.index()) % 8 <= 4;
        let saved = agent.state;
        for k in 1..turns {
            let idx = if clockwise { from.index() + k } else { from.index() + 8 - k };
            agent.state.heading = Direction::from_index(idx % 8);
            self.scan(agent)?;
        }
        agent.state = saved;
        Ok(())
    }

    fn execute(&mut self, agent: &mut Agent, route: Route) -> Result<()> {
        let mut goals = route.goals;
        let mut path = route.cells;
        let mut i = 1;
        let mut replans = 0;
        while i < path.len() {
            let dir = Direction::between(agent.state.cell, path[i]).expect("route cells are adjacent");
            if self.cfg.scan_while_turning {
                self.scan_turn(agent, dir)?;
            }
            let outcome = match move_robot(&agent.state, dir, self.truth) {
                Ok(o) => o,
                Err(Error::OutOfEnergy { .. }) => {
                    agent.done = Some(TerminationReason::EnergyExhausted);
                    return Ok(());
                }
                Err(e) => return Err(e),
            };
            agent.state = outcome.state;
            if outcome.moved {
                agent.trajectory.push(agent.state.cell);
            }
            self.scan(agent)?;
            while goals.first() == Some(&agent.state.cell) {
                goals.remove(0);
            }
            if self.target_reached() {
                agent.done = Some(TerminationReason::TargetReached);
                return Ok(());
            }
            let ahead_blocked = path[i + usize::from(outcome.moved)..]
                .iter()
                .any(|&c| self.grid.is_occupied(c));
            if outcome.moved && !ahead_blocked {
                i += 1;
                continue;
            }
            // Blocked, or the belief now shows an obstacle on the plan.
            replans += 1;
            if replans > self.cfg.max_replans || goals.is_empty() {
                return Ok(());
            }
            match plan_route(&self.grid, agent.state.cell, agent.state.heading, &goals) {
                Some(r) if r.steps < agent.state.energy_remaining => {
                    goals = r.goals;
                    path = r.cells;
                    i = 1;
                }
                _ => return Ok(()),
            }
        }
        Ok(())
    }
}

fn run(cfg: &MissionConfig, truth: &GroundTruthMap) -> Result<MultiMissionRecord> {
    cfg.validate()?;
    let starts = cfg.start_cells(truth)?;
    let mut world = World {
        cfg,
        truth,
        grid: OccupancyGrid::with_params(truth.width(), truth.height(), cfg.cell_size, cfg.sensor_model.l_max),
        clock: Instant::now(),
    };
    let base = RngStream::new(cfg.seed);
    let mut agents: Vec<Agent> = starts
        .iter()
        .enumerate()
        .map(|(id, &cell)| {
            let root = base.derive(purpose::ROBOT, id as u64);
            Agent {
                id,
                state: RobotState::new(cell, cfg.start_heading, cfg.energy_budget),
                sensor: root.derive(purpose::SENSOR, 0),
                root,
                rows: Vec::new(),
                trajectory: vec![cell],
                stalled: 0,
                done: None,
            }
        })
        .collect();

    for agent in agents.iter_mut() {
        world.scan(agent)?;
        world.push_row(agent, 0, 0, 0.0, 0.0);
    }
    let mut rounds = 0;
    loop {
        if world.target_reached() {
            for a in agents.iter_mut() {
                a.done.get_or_insert(TerminationReason::TargetReached);
            }
            break;
        }
        if agents.iter().all(|a| a.done.is_some()) {
            break;
        }
        rounds += 1;
        for agent in agents.iter_mut() {
            if agent.done.is_some() {
                continue;
            }
            if world.target_reached() {
                break;
            }
            world.decide(agent)?;
        }
    }
    let target_reached = world.target_reached();
    let grid = world.grid;
    let robots = agents
        .into_iter()
        .map(|a| MissionRecord {
            robot: a.id,
            rows: a.rows,
            final_grid: grid.clone(),
            final_state: a.state,
            termination: a.done.unwrap_or(TerminationReason::CycleLimit),
            trajectory: a.trajectory,
        })
        .collect();
    Ok(MultiMissionRecord {
        robots,
        grid,
        rounds,
        target_reached,
    })
}

/// Runs a single-robot mission (the first start cell; `cfg.robots` is ignored).
pub fn run_mission(cfg: &MissionConfig, truth: &GroundTruthMap) -> Result<MissionRecord> {
    let single = MissionConfig {
        robots: 1,
        ..cfg.clone()
    };
    let mut rec = run(&single, truth)?;
    Ok(rec.robots.remove(0))
}

/// Runs `cfg.robots` robots on one shared grid.
pub fn run_multi_robot(cfg: &MissionConfig, truth: &GroundTruthMap) -> Result<MultiMissionRecord> {
    if cfg.robots < 1 {
        return Err(invalid("at least one robot is required"));
    }
    run(cfg, truth)
}
