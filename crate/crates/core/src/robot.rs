//! Holonomic robot: 8-direction motion with rotation accounting and a
//! planar LIDAR with Gaussian range noise.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{raycast, Cell, Direction, GroundTruthMap};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotState {
    pub cell: Cell,
    pub heading: Direction,
    pub energy_remaining: u32,
    pub steps_taken: u32,
}

impl RobotState {
    pub fn new(cell: Cell, heading: Direction, energy: u32) -> Self {
        Self {
            cell,
            heading,
            energy_remaining: energy,
            steps_taken: 0,
        }
    }

    /// Sensor origin in meters.
    pub fn position(&self, cell_size: f64) -> (f64, f64) {
        let (x, y) = self.cell.center();
        (x * cell_size, y * cell_size)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LidarConfig {
    /// Meters.
    pub range: f64,
    /// Degrees, centred on the heading.
    pub angular_span: f64,
    /// Degrees between beams.
    pub resolution: f64,
    /// Standard deviation of range noise as a fraction of true distance.
    pub noise_fraction: f64,
    pub noise_enabled: bool,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            range: 4.0,
            angular_span: 180.0,
            resolution: 1.0,
            noise_fraction: 0.05,
            noise_enabled: true,
        }
    }
}

impl LidarConfig {
    pub fn noiseless() -> Self {
        Self {
            noise_enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range > 0.0) {
            return Err(invalid("LIDAR range must be positive"));
        }
        if !(self.resolution > 0.0) || !(self.angular_span >= 0.0) {
            return Err(invalid("LIDAR span and resolution must be positive"));
        }
        if !(self.noise_fraction >= 0.0) {
            return Err(invalid("noise fraction must be >= 0"));
        }
        Ok(())
    }

    pub fn beam_count(&self) -> usize {
        (self.angular_span / self.resolution).round() as usize + 1
    }

    /// Beam angles relative to the heading, from left to right.
    pub fn beam_angles(&self) -> impl Iterator<Item = f64> + '_ {
        let start = -self.angular_span / 2.0;
        (0..self.beam_count()).map(move |i| start + i as f64 * self.resolution)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    /// Degrees relative to the heading.
    pub angle: f64,
    /// Meters, within `[0, range]`.
    pub distance: f64,
    pub hit: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub beams: Vec<Beam>,
}

/// Simulates one LIDAR sweep against the ground truth.
///
/// Hits are perturbed by zero-mean Gaussian noise with standard deviation
/// `noise_fraction * d` and truncated to the sensor range; misses report the
/// full range without noise.
pub fn simulate_scan(
    truth: &GroundTruthMap,
    state: &RobotState,
    cfg: &LidarConfig,
    cell_size: f64,
    rng: &mut RngStream,
) -> Result<Scan> {
    cfg.validate()?;
    let origin = state.position(cell_size);
    let heading = state.heading.degrees();
    let mut beams = Vec::with_capacity(cfg.beam_count());
    for rel in cfg.beam_angles() {
        let ray = raycast(truth, origin, heading + rel, cfg.range, cell_size)?;
        let mut distance = ray.distance;
        if ray.hit && cfg.noise_enabled && cfg.noise_fraction > 0.0 {
            let noise = Normal::new(0.0, cfg.noise_fraction * ray.distance)
                .map_err(|e| invalid(e.to_string()))?;
            distance = (distance + noise.sample(rng)).clamp(0.0, cfg.range);
        }
        beams.push(Beam {
            angle: rel,
            distance,
            hit: ray.hit,
        });
    }
    Ok(Scan { beams })
}

/// Result of a single motion command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MoveOutcome {
    pub state: RobotState,
    pub moved: bool,
    pub steps: u32,
}

/// Rotation steps plus one translation step for moving from `heading` toward `dir`.
pub fn move_cost(heading: Direction, dir: Direction) -> u32 {
    heading.rotation_steps(dir) + 1
}

/// Turns toward `dir` (one step per 45°) and advances one cell (one step).
///
/// A blocked destination still costs the rotation but not the translation.
/// If the required steps exceed the remaining energy nothing happens and
/// [`Error::OutOfEnergy`] is returned.
pub fn move_robot(state: &RobotState, dir: Direction, truth: &GroundTruthMap) -> Result<MoveOutcome> {
    let target = state.cell.offset(dir);
    let blocked = truth.is_occupied(target);
    let rotation = state.heading.rotation_steps(dir);
    let required = rotation + u32::from(!blocked);
    if state.energy_remaining == 0 || required > state.energy_remaining {
        return Err(Error::OutOfEnergy {
            required: required.max(1),
            remaining: state.energy_remaining,
        });
    }
    let mut next = *state;
    next.heading = dir;
    next.energy_remaining -= required;
    next.steps_taken += required;
    if !blocked {
        next.cell = target;
    }
    Ok(MoveOutcome {
        state: next,
        moved: !blocked,
        steps: required,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn corridor() -> GroundTruthMap {
        let text = "\
######
#....#
#....#
######
#....#
#....#
#....#
######
";
        GroundTruthMap::from_ascii(text, Path::new("c")).unwrap()
    }

    #[test]
    fn scan_in_open_space() {
        let map = GroundTruthMap::empty(20, 20).unwrap();
        let state = RobotState::new(Cell::new(10, 10), Direction::N, 100);
        let scan = simulate_scan(&map, &state, &LidarConfig::noiseless(), 1.0, &mut RngStream::new(1)).unwrap();
        assert_eq!(scan.beams.len(), 181);
        assert!(scan.beams.iter().all(|b| !b.hit && b.distance == 4.0));
        assert_eq!(scan.beams[0].angle, -90.0);
        assert_eq!(scan.beams[180].angle, 90.0);
    }

    #[test]
    fn center_beam_sees_wall() {
        // Robot at (2, 5); the wall row 3 is two cells north.
        let map = corridor();
        let state = RobotState::new(Cell::new(2, 5), Direction::N, 100);
        let scan = simulate_scan(&map, &state, &LidarConfig::noiseless(), 1.0, &mut RngStream::new(1)).unwrap();
        let center = scan.beams[90];
        assert_eq!(center.angle, 0.0);
        assert!(center.hit);
        assert_eq!(center.distance, 2.0);
    }

    #[test]
    fn noisy_scan_is_reproducible() {
        let map = corridor();
        let state = RobotState::new(Cell::new(2, 5), Direction::E, 100);
        let cfg = LidarConfig::default();
        let a = simulate_scan(&map, &state, &cfg, 1.0, &mut RngStream::new(42)).unwrap();
        let b = simulate_scan(&map, &state, &cfg, 1.0, &mut RngStream::new(42)).unwrap();
        assert_eq!(a, b);
        assert!(a.beams.iter().all(|beam| (0.0..=4.0).contains(&beam.distance)));
        let clean = simulate_scan(&map, &state, &LidarConfig::noiseless(), 1.0, &mut RngStream::new(42)).unwrap();
        assert!(a.beams.iter().zip(&clean.beams).any(|(n, c)| n.distance != c.distance));
    }

    #[test]
    fn straight_move_costs_one() {
        let map = corridor();
        let s = RobotState::new(Cell::new(2, 5), Direction::N, 10);
        let out = move_robot(&s, Direction::N, &map).unwrap();
        assert!(out.moved);
        assert_eq!(out.steps, 1);
        assert_eq!(out.state.cell, Cell::new(2, 4));
        assert_eq!(out.state.energy_remaining, 9);
    }

    #[test]
    fn reversing_costs_five() {
        let map = corridor();
        let s = RobotState::new(Cell::new(2, 5), Direction::N, 10);
        let out = move_robot(&s, Direction::S, &map).unwrap();
        assert_eq!(out.steps, 5);
        assert_eq!(out.state.heading, Direction::S);
        assert_eq!(out.state.steps_taken + out.state.energy_remaining, 10);
    }

    #[test]
    fn blocked_move_refused() {
        let map = corridor();
        let s = RobotState::new(Cell::new(2, 4), Direction::N, 10);
        let out = move_robot(&s, Direction::N, &map).unwrap();
        assert!(!out.moved);
        assert_eq!(out.steps, 0);
        assert_eq!(out.state, s);
        // Blocked after a turn: rotation is spent.
        let out = move_robot(&s, Direction::NE, &map).unwrap();
        assert!(!out.moved);
        assert_eq!(out.steps, 1);
        assert_eq!(out.state.heading, Direction::NE);
    }

    #[test]
    fn out_of_energy_leaves_state() {
        let map = corridor();
        let s = RobotState::new(Cell::new(2, 5), Direction::N, 3);
        assert!(matches!(move_robot(&s, Direction::S, &map), Err(Error::OutOfEnergy { required: 5, remaining: 3 })));
        let empty = RobotState::new(Cell::new(2, 5), Direction::N, 0);
        assert!(move_robot(&empty, Direction::N, &map).is_err());
    }
}
