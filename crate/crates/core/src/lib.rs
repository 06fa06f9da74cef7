//! Autonomous grid exploration driven by the Butterfly Optimization
//! Algorithm and its crossover variant, with GA and PSO baselines.
//!
//! A single robot (or a small team) carries a noisy planar LIDAR through an
//! unknown occupancy-grid map. Each decision cycle, an optimizer searches for
//! goal cells that maximise the number of unknown cells the robot would see
//! while travelling there; the robot executes the route with A*, integrates
//! its scans and repeats until the map is explored or the energy runs out.

pub mod baselines;
pub mod boa;
pub mod error;
pub mod grid;
pub mod mission;
pub mod optimizer;
pub mod pgm;
pub mod planning;
pub mod rng;
pub mod robot;

pub use error::{Error, Result};
