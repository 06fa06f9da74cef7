//! Occupancy-grid world model.
//!
//! Coordinates: cell `(x, y)` is column `x`, row `y`; row 0 is the top row of
//! a map file and "north" points toward decreasing `y`. Continuous points use
//! the same axes with one unit per cell, so the centre of cell `(x, y)` is
//! `(x + 0.5, y + 0.5)`. Angles are compass degrees, clockwise from north.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::robot::Scan;

/// Tolerance for treating a ray as passing exactly through a cell corner.
pub const CORNER_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dir: Direction) -> Cell {
        let (dx, dy) = dir.delta();
        Cell::new(self.x + dx, self.y + dy)
    }

    pub fn center(self) -> (f64, f64) {
        (self.x as f64 + 0.5, self.y as f64 + 0.5)
    }

    /// Chebyshev distance: the fewest 8-connected moves between two cells.
    pub fn chebyshev(self, other: Cell) -> u32 {
        (self.x - other.x).unsigned_abs().max((self.y - other.y).unsigned_abs())
    }
}

/// Row-major order: by row, then column.
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// The eight compass directions, clockwise from north.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::N,
        Direction::NE,
        Direction::E,
        Direction::SE,
        Direction::S,
        Direction::SW,
        Direction::W,
        Direction::NW,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Direction {
        Self::ALL[i % 8]
    }

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::N => (0, -1),
            Direction::NE => (1, -1),
            Direction::E => (1, 0),
            Direction::SE => (1, 1),
            Direction::S => (0, 1),
            Direction::SW => (-1, 1),
            Direction::W => (-1, 0),
            Direction::NW => (-1, -1),
        }
    }

    pub fn from_delta(dx: i32, dy: i32) -> Option<Direction> {
        Self::ALL.into_iter().find(|d| d.delta() == (dx, dy))
    }

    /// Direction of a single 8-connected step between adjacent cells.
    pub fn between(from: Cell, to: Cell) -> Option<Direction> {
        Self::from_delta(to.x - from.x, to.y - from.y)
    }

    pub fn degrees(self) -> f64 {
        self.index() as f64 * 45.0
    }

    /// Number of 45° turns separating two headings (0..=4).
    pub fn rotation_steps(self, other: Direction) -> u32 {
        let d = (self.index() as i32 - other.index() as i32).rem_euclid(8) as u32;
        d.min(8 - d)
    }
}

pub fn prob_to_logodds(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("probability {p} outside (0, 1)")));
    }
    Ok((p / (1.0 - p)).ln())
}

pub fn logodds_to_prob(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

/// Log-odds Bayes update: evidence is added to the prior, then clamped.
pub fn bayes_update(prior: f64, evidence: f64, l_max: f64) -> f64 {
    (prior + evidence).clamp(-l_max, l_max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellLabel {
    Occupied,
    Empty,
    Unknown,
}

pub fn classify(logodds: f64) -> CellLabel {
    if logodds > 0.0 {
        CellLabel::Occupied
    } else if logodds < 0.0 {
        CellLabel::Empty
    } else {
        CellLabel::Unknown
    }
}

/// Inverse sensor model constants (log odds).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub l_occ: f64,
    pub l_free: f64,
    pub l_max: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            l_occ: 0.85,
            l_free: -0.4,
            l_max: 10.0,
        }
    }
}

/// Per-cell log-odds belief.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    /// Meters per cell.
    cell_size: f64,
    l_max: f64,
    logodds: Vec<f64>,
}

impl OccupancyGrid {
    /// A fresh all-unknown grid with unit cells and `L_max = 10`.
    pub fn new(width: usize, height: usize) -> Self {
        Self::with_params(width, height, 1.0, 10.0)
    }

    pub fn with_params(width: usize, height: usize, cell_size: f64, l_max: f64) -> Self {
        Self {
            width,
            height,
            cell_size,
            l_max,
            logodds: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn l_max(&self) -> f64 {
        self.l_max
    }

    pub fn len(&self) -> usize {
        self.logodds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logodds.is_empty()
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    pub fn index(&self, c: Cell) -> usize {
        c.y as usize * self.width + c.x as usize
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new((index % self.width) as i32, (index / self.width) as i32)
    }

    pub fn logodds(&self, c: Cell) -> f64 {
        self.logodds[self.index(c)]
    }

    pub fn set_logodds(&mut self, c: Cell, l: f64) {
        let i = self.index(c);
        self.logodds[i] = l.clamp(-self.l_max, self.l_max);
    }

    /// Label of `c`; cells outside the grid read as occupied.
    pub fn label(&self, c: Cell) -> CellLabel {
        if self.in_bounds(c) {
            classify(self.logodds(c))
        } else {
            CellLabel::Occupied
        }
    }

    pub fn is_occupied(&self, c: Cell) -> bool {
        self.label(c) == CellLabel::Occupied
    }

    /// Applies one piece of evidence to `c`. A cell that has been observed
    /// never returns to exactly zero: if the sum cancels, the result keeps
    /// the sign of the latest evidence at the smallest positive magnitude.
    pub fn update(&mut self, c: Cell, evidence: f64) {
        let i = self.index(c);
        let prior = self.logodds[i];
        let mut next = bayes_update(prior, evidence, self.l_max);
        if next == 0.0 && (prior != 0.0 || evidence != 0.0) {
            next = f64::MIN_POSITIVE.copysign(evidence);
        }
        self.logodds[i] = next;
    }

    pub fn known_count(&self) -> usize {
        self.logodds.iter().filter(|&&l| l != 0.0).count()
    }

    /// Percentage of cells no longer labelled unknown.
    pub fn exploration_rate(&self) -> f64 {
        if self.logodds.is_empty() {
            return 0.0;
        }
        100.0 * self.known_count() as f64 / self.logodds.len() as f64
    }

    pub fn labels(&self) -> impl Iterator<Item = (Cell, CellLabel)> + '_ {
        (0..self.logodds.len()).map(move |i| (self.cell_at(i), classify(self.logodds[i])))
    }

    /// ASCII snapshot: `#` occupied, `.` empty, `?` unknown.
    pub fn to_ascii(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                s.push(match self.label(Cell::new(x as i32, y as i32)) {
                    CellLabel::Occupied => '#',
                    CellLabel::Empty => '.',
                    CellLabel::Unknown => '?',
                });
            }
            s.push('\n');
        }
        s
    }

    /// Parses an ASCII snapshot. Occupied and empty cells receive `±l_max`.
    pub fn from_ascii(text: &str, source: &Path) -> Result<Self> {
        let rows = parse_rows(text, source, &['#', '.', '?'])?;
        let height = rows.len();
        let width = rows[0].len();
        let mut grid = OccupancyGrid::new(width, height);
        let l_max = grid.l_max;
        for (y, row) in rows.iter().enumerate() {
            for (x, ch) in row.iter().enumerate() {
                let l = match ch {
                    '#' => l_max,
                    '.' => -l_max,
                    _ => 0.0,
                };
                grid.set_logodds(Cell::new(x as i32, y as i32), l);
            }
        }
        Ok(grid)
    }
}

/// Immutable obstacle map used only to simulate sensing and motion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthMap {
    width: usize,
    height: usize,
    occupied: Vec<bool>,
}

impl GroundTruthMap {
    /// Builds a map from row-major occupancy. The perimeter must be walled.
    pub fn new(width: usize, height: usize, occupied: Vec<bool>) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(invalid(format!("map {width}x{height} is too small")));
        }
        if occupied.len() != width * height {
            return Err(invalid("occupancy length does not match dimensions"));
        }
        let map = Self {
            width,
            height,
            occupied,
        };
        for y in 0..height {
            for x in 0..width {
                let border = x == 0 || y == 0 || x == width - 1 || y == height - 1;
                if border && !map.occupied[y * width + x] {
                    return Err(Error::OpenBorder { x, y });
                }
            }
        }
        Ok(map)
    }

    /// An obstacle-free map surrounded by a one-cell wall.
    pub fn empty(width: usize, height: usize) -> Result<Self> {
        let occupied = (0..width * height)
            .map(|i| {
                let (x, y) = (i % width, i / width);
                x == 0 || y == 0 || x + 1 == width || y + 1 == height
            })
            .collect();
        Self::new(width, height, occupied)
    }

    pub fn from_ascii(text: &str, source: &Path) -> Result<Self> {
        let rows = parse_rows(text, source, &['#', '.'])?;
        let (height, width) = (rows.len(), rows[0].len());
        let occupied = rows.into_iter().flatten().map(|c| c == '#').collect();
        Self::new(width, height, occupied)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    /// Cells outside the map count as occupied.
    pub fn is_occupied(&self, c: Cell) -> bool {
        !self.in_bounds(c) || self.occupied[c.y as usize * self.width + c.x as usize]
    }

    pub fn obstacle_rate(&self) -> f64 {
        self.occupied.iter().filter(|&&o| o).count() as f64 / self.occupied.len() as f64
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.occupied.len())
            .filter(|&i| !self.occupied[i])
            .map(|i| Cell::new((i % self.width) as i32, (i / self.width) as i32))
    }

    pub fn to_ascii(&self) -> String {
        let mut s = String::new();
        for row in self.occupied.chunks(self.width) {
            s.extend(row.iter().map(|&o| if o { '#' } else { '.' }));
            s.push('\n');
        }
        s
    }
}

fn parse_rows(text: &str, source: &Path, allowed: &[char]) -> Result<Vec<Vec<char>>> {
    let mut rows: Vec<Vec<char>> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(line.len());
        for (col, ch) in line.chars().enumerate() {
            if !allowed.contains(&ch) {
                return Err(Error::Parse {
                    path: source.to_path_buf(),
                    line: n + 1,
                    column: col + 1,
                    message: format!("unexpected character {ch:?}"),
                });
            }
            row.push(ch);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::DimensionMismatch {
                    path: source.to_path_buf(),
                    row: n + 1,
                    expected: first.len(),
                    found: row.len(),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: source.to_path_buf(),
            line: 1,
            column: 1,
            message: "empty map".into(),
        });
    }
    Ok(rows)
}

/// Loads a ground-truth map: ASCII (`#` / `.`) or binary PGM (`P5`, dark
/// pixels below 128 are obstacles).
pub fn load_map(path: impl AsRef<Path>) -> Result<GroundTruthMap> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    if bytes.starts_with(b"P5") {
        let (width, height, pixels) = crate::pgm::decode(&bytes, path)?;
        GroundTruthMap::new(width, height, pixels.iter().map(|&p| p < 128).collect())
    } else {
        let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            column: 1,
            message: e.to_string(),
        })?;
        GroundTruthMap::from_ascii(&text, path)
    }
}

/// Gray levels used in renders.
pub const RENDER_OCCUPIED: u8 = 0;
pub const RENDER_UNKNOWN: u8 = 128;
pub const RENDER_EXPLORED: u8 = 255;

/// PGM pixels for a belief grid: black obstacles, gray unknown, white explored.
pub fn render_pixels(grid: &OccupancyGrid) -> Vec<u8> {
    grid.labels()
        .map(|(_, l)| match l {
            CellLabel::Occupied => RENDER_OCCUPIED,
            CellLabel::Unknown => RENDER_UNKNOWN,
            CellLabel::Empty => RENDER_EXPLORED,
        })
        .collect()
}

/// Writes a belief grid as a binary PGM.
pub fn render(grid: &OccupancyGrid, path: impl AsRef<Path>) -> Result<()> {
    let bytes = crate::pgm::encode(grid.width(), grid.height(), &render_pixels(grid));
    fs::write(path, bytes)?;
    Ok(())
}

/// One cell crossed by a ray, with the ray parameters (in cells) where it
/// enters and leaves the cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayStep {
    pub cell: Cell,
    pub entry: f64,
    pub exit: f64,
}

/// Unit direction vector for a compass angle.
pub fn direction_vector(angle_deg: f64) -> (f64, f64) {
    let rad = angle_deg.to_radians();
    let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
    (snap(rad.sin()), snap(-rad.cos()))
}

fn boundary_t(origin: f64, cell: i32, step: i32, dir: f64) -> f64 {
    match step {
        1 => ((cell + 1) as f64 - origin) / dir,
        -1 => (cell as f64 - origin) / dir,
        _ => f64::INFINITY,
    }
}

/// Supercover grid traversal of the segment `origin + t * dir`, `0 <= t < max_t`,
/// on a `width x height` lattice.
///
/// The origin cell is excluded. Cells are reported near to far; when the ray
/// passes through a lattice corner, both side cells touched at the corner are
/// reported (horizontal neighbour first) before the diagonal cell. Traversal
/// stops at the lattice edge.
pub fn trace_ray(origin: (f64, f64), angle_deg: f64, max_t: f64, width: usize, height: usize) -> Vec<RayStep> {
    let (dx, dy) = direction_vector(angle_deg);
    let inside = |c: Cell| c.x >= 0 && c.y >= 0 && (c.x as usize) < width && (c.y as usize) < height;
    let mut cell = Cell::new(origin.0.floor() as i32, origin.1.floor() as i32);
    let mut out = Vec::new();
    if !inside(cell) {
        return out;
    }
    let sx = if dx > 0.0 { 1 } else if dx < 0.0 { -1 } else { 0 };
    let sy = if dy > 0.0 { 1 } else if dy < 0.0 { -1 } else { 0 };

    let mut t_x = boundary_t(origin.0, cell.x, sx, dx);
    let mut t_y = boundary_t(origin.1, cell.y, sy, dy);
    let mut pending: Option<f64> = None;
    loop {
        let exit = t_x.min(t_y);
        if let Some(entry) = pending {
            out.push(RayStep { cell, entry, exit });
        }
        if exit >= max_t {
            break;
        }
        if (t_x - t_y).abs() <= CORNER_EPS {
            for side in [Cell::new(cell.x + sx, cell.y), Cell::new(cell.x, cell.y + sy)] {
                if inside(side) {
                    out.push(RayStep {
                        cell: side,
                        entry: exit,
                        exit,
                    });
                }
            }
            cell = Cell::new(cell.x + sx, cell.y + sy);
        } else if t_x < t_y {
            cell = Cell::new(cell.x + sx, cell.y);
        } else {
            cell = Cell::new(cell.x, cell.y + sy);
        }
        if !inside(cell) {
            break;
        }
        pending = Some(exit);
        t_x = boundary_t(origin.0, cell.x, sx, dx);
        t_y = boundary_t(origin.1, cell.y, sy, dy);
    }
    out
}

/// Outcome of casting one ray against the ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct RayHit {
    pub hit: bool,
    /// Meters. For a hit, the midpoint of the ray's passage through the hit cell.
    pub distance: f64,
    /// Cells crossed up to and including the hit cell, excluding the origin cell.
    pub cells: Vec<Cell>,
}

/// Casts a ray against the ground truth. Distances are in meters.
pub fn raycast(
    map: &GroundTruthMap,
    origin: (f64, f64),
    angle_deg: f64,
    max_range: f64,
    cell_size: f64,
) -> Result<RayHit> {
    if !(max_range > 0.0) {
        return Err(invalid("max range must be positive"));
    }
    let (ox, oy) = (origin.0 / cell_size, origin.1 / cell_size);
    let start = Cell::new(ox.floor() as i32, oy.floor() as i32);
    if !map.in_bounds(start) {
        return Err(invalid(format!("ray origin {start} is outside the map")));
    }
    if map.is_occupied(start) {
        return Err(invalid(format!("ray origin {start} is inside an obstacle")));
    }
    let max_t = max_range / cell_size;
    let mut cells = Vec::new();
    for step in trace_ray((ox, oy), angle_deg, max_t, map.width(), map.height()) {
        cells.push(step.cell);
        if map.is_occupied(step.cell) {
            let mid = 0.5 * (step.entry + step.exit.min(max_t));
            return Ok(RayHit {
                hit: true,
                distance: mid * cell_size,
                cells,
            });
        }
    }
    Ok(RayHit {
        hit: false,
        distance: max_range,
        cells,
    })
}

/// Fuses a scan taken at `origin` (meters) with the given heading.
///
/// Cells a beam passes before its measured distance receive `l_free`; for a
/// hit, the first cell whose far side reaches the measured distance receives
/// `l_occ`. The sensor's own cell is never updated. Returns how many cells
/// stopped being unknown.
pub fn integrate_scan(
    grid: &mut OccupancyGrid,
    origin: (f64, f64),
    heading_deg: f64,
    scan: &Scan,
    model: &SensorModel,
) -> usize {
    let cs = grid.cell_size();
    let o = (origin.0 / cs, origin.1 / cs);
    let mut was_unknown = vec![false; grid.len()];
    let mut touched: Vec<Cell> = Vec::new();
    let mut apply = |grid: &mut OccupancyGrid, c: Cell, evidence: f64| {
        let i = grid.index(c);
        if !was_unknown[i] && grid.label(c) == CellLabel::Unknown {
            was_unknown[i] = true;
            touched.push(c);
        }
        grid.update(c, evidence);
    };
    for beam in &scan.beams {
        let angle = heading_deg + beam.angle;
        let reach = beam.distance / cs;
        if beam.hit {
            for step in trace_ray(o, angle, reach + CORNER_EPS, grid.width(), grid.height()) {
                if step.exit >= reach {
                    apply(grid, step.cell, model.l_occ);
                    break;
                }
                apply(grid, step.cell, model.l_free);
            }
        } else {
            for step in trace_ray(o, angle, reach, grid.width(), grid.height()) {
                apply(grid, step.cell, model.l_free);
            }
        }
    }
    touched.into_iter().filter(|&c| grid.label(c) != CellLabel::Unknown).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::Beam;

    fn ln9() -> f64 {
        9.0f64.ln()
    }

    #[test]
    fn logodds_conversions() {
        assert_eq!(prob_to_logodds(0.5).unwrap(), 0.0);
        assert_eq!(logodds_to_prob(0.0), 0.5);
        assert!((prob_to_logodds(0.9).unwrap() - ln9()).abs() < 1e-15);
        assert!(prob_to_logodds(0.0).is_err());
        assert!(prob_to_logodds(1.0).is_err());
        assert!(prob_to_logodds(f64::NAN).is_err());
        for p in [0.01, 0.2, 0.5, 0.77, 0.999] {
            assert!((logodds_to_prob(prob_to_logodds(p).unwrap()) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn bayes_is_addition() {
        assert_eq!(bayes_update(0.0, 0.0, 10.0), 0.0);
        assert!((bayes_update(0.4, 0.9, 10.0) - 1.3).abs() < 1e-15);
        assert_eq!(bayes_update(9.5, 0.85, 10.0), 10.0);
        assert_eq!(bayes_update(-9.9, -0.4, 10.0), -10.0);
    }

    #[test]
    fn classification() {
        assert_eq!(classify(0.0), CellLabel::Unknown);
        assert_eq!(classify(2.3), CellLabel::Occupied);
        assert_eq!(classify(-0.7), CellLabel::Empty);
    }

    #[test]
    fn cancelling_evidence_does_not_unobserve() {
        let mut g = OccupancyGrid::new(3, 3);
        let c = Cell::new(1, 1);
        g.set_logodds(c, 0.4);
        g.update(c, -0.4);
        assert_eq!(g.label(c), CellLabel::Empty);
    }

    #[test]
    fn exploration_rate_ratio() {
        let mut g = OccupancyGrid::new(24, 24);
        assert_eq!(g.exploration_rate(), 0.0);
        for i in 0..288 {
            let c = g.cell_at(i);
            g.set_logodds(c, -1.0);
        }
        assert_eq!(g.exploration_rate(), 50.0);
        for i in 0..576 {
            let c = g.cell_at(i);
            g.set_logodds(c, 1.0);
        }
        assert_eq!(g.exploration_rate(), 100.0);
    }

    #[test]
    fn rotation_steps_symmetric() {
        for a in Direction::ALL {
            for b in Direction::ALL {
                assert_eq!(a.rotation_steps(b), b.rotation_steps(a));
                assert!(a.rotation_steps(b) <= 4);
            }
        }
        assert_eq!(Direction::N.rotation_steps(Direction::S), 4);
        assert_eq!(Direction::N.rotation_steps(Direction::NW), 1);
    }

    fn six_by_six_with_wall_row(wall_y: usize) -> GroundTruthMap {
        let mut text = String::new();
        for y in 0..6 {
            for x in 0..6 {
                let border = x == 0 || y == 0 || x == 5 || y == 5;
                text.push(if border || y == wall_y { '#' } else { '.' });
            }
            text.push('\n');
        }
        GroundTruthMap::from_ascii(&text, Path::new("six")).unwrap()
    }

    #[test]
    fn raycast_open_space_misses() {
        let map = GroundTruthMap::empty(12, 12).unwrap();
        let hit = raycast(&map, (5.5, 6.5), 90.0, 4.0, 1.0).unwrap();
        assert!(!hit.hit);
        assert_eq!(hit.distance, 4.0);
        // boundaries at 0.5, 1.5, 2.5, 3.5 are inside the range
        assert_eq!(hit.cells.len(), 4);
    }

    #[test]
    fn raycast_wall_two_meters_ahead() {
        // Sensor at the centre of (2, 4); wall row 2 has its centre 2 m north.
        let map = six_by_six_with_wall_row(2);
        let hit = raycast(&map, (2.5, 4.5), 0.0, 4.0, 1.0).unwrap();
        assert!(hit.hit);
        assert_eq!(hit.distance, 2.0);
        assert_eq!(hit.cells, vec![Cell::new(2, 3), Cell::new(2, 2)]);
    }

    #[test]
    fn raycast_adjacent_wall() {
        let map = six_by_six_with_wall_row(3);
        let hit = raycast(&map, (2.5, 4.5), 0.0, 4.0, 1.0).unwrap();
        assert_eq!(hit.cells.len(), 1);
        assert!(hit.hit);
        assert_eq!(hit.distance, 1.0);
    }

    #[test]
    fn raycast_rejects_bad_origins() {
        let map = GroundTruthMap::empty(6, 6).unwrap();
        assert!(raycast(&map, (0.5, 0.5), 0.0, 4.0, 1.0).is_err());
        assert!(raycast(&map, (2.5, 2.5), 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn diagonal_ray_reports_corner_cells() {
        let steps = trace_ray((0.5, 0.5), 135.0, 3.0, 8, 8);
        let cells: Vec<Cell> = steps.iter().map(|s| s.cell).collect();
        assert_eq!(
            cells,
            vec![
                Cell::new(1, 0),
                Cell::new(0, 1),
                Cell::new(1, 1),
                Cell::new(2, 1),
                Cell::new(1, 2),
                Cell::new(2, 2),
            ]
        );
    }

    fn beam(angle: f64, distance: f64, hit: bool) -> Beam {
        Beam { angle, distance, hit }
    }

    #[test]
    fn scan_integration_counts_and_idempotence() {
        let mut g = OccupancyGrid::new(12, 12);
        let scan = Scan { beams: vec![beam(0.0, 4.0, false)] };
        let model = SensorModel::default();
        let first = integrate_scan(&mut g, (5.5, 8.5), 90.0, &scan, &model);
        let oracle = trace_ray((5.5, 8.5), 90.0, 4.0, 12, 12).len();
        assert_eq!(first, oracle);
        assert_eq!(integrate_scan(&mut g, (5.5, 8.5), 90.0, &scan, &model), 0);
    }

    #[test]
    fn hit_beam_marks_free_then_occupied() {
        let mut g = OccupancyGrid::new(8, 8);
        let scan = Scan { beams: vec![beam(0.0, 2.0, true)] };
        let n = integrate_scan(&mut g, (2.5, 4.5), 0.0, &scan, &SensorModel::default());
        assert_eq!(n, 2);
        assert_eq!(g.label(Cell::new(2, 3)), CellLabel::Empty);
        assert_eq!(g.label(Cell::new(2, 2)), CellLabel::Occupied);
        assert_eq!(g.label(Cell::new(2, 4)), CellLabel::Unknown);
    }

    #[test]
    fn empty_scan_changes_nothing() {
        let mut g = OccupancyGrid::new(8, 8);
        let before = g.clone();
        assert_eq!(integrate_scan(&mut g, (2.5, 2.5), 0.0, &Scan { beams: vec![] }, &SensorModel::default()), 0);
        assert_eq!(g, before);
    }

    #[test]
    fn ascii_maps_parse_and_fail() {
        let map = GroundTruthMap::from_ascii("####\n#..#\n####\n", Path::new("m")).unwrap();
        assert_eq!((map.width(), map.height()), (4, 3));
        assert!((map.obstacle_rate() - 10.0 / 12.0).abs() < 1e-15);

        let err = GroundTruthMap::from_ascii("####\n#..#\n###\n", Path::new("m")).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { row: 3, expected: 4, found: 3, .. }));
        let err = GroundTruthMap::from_ascii("####\n#.x#\n####\n", Path::new("m")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, column: 3, .. }));
        let err = GroundTruthMap::from_ascii("####\n#...\n####\n", Path::new("m")).unwrap_err();
        assert!(matches!(err, Error::OpenBorder { x: 3, y: 1 }));
    }

    #[test]
    fn belief_ascii_round_trip() {
        let mut g = OccupancyGrid::new(4, 3);
        g.set_logodds(Cell::new(1, 1), -2.0);
        g.set_logodds(Cell::new(2, 1), 0.5);
        let text = g.to_ascii();
        assert_eq!(text, "????\n?.#?\n????\n");
        let back = OccupancyGrid::from_ascii(&text, Path::new("g")).unwrap();
        assert_eq!(back.to_ascii(), text);
    }
}
