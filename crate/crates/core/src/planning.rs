//! A* planning on the belief grid and multi-goal route assembly.
//!
//! Unknown cells are traversable; only cells labelled occupied block a path.
//! The default cost model charges what the robot will actually spend: one
//! step per translation (diagonals included) plus one step per 45° of
//! rotation needed to face the move. The search therefore runs over
//! `(cell, heading)` states. [`CostModel::Unit`] drops the rotation term.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::grid::{Cell, Direction, OccupancyGrid};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostModel {
    #[default]
    RotationAware,
    /// One step per move regardless of heading.
    Unit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    /// Start to goal inclusive; consecutive cells are 8-adjacent.
    pub cells: Vec<Cell>,
    pub estimated_steps: u32,
}

impl Path {
    /// Heading after following the path from `initial`.
    pub fn final_heading(&self, initial: Direction) -> Direction {
        match self.cells.len() {
            0 | 1 => initial,
            n => Direction::between(self.cells[n - 2], self.cells[n - 1]).unwrap_or(initial),
        }
    }
}

/// Steps needed to follow `cells` starting with `heading`, using the robot's
/// motion model.
///
/// # Panics
/// If two consecutive cells are not 8-adjacent.
pub fn path_energy(cells: &[Cell], heading: Direction) -> u32 {
    let mut h = heading;
    let mut steps = 0;
    for w in cells.windows(2) {
        let d = Direction::between(w[0], w[1]).expect("path cells must be 8-adjacent");
        steps += h.rotation_steps(d) + 1;
        h = d;
    }
    steps
}

fn passable(grid: &OccupancyGrid, c: Cell) -> bool {
    grid.in_bounds(c) && !grid.is_occupied(c)
}

/// Shortest path from `start` (facing `heading`) to `goal`.
///
/// The start cell is always treated as passable since the robot stands on it.
/// Ties in the open list are broken by lower f, then lower h, then row-major
/// cell order, then heading index. Returns `None` when the goal is occupied,
/// outside the grid, or unreachable.
pub fn astar(grid: &OccupancyGrid, start: Cell, heading: Direction, goal: Cell, model: CostModel) -> Option<Path> {
    if !grid.in_bounds(start) || !passable(grid, goal) && goal != start {
        return None;
    }
    let w = grid.width();
    let n_states = grid.len() * 8;
    let state = |c: Cell, h: usize| (c.y as usize * w + c.x as usize) * 8 + h;
    let start_h = match model {
        CostModel::RotationAware => heading.index(),
        CostModel::Unit => 0,
    };

    let mut g = vec![u32::MAX; n_states];
    let mut parent = vec![usize::MAX; n_states];
    let mut closed = vec![false; n_states];
    let mut open = BinaryHeap::new();

    let s0 = state(start, start_h);
    g[s0] = 0;
    let h0 = start.chebyshev(goal);
    open.push(Reverse((h0, h0, start.y, start.x, start_h)));

    while let Some(Reverse((_, _, y, x, h))) = open.pop() {
        let cell = Cell::new(x, y);
        let s = state(cell, h);
        if closed[s] {
            continue;
        }
        closed[s] = true;
        if cell == goal {
            let mut cells = Vec::new();
            let mut cur = s;
            while cur != usize::MAX {
                let idx = cur / 8;
                cells.push(Cell::new((idx % w) as i32, (idx / w) as i32));
                cur = parent[cur];
            }
            cells.reverse();
            return Some(Path {
                cells,
                estimated_steps: g[s],
            });
        }
        for dir in Direction::ALL {
            let next = cell.offset(dir);
            if !passable(grid, next) {
                continue;
            }
            let (cost, nh) = match model {
                CostModel::RotationAware => (Direction::from_index(h).rotation_steps(dir) + 1, dir.index()),
                CostModel::Unit => (1, 0),
            };
            let ns = state(next, nh);
            if closed[ns] {
                continue;
            }
            let tentative = g[s] + cost;
            if tentative < g[ns] {
                g[ns] = tentative;
                parent[ns] = s;
                let hn = next.chebyshev(goal);
                open.push(Reverse((tentative + hn, hn, next.y, next.x, nh)));
            }
        }
    }
    None
}

/// Goals in visiting order, plus those no path reaches.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GoalOrder {
    pub ordered: Vec<Cell>,
    pub dropped: Vec<Cell>,
    /// One path per ordered goal, each starting where the previous ended.
    pub legs: Vec<Path>,
}

/// Greedy nearest-neighbour ordering using a caller-supplied leg planner.
pub fn order_goals_with<F>(start: Cell, heading: Direction, goals: &[Cell], mut leg: F) -> GoalOrder
where
    F: FnMut(Cell, Direction, Cell) -> Option<Path>,
{
    let mut remaining: Vec<Cell> = goals.to_vec();
    let mut out = GoalOrder::default();
    let (mut cur, mut h) = (start, heading);
    while !remaining.is_empty() {
        let mut best: Option<(usize, Path)> = None;
        let mut unreachable = Vec::new();
        for (i, &g) in remaining.iter().enumerate() {
            match leg(cur, h, g) {
                Some(p) => {
                    if best.as_ref().is_none_or(|(_, b)| p.estimated_steps < b.estimated_steps) {
                        best = Some((i, p));
                    }
                }
                None => unreachable.push(i),
            }
        }
        let picked = best.as_ref().map(|(i, _)| *i);
        let mut keep = Vec::with_capacity(remaining.len());
        for (i, g) in remaining.into_iter().enumerate() {
            if unreachable.contains(&i) {
                out.dropped.push(g);
            } else if Some(i) != picked {
                keep.push(g);
            }
        }
        remaining = keep;
        let Some((_, path)) = best else { break };
        let goal = *path.cells.last().expect("paths are never empty");
        h = path.final_heading(h);
        cur = goal;
        out.ordered.push(goal);
        out.legs.push(path);
    }
    out
}

/// Greedy nearest-neighbour goal ordering by A* cost from the running endpoint.
pub fn order_goals(grid: &OccupancyGrid, start: Cell, heading: Direction, goals: &[Cell]) -> GoalOrder {
    order_goals_with(start, heading, goals, |a, h, b| astar(grid, a, h, b, CostModel::RotationAware))
}

/// A concatenated multi-goal route.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Route {
    pub cells: Vec<Cell>,
    pub steps: u32,
    pub goals: Vec<Cell>,
    pub dropped: Vec<Cell>,
}

impl From<GoalOrder> for Route {
    fn from(order: GoalOrder) -> Self {
        let mut cells: Vec<Cell> = Vec::new();
        let mut steps = 0;
        for leg in &order.legs {
            let skip = usize::from(!cells.is_empty());
            cells.extend(leg.cells.iter().skip(skip));
            steps += leg.estimated_steps;
        }
        Route {
            cells,
            steps,
            goals: order.ordered,
            dropped: order.dropped,
        }
    }
}

/// Orders `goals` and joins the legs into one route. `None` if no goal is reachable.
pub fn plan_route(grid: &OccupancyGrid, start: Cell, heading: Direction, goals: &[Cell]) -> Option<Route> {
    let route = Route::from(order_goals(grid, start, heading, goals));
    (!route.goals.is_empty()).then_some(route)
}
