use boa_explore::baselines::{Ga, GaParams, Pso, PsoParams};
use boa_explore::boa::{fragrance, update_sensor_modality, Boa, BoaParams, Xboa};
use boa_explore::grid::{
    bayes_update, classify, integrate_scan, raycast, trace_ray, Cell, CellLabel, Direction, GroundTruthMap,
    OccupancyGrid, SensorModel,
};
use boa_explore::optimizer::{
    evolve, init_population_in, Bounds, CountingEvaluator, FnEvaluator, GenerationContext, GenerationOperator,
    TerminationPolicy,
};
use boa_explore::planning::{astar, path_energy, CostModel};
use boa_explore::rng::RngStream;
use boa_explore::robot::{move_robot, simulate_scan, LidarConfig, RobotState};
use proptest::prelude::*;

fn bumpy(g: &[f64]) -> f64 {
    g.iter().map(|x| 10.0 - (x - 1.0).powi(2) + 2.0 * (3.0 * x).sin()).sum()
}

fn operator(kind: u8, n: usize) -> Box<dyn GenerationOperator> {
    match kind % 4 {
        0 => Box::new(Boa::new(BoaParams::boa_for_population(n).with_max_iterations(8)).unwrap()),
        1 => Box::new(Xboa::new(BoaParams::xboa_for_population(n).with_max_iterations(8)).unwrap()),
        2 => Box::new(Ga::new(GaParams::default()).unwrap()),
        _ => Box::new(Pso::new(PsoParams::default()).unwrap()),
    }
}

/// Random ground truth with a closed border.
fn random_map(seed: u64, w: usize, h: usize, density: f64) -> GroundTruthMap {
    use rand::Rng;
    let mut rng = RngStream::new(seed);
    let occupied = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            x == 0 || y == 0 || x == w - 1 || y == h - 1 || rng.random_bool(density)
        })
        .collect();
    GroundTruthMap::new(w, h, occupied).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn fragrance_is_monotone(c in 0.001f64..=1.0, a in 0.0f64..=1.0, i1 in 0.0f64..500.0, i2 in 0.0f64..500.0) {
        let (lo, hi) = if i1 <= i2 { (i1, i2) } else { (i2, i1) };
        prop_assert!(fragrance(lo, c, a).unwrap() <= fragrance(hi, c, a).unwrap());
    }

    #[test]
    fn every_operator_keeps_size_bounds_and_best(kind in 0u8..4, seed: u64, n in 3usize..10, dims in 1usize..5) {
        let bounds = Bounds::new(-4.0, 6.0).unwrap();
        let eval = FnEvaluator(bumpy);
        let policy = TerminationPolicy { max_generations: 8, patience: 3, improvement_epsilon: 0.0 };
        let run = || {
            let mut rng = RngStream::new(seed);
            let mut pop = init_population_in(&mut rng, n, dims, bounds).unwrap();
            let counter = CountingEvaluator::new(&eval);
            let out = evolve(&mut pop, operator(kind, n).as_mut(), &counter, bounds, &policy, &mut rng).unwrap();
            (pop, out, counter.calls())
        };
        let (pop, out, calls) = run();
        prop_assert_eq!(pop.len(), n);
        prop_assert!(pop.members.iter().all(|m| !m.is_stale() && m.genes.iter().all(|g| bounds.contains(*g))));
        prop_assert!(out.history.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(out.evaluations, calls);
        let (_, again, _) = run();
        prop_assert_eq!(out.best.genes, again.best.genes);
        prop_assert_eq!(out.evaluations, again.evaluations);
    }

    #[test]
    fn pso_memory_never_worsens(seed: u64, n in 2usize..10) {
        let bounds = Bounds::new(-5.0, 5.0).unwrap();
        let eval = FnEvaluator(bumpy);
        let counter = CountingEvaluator::new(&eval);
        let mut rng = RngStream::new(seed);
        let mut pop = init_population_in(&mut rng, n, 3, bounds).unwrap();
        let mut ctx = GenerationContext::new(&mut rng, bounds, &counter);
        ctx.evaluate_stale(&mut pop).unwrap();
        let mut pso = Pso::new(PsoParams::default()).unwrap();
        let mut prev: Vec<f64> = Vec::new();
        for _ in 0..6 {
            pso.step(&mut pop, &mut ctx).unwrap();
            let mem = pso.memory_fitness().to_vec();
            if !prev.is_empty() {
                prop_assert!(mem.iter().zip(&prev).all(|(m, p)| m >= p));
            }
            prev = mem;
        }
    }

    #[test]
    fn classification_follows_sign(x in -20.0f64..20.0) {
        let expected = if x > 0.0 { CellLabel::Occupied } else if x < 0.0 { CellLabel::Empty } else { CellLabel::Unknown };
        prop_assert_eq!(classify(bayes_update(0.0, x, 10.0)), expected);
    }

    #[test]
    fn scans_only_add_knowledge(seed: u64) {
        let truth = random_map(seed, 16, 16, 0.2);
        let free: Vec<Cell> = truth.free_cells().collect();
        prop_assume!(!free.is_empty());
        let mut grid = OccupancyGrid::new(16, 16);
        let mut rng = RngStream::new(seed ^ 0x5eed);
        let cfg = LidarConfig::default();
        let model = SensorModel::default();
        let mut rate = grid.exploration_rate();
        for k in 0..12 {
            let state = RobotState::new(free[(k * 7 + seed as usize % 5) % free.len()], Direction::from_index(k % 8), 10);
            let before: Vec<bool> = (0..grid.len()).map(|i| grid.label(grid.cell_at(i)) != CellLabel::Unknown).collect();
            let scan = simulate_scan(&truth, &state, &cfg, 1.0, &mut rng).unwrap();
            integrate_scan(&mut grid, state.position(1.0), state.heading.degrees(), &scan, &model);
            for (i, known) in before.into_iter().enumerate() {
                prop_assert!(!known || grid.label(grid.cell_at(i)) != CellLabel::Unknown);
            }
            prop_assert!(grid.exploration_rate() >= rate);
            rate = grid.exploration_rate();
        }
    }

    #[test]
    fn raycast_matches_exact_box_intersection(seed: u64, ox in 0.0f64..1.0, oy in 0.0f64..1.0, angle in 0.0f64..360.0) {
        let truth = random_map(seed, 16, 16, 0.15);
        let free: Vec<Cell> = truth.free_cells().collect();
        prop_assume!(!free.is_empty());
        let cell = free[seed as usize % free.len()];
        let origin = (cell.x as f64 + ox, cell.y as f64 + oy);
        prop_assume!(origin.0.floor() as i32 == cell.x && origin.1.floor() as i32 == cell.y);
        let range = 6.0;
        let got = raycast(&truth, origin, angle, range, 1.0).unwrap();

        let a = angle.to_radians();
        let (dx, dy) = (a.sin(), -a.cos());
        let mut crossed: Vec<(f64, f64, Cell)> = Vec::new();
        for y in 0..16 {
            for x in 0..16 {
                let c = Cell::new(x, y);
                if c == cell {
                    continue;
                }
                let span = |o: f64, d: f64, lo: f64| {
                    if d == 0.0 {
                        if o > lo && o < lo + 1.0 { (f64::NEG_INFINITY, f64::INFINITY) } else { (f64::INFINITY, f64::NEG_INFINITY) }
                    } else {
                        let (t1, t2) = ((lo - o) / d, (lo + 1.0 - o) / d);
                        (t1.min(t2), t1.max(t2))
                    }
                };
                let (ax, bx) = span(origin.0, dx, x as f64);
                let (ay, by) = span(origin.1, dy, y as f64);
                let (t0, t1) = (ax.max(ay), bx.min(by));
                if t0 < t1 && t1 > 0.0 && t0 < range {
                    crossed.push((t0, t1, c));
                }
            }
        }
        crossed.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut want = Vec::new();
        let mut hit = None;
        for (t0, t1, c) in crossed {
            want.push(c);
            if truth.is_occupied(c) {
                hit = Some(0.5 * (t0 + t1.min(range)));
                break;
            }
        }
        prop_assert_eq!(&got.cells, &want);
        prop_assert_eq!(got.hit, hit.is_some());
        if let Some(d) = hit {
            prop_assert!((got.distance - d).abs() < 1e-9);
        }
    }

    #[test]
    fn traced_cells_are_adjacent(ox in 1.0f64..15.0, oy in 1.0f64..15.0, angle in 0.0f64..360.0) {
        let steps = trace_ray((ox, oy), angle, 10.0, 16, 16);
        let mut prev = Cell::new(ox.floor() as i32, oy.floor() as i32);
        for s in &steps {
            prop_assert!(s.entry <= s.exit);
            prop_assert!((s.cell.x - prev.x).abs() <= 1 && (s.cell.y - prev.y).abs() <= 1);
            prev = s.cell;
        }
        prop_assert!(steps.windows(2).all(|w| w[0].entry <= w[1].entry));
    }

    #[test]
    fn moves_conserve_energy_and_stay_free(seed: u64, dirs in prop::collection::vec(0usize..8, 1..60)) {
        let truth = random_map(seed, 12, 12, 0.25);
        let free: Vec<Cell> = truth.free_cells().collect();
        prop_assume!(!free.is_empty());
        let mut s = RobotState::new(free[0], Direction::N, 150);
        for d in dirs {
            let before = s;
            match move_robot(&s, Direction::from_index(d), &truth) {
                Ok(out) => {
                    s = out.state;
                    if out.moved {
                        prop_assert!(s.steps_taken > before.steps_taken);
                    }
                }
                Err(_) => prop_assert_eq!(s, before),
            }
            prop_assert_eq!(s.steps_taken + s.energy_remaining, 150);
            prop_assert!(!truth.is_occupied(s.cell));
        }
    }

    #[test]
    fn planned_paths_are_sound(seed: u64, hx in 0usize..8, gx in 0i32..16, gy in 0i32..16) {
        let truth = random_map(seed, 16, 16, 0.25);
        let mut belief = OccupancyGrid::new(16, 16);
        for i in 0..belief.len() {
            let c = belief.cell_at(i);
            if truth.is_occupied(c) && (c.x + c.y) % 3 != 0 {
                belief.set_logodds(c, 1.0);
            }
        }
        let start = Cell::new(1, 1);
        prop_assume!(!belief.is_occupied(start));
        if let Some(p) = astar(&belief, start, Direction::from_index(hx), Cell::new(gx, gy), CostModel::RotationAware) {
            prop_assert!(p.cells.iter().all(|&c| !belief.is_occupied(c)));
            let energy = path_energy(&p.cells, Direction::from_index(hx));
            prop_assert_eq!(energy, p.estimated_steps);
            prop_assert!(energy as usize >= p.cells.len() - 1);
        }
    }
}

#[test]
fn rotation_cost_is_symmetric_and_bounded() {
    for a in Direction::ALL {
        for b in Direction::ALL {
            assert_eq!(a.rotation_steps(b), b.rotation_steps(a));
            assert!(a.rotation_steps(b) <= 4);
        }
    }
}

#[test]
fn sensor_schedule_from_table_values_stays_finite() {
    for p in [BoaParams::BOA_POP20, BoaParams::BOA_POP5, BoaParams::XBOA_POP20, BoaParams::XBOA_POP5] {
        let mut c = p.sensor_modality;
        for _ in 0..30 {
            let next = update_sensor_modality(c, 30).unwrap();
            assert!(next > c && next.is_finite());
            c = next;
        }
    }
}
