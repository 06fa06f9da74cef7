//! Comparison optimizers: a generational GA and a local-best ring PSO.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boa::single_point_crossover;
use crate::error::{invalid, Result};
use crate::optimizer::{Bounds, GenerationContext, GenerationOperator, Individual, Population};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub crossover_probability: f64,
    /// Chance that an offspring is mutated.
    pub mutation_probability: f64,
    pub mutation_distribution_index: f64,
    pub tournament_size: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            crossover_probability: 0.11,
            mutation_probability: 0.215,
            mutation_distribution_index: 76.026,
            tournament_size: 2,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.crossover_probability) || !(0.0..=1.0).contains(&self.mutation_probability) {
            return Err(invalid("GA probabilities must lie in [0, 1]"));
        }
        if !(self.mutation_distribution_index >= 0.0) {
            return Err(invalid("distribution index must be >= 0"));
        }
        if self.tournament_size < 2 {
            return Err(invalid("tournament size must be >= 2"));
        }
        Ok(())
    }
}

/// Polynomial mutation of every gene, scaled to the bounds' width.
pub fn polynomial_mutation(genes: &mut [f64], eta: f64, bounds: Bounds, rng: &mut RngStream) {
    let power = 1.0 / (eta + 1.0);
    for g in genes.iter_mut() {
        let u: f64 = rng.random();
        let delta = if u < 0.5 {
            (2.0 * u).powf(power) - 1.0
        } else {
            1.0 - (2.0 * (1.0 - u)).powf(power)
        };
        *g = bounds.clamp(*g + delta * bounds.range());
    }
}

/// Generational GA with tournament selection and an elite of one.
#[derive(Clone, Debug)]
pub struct Ga {
    params: GaParams,
}

impl Ga {
    pub fn new(params: GaParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    fn tournament(&self, pop: &Population, rng: &mut RngStream) -> usize {
        let n = pop.len();
        let mut winner = rng.random_range(0..n);
        for _ in 1..self.params.tournament_size {
            let c = rng.random_range(0..n);
            let (fc, fw) = (pop.members[c].fitness_or_min(), pop.members[winner].fitness_or_min());
            if fc > fw || (fc == fw && c < winner) {
                winner = c;
            }
        }
        winner
    }
}

impl GenerationOperator for Ga {
    fn name(&self) -> &'static str {
        "ga"
    }

    fn step(&mut self, pop: &mut Population, ctx: &mut GenerationContext<'_>) -> Result<()> {
        let n = pop.len();
        ctx.evaluate_stale(pop)?;
        pop.refresh_best();
        let len = pop.members[0].genes.len();

        let mut next: Vec<Individual> = Vec::with_capacity(n);
        next.push(pop.best_member().clone());
        while next.len() < n {
            let a = pop.members[self.tournament(pop, ctx.rng)].clone();
            let b = pop.members[self.tournament(pop, ctx.rng)].clone();
            let (mut c1, mut c2) = if len >= 2 && ctx.rng.random::<f64>() < self.params.crossover_probability {
                let cut = ctx.rng.random_range(1..len);
                let (g1, g2) = single_point_crossover(&a.genes, &b.genes, cut)?;
                (Individual::stale(g1), Individual::stale(g2))
            } else {
                (a, b)
            };
            for child in [&mut c1, &mut c2] {
                if ctx.rng.random::<f64>() < self.params.mutation_probability {
                    polynomial_mutation(&mut child.genes, self.params.mutation_distribution_index, ctx.bounds, ctx.rng);
                    child.fitness = None;
                }
            }
            next.push(c1);
            if next.len() < n {
                next.push(c2);
            }
        }
        pop.members = next;
        ctx.evaluate_stale(pop)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsoParams {
    pub social_coefficient: f64,
    pub cognitive_coefficient: f64,
    /// Velocity limit as a fraction of each dimension's range.
    pub max_velocity: f64,
    pub inertia_weight: f64,
    /// Ring neighbours consulted for the local best (split evenly on both sides).
    pub neighborhood_size: usize,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            social_coefficient: 1.506,
            cognitive_coefficient: 3.379,
            max_velocity: 0.329,
            inertia_weight: 0.449,
            neighborhood_size: 4,
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_velocity > 0.0) {
            return Err(invalid("max velocity must be > 0"));
        }
        if self.neighborhood_size < 1 {
            return Err(invalid("neighborhood size must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Swarm {
    velocity: Vec<Vec<f64>>,
    memory: Vec<Vec<f64>>,
    memory_fitness: Vec<f64>,
}

/// Particle swarm with a ring topology. Particle memories persist across
/// generations; create a new operator per run.
#[derive(Clone, Debug)]
pub struct Pso {
    params: PsoParams,
    swarm: Option<Swarm>,
}

impl Pso {
    pub fn new(params: PsoParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, swarm: None })
    }

    /// Current velocities (empty before the first generation).
    pub fn velocities(&self) -> &[Vec<f64>] {
        self.swarm.as_ref().map(|s| s.velocity.as_slice()).unwrap_or(&[])
    }

    /// Personal-best fitness per particle.
    pub fn memory_fitness(&self) -> &[f64] {
        self.swarm.as_ref().map(|s| s.memory_fitness.as_slice()).unwrap_or(&[])
    }

    fn local_best(&self, swarm: &Swarm, i: usize) -> usize {
        let n = swarm.memory.len();
        let reach = (self.params.neighborhood_size / 2).max(1);
        let mut best = i;
        for off in 1..=reach {
            for j in [(i + off) % n, (i + n - off % n) % n] {
                let (fj, fb) = (swarm.memory_fitness[j], swarm.memory_fitness[best]);
                if fj > fb || (fj == fb && j < best) {
                    best = j;
                }
            }
        }
        best
    }
}

impl GenerationOperator for Pso {
    fn name(&self) -> &'static str {
        "pso"
    }

    fn step(&mut self, pop: &mut Population, ctx: &mut GenerationContext<'_>) -> Result<()> {
        ctx.evaluate_stale(pop)?;
        let n = pop.len();
        let swarm = self.swarm.take().filter(|s| s.memory.len() == n).unwrap_or_else(|| Swarm {
            velocity: pop.members.iter().map(|m| vec![0.0; m.genes.len()]).collect(),
            memory: pop.members.iter().map(|m| m.genes.clone()).collect(),
            memory_fitness: pop.members.iter().map(|m| m.fitness_or_min()).collect(),
        });
        let mut swarm = swarm;
        let vmax = self.params.max_velocity * ctx.bounds.range();
        let leaders: Vec<usize> = (0..n).map(|i| self.local_best(&swarm, i)).collect();

        let mut candidates = Vec::with_capacity(n);
        for i in 0..n {
            let x = &pop.members[i].genes;
            let lead = &swarm.memory[leaders[i]];
            let mut pos = Vec::with_capacity(x.len());
            for d in 0..x.len() {
                let r1: f64 = ctx.rng.random();
                let r2: f64 = ctx.rng.random();
                let v = self.params.inertia_weight * swarm.velocity[i][d]
                    + self.params.cognitive_coefficient * r1 * (swarm.memory[i][d] - x[d])
                    + self.params.social_coefficient * r2 * (lead[d] - x[d]);
                let v = v.clamp(-vmax, vmax);
                swarm.velocity[i][d] = v;
                pos.push(ctx.bounds.clamp(x[d] + v));
            }
            candidates.push(pos);
        }

        let fits = ctx.evaluate_batch(&candidates)?;
        for (i, (pos, f)) in candidates.into_iter().zip(fits).enumerate() {
            if f > swarm.memory_fitness[i] {
                swarm.memory[i] = pos.clone();
                swarm.memory_fitness[i] = f;
            }
            pop.members[i].genes = pos;
            pop.members[i].fitness = Some(f);
        }
        self.swarm = Some(swarm);
        Ok(())
    }
}
