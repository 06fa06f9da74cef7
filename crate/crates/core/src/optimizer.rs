//! Population-based optimization engine.
//!
//! Candidates are flat real vectors. For exploration they encode an ordered
//! list of goal cells as interleaved `x, y` pairs; [`decode`] maps them back
//! to grid cells. Fitness is always maximized.
//!
//! Concrete algorithms implement [`GenerationOperator`]. An operator builds
//! its candidate vectors from the population as it stood at the start of the
//! generation, hands them to [`GenerationContext::evaluate_batch`] (which may
//! evaluate them concurrently) and then applies its acceptance rule.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Cell;
use crate::rng::RngStream;

/// Closed interval shared by every gene.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(invalid(format!("bad bounds [{lower}, {upper}]")));
        }
        Ok(Self { lower, upper })
    }

    /// Gene bounds for a square map of `map_dim` cells per side.
    pub fn for_map(map_dim: usize) -> Result<Self> {
        if map_dim < 2 {
            return Err(invalid("map dimension must be at least 2"));
        }
        Self::new(0.0, (map_dim - 1) as f64)
    }

    pub fn range(&self) -> f64 {
        self.upper - self.lower
    }

    #[inline]
    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }

    pub fn clamp_all(&self, genes: &mut [f64]) {
        for g in genes {
            *g = self.clamp(*g);
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }
}

/// One candidate solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genes: Vec<f64>,
    /// `None` marks a stale (not yet evaluated) individual.
    pub fitness: Option<f64>,
    /// Algorithm-specific scratch value (BOA fragrance).
    pub fragrance: f64,
}

impl Individual {
    pub fn stale(genes: Vec<f64>) -> Self {
        Self {
            genes,
            fitness: None,
            fragrance: 0.0,
        }
    }

    pub fn evaluated(genes: Vec<f64>, fitness: f64) -> Self {
        Self {
            genes,
            fitness: Some(fitness),
            fragrance: 0.0,
        }
    }

    pub fn is_stale(&self) -> bool {
        self.fitness.is_none()
    }

    /// Fitness of an evaluated individual; stale individuals rank lowest.
    pub fn fitness_or_min(&self) -> f64 {
        self.fitness.unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub members: Vec<Individual>,
    /// Index of the member with maximal fitness, lowest index on ties.
    pub best: usize,
    pub generation: usize,
}

impl Population {
    pub fn new(members: Vec<Individual>) -> Self {
        let mut pop = Self {
            members,
            best: 0,
            generation: 0,
        };
        pop.refresh_best();
        pop
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best_member(&self) -> &Individual {
        &self.members[self.best]
    }

    pub fn refresh_best(&mut self) {
        let mut best = 0;
        let mut best_fit = f64::NEG_INFINITY;
        for (i, m) in self.members.iter().enumerate() {
            let f = m.fitness_or_min();
            if f > best_fit {
                best_fit = f;
                best = i;
            }
        }
        self.best = best;
    }
}

/// When to stop evolving.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerminationPolicy {
    pub max_generations: usize,
    /// Generations without improvement before stopping early.
    pub patience: usize,
    /// Improvement must exceed this margin to reset patience.
    pub improvement_epsilon: f64,
}

impl Default for TerminationPolicy {
    fn default() -> Self {
        Self {
            max_generations: 30,
            patience: 10,
            improvement_epsilon: 0.0,
        }
    }
}

impl TerminationPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.max_generations < 1 {
            return Err(invalid("max_generations must be >= 1"));
        }
        if self.patience < 1 {
            return Err(invalid("patience must be >= 1"));
        }
        if !(self.improvement_epsilon >= 0.0) {
            return Err(invalid("improvement_epsilon must be >= 0"));
        }
        Ok(())
    }
}

/// A fitness function. Implementations must be pure with respect to their
/// inputs: the same genes always produce the same fitness.
pub trait Evaluator: Sync {
    fn evaluate(&self, genes: &[f64]) -> Result<f64>;
}

/// Adapts a plain closure into an [`Evaluator`].
pub struct FnEvaluator<F>(pub F);

impl<F> Evaluator for FnEvaluator<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, genes: &[f64]) -> Result<f64> {
        Ok((self.0)(genes))
    }
}

/// Counts evaluator invocations.
pub struct CountingEvaluator<'a> {
    inner: &'a dyn Evaluator,
    calls: AtomicUsize,
}

impl<'a> CountingEvaluator<'a> {
    pub fn new(inner: &'a dyn Evaluator) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl Evaluator for CountingEvaluator<'_> {
    fn evaluate(&self, genes: &[f64]) -> Result<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let f = self.inner.evaluate(genes)?;
        if !f.is_finite() {
            return Err(Error::NonFiniteFitness(f));
        }
        Ok(f)
    }
}

/// Everything an operator may touch during one generation.
pub struct GenerationContext<'a> {
    pub rng: &'a mut RngStream,
    pub bounds: Bounds,
    evaluator: &'a CountingEvaluator<'a>,
}

impl<'a> GenerationContext<'a> {
    pub fn new(rng: &'a mut RngStream, bounds: Bounds, evaluator: &'a CountingEvaluator<'a>) -> Self {
        Self {
            rng,
            bounds,
            evaluator,
        }
    }

    /// Evaluates candidates, possibly in parallel; results keep input order.
    pub fn evaluate_batch(&self, candidates: &[Vec<f64>]) -> Result<Vec<f64>> {
        candidates
            .par_iter()
            .map(|genes| self.evaluator.evaluate(genes))
            .collect()
    }

    /// Evaluates every stale member in place.
    pub fn evaluate_stale(&self, pop: &mut Population) -> Result<()> {
        let stale: Vec<usize> = (0..pop.len()).filter(|&i| pop.members[i].is_stale()).collect();
        let genes: Vec<Vec<f64>> = stale.iter().map(|&i| pop.members[i].genes.clone()).collect();
        let fits = self.evaluate_batch(&genes)?;
        for (i, f) in stale.into_iter().zip(fits) {
            pop.members[i].fitness = Some(f);
        }
        Ok(())
    }
}

/// One generation of a population-based algorithm.
pub trait GenerationOperator {
    fn name(&self) -> &'static str;

    /// Advances `pop` by one generation. On return every member must be
    /// evaluated and the population size unchanged.
    fn step(&mut self, pop: &mut Population, ctx: &mut GenerationContext<'_>) -> Result<()>;
}

/// Draws `size` individuals with `2 * goals` genes uniform in `[0, map_dim - 1]`.
pub fn init_population(rng: &mut RngStream, size: usize, goals: usize, map_dim: usize) -> Result<Population> {
    if goals < 1 {
        return Err(invalid("at least one goal is required"));
    }
    init_population_in(rng, size, 2 * goals, Bounds::for_map(map_dim)?)
}

/// Draws `size` individuals of dimension `dims` uniformly inside `bounds`.
pub fn init_population_in(rng: &mut RngStream, size: usize, dims: usize, bounds: Bounds) -> Result<Population> {
    if size < 2 {
        return Err(invalid(format!("population size {size} < 2")));
    }
    if dims < 1 {
        return Err(invalid("dimension must be >= 1"));
    }
    let members = (0..size)
        .map(|_| {
            let genes = (0..dims)
                .map(|_| rng.random_range(bounds.lower..=bounds.upper))
                .collect();
            Individual::stale(genes)
        })
        .collect();
    Ok(Population::new(members))
}

/// Rounds half away from zero then clamps into the grid.
fn gene_to_index(g: f64, max_index: i32) -> i32 {
    (g.round() as i32).clamp(0, max_index)
}

/// Maps interleaved `x, y` genes to goal cells on a `map_dim`-wide square map.
pub fn decode(genes: &[f64], map_dim: usize) -> Vec<Cell> {
    let max = map_dim.saturating_sub(1) as i32;
    genes
        .chunks_exact(2)
        .map(|xy| Cell::new(gene_to_index(xy[0], max), gene_to_index(xy[1], max)))
        .collect()
}

/// Result of an [`evolve`] run.
#[derive(Clone, Debug)]
pub struct EvolveOutcome {
    /// Best individual ever seen (never stale).
    pub best: Individual,
    /// Exact number of evaluator invocations.
    pub evaluations: usize,
    /// Generations executed after initialization.
    pub generations: usize,
    /// Best-so-far fitness after initialization and after each generation.
    pub history: Vec<f64>,
}

/// Runs `op` on `pop` until the policy stops it.
///
/// Stale members are evaluated first. The initial evaluation does not count
/// as a generation.
pub fn evolve(
    pop: &mut Population,
    op: &mut dyn GenerationOperator,
    evaluator: &dyn Evaluator,
    bounds: Bounds,
    policy: &TerminationPolicy,
    rng: &mut RngStream,
) -> Result<EvolveOutcome> {
    policy.validate()?;
    if pop.len() < 2 {
        return Err(invalid("population must hold at least 2 members"));
    }
    let size = pop.len();
    let counter = CountingEvaluator::new(evaluator);
    let mut ctx = GenerationContext::new(rng, bounds, &counter);

    ctx.evaluate_stale(pop)?;
    pop.refresh_best();
    let mut best = pop.best_member().clone();
    let mut best_fit = best.fitness_or_min();
    let mut history = vec![best_fit];
    let mut stagnant = 0usize;
    let mut generations = 0usize;

    while generations < policy.max_generations {
        op.step(pop, &mut ctx)?;
        debug_assert_eq!(pop.len(), size, "{} changed the population size", op.name());
        ctx.evaluate_stale(pop)?;
        pop.refresh_best();
        generations += 1;
        pop.generation += 1;

        let candidate = pop.best_member();
        let f = candidate.fitness_or_min();
        if f > best_fit + policy.improvement_epsilon {
            best = candidate.clone();
            best_fit = f;
            stagnant = 0;
        } else {
            if f > best_fit {
                // Below the improvement margin: still keep the better point.
                best = candidate.clone();
                best_fit = f;
            }
            stagnant += 1;
        }
        history.push(best_fit);
        if stagnant >= policy.patience {
            break;
        }
    }

    Ok(EvolveOutcome {
        best,
        evaluations: counter.calls(),
        generations,
        history,
    })
}
