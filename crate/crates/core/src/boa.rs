//! Butterfly optimization (BOA) and its crossover variant (xBOA).
//!
//! Each butterfly emits a fragrance `c * I^a` derived from its fitness. A
//! global move pulls it toward the incumbent best, a local move steps along
//! the difference of two random partners. xBOA replaces the global move with
//! single-point crossover and accepts local moves unconditionally.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::optimizer::{GenerationContext, GenerationOperator, Population};
use crate::rng::RngStream;

/// Fragrance-model and switching parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoaParams {
    pub sensor_modality: f64,
    pub power_exponent: f64,
    /// Global-move probability for BOA, crossover probability for xBOA.
    pub switch_probability: f64,
    /// Iteration budget used by the sensor-modality schedule.
    pub max_iterations: usize,
}

/// xBOA shares BOA's parameters; `switch_probability` acts as the crossover
/// probability.
pub type XboaParams = BoaParams;

impl BoaParams {
    /// Tuned BOA values for a population of 20.
    pub const BOA_POP20: BoaParams = BoaParams {
        sensor_modality: 0.602,
        power_exponent: 0.547,
        switch_probability: 0.395,
        max_iterations: 30,
    };
    /// Tuned BOA values for a population of 5.
    pub const BOA_POP5: BoaParams = BoaParams {
        sensor_modality: 0.577,
        power_exponent: 0.73,
        switch_probability: 0.331,
        max_iterations: 30,
    };
    /// Tuned xBOA values for a population of 20.
    pub const XBOA_POP20: BoaParams = BoaParams {
        sensor_modality: 0.257,
        power_exponent: 0.905,
        switch_probability: 0.593,
        max_iterations: 30,
    };
    /// Tuned xBOA values for a population of 5.
    pub const XBOA_POP5: BoaParams = BoaParams {
        sensor_modality: 0.518,
        power_exponent: 0.994,
        switch_probability: 0.583,
        max_iterations: 30,
    };

    /// Tuned BOA defaults for the nearest tabulated population size.
    pub fn boa_for_population(size: usize) -> Self {
        if size <= 12 {
            Self::BOA_POP5
        } else {
            Self::BOA_POP20
        }
    }

    /// Tuned xBOA defaults for the nearest tabulated population size.
    pub fn xboa_for_population(size: usize) -> Self {
        if size <= 12 {
            Self::XBOA_POP5
        } else {
            Self::XBOA_POP20
        }
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sensor_modality > 0.0 && self.sensor_modality.is_finite()) {
            return Err(invalid(format!("sensor modality {} must be > 0", self.sensor_modality)));
        }
        if !(0.0..=1.0).contains(&self.power_exponent) {
            return Err(invalid(format!("power exponent {} outside [0, 1]", self.power_exponent)));
        }
        if !(0.0..=1.0).contains(&self.switch_probability) {
            return Err(invalid(format!(
                "switch probability {} outside [0, 1]",
                self.switch_probability
            )));
        }
        if self.max_iterations < 1 {
            return Err(invalid("max_iterations must be >= 1"));
        }
        Ok(())
    }
}

/// `c * I^a`.
pub fn fragrance(intensity: f64, c: f64, a: f64) -> Result<f64> {
    if !(intensity >= 0.0) {
        return Err(invalid(format!("intensity {intensity} must be >= 0")));
    }
    Ok(c * intensity.powf(a))
}

/// Move toward the best butterfly: `x + (r^2 * g - x) * f`.
pub fn global_move(x: &[f64], g_star: &[f64], f: f64, r: f64) -> Vec<f64> {
    debug_assert_eq!(x.len(), g_star.len());
    let r2 = r * r;
    x.iter().zip(g_star).map(|(&xi, &gi)| xi + (r2 * gi - xi) * f).collect()
}

/// Random walk between two partners: `x + (r^2 * x_j - x_k) * f`.
pub fn local_move(x: &[f64], x_j: &[f64], x_k: &[f64], f: f64, r: f64) -> Vec<f64> {
    debug_assert!(x.len() == x_j.len() && x.len() == x_k.len());
    let r2 = r * r;
    x.iter()
        .zip(x_j.iter().zip(x_k))
        .map(|(&xi, (&xj, &xk))| xi + (r2 * xj - xk) * f)
        .collect()
}

/// Sensor-modality schedule: `c + 0.025 / (c * max_iterations)`.
pub fn update_sensor_modality(c: f64, max_iterations: usize) -> Result<f64> {
    if !(c > 0.0) {
        return Err(invalid(format!("sensor modality {c} must be > 0")));
    }
    if max_iterations < 1 {
        return Err(invalid("max_iterations must be >= 1"));
    }
    Ok(c + 0.025 / (c * max_iterations as f64))
}

/// Cuts both parents after `cut` genes and swaps the tails.
pub fn single_point_crossover(a: &[f64], b: &[f64], cut: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != b.len() {
        return Err(invalid("parents differ in length"));
    }
    let len = a.len();
    if len < 2 {
        return Err(invalid("parents need at least 2 genes"));
    }
    if cut == 0 || cut >= len {
        return Err(invalid(format!("cut {cut} outside [1, {}]", len - 1)));
    }
    let child1 = a[..cut].iter().chain(&b[cut..]).copied().collect();
    let child2 = b[..cut].iter().chain(&a[cut..]).copied().collect();
    Ok((child1, child2))
}

/// Non-negative intensities for the fragrance model.
///
/// Non-negative fitness is used as is; if any member is negative the whole
/// population is shifted so the minimum becomes zero.
pub(crate) fn intensities(pop: &Population) -> Vec<f64> {
    let min = pop
        .members
        .iter()
        .map(|m| m.fitness_or_min())
        .fold(f64::INFINITY, f64::min);
    let shift = if min < 0.0 { -min } else { 0.0 };
    pop.members.iter().map(|m| m.fitness_or_min() + shift).collect()
}

fn assign_fragrance(pop: &mut Population, c: f64, a: f64) -> Result<()> {
    let intensity = intensities(pop);
    for (m, i) in pop.members.iter_mut().zip(intensity) {
        m.fragrance = fragrance(i, c, a)?;
    }
    Ok(())
}

/// Two distinct partner indices, both different from `i`.
fn pick_partners(rng: &mut RngStream, n: usize, i: usize) -> (usize, usize) {
    let picked = index::sample(rng, n - 1, 2);
    let shift = |k: usize| if k >= i { k + 1 } else { k };
    (shift(picked.index(0)), shift(picked.index(1)))
}

fn pick_partner(rng: &mut RngStream, n: usize, i: usize) -> usize {
    let k = rng.random_range(0..n - 1);
    if k >= i {
        k + 1
    } else {
        k
    }
}

/// One BOA generation per iteration, with greedy replacement.
#[derive(Clone, Debug)]
pub struct Boa {
    params: BoaParams,
    c: f64,
}

impl Boa {
    pub fn new(params: BoaParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            c: params.sensor_modality,
            params,
        })
    }

    /// Current sensor modality.
    pub fn sensor_modality(&self) -> f64 {
        self.c
    }
}

impl GenerationOperator for Boa {
    fn name(&self) -> &'static str {
        "boa"
    }

    fn step(&mut self, pop: &mut Population, ctx: &mut GenerationContext<'_>) -> Result<()> {
        let n = pop.len();
        if n < 3 {
            return Err(invalid(format!("BOA needs at least 3 butterflies, got {n}")));
        }
        ctx.evaluate_stale(pop)?;
        assign_fragrance(pop, self.c, self.params.power_exponent)?;
        pop.refresh_best();
        let g_star = pop.best_member().genes.clone();

        let mut candidates = Vec::with_capacity(n);
        for i in 0..n {
            let r: f64 = ctx.rng.random();
            let x = &pop.members[i];
            let mut cand = if r < self.params.switch_probability {
                global_move(&x.genes, &g_star, x.fragrance, r)
            } else {
                let (j, k) = pick_partners(ctx.rng, n, i);
                local_move(&x.genes, &pop.members[j].genes, &pop.members[k].genes, x.fragrance, r)
            };
            ctx.bounds.clamp_all(&mut cand);
            candidates.push(cand);
        }

        let fits = ctx.evaluate_batch(&candidates)?;
        for ((m, cand), f) in pop.members.iter_mut().zip(candidates).zip(fits) {
            if f > m.fitness_or_min() {
                m.genes = cand;
                m.fitness = Some(f);
            }
        }
        self.c = update_sensor_modality(self.c, self.params.max_iterations)?;
        Ok(())
    }
}

/// Crossover BOA.
#[derive(Clone, Debug)]
pub struct Xboa {
    params: XboaParams,
    c: f64,
}

impl Xboa {
    pub fn new(params: XboaParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            c: params.sensor_modality,
            params,
        })
    }

    pub fn sensor_modality(&self) -> f64 {
        self.c
    }
}

enum Plan {
    /// Indices of the two children in the candidate batch.
    Crossover(usize, usize),
    /// Index of the moved vector in the candidate batch.
    Local(usize),
}

impl GenerationOperator for Xboa {
    fn name(&self) -> &'static str {
        "xboa"
    }

    fn step(&mut self, pop: &mut Population, ctx: &mut GenerationContext<'_>) -> Result<()> {
        let n = pop.len();
        if n < 3 {
            return Err(invalid(format!("xBOA needs at least 3 butterflies, got {n}")));
        }
        let len = pop.members[0].genes.len();
        ctx.evaluate_stale(pop)?;
        assign_fragrance(pop, self.c, self.params.power_exponent)?;
        pop.refresh_best();

        let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(2 * n);
        let mut plans = Vec::with_capacity(n);
        for i in 0..n {
            let r: f64 = ctx.rng.random();
            let x = &pop.members[i];
            if r < self.params.switch_probability && len >= 2 {
                let j = pick_partner(ctx.rng, n, i);
                let cut = ctx.rng.random_range(1..len);
                let (c1, c2) = single_point_crossover(&x.genes, &pop.members[j].genes, cut)?;
                plans.push(Plan::Crossover(candidates.len(), candidates.len() + 1));
                candidates.push(c1);
                candidates.push(c2);
            } else {
                let (j, k) = pick_partners(ctx.rng, n, i);
                let mut cand = local_move(&x.genes, &pop.members[j].genes, &pop.members[k].genes, x.fragrance, r);
                ctx.bounds.clamp_all(&mut cand);
                plans.push(Plan::Local(candidates.len()));
                candidates.push(cand);
            }
        }

        let fits = ctx.evaluate_batch(&candidates)?;
        for (m, plan) in pop.members.iter_mut().zip(plans) {
            match plan {
                Plan::Crossover(a, b) => {
                    // Lower index wins a tie between the two children.
                    let pick = if fits[b] > fits[a] { b } else { a };
                    if fits[pick] > m.fitness_or_min() {
                        m.genes = candidates[pick].clone();
                        m.fitness = Some(fits[pick]);
                    }
                }
                Plan::Local(k) => {
                    m.genes = candidates[k].clone();
                    m.fitness = Some(fits[k]);
                }
            }
        }
        self.c = update_sensor_modality(self.c, self.params.max_iterations)?;
        Ok(())
    }
}
