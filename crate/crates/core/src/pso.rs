//! Particle swarm search over flattened gain vectors.
//!
//! Random draws happen sequentially in particle order and cost evaluations
//! are gathered at an iteration barrier, so a run is bit-reproducible for a
//! given seed whether or not evaluations execute in parallel.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwarmConfig {
    pub particles: usize,
    pub max_iterations: usize,
    pub c1: f64,
    pub c2: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Velocity limit; `None` means the width of the search box.
    pub v_max: Option<f64>,
    pub stall_window: usize,
    pub stall_tolerance: f64,
    pub seed: u64,
    /// Draw `r1`, `r2` per dimension instead of once per particle.
    pub per_dimension_draws: bool,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig {
            particles: 24,
            max_iterations: 100,
            c1: 0.5,
            c2: 1.0,
            y_min: -150.0,
            y_max: 150.0,
            v_max: None,
            stall_window: 50,
            stall_tolerance: 1e-6,
            seed: 0,
            per_dimension_draws: false,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.particles == 0 {
            return bad("swarm needs at least one particle");
        }
        if !(self.y_min < self.y_max) || !self.y_min.is_finite() || !self.y_max.is_finite() {
            return bad("search box must satisfy y_min < y_max");
        }
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) {
            return bad("acceleration constants must be nonnegative");
        }
        if let Some(v) = self.v_max {
            if !(v > 0.0 && v.is_finite()) {
                return bad("velocity limit must be positive");
            }
        }
        Ok(())
    }

    pub fn velocity_limit(&self) -> f64 {
        self.v_max.unwrap_or(self.y_max - self.y_min)
    }

    pub fn w_max(&self) -> f64 {
        1.0
    }

    pub fn w_min(&self) -> f64 {
        (self.c1 + self.c2) / 2.0 - 1.0
    }
}

/// `max(w_min, w_max - (w_max - w_min)(l - 1)/l_max)`.
pub fn inertia_weight(l: usize, config: &SwarmConfig) -> f64 {
    let (hi, lo) = (config.w_max(), config.w_min());
    let frac = (l.max(1) - 1) as f64 / config.max_iterations.max(1) as f64;
    (hi - (hi - lo) * frac).max(lo)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub iteration: usize,
    pub particles: Vec<Particle>,
    pub global_best_position: Vec<f64>,
    pub global_best_cost: f64,
    /// One entry per iteration, the initial swarm included.
    pub best_cost_history: Vec<f64>,
    /// Mean over the finite costs of the current positions.
    pub mean_cost_history: Vec<f64>,
    pub infinite_count_history: Vec<usize>,
    stall: usize,
    rng: ChaCha8Rng,
}

fn evaluate<F>(positions: &[&[f64]], cost: &F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let guard = |x: f64| if x.is_nan() { f64::INFINITY } else { x };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        positions.par_iter().map(|p| guard(cost(p))).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        positions.iter().map(|p| guard(cost(p))).collect()
    }
}

fn mean_finite(costs: &[f64]) -> (f64, usize) {
    let finite: Vec<f64> = costs.iter().copied().filter(|c| c.is_finite()).collect();
    let inf = costs.len() - finite.len();
    if finite.is_empty() {
        (f64::INFINITY, inf)
    } else {
        (finite.iter().sum::<f64>() / finite.len() as f64, inf)
    }
}

impl SwarmState {
    /// Every particle starts at `start` with a uniformly random velocity.
    pub fn initialize<F>(config: &SwarmConfig, start: &[f64], cost: &F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        config.validate()?;
        let vmax = config.velocity_limit();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let start: Vec<f64> = start.iter().map(|x| x.clamp(config.y_min, config.y_max)).collect();
        let c0 = evaluate(&[&start], cost)[0];
        if !c0.is_finite() {
            return Err(Error::Infeasible("starting gains have infinite cost".into()));
        }
        let particles: Vec<Particle> = (0..config.particles)
            .map(|_| Particle {
                position: start.clone(),
                velocity: (0..start.len()).map(|_| rng.gen_range(-vmax..=vmax)).collect(),
                best_position: start.clone(),
                best_cost: c0,
            })
            .collect();
        Ok(SwarmState {
            iteration: 0,
            particles,
            global_best_position: start,
            global_best_cost: c0,
            best_cost_history: vec![c0],
            mean_cost_history: vec![c0],
            infinite_count_history: vec![0],
            stall: 0,
            rng,
        })
    }

    /// One synchronous swarm update.
    pub fn step<F>(&mut self, config: &SwarmConfig, cost: &F)
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        self.iteration += 1;
        let w = inertia_weight(self.iteration, config);
        let vmax = config.velocity_limit();
        let gbest = self.global_best_position.clone();
        for p in &mut self.particles {
            let dim = p.position.len();
            let (mut r1, mut r2) = (self.rng.gen::<f64>(), self.rng.gen::<f64>());
            for j in 0..dim {
                if config.per_dimension_draws && j > 0 {
                    r1 = self.rng.gen();
                    r2 = self.rng.gen();
                }
                let y = p.position[j];
                let v = w * p.velocity[j]
                    + config.c1 * r1 * (p.best_position[j] - y)
                    + config.c2 * r2 * (gbest[j] - y);
                let v = v.clamp(-vmax, vmax);
                p.velocity[j] = v;
                p.position[j] = (y + v).clamp(config.y_min, config.y_max);
            }
        }
        let positions: Vec<&[f64]> = self.particles.iter().map(|p| p.position.as_slice()).collect();
        let costs = evaluate(&positions, cost);
        let previous = self.global_best_cost;
        for (p, &c) in self.particles.iter_mut().zip(&costs) {
            if c < p.best_cost {
                p.best_cost = c;
                p.best_position = p.position.clone();
            }
            if p.best_cost < self.global_best_cost {
                self.global_best_cost = p.best_cost;
                self.global_best_position = p.best_position.clone();
            }
        }
        let (mean, inf) = mean_finite(&costs);
        self.best_cost_history.push(self.global_best_cost);
        self.mean_cost_history.push(mean);
        self.infinite_count_history.push(inf);
        if self.iteration > 1 && (previous - self.global_best_cost).abs() <= config.stall_tolerance {
            self.stall += 1;
        } else {
            self.stall = 0;
        }
    }

    /// True once the best cost has stayed within the stall tolerance for
    /// `stall_window` consecutive iterations.
    pub fn stalled(&self, config: &SwarmConfig) -> bool {
        self.stall >= config.stall_window
    }

    /// `iteration,best_cost,mean_cost` rows with 15 significant digits.
    pub fn history_csv(&self) -> String {
        let mut s = String::from("iteration,best_cost,mean_cost\n");
        for (i, (b, m)) in self.best_cost_history.iter().zip(&self.mean_cost_history).enumerate() {
            let _ = writeln!(s, "{i},{},{}", fmt15(*b), fmt15(*m));
        }
        s
    }
}

fn fmt15(x: f64) -> String {
    if x.is_finite() {
        format!("{:.14e}", x)
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmOutcome {
    pub best_position: Vec<f64>,
    pub best_cost: f64,
    pub state: SwarmState,
}

/// Steps until `max_iterations` or the stall rule, starting from `start`.
pub fn run<F>(config: &SwarmConfig, start: &[f64], cost: &F) -> Result<SwarmOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    run_with_observer(config, start, cost, |_| {})
}

/// As [`run`], calling `observe` after every iteration.
pub fn run_with_observer<F, O>(
    config: &SwarmConfig,
    start: &[f64],
    cost: &F,
    mut observe: O,
) -> Result<SwarmOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
    O: FnMut(&SwarmState),
{
    let mut state = SwarmState::initialize(config, start, cost)?;
    observe(&state);
    while state.iteration < config.max_iterations && !state.stalled(config) {
        state.step(config, cost);
        observe(&state);
    }
    if !state.global_best_cost.is_finite() {
        return Err(Error::Infeasible("no stabilizing candidate found".into()));
    }
    Ok(SwarmOutcome {
        best_position: state.global_best_position.clone(),
        best_cost: state.global_best_cost,
        state,
    })
}
