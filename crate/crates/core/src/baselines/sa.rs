//! Simulated annealing over open-loop step-to-server assignments.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmorl::Scheduler;
use crate::momdp::{Context, MecEnv, MomdpConfig};
use crate::rng::{self, derive_seed};
use crate::sim::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaConfig {
    /// Simulated episodes, counting temperature calibration.
    pub budget: usize,
    /// Random assignments used to set the initial temperature.
    pub calibration_samples: usize,
    pub cooling: f64,
    /// Overrides the calibrated initial temperature when set.
    pub initial_temperature: Option<f64>,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            budget: 10_000,
            calibration_samples: 20,
            cooling: 0.995,
            initial_temperature: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaResult {
    /// Server for the task of each step.
    pub assignment: Vec<usize>,
    /// Scalarised return of `assignment` on the search episode.
    pub best_return: f64,
    /// Best-ever return after each evaluated candidate of the chain.
    pub history: Vec<f64>,
    pub episodes_used: usize,
}

/// Plays a fixed assignment, indexed by the simulator step.
#[derive(Debug, Clone)]
pub struct AssignmentScheduler {
    pub assignment: Vec<usize>,
}

impl Scheduler for AssignmentScheduler {
    fn name(&self) -> &str {
        "sa"
    }

    fn select(&mut self, env: &MecEnv) -> Result<usize> {
        let t = env.world().step_index();
        let a = *self
            .assignment
            .get(t)
            .ok_or_else(|| Error::Logic(format!("assignment has no entry for step {t}")))?;
        Ok(a.min(env.context().num_edges))
    }
}

/// Scalarised return of an assignment on the episode drawn from `world_seed`.
pub fn episode_return(
    sim: &SimConfig,
    momdp: &MomdpConfig,
    context: &Context,
    assignment: &[usize],
    world_seed: u64,
) -> Result<f64> {
    let mut env = MecEnv::new(sim.clone(), *momdp, context.clone(), rng::stream(world_seed, 0))?;
    let mut sched = AssignmentScheduler {
        assignment: assignment.to_vec(),
    };
    let mut ret = 0.0;
    while !env.is_done() {
        let a = sched.select(&env)?;
        ret += env.step(a)?.scalar_reward;
    }
    Ok(ret)
}

/// Searches a per-step assignment for `context` (whose preference sets the
/// scalarisation). Every candidate is scored on the same search episode,
/// so comparisons are free of sampling noise. Single-coordinate mutations
/// are accepted when better, otherwise with probability `exp(-delta/temp)`;
/// the temperature decays geometrically.
pub fn sa_search(
    sim: &SimConfig,
    momdp: &MomdpConfig,
    context: &Context,
    cfg: &SaConfig,
    seed: u64,
) -> Result<SaResult> {
    if cfg.budget == 0 {
        return Err(Error::Domain("SA budget must be at least one episode".into()));
    }
    let world_seed = derive_seed(seed, 1);
    let mut rng = rng::stream(derive_seed(seed, 2), 0);
    let steps = sim.steps;
    let live = context.num_edges + 1;
    let random_assignment = |rng: &mut rng::SimRng| (0..steps).map(|_| rng.random_range(0..live)).collect::<Vec<_>>();

    let mut current = random_assignment(&mut rng);
    let mut current_cost = -episode_return(sim, momdp, context, &current, world_seed)?;
    let mut used = 1;
    let mut best = current.clone();
    let mut best_cost = current_cost;
    let mut history = vec![-best_cost];

    let mut temp = match cfg.initial_temperature {
        Some(t) => t,
        None => {
            let n = cfg.calibration_samples.min(cfg.budget - used);
            let mut costs = Vec::with_capacity(n);
            for _ in 0..n {
                let a = random_assignment(&mut rng);
                costs.push(-episode_return(sim, momdp, context, &a, world_seed)?);
            }
            used += n;
            std_dev(&costs)
        }
    };

    while used < cfg.budget {
        let mut cand = current.clone();
        if live > 1 && steps > 0 {
            let t = rng.random_range(0..steps);
            // a different server for one step
            let shift = rng.random_range(1..live);
            cand[t] = (cand[t] + shift) % live;
        }
        let cost = -episode_return(sim, momdp, context, &cand, world_seed)?;
        used += 1;
        let delta = cost - current_cost;
        let accept = delta <= 0.0 || (temp > 0.0 && rng.random::<f64>() < (-delta / temp).exp());
        if accept {
            current = cand;
            current_cost = cost;
            if cost < best_cost {
                best = current.clone();
                best_cost = cost;
            }
        }
        history.push(-best_cost);
        temp *= cfg.cooling;
    }
    Ok(SaResult {
        assignment: best,
        best_return: -best_cost,
        history,
        episodes_used: used,
    })
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}
