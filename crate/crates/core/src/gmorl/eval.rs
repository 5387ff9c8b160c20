use serde::{Deserialize, Serialize};

use super::agent::Agent;
use crate::error::{Error, Result};
use crate::momdp::{Context, MecEnv, MomdpConfig};
use crate::rng;
use crate::sim::SimConfig;

/// Anything that picks a server for the waiting task.
pub trait Scheduler {
    fn name(&self) -> &str;

    /// Called once before each evaluation episode.
    fn reset(&mut self, _env: &MecEnv) {}

    /// Chosen server for the task currently waiting in `env`; must be a
    /// live action.
    fn select(&mut self, env: &MecEnv) -> Result<usize>;
}

/// Greedy (argmax) use of a trained policy.
#[derive(Debug, Clone)]
pub struct GreedyPolicy<'a> {
    pub agent: &'a Agent,
}

impl Scheduler for GreedyPolicy<'_> {
    fn name(&self) -> &str {
        "gmorl"
    }

    fn select(&mut self, env: &MecEnv) -> Result<usize> {
        self.agent.greedy(&env.observe())
    }
}

/// Mean ground-truth performance over evaluation episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub episodes: usize,
    /// Mean episode total delay (s).
    pub delay_s: f64,
    /// Mean episode total energy (J).
    pub energy_j: f64,
    /// Balanced mean task size of the evaluated system (bits).
    pub mean_task_bits: f64,
}

impl EvalResult {
    pub fn delay_per_mbit(&self) -> f64 {
        self.delay_s / (self.mean_task_bits / 1e6)
    }

    pub fn energy_per_mbit(&self) -> f64 {
        self.energy_j / (self.mean_task_bits / 1e6)
    }
}

/// Runs `episodes` episodes of `context`; episode `k` draws its world from
/// stream `k` of `seed`, so every scheduler sees the same task sequences.
pub fn evaluate(
    scheduler: &mut dyn Scheduler,
    sim: &SimConfig,
    momdp: &MomdpConfig,
    context: &Context,
    episodes: usize,
    seed: u64,
) -> Result<EvalResult> {
    if episodes == 0 {
        return Err(Error::Domain("need at least one evaluation episode".into()));
    }
    let mut delay = 0.0;
    let mut energy = 0.0;
    let mut mean_task_bits = 0.0;
    for k in 0..episodes {
        let mut env = MecEnv::new(sim.clone(), *momdp, context.clone(), rng::stream(seed, k as u64))?;
        mean_task_bits = env.world().mean_task_size();
        scheduler.reset(&env);
        while !env.is_done() {
            let a = scheduler.select(&env)?;
            env.step(a)?;
        }
        let t = env.totals();
        delay += t.delay_s;
        energy += t.energy_j;
    }
    Ok(EvalResult {
        episodes,
        delay_s: delay / episodes as f64,
        energy_j: energy / episodes as f64,
        mean_task_bits,
    })
}

/// Greedy evaluation of a trained agent; errors if the context exceeds the
/// agent's `E_max`.
pub fn evaluate_agent(
    agent: &Agent,
    sim: &SimConfig,
    momdp: &MomdpConfig,
    context: &Context,
    episodes: usize,
    seed: u64,
) -> Result<EvalResult> {
    if context.num_edges > agent.spec().max_edges {
        return Err(Error::Incompatible(format!(
            "context has {} edges, policy supports at most {}",
            context.num_edges,
            agent.spec().max_edges
        )));
    }
    let mut m = *momdp;
    m.encoding = agent.spec().encoding();
    evaluate(&mut GreedyPolicy { agent }, sim, &m, context, episodes, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmorl::TrainerConfig;
    use crate::momdp::{EncodingConfig, Preference};

    struct Fixed(usize);

    impl Scheduler for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }
        fn select(&mut self, _env: &MecEnv) -> Result<usize> {
            Ok(self.0)
        }
    }

    fn setup() -> (SimConfig, MomdpConfig, Context) {
        let sim = SimConfig {
            steps: 20,
            ..SimConfig::default()
        };
        let momdp = MomdpConfig {
            encoding: EncodingConfig::new(3, 30).unwrap(),
            ..MomdpConfig::default()
        };
        let ctx = Context::uniform(Preference::new(0.5, 0.5).unwrap(), 2, 4e9, 2e9).unwrap();
        (sim, momdp, ctx)
    }

    #[test]
    fn random_agent_smoke() {
        let (sim, momdp, ctx) = setup();
        let agent = Agent::new(
            Agent::spec_for(&TrainerConfig::desk(), &momdp.encoding),
            0.05,
            &mut rng::stream(0, 0),
        )
        .unwrap();
        let r = evaluate_agent(&agent, &sim, &momdp, &ctx, 3, 9).unwrap();
        assert!(r.delay_s.is_finite() && r.delay_s > 0.0 && r.energy_j > 0.0);
        let big = Context::uniform(Preference::new(0.5, 0.5).unwrap(), 4, 4e9, 2e9).unwrap();
        assert!(evaluate_agent(&agent, &sim, &momdp, &big, 1, 0).is_err());
    }

    #[test]
    fn totals_come_from_the_simulator() {
        let (sim, momdp, ctx) = setup();
        let r = evaluate(&mut Fixed(1), &sim, &momdp, &ctx, 2, 5).unwrap();
        let mut delay = 0.0;
        let mut energy = 0.0;
        for k in 0..2 {
            let mut env = MecEnv::new(sim.clone(), momdp, ctx.clone(), rng::stream(5, k)).unwrap();
            while !env.is_done() {
                env.step(1).unwrap();
            }
            let truth: f64 = env.world().records().iter().map(|t| t.total_delay().unwrap()).sum();
            delay += truth;
            energy += env.world().records().iter().map(|t| t.total_energy()).sum::<f64>();
        }
        assert!((r.delay_s - delay / 2.0).abs() < 1e-9 * delay);
        assert!((r.energy_j - energy / 2.0).abs() < 1e-12 * energy);
        assert_eq!(r.energy_per_mbit(), r.energy_j / (r.mean_task_bits / 1e6));
    }
}
