use serde::{Deserialize, Serialize};

use super::context::Context;
use super::encode::{encode_state, EncodedState, EncodingConfig};
use super::reward::{self, RewardScale, VectorReward};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::sim::{EpisodeTotals, SimConfig, SimWorld};

/// Which delay-reward implementation the environment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DelayReward {
    /// Closed form over sorted residuals.
    #[default]
    Estimate,
    /// Event-driven replay of the chosen server.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct MomdpConfig {
    pub encoding: EncodingConfig,
    pub scale: RewardScale,
    pub delay_reward: DelayReward,
}

/// Outcome of one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: EncodedState,
    pub reward: VectorReward,
    /// Scalarised with the context preference and the configured scale.
    pub scalar_reward: f64,
    pub done: bool,
    /// Steps without a waiting task that were skipped before `state` (Poisson mode).
    pub idle_steps: usize,
}

/// One contextual MOMDP episode over a ground-truth world.
#[derive(Debug, Clone)]
pub struct MecEnv {
    world: SimWorld,
    context: Context,
    cfg: MomdpConfig,
}

impl MecEnv {
    pub fn new(sim: SimConfig, cfg: MomdpConfig, context: Context, rng: SimRng) -> Result<Self> {
        if context.num_edges > cfg.encoding.max_edges {
            return Err(Error::Domain(format!(
                "context has {} edges but the encoding supports at most {}",
                context.num_edges, cfg.encoding.max_edges
            )));
        }
        let world = SimWorld::new(sim, &context.freqs_hz, rng)?;
        let mut env = Self { world, context, cfg };
        env.skip_idle();
        Ok(env)
    }

    pub fn world(&self) -> &SimWorld {
        &self.world
    }

    pub fn context(&self) -> &Context {
        &self.context
    }

    pub fn config(&self) -> &MomdpConfig {
        &self.cfg
    }

    pub fn is_done(&self) -> bool {
        self.world.is_finished()
    }

    pub fn observe(&self) -> EncodedState {
        encode_state(&self.world, &self.context, &self.cfg.encoding).expect("validated at construction")
    }

    /// Vector reward of sending the waiting task to `action`, without acting.
    pub fn reward_for(&self, action: usize) -> Result<VectorReward> {
        self.check_action(action)?;
        let task = self
            .world
            .current_task()
            .ok_or_else(|| Error::Logic("no task awaiting a decision".into()))?;
        let size = task.spec.size_bits;
        let rate = task.rates[action];
        let t_off = crate::sim::offload_delay(size, rate)?;
        let freq = self.world.freq(action);
        let eta = self.world.config().cycles_per_bit;
        let exec = self.world.executor(action);
        let time = match self.cfg.delay_reward {
            DelayReward::Estimate => reward::delay_reward_estimate(&exec.sorted_residuals(), size, t_off, freq, eta),
            DelayReward::Oracle => reward::delay_reward_oracle(exec, size, t_off, freq, eta),
        };
        let energy = reward::reward_energy(size, rate, freq, self.world.energy_model());
        Ok(VectorReward { time, energy })
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action > self.context.num_edges {
            return Err(Error::MaskViolation {
                action,
                max_valid: self.context.num_edges,
            });
        }
        Ok(())
    }

    /// Applies `action` to the waiting task and advances one step (plus any
    /// idle steps that follow).
    pub fn step(&mut self, action: usize) -> Result<Step> {
        if self.is_done() {
            return Err(Error::Logic("episode is finished".into()));
        }
        let reward = self.reward_for(action)?;
        self.world.dispatch(action)?;
        self.world.end_step();
        let idle_steps = self.skip_idle();
        let done = self.is_done();
        if done {
            self.world.drain();
        }
        Ok(Step {
            state: self.observe(),
            scalar_reward: reward::scalarize(reward, self.context.preference, self.cfg.scale),
            reward,
            done,
            idle_steps,
        })
    }

    fn skip_idle(&mut self) -> usize {
        let mut idle = 0;
        while !self.world.is_finished() && self.world.current_task().is_none() {
            self.world.end_step();
            idle += 1;
        }
        if self.world.is_finished() {
            self.world.drain();
        }
        idle
    }

    /// Ground-truth totals; complete once the episode is done.
    pub fn totals(&self) -> EpisodeTotals {
        self.world.totals()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::momdp::Preference;
    use crate::rng;
    use crate::sim::ArrivalMode;

    fn env(steps: usize, arrival: ArrivalMode, seed: u64) -> MecEnv {
        let sim = SimConfig {
            steps,
            arrival,
            ..SimConfig::default()
        };
        let ctx = Context::uniform(Preference::new(0.5, 0.5).unwrap(), 2, 4e9, 2e9).unwrap();
        let cfg = MomdpConfig {
            encoding: EncodingConfig::new(3, 30).unwrap(),
            ..MomdpConfig::default()
        };
        MecEnv::new(sim, cfg, ctx, rng::stream(seed, 0)).unwrap()
    }

    #[test]
    fn episode_ends_after_t_steps() {
        let mut e = env(7, ArrivalMode::Synchronous, 1);
        for t in 0..7 {
            let s = e.step(t % 3).unwrap();
            assert_eq!(s.done, t == 6);
        }
        assert!(e.step(0).is_err());
    }

    #[test]
    fn masked_action_is_rejected() {
        let mut e = env(3, ArrivalMode::Synchronous, 1);
        assert!(matches!(
            e.step(3),
            Err(Error::MaskViolation {
                action: 3,
                max_valid: 2
            })
        ));
        assert!(e.step(2).is_ok());
    }

    #[test]
    fn energy_rewards_sum_to_simulated_energy() {
        for seed in 0..5 {
            let mut e = env(30, ArrivalMode::Synchronous, seed);
            let mut sum = 0.0;
            let mut t = 0;
            while !e.is_done() {
                sum += e.step((t * 7 + seed as usize) % 3).unwrap().reward.energy;
                t += 1;
            }
            assert_eq!(sum, -e.totals().energy_j);
        }
    }

    #[test]
    fn delay_rewards_telescope_to_total_delay() {
        for seed in 0..5 {
            let mut e = env(40, ArrivalMode::Synchronous, seed);
            let mut sum = 0.0;
            let mut t = 0;
            while !e.is_done() {
                sum += e.step((t + seed as usize) % 3).unwrap().reward.time;
                t += 1;
            }
            let truth = e.totals();
            assert_eq!(truth.tasks, 40);
            assert!(
                ((sum + truth.delay_s) / truth.delay_s).abs() < 1e-9,
                "{sum} vs {}",
                truth.delay_s
            );
        }
    }

    #[test]
    fn poisson_idle_steps_are_skipped() {
        let mut e = env(50, ArrivalMode::Poisson, 3);
        let mut decisions = 0;
        let mut idle = 0;
        let mut energy = 0.0;
        while !e.is_done() {
            let s = e.step(decisions % 3).unwrap();
            energy += s.reward.energy;
            idle += s.idle_steps;
            decisions += 1;
        }
        assert_eq!(e.world().records().len(), decisions);
        assert!(decisions + idle <= 50);
        assert_eq!(energy, -e.totals().energy_j);
    }
}
