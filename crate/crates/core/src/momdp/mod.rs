//! The contextual multi-objective MDP built on top of [`crate::sim`].

pub mod context;
pub mod encode;
pub mod env;
pub mod reward;

pub use context::{preference_grid, Context, ContextSpace, Preference};
pub use encode::{encode_state, feature, EncodedState, EncodingConfig, Histogram, PAD};
pub use env::{DelayReward, MecEnv, MomdpConfig, Step};
pub use reward::{
    delay_reward_estimate, delay_reward_estimate_scaled, delay_reward_oracle, reward_energy, scalarize, RewardScale,
    VectorReward,
};

use rand::Rng;

use crate::error::Result;
use crate::rng;
use crate::sim::SimConfig;

/// Sets `energy / time` to the ratio of mean |r_T| to mean |r_E| observed
/// under a uniformly random policy, keeping `base.time` fixed.
pub fn calibrate_scale(
    sim: &SimConfig,
    cfg: &MomdpConfig,
    space: &ContextSpace,
    episodes: usize,
    seed: u64,
    base: RewardScale,
) -> Result<RewardScale> {
    let mut sum_t = 0.0;
    let mut sum_e = 0.0;
    for ep in 0..episodes {
        let mut r = rng::stream(seed, ep as u64);
        let ctx = space.sample(&mut r, ep % space.preferences.len())?;
        let mut env = MecEnv::new(
            sim.clone(),
            *cfg,
            ctx,
            rng::stream(rng::derive_seed(seed, 1), ep as u64),
        )?;
        while !env.is_done() {
            let a = r.random_range(0..=env.context().num_edges);
            let s = env.step(a)?;
            sum_t += s.reward.time.abs();
            sum_e += s.reward.energy.abs();
        }
    }
    if sum_t == 0.0 || sum_e == 0.0 {
        return Ok(base);
    }
    Ok(RewardScale {
        time: base.time,
        energy: base.time * sum_t / sum_e,
    })
}
