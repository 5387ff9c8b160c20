use crate::error::Result;
use crate::gmorl::{train, Problem, TrainOutcome, TrainerConfig};
use crate::momdp::{ContextSpace, MomdpConfig, Preference};
use crate::rng::derive_seed;
use crate::sim::SimConfig;

/// One discrete SAC model per preference, each trained on a single fixed
/// system with one environment per epoch.
#[allow(clippy::too_many_arguments)]
pub fn multi_policy_train(
    preferences: &[Preference],
    num_edges: usize,
    cloud_freq_hz: f64,
    edge_freq_hz: f64,
    cfg: &TrainerConfig,
    sim: &SimConfig,
    momdp: &MomdpConfig,
    seed: u64,
) -> Result<Vec<TrainOutcome>> {
    let cfg = TrainerConfig {
        envs_per_epoch: 1,
        ..cfg.clone()
    };
    preferences
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let problem = Problem {
                sim: sim.clone(),
                momdp: *momdp,
                space: ContextSpace::singleton(vec![p], num_edges, cloud_freq_hz, edge_freq_hz),
            };
            train(&cfg, &problem, derive_seed(seed, i as u64))
        })
        .collect()
}
