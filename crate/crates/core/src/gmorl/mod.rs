//! Generalizable multi-objective discrete SAC: replay, losses, the
//! domain-randomised trainer and greedy evaluation.

pub mod agent;
pub mod config;
pub mod eval;
pub mod losses;
pub mod replay;
pub mod train;

pub use crate::momdp::preference_grid;
pub use agent::{Agent, Optimizers};
pub use config::{Problem, TrainerConfig};
pub use eval::{evaluate, evaluate_agent, EvalResult, GreedyPolicy, Scheduler};
pub use replay::{ReplayBuffer, Transition};
pub use train::{
    epoch_means, quartile_means, reward_scale, smooth, train, train_with, EpisodeLog, TrainOutcome, UpdateStats,
};
