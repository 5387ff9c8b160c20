//! Comparison schedulers: LinUCB, simulated annealing, random-p and
//! per-preference multi-policy training.

pub mod linucb;
pub mod multipolicy;
pub mod random;
pub mod sa;

pub use linucb::{arm_features, train_linucb, ArmState, LinUcb, LinUcbConfig, LinUcbScheduler};
pub use multipolicy::multi_policy_train;
pub use random::{p_grid, RandomPolicy};
pub use sa::{episode_return, sa_search, AssignmentScheduler, SaConfig, SaResult};
