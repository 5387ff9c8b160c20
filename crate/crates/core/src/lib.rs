//! Multi-objective task offloading for mobile edge computing.
//!
//! The crate is organised bottom-up:
//!
//! - [`sim`]: continuous-time processor-sharing simulator (ground truth)
//! - [`momdp`]: contexts, state encoding, vector rewards and the step transition
//! - [`nn`]: masked per-server networks with hand-written reverse mode and Adam
//! - [`gmorl`]: replay buffer, Discrete-SAC objectives and the domain-randomised trainer
//! - [`baselines`]: LinUCB, simulated annealing, random-p and multi-policy schedulers
//! - [`pareto`]: dominance, fronts and exact two-objective hypervolume
//! - [`checks`]: oracle suites shared by the CLI `check` command and the tests

pub mod baselines;
pub mod checks;
pub mod error;
pub mod gmorl;
pub mod momdp;
pub mod nn;
pub mod pareto;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
