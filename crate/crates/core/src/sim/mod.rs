//! Ground-truth MEC dynamics: task generation, Rayleigh-faded uplinks,
//! processor-sharing execution and exact per-task delay/energy accounting.

pub mod executor;
pub mod model;
pub mod world;

pub use executor::{Completion, Entry, ExecutorState, TaskId};
pub use model::{
    balanced_mean_size, draw_task_sizes, offload_delay, task_energy, ChannelParams, EnergyModel, TaskEnergy,
};
pub use world::{
    ArrivalMode, Dispatch, EpisodeTotals, PendingTask, ServerKind, ServerSpec, SimConfig, SimWorld, TaskRecord,
    TaskSpec,
};
