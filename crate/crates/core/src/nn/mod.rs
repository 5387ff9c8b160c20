//! Minimal differentiable networks for the masked actor and critics.

pub mod adam;
pub mod checkpoint;
pub mod network;
pub mod params;
pub mod spec;

pub use adam::Adam;
pub use checkpoint::Checkpoint;
pub use network::{masked_argmax, masked_softmax, pad_q, ForwardTrace, MaskedSoftmax, Network, MASKED_Q};
pub use params::{soft_update, NamedSlice, ParamSet};
pub use spec::{Activation, NetworkSpec};
