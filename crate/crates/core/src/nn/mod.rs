//! A small differentiable network stack with hand-written backward passes:
//! residual MLP trunks, a mixture-of-Gaussians policy head, and a
//! categorical policy head for discrete action sets.

pub mod checkpoint;
mod layout;
mod mlp;
pub mod mog;
pub mod policy;

pub use layout::{Layout, LayoutEntry};
pub use mlp::{BlockTape, ResidualMlp, ResidualMlpSpec, Tape, LAYER_NORM_EPS};
pub use mog::{MogHead, MogPolicy, LOG_STD_MAX, LOG_STD_MIN};
pub use policy::{ActionSpace, CategoricalPolicy, DeterministicMode, PolicyHead};
