//! Offline reinforcement learning with critic regularized regression.

pub mod error;
pub mod par;
pub mod rng;
pub mod config;
pub mod experiment;
pub mod crr;
pub mod data;
pub mod distributional;
pub mod envs;
pub mod nn;
pub mod tabular;

pub use error::{Error, Result};
