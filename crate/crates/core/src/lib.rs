//! Safe linear bandits with round-wise linear constraints: perturbed-estimate
//! (Thompson-style) agents, their pessimistic baseline, and an experiment
//! harness.

pub mod algorithms;
pub mod config;
pub mod error;
pub mod estimator;
pub mod events;
pub mod experiments;
pub mod instance;
pub mod linalg;
pub mod noise;
pub mod optim;
pub mod sim;

pub use error::{Error, Result};
