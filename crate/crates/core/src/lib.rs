//! Average-reward reinforcement learning: tabular Differential Q/TD learning
//! and planning, RVI Q-learning, centered variants, exact oracle solvers,
//! benchmark MDPs, evaluation metrics and an experiment harness.

pub mod control;
pub mod envs;
pub mod error;
pub mod harness;
pub mod lfa;
pub mod mdp;
pub mod metrics;
pub mod planning;
pub mod prediction;
pub mod solvers;

pub use error::{Error, Result};
