//! Actor distillation for proximal policy optimization.
//!
//! The pipeline has three phases: train a high-capacity teacher with PPO
//! ([`ppo`]), record the teacher's observations and action probabilities into
//! a replay buffer, then fit smaller students to those probabilities with a
//! KL loss, offline ([`distill`]). A distilled student can optionally be
//! fine-tuned with PPO afterwards.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod distill;
pub mod envs;
pub mod error;
pub mod eval;
pub mod nn;
pub mod persistence;
pub mod policy;
pub mod ppo;
pub mod rng;

pub use error::{Error, FormatError, Result};
