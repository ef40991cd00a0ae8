//! Small discrete-action environments with exactly specified dynamics.

mod env;
mod spec;
mod tabular;

pub use env::{cartpole_step, thread_step_count, Env, StepResult, GOAL_REWARD, STEP_PENALTY};
pub use spec::{CartPoleParams, EnvSpec};
pub use tabular::{
    optimal_return, value_iteration, GreedyPolicy, Outcome, TabularModel, ValueSolution,
};
