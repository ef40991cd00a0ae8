//! Exact models of the tabular environments and a value-iteration solver
//! that serves as the ground-truth yardstick for trained policies.

use super::env::{GOAL_REWARD, STEP_PENALTY};
use super::spec::EnvSpec;
use crate::error::{Error, Result};
use crate::nn::{argmax, Matrix};
use crate::policy::{check_obs, Policy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub next: usize,
    pub prob: f64,
    pub reward: f64,
}

/// `transitions[s][a]` lists the outcomes of action `a` in state `s`.
/// Terminal states have no outcomes and value zero.
#[derive(Debug, Clone)]
pub struct TabularModel {
    pub n_states: usize,
    pub n_actions: usize,
    pub start: usize,
    pub terminal: Vec<bool>,
    pub transitions: Vec<Vec<Vec<Outcome>>>,
}

impl TabularModel {
    pub fn from_spec(spec: &EnvSpec) -> Result<Self> {
        spec.validate()?;
        match *spec {
            EnvSpec::Chain { n, slip } => Ok(chain_model(n, slip)),
            EnvSpec::Grid { side } => Ok(grid_model(side)),
            EnvSpec::CartpoleLite(_) => Err(Error::Unsupported(
                "cartpole_lite has a continuous state space; no tabular model".into(),
            )),
        }
    }
}

fn reward_for(next: usize, goal: usize) -> f64 {
    if next == goal {
        STEP_PENALTY + GOAL_REWARD
    } else {
        STEP_PENALTY
    }
}

fn chain_model(n: usize, slip: f64) -> TabularModel {
    let goal = n - 1;
    let mut transitions = vec![vec![Vec::new(); 2]; n];
    for (s, actions) in transitions.iter_mut().enumerate().take(goal) {
        let left = s.saturating_sub(1);
        let right = s + 1;
        for (a, outs) in actions.iter_mut().enumerate() {
            let (intended, inverted) = if a == 1 { (right, left) } else { (left, right) };
            outs.push(Outcome {
                next: intended,
                prob: 1.0 - slip,
                reward: reward_for(intended, goal),
            });
            if slip > 0.0 {
                outs.push(Outcome {
                    next: inverted,
                    prob: slip,
                    reward: reward_for(inverted, goal),
                });
            }
        }
    }
    let mut terminal = vec![false; n];
    terminal[goal] = true;
    TabularModel {
        n_states: n,
        n_actions: 2,
        start: 0,
        terminal,
        transitions,
    }
}

fn grid_model(side: usize) -> TabularModel {
    let n = side * side;
    let goal = n - 1;
    let last = side - 1;
    let mut transitions = vec![vec![Vec::new(); 4]; n];
    for (s, actions) in transitions.iter_mut().enumerate() {
        if s == goal {
            continue;
        }
        let (x, y) = (s % side, s / side);
        for (a, outs) in actions.iter_mut().enumerate() {
            let (nx, ny) = match a {
                0 => (x, (y + 1).min(last)),
                1 => (x, y.saturating_sub(1)),
                2 => (x.saturating_sub(1), y),
                _ => ((x + 1).min(last), y),
            };
            let next = nx + side * ny;
            outs.push(Outcome {
                next,
                prob: 1.0,
                reward: reward_for(next, goal),
            });
        }
    }
    let mut terminal = vec![false; n];
    terminal[goal] = true;
    TabularModel {
        n_states: n,
        n_actions: 4,
        start: 0,
        terminal,
        transitions,
    }
}

#[derive(Debug, Clone)]
pub struct ValueSolution {
    pub values: Vec<f64>,
    /// `q[s][a]`
    pub q: Vec<Vec<f64>>,
    pub iterations: usize,
    pub residual: f64,
}

const MAX_SWEEPS: usize = 1_000_000;

/// Synchronous value iteration until the sup-norm change drops below `tolerance`.
pub fn value_iteration(model: &TabularModel, gamma: f64, tolerance: f64) -> Result<ValueSolution> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Domain(format!("gamma must be in (0,1], got {gamma}")));
    }
    let backup = |values: &[f64], s: usize, a: usize| -> f64 {
        model.transitions[s][a]
            .iter()
            .map(|o| {
                let cont = if model.terminal[o.next] { 0.0 } else { values[o.next] };
                o.prob * (o.reward + gamma * cont)
            })
            .sum()
    };
    let mut values = vec![0.0; model.n_states];
    for sweep in 1..=MAX_SWEEPS {
        let mut residual: f64 = 0.0;
        let next: Vec<f64> = (0..model.n_states)
            .map(|s| {
                if model.terminal[s] {
                    return 0.0;
                }
                let best = (0..model.n_actions)
                    .map(|a| backup(&values, s, a))
                    .fold(f64::NEG_INFINITY, f64::max);
                residual = residual.max((best - values[s]).abs());
                best
            })
            .collect();
        values = next;
        if residual < tolerance {
            let q = (0..model.n_states)
                .map(|s| (0..model.n_actions).map(|a| backup(&values, s, a)).collect())
                .collect();
            return Ok(ValueSolution {
                values,
                q,
                iterations: sweep,
                residual,
            });
        }
    }
    Err(Error::Numeric(format!(
        "value iteration did not converge in {MAX_SWEEPS} sweeps"
    )))
}

/// Expected discounted return of the optimal policy from the start state.
pub fn optimal_return(spec: &EnvSpec, gamma: f64) -> Result<f64> {
    let model = TabularModel::from_spec(spec)?;
    let solution = value_iteration(&model, gamma, 1e-10)?;
    Ok(solution.values[model.start])
}

/// Deterministic policy acting greedily on a Q-table, reading the state from
/// a one-hot observation.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    actions: Vec<usize>,
    n_actions: usize,
}

impl GreedyPolicy {
    pub fn new(solution: &ValueSolution) -> Self {
        let n_actions = solution.q.first().map_or(0, Vec::len);
        Self {
            actions: solution.q.iter().map(|row| argmax(row)).collect(),
            n_actions,
        }
    }

    pub fn for_spec(spec: &EnvSpec, gamma: f64) -> Result<Self> {
        let model = TabularModel::from_spec(spec)?;
        Ok(Self::new(&value_iteration(&model, gamma, 1e-10)?))
    }

    pub fn action(&self, state: usize) -> usize {
        self.actions[state]
    }
}

impl Policy for GreedyPolicy {
    fn obs_dim(&self) -> usize {
        self.actions.len()
    }

    fn action_count(&self) -> usize {
        self.n_actions
    }

    fn action_probs(&self, obs: &Matrix) -> Result<Matrix> {
        check_obs(self, obs)?;
        let mut out = Matrix::zeros(obs.rows(), self.n_actions);
        for r in 0..obs.rows() {
            let state = argmax(obs.row(r));
            out.row_mut(r)[self.actions[state]] = 1.0;
        }
        Ok(out)
    }
}
