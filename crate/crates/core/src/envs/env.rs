use std::cell::Cell;

use rand::Rng;

use super::spec::{CartPoleParams, EnvSpec};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

thread_local! {
    static STEPS_ON_THREAD: Cell<u64> = const { Cell::new(0) };
}

/// Number of `Env::step` calls made on the current thread so far.
///
/// Used to check that offline phases never touch an environment.
pub fn thread_step_count() -> u64 {
    STEPS_ON_THREAD.with(Cell::get)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Chain(usize),
    Grid { x: usize, y: usize },
    CartPole([f64; 4]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    NeedsReset,
    Running,
    Done,
}

/// One environment instance with its own random stream.
#[derive(Debug, Clone)]
pub struct Env {
    spec: EnvSpec,
    state: State,
    rng: StreamRng,
    steps: usize,
    phase: Phase,
}

pub const STEP_PENALTY: f64 = -0.01;
pub const GOAL_REWARD: f64 = 1.0;

impl Env {
    /// Instance `index` of a set of environments seeded by `seed`.
    /// Call [`Env::reset`] before the first step.
    pub fn new(spec: &EnvSpec, seed: u64, index: u64) -> Result<Self> {
        spec.validate()?;
        let state = match spec {
            EnvSpec::Chain { .. } => State::Chain(0),
            EnvSpec::Grid { .. } => State::Grid { x: 0, y: 0 },
            EnvSpec::CartpoleLite(_) => State::CartPole([0.0; 4]),
        };
        Ok(Self {
            spec: spec.clone(),
            state,
            rng: rng::stream(seed, "env", index),
            steps: 0,
            phase: Phase::NeedsReset,
        })
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn obs_dim(&self) -> usize {
        self.spec.obs_dim()
    }

    pub fn action_count(&self) -> usize {
        self.spec.action_count()
    }

    /// Steps taken in the current episode.
    pub fn episode_steps(&self) -> usize {
        self.steps
    }

    pub fn reset(&mut self) -> Vec<f64> {
        self.steps = 0;
        self.phase = Phase::Running;
        self.state = match self.state {
            State::Chain(_) => State::Chain(0),
            State::Grid { .. } => State::Grid { x: 0, y: 0 },
            State::CartPole(_) => {
                let mut s = [0.0; 4];
                for v in &mut s {
                    *v = self.rng.gen_range(-0.05..=0.05);
                }
                State::CartPole(s)
            }
        };
        self.observation()
    }

    pub fn observation(&self) -> Vec<f64> {
        match (self.state, &self.spec) {
            (State::Chain(s), EnvSpec::Chain { n, .. }) => one_hot(*n, s),
            (State::Grid { x, y }, EnvSpec::Grid { side }) => one_hot(side * side, x + side * y),
            (State::CartPole(s), _) => s.to_vec(),
            _ => unreachable!("state and spec always agree"),
        }
    }

    pub fn step(&mut self, action: usize) -> Result<StepResult> {
        match self.phase {
            Phase::NeedsReset => {
                return Err(Error::Usage("step called before reset".into()));
            }
            Phase::Done => {
                return Err(Error::Usage("step called after done without reset".into()));
            }
            Phase::Running => {}
        }
        if action >= self.action_count() {
            return Err(Error::Domain(format!(
                "action {action} outside [0, {})",
                self.action_count()
            )));
        }
        STEPS_ON_THREAD.with(|c| c.set(c.get() + 1));
        self.steps += 1;
        let cap_reached = self.steps >= self.spec.step_cap();

        let (reward, terminal) = match (&mut self.state, &self.spec) {
            (State::Chain(s), EnvSpec::Chain { n, slip }) => {
                let mut right = action == 1;
                if *slip > 0.0 && self.rng.gen::<f64>() < *slip {
                    right = !right;
                }
                *s = if right { *s + 1 } else { s.saturating_sub(1) };
                if *s == n - 1 {
                    (STEP_PENALTY + GOAL_REWARD, true)
                } else {
                    (STEP_PENALTY, false)
                }
            }
            (State::Grid { x, y }, EnvSpec::Grid { side }) => {
                let last = side - 1;
                match action {
                    0 => *y = (*y + 1).min(last),
                    1 => *y = y.saturating_sub(1),
                    2 => *x = x.saturating_sub(1),
                    _ => *x = (*x + 1).min(last),
                }
                if *x == last && *y == last {
                    (STEP_PENALTY + GOAL_REWARD, true)
                } else {
                    (STEP_PENALTY, false)
                }
            }
            (State::CartPole(s), EnvSpec::CartpoleLite(p)) => {
                *s = cartpole_step(p, *s, action);
                let theta_limit = p.theta_limit_deg.to_radians();
                let fallen = s[0].abs() > p.x_limit || s[2].abs() > theta_limit;
                (1.0, fallen)
            }
            _ => unreachable!("state and spec always agree"),
        };
        let done = terminal || cap_reached;
        if done {
            self.phase = Phase::Done;
        }
        Ok(StepResult {
            observation: self.observation(),
            reward,
            done,
        })
    }
}

fn one_hot(len: usize, index: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[index] = 1.0;
    v
}

/// One explicit-Euler step of the classic cart-pole equations.
/// State is `(x, x_dot, theta, theta_dot)`; action 1 pushes right.
pub fn cartpole_step(p: &CartPoleParams, state: [f64; 4], action: usize) -> [f64; 4] {
    let [x, x_dot, theta, theta_dot] = state;
    let force = if action == 1 { p.force } else { -p.force };
    let total_mass = p.cart_mass + p.pole_mass;
    let pole_mass_length = p.pole_mass * p.half_length;
    let (sin, cos) = theta.sin_cos();
    let temp = (force + pole_mass_length * theta_dot * theta_dot * sin) / total_mass;
    let theta_acc = (p.gravity * sin - cos * temp)
        / (p.half_length * (4.0 / 3.0 - p.pole_mass * cos * cos / total_mass));
    let x_acc = temp - pole_mass_length * theta_acc * cos / total_mass;
    [
        x + p.dt * x_dot,
        x_dot + p.dt * x_acc,
        theta + p.dt * theta_dot,
        theta_dot + p.dt * theta_acc,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(env: &mut Env, actions: &[usize]) -> Vec<StepResult> {
        actions.iter().map(|&a| env.step(a).unwrap()).collect()
    }

    #[test]
    fn start_observations() {
        let mut chain = Env::new(&EnvSpec::chain(10, 0.1), 0, 0).unwrap();
        assert_eq!(chain.reset(), one_hot(10, 0));
        let mut grid = Env::new(&EnvSpec::grid(5), 0, 0).unwrap();
        assert_eq!(grid.reset(), one_hot(25, 0));
    }

    #[test]
    fn cartpole_reset_is_seeded_and_small() {
        let spec = EnvSpec::cartpole();
        let a = Env::new(&spec, 11, 0).unwrap().reset();
        let b = Env::new(&spec, 11, 0).unwrap().reset();
        let c = Env::new(&spec, 11, 1).unwrap().reset();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|v| v.abs() <= 0.05));
    }

    #[test]
    fn chain_without_slip_reaches_goal_in_two() {
        let mut env = Env::new(&EnvSpec::chain(3, 0.0), 0, 0).unwrap();
        env.reset();
        let r = run(&mut env, &[1, 1]);
        assert!((r[0].reward + 0.01).abs() < 1e-15 && !r[0].done);
        assert!((r[1].reward - 0.99).abs() < 1e-15 && r[1].done);
        assert!(matches!(env.step(1), Err(Error::Usage(_))));
    }

    #[test]
    fn grid_right_then_up() {
        let mut env = Env::new(&EnvSpec::grid(2), 0, 0).unwrap();
        env.reset();
        let r = run(&mut env, &[3, 0]);
        assert!(r[1].done);
        let total: f64 = r.iter().map(|s| s.reward).sum();
        assert!((total - 0.98).abs() < 1e-12);
    }

    #[test]
    fn grid_walls_are_no_ops() {
        let mut env = Env::new(&EnvSpec::grid(3), 0, 0).unwrap();
        env.reset();
        let r = env.step(2).unwrap();
        assert_eq!(r.observation, one_hot(9, 0));
        let r = env.step(1).unwrap();
        assert_eq!(r.observation, one_hot(9, 0));
    }

    #[test]
    fn chain_left_is_clamped() {
        let mut env = Env::new(&EnvSpec::chain(5, 0.0), 0, 0).unwrap();
        env.reset();
        assert_eq!(env.step(0).unwrap().observation, one_hot(5, 0));
    }

    #[test]
    fn episode_cap_ends_the_episode() {
        let mut env = Env::new(&EnvSpec::chain(4, 0.0), 0, 0).unwrap();
        env.reset();
        for t in 1..=16 {
            let r = env.step(0).unwrap();
            assert_eq!(r.done, t == 16);
        }
    }

    #[test]
    fn invalid_action_and_unreset_env() {
        let mut env = Env::new(&EnvSpec::chain(4, 0.0), 0, 0).unwrap();
        assert!(matches!(env.step(0), Err(Error::Usage(_))));
        env.reset();
        assert!(matches!(env.step(2), Err(Error::Domain(_))));
    }

    #[test]
    fn cartpole_euler_step_matches_scalar_oracle() {
        // Written out independently from the classic control equations.
        let g = 9.8;
        let mc = 1.0;
        let mp = 0.1;
        let l = 0.5;
        let f = 10.0;
        let tau = 0.02;
        let (x, xd, th, thd) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let tmp = (f + mp * l * thd * thd * th.sin()) / (mc + mp);
        let thacc = (g * th.sin() - th.cos() * tmp)
            / (l * (4.0 / 3.0 - mp * th.cos() * th.cos() / (mc + mp)));
        let xacc = tmp - mp * l * thacc * th.cos() / (mc + mp);
        let expected = [x + tau * xd, xd + tau * xacc, th + tau * thd, thd + tau * thacc];

        let got = cartpole_step(&CartPoleParams::default(), [0.0; 4], 1);
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        // pushing right tips the pole left
        assert!(got[3] < 0.0);
        assert!((got[3] - tau * thacc).abs() < 1e-12);
    }

    #[test]
    fn cartpole_falls_and_terminates() {
        let mut env = Env::new(&EnvSpec::cartpole(), 3, 0).unwrap();
        env.reset();
        let mut steps = 0;
        loop {
            steps += 1;
            let r = env.step(1).unwrap();
            assert_eq!(r.reward, 1.0);
            if r.done {
                break;
            }
        }
        assert!(steps < 100, "always pushing right should fail fast, took {steps}");
    }

    #[test]
    fn step_counter_counts_this_thread() {
        let before = thread_step_count();
        let mut env = Env::new(&EnvSpec::chain(5, 0.0), 0, 0).unwrap();
        env.reset();
        env.step(1).unwrap();
        env.step(1).unwrap();
        assert_eq!(thread_step_count() - before, 2);
    }
}
