use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the cart-pole task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartPoleParams {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub half_length: f64,
    pub force: f64,
    pub dt: f64,
    pub x_limit: f64,
    pub theta_limit_deg: f64,
    pub max_steps: usize,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            force: 10.0,
            dt: 0.02,
            x_limit: 2.4,
            theta_limit_deg: 12.0,
            max_steps: 500,
        }
    }
}

/// Which environment to build, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum EnvSpec {
    /// States `0..n`, start at 0, terminal at `n - 1`. Actions: 0 left, 1 right.
    Chain { n: usize, slip: f64 },
    /// `side x side` grid, start (0,0), goal in the far corner.
    /// Actions: 0 up (+y), 1 down (-y), 2 left (-x), 3 right (+x).
    Grid { side: usize },
    CartpoleLite(CartPoleParams),
}

impl EnvSpec {
    pub fn chain(n: usize, slip: f64) -> Self {
        EnvSpec::Chain { n, slip }
    }

    pub fn grid(side: usize) -> Self {
        EnvSpec::Grid { side }
    }

    pub fn cartpole() -> Self {
        EnvSpec::CartpoleLite(CartPoleParams::default())
    }

    /// The environments shipped with default parameters.
    pub fn builtins() -> Vec<EnvSpec> {
        vec![Self::chain(10, 0.1), Self::grid(5), Self::cartpole()]
    }

    pub fn id(&self) -> &'static str {
        match self {
            EnvSpec::Chain { .. } => "chain",
            EnvSpec::Grid { .. } => "grid",
            EnvSpec::CartpoleLite(_) => "cartpole_lite",
        }
    }

    /// Short human-readable label, e.g. `chain(n=10,slip=0.1)`.
    pub fn label(&self) -> String {
        match self {
            EnvSpec::Chain { n, slip } => format!("chain(n={n},slip={slip})"),
            EnvSpec::Grid { side } => format!("grid(side={side})"),
            EnvSpec::CartpoleLite(_) => "cartpole_lite".to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EnvSpec::Chain { n, slip } => {
                if n < 3 {
                    return Err(Error::Config(format!("chain needs n >= 3, got {n}")));
                }
                if !(0.0..1.0).contains(&slip) {
                    return Err(Error::Config(format!("chain slip must be in [0,1), got {slip}")));
                }
            }
            EnvSpec::Grid { side } => {
                if side < 2 {
                    return Err(Error::Config(format!("grid needs side >= 2, got {side}")));
                }
            }
            EnvSpec::CartpoleLite(p) => {
                let positive = [
                    p.gravity,
                    p.cart_mass,
                    p.pole_mass,
                    p.half_length,
                    p.force,
                    p.dt,
                    p.x_limit,
                    p.theta_limit_deg,
                ];
                if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || p.max_steps == 0 {
                    return Err(Error::Config(
                        "cartpole constants must be positive and finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn obs_dim(&self) -> usize {
        match *self {
            EnvSpec::Chain { n, .. } => n,
            EnvSpec::Grid { side } => side * side,
            EnvSpec::CartpoleLite(_) => 4,
        }
    }

    pub fn action_count(&self) -> usize {
        match self {
            EnvSpec::Chain { .. } => 2,
            EnvSpec::Grid { .. } => 4,
            EnvSpec::CartpoleLite(_) => 2,
        }
    }

    /// Maximum episode length.
    pub fn step_cap(&self) -> usize {
        match *self {
            EnvSpec::Chain { n, .. } => 4 * n,
            EnvSpec::Grid { side } => 4 * side * side,
            EnvSpec::CartpoleLite(p) => p.max_steps,
        }
    }

    pub fn is_tabular(&self) -> bool {
        !matches!(self, EnvSpec::CartpoleLite(_))
    }
}
