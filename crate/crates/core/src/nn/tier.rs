use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::net::Topology;
use crate::error::Error;

/// Network size class. The teacher uses `High`; students use `Medium` or `Low`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    High,
    Medium,
    Low,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::High, Tier::Medium, Tier::Low];

    pub fn default_widths(self) -> Vec<usize> {
        match self {
            Tier::High => vec![64, 64],
            Tier::Medium => vec![32, 32],
            Tier::Low => vec![16, 16],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::High => "high",
            Tier::Medium => "medium",
            Tier::Low => "low",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "high" => Ok(Tier::High),
            "medium" => Ok(Tier::Medium),
            "low" => Ok(Tier::Low),
            other => Err(Error::Config(format!(
                "unknown tier {other:?} (expected high, medium or low)"
            ))),
        }
    }
}

/// A tier together with the hidden widths it resolves to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityTier {
    pub tier: Tier,
    pub hidden: Vec<usize>,
}

impl CapacityTier {
    pub fn default_for(tier: Tier) -> Self {
        Self {
            tier,
            hidden: tier.default_widths(),
        }
    }

    pub fn topology(&self, obs_dim: usize, action_count: usize) -> Topology {
        Topology::new(obs_dim, action_count, &self.hidden)
    }
}
