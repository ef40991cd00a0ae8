//! Experiment configuration files.
//!
//! A flat UTF-8 `key = value` format. `#` starts a comment, blank lines are
//! ignored, and keys are dotted (`ppo.gamma = 0.99`). Unknown, duplicate and
//! inapplicable keys are errors. Anything not set keeps its default.
//!
//! ```text
//! env.id = chain          # chain | grid | cartpole_lite
//! env.n = 10
//! env.slip = 0.1
//! tier = high
//! net.low = 16,16
//! ppo.total_env_steps = 409600
//! distill.epochs = 50
//! eval.steps = 50000
//! replay.records = 50000
//! seed = 7
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::distill::DistillConfig;
use crate::envs::{CartPoleParams, EnvSpec};
use crate::error::{Error, Result};
use crate::nn::{CapacityTier, Tier};
use crate::ppo::PpoConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    /// Tier trained by `train-teacher`.
    pub tier: Tier,
    /// Hidden widths for each tier, indexed like [`Tier::ALL`].
    pub widths: [Vec<usize>; 3],
    pub ppo: PpoConfig,
    pub distill: DistillConfig,
    pub eval_steps: u64,
    pub replay_records: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: EnvSpec::chain(10, 0.1),
            tier: Tier::High,
            widths: Tier::ALL.map(Tier::default_widths),
            ppo: PpoConfig::default(),
            distill: DistillConfig::default(),
            eval_steps: 50_000,
            replay_records: 50_000,
            seed: 0,
            output_dir: None,
        }
    }
}

fn tier_index(tier: Tier) -> usize {
    Tier::ALL.iter().position(|t| *t == tier).expect("listed")
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {line_no}: expected `key = value`, got {line:?}"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(Error::Config(format!("line {line_no}: empty key or value")));
            }
            if let Some((first, _)) = map.insert(key.to_string(), (line_no, value.to_string())) {
                return Err(Error::Config(format!(
                    "line {line_no}: duplicate key {key:?} (first set on line {first})"
                )));
            }
        }
        Ok(Self { map })
    }

    fn take_str(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn take<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<()> {
        if let Some((line, v)) = self.map.remove(key) {
            *slot = v
                .parse()
                .map_err(|_| Error::Config(format!("line {line}: cannot parse {key} = {v:?}")))?;
        }
        Ok(())
    }
}

fn parse_widths(line: usize, key: &str, v: &str) -> Result<Vec<usize>> {
    v.split(',')
        .map(|w| w.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Config(format!("line {line}: {key} must be comma-separated widths, got {v:?}")))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut e = Entries::parse(text)?;
        let mut c = Self::default();

        let env_id = e.take_str("env.id").map(|(_, v)| v);
        c.env = match env_id.as_deref().unwrap_or("chain") {
            "chain" => {
                let (mut n, mut slip) = (10usize, 0.1f64);
                e.take("env.n", &mut n)?;
                e.take("env.slip", &mut slip)?;
                EnvSpec::chain(n, slip)
            }
            "grid" => {
                let mut side = 5usize;
                e.take("env.side", &mut side)?;
                EnvSpec::grid(side)
            }
            "cartpole_lite" | "cartpole" => {
                let mut p = CartPoleParams::default();
                e.take("env.gravity", &mut p.gravity)?;
                e.take("env.cart_mass", &mut p.cart_mass)?;
                e.take("env.pole_mass", &mut p.pole_mass)?;
                e.take("env.half_length", &mut p.half_length)?;
                e.take("env.force", &mut p.force)?;
                e.take("env.dt", &mut p.dt)?;
                e.take("env.x_limit", &mut p.x_limit)?;
                e.take("env.theta_limit_deg", &mut p.theta_limit_deg)?;
                e.take("env.max_steps", &mut p.max_steps)?;
                EnvSpec::CartpoleLite(p)
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown env.id {other:?} (expected chain, grid or cartpole_lite)"
                )))
            }
        };

        if let Some((line, v)) = e.take_str("tier") {
            c.tier = v
                .parse()
                .map_err(|err: Error| Error::Config(format!("line {line}: {err}")))?;
        }
        for tier in Tier::ALL {
            let key = format!("net.{tier}");
            if let Some((line, v)) = e.take_str(&key) {
                c.widths[tier_index(tier)] = parse_widths(line, &key, &v)?;
            }
        }

        let p = &mut c.ppo;
        e.take("ppo.gamma", &mut p.gamma)?;
        e.take("ppo.lambda", &mut p.lambda)?;
        e.take("ppo.clip", &mut p.clip)?;
        e.take("ppo.update_epochs", &mut p.update_epochs)?;
        e.take("ppo.minibatch_size", &mut p.minibatch_size)?;
        e.take("ppo.num_actors", &mut p.num_actors)?;
        e.take("ppo.horizon", &mut p.horizon)?;
        e.take("ppo.stepsize", &mut p.stepsize)?;
        e.take("ppo.value_coef", &mut p.value_coef)?;
        e.take("ppo.entropy_coef", &mut p.entropy_coef)?;
        e.take("ppo.total_env_steps", &mut p.total_env_steps)?;

        let d = &mut c.distill;
        e.take("distill.epochs", &mut d.epochs)?;
        e.take("distill.minibatch_size", &mut d.minibatch_size)?;
        e.take("distill.stepsize", &mut d.stepsize)?;
        e.take("distill.temperature", &mut d.temperature)?;
        e.take("distill.prob_floor", &mut d.prob_floor)?;

        e.take("eval.steps", &mut c.eval_steps)?;
        e.take("replay.records", &mut c.replay_records)?;
        e.take("seed", &mut c.seed)?;
        if let Some((_, v)) = e.take_str("output_dir") {
            c.output_dir = Some(PathBuf::from(v));
        }

        if let Some((key, (line, _))) = e.map.into_iter().next() {
            let hint = if key.starts_with("env.") {
                format!(" for env.id = {}", c.env.id())
            } else {
                String::new()
            };
            return Err(Error::Config(format!("line {line}: unknown key {key:?}{hint}")));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.ppo.validate()?;
        self.distill.validate()?;
        for (tier, w) in Tier::ALL.iter().zip(&self.widths) {
            if w.is_empty() || w.contains(&0) {
                return Err(Error::Config(format!("net.{tier} needs positive widths")));
            }
        }
        if self.eval_steps == 0 {
            return Err(Error::Config("eval.steps must be at least 1".into()));
        }
        if self.replay_records == 0 {
            return Err(Error::Config("replay.records must be at least 1".into()));
        }
        if let Some(dir) = &self.output_dir {
            if dir.exists() && !dir.is_dir() {
                return Err(Error::Config(format!("output_dir {} is not a directory", dir.display())));
            }
        }
        Ok(())
    }

    pub fn capacity(&self, tier: Tier) -> CapacityTier {
        CapacityTier {
            tier,
            hidden: self.widths[tier_index(tier)].clone(),
        }
    }

    /// Every setting, one per line in a fixed order. Parsing this text gives
    /// back an equal config.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("env.id", self.env.id().to_string());
        match &self.env {
            EnvSpec::Chain { n, slip } => {
                kv("env.n", n.to_string());
                kv("env.slip", slip.to_string());
            }
            EnvSpec::Grid { side } => kv("env.side", side.to_string()),
            EnvSpec::CartpoleLite(p) => {
                kv("env.gravity", p.gravity.to_string());
                kv("env.cart_mass", p.cart_mass.to_string());
                kv("env.pole_mass", p.pole_mass.to_string());
                kv("env.half_length", p.half_length.to_string());
                kv("env.force", p.force.to_string());
                kv("env.dt", p.dt.to_string());
                kv("env.x_limit", p.x_limit.to_string());
                kv("env.theta_limit_deg", p.theta_limit_deg.to_string());
                kv("env.max_steps", p.max_steps.to_string());
            }
        }
        kv("tier", self.tier.to_string());
        for (tier, w) in Tier::ALL.iter().zip(&self.widths) {
            let w: Vec<String> = w.iter().map(|x| x.to_string()).collect();
            kv(&format!("net.{tier}"), w.join(","));
        }
        let p = &self.ppo;
        kv("ppo.gamma", p.gamma.to_string());
        kv("ppo.lambda", p.lambda.to_string());
        kv("ppo.clip", p.clip.to_string());
        kv("ppo.update_epochs", p.update_epochs.to_string());
        kv("ppo.minibatch_size", p.minibatch_size.to_string());
        kv("ppo.num_actors", p.num_actors.to_string());
        kv("ppo.horizon", p.horizon.to_string());
        kv("ppo.stepsize", p.stepsize.to_string());
        kv("ppo.value_coef", p.value_coef.to_string());
        kv("ppo.entropy_coef", p.entropy_coef.to_string());
        kv("ppo.total_env_steps", p.total_env_steps.to_string());
        let d = &self.distill;
        kv("distill.epochs", d.epochs.to_string());
        kv("distill.minibatch_size", d.minibatch_size.to_string());
        kv("distill.stepsize", d.stepsize.to_string());
        kv("distill.temperature", d.temperature.to_string());
        kv("distill.prob_floor", d.prob_floor.to_string());
        kv("eval.steps", self.eval_steps.to_string());
        kv("replay.records", self.replay_records.to_string());
        kv("seed", self.seed.to_string());
        if let Some(dir) = &self.output_dir {
            kv("output_dir", dir.display().to_string());
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let c = ExperimentConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.ppo.clip, 0.1);
        assert_eq!(c.ppo.num_actors, 16);
        assert_eq!(c.distill.minibatch_size, 32);
        assert_eq!(c.eval_steps, 50_000);
    }

    #[test]
    fn parses_sections_and_comments() {
        let c = ExperimentConfig::parse(
            "env.id = grid  # small\nenv.side = 4\nppo.gamma = 0.9\nnet.low = 8, 8\ntier = low\nseed = 3\n",
        )
        .unwrap();
        assert_eq!(c.env, EnvSpec::grid(4));
        assert_eq!(c.ppo.gamma, 0.9);
        assert_eq!(c.capacity(Tier::Low).hidden, vec![8, 8]);
        assert_eq!(c.tier, Tier::Low);
        assert_eq!(c.seed, 3);
    }

    #[test]
    fn rejects_unknown_duplicate_and_inapplicable_keys() {
        let err = ExperimentConfig::parse("ppo.gamme = 0.9").unwrap_err().to_string();
        assert!(err.contains("ppo.gamme"), "{err}");
        assert!(ExperimentConfig::parse("seed = 1\nseed = 2").is_err());
        let err = ExperimentConfig::parse("env.id = grid\nenv.slip = 0.1").unwrap_err().to_string();
        assert!(err.contains("env.slip"), "{err}");
        assert!(ExperimentConfig::parse("ppo.gamma = fast").is_err());
        assert!(ExperimentConfig::parse("just words").is_err());
        assert!(ExperimentConfig::parse("distill.epochs = 0").is_err());
        assert!(ExperimentConfig::parse("tier = huge").is_err());
    }

    #[test]
    fn canonical_round_trip_and_hash() {
        let c = ExperimentConfig::parse("env.id = cartpole_lite\nppo.stepsize = 0.001\n").unwrap();
        let back = ExperimentConfig::parse(&c.canonical()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.hash().len(), 16);
        assert_ne!(c.hash(), ExperimentConfig::default().hash());
    }
}
