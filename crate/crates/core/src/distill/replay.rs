use serde::{Deserialize, Serialize};

use crate::envs::{Env, EnvSpec};
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::policy::Policy;
use crate::rng::{self, sample_categorical};

/// One teacher decision: what it saw, its full action distribution, and the
/// action it sampled. Stored at `f32`, the precision of the file format.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRecord {
    pub observation: Vec<f32>,
    pub teacher_probs: Vec<f32>,
    pub action: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayMetadata {
    pub teacher_id: String,
    pub env: EnvSpec,
    /// Seconds since the Unix epoch; callers that need reproducible files
    /// pass a fixed value.
    pub collected_at: u64,
    /// Hash of the experiment configuration that produced the teacher.
    #[serde(default)]
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    pub obs_dim: usize,
    pub action_count: usize,
    pub seed: u64,
    pub records: Vec<ReplayRecord>,
    pub metadata: ReplayMetadata,
}

const PROB_SUM_TOLERANCE: f64 = 1e-6;

impl ReplayBuffer {
    pub fn new(obs_dim: usize, action_count: usize, seed: u64, metadata: ReplayMetadata) -> Self {
        Self {
            obs_dim,
            action_count,
            seed,
            records: Vec::new(),
            metadata,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, record: ReplayRecord) -> Result<()> {
        self.check_record(self.records.len(), &record)?;
        self.records.push(record);
        Ok(())
    }

    fn check_record(&self, index: usize, r: &ReplayRecord) -> Result<()> {
        if r.observation.len() != self.obs_dim || r.teacher_probs.len() != self.action_count {
            return Err(Error::Config(format!(
                "record {index} has shape ({}, {}), buffer is ({}, {})",
                r.observation.len(),
                r.teacher_probs.len(),
                self.obs_dim,
                self.action_count
            )));
        }
        if r.observation.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("record {index} has a non-finite observation")));
        }
        if r.teacher_probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::Domain(format!("record {index} has a negative probability")));
        }
        let sum: f64 = r.teacher_probs.iter().map(|&p| f64::from(p)).sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::Domain(format!(
                "record {index} teacher probabilities sum to {sum}"
            )));
        }
        if usize::from(r.action) >= self.action_count {
            return Err(Error::Domain(format!(
                "record {index} action {} outside [0, {})",
                r.action, self.action_count
            )));
        }
        Ok(())
    }

    /// Checks every record and that the buffer is non-empty.
    pub fn validate(&self) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::Config("replay buffer is empty".into()));
        }
        for (i, r) in self.records.iter().enumerate() {
            self.check_record(i, r)?;
        }
        Ok(())
    }

    pub fn observations(&self) -> Matrix {
        let data = self
            .records
            .iter()
            .flat_map(|r| r.observation.iter().map(|&v| f64::from(v)))
            .collect();
        Matrix::from_vec(self.records.len(), self.obs_dim, data).expect("validated shape")
    }

    /// Teacher probabilities widened to `f64` and renormalized per row.
    pub fn teacher_targets(&self) -> Matrix {
        let mut m = Matrix::zeros(self.records.len(), self.action_count);
        for (i, r) in self.records.iter().enumerate() {
            let row = m.row_mut(i);
            for (t, &p) in row.iter_mut().zip(&r.teacher_probs) {
                *t = f64::from(p);
            }
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|t| *t /= sum);
        }
        m
    }
}

/// Phase two: the trained teacher acts in the environment, sampling from its
/// own distribution, and every visited observation is stored together with
/// that distribution and the sampled action.
pub fn collect_replay<P: Policy + ?Sized>(
    teacher: &P,
    spec: &EnvSpec,
    n_records: usize,
    seed: u64,
    teacher_id: &str,
    collected_at: u64,
) -> Result<ReplayBuffer> {
    if n_records == 0 {
        return Err(Error::Config("collect at least one record".into()));
    }
    if teacher.obs_dim() != spec.obs_dim() || teacher.action_count() != spec.action_count() {
        return Err(Error::Config(format!(
            "teacher (obs {}, {} actions) does not fit {}",
            teacher.obs_dim(),
            teacher.action_count(),
            spec.label()
        )));
    }
    let mut buffer = ReplayBuffer::new(
        spec.obs_dim(),
        spec.action_count(),
        seed,
        ReplayMetadata {
            teacher_id: teacher_id.to_string(),
            env: spec.clone(),
            collected_at,
            config_hash: String::new(),
        },
    );
    let mut env = Env::new(spec, seed, 0)?;
    let mut action_rng = rng::stream(seed, "collect-actor", 0);
    let mut obs = env.reset();
    while buffer.len() < n_records {
        let probs = teacher.action_probs(&Matrix::from_vec(1, obs.len(), obs.clone())?)?;
        let probs = probs.row(0);
        let action = sample_categorical(probs, &mut action_rng);
        buffer.push(ReplayRecord {
            observation: obs.iter().map(|&v| v as f32).collect(),
            teacher_probs: probs.iter().map(|&p| p as f32).collect(),
            action: action as u16,
        })?;
        let step = env.step(action)?;
        obs = if step.done { env.reset() } else { step.observation };
    }
    Ok(buffer)
}
