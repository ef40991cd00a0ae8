use serde::{Deserialize, Serialize};

use crate::envs::{Env, EnvSpec};
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::policy::Policy;
use crate::rng::{self, sample_categorical};

/// Whole-episode scores from one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub episode_scores: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub high: f64,
    pub episodes: usize,
    pub env_steps_used: u64,
}

impl EvalReport {
    pub fn from_scores(episode_scores: Vec<f64>, env_steps_used: u64) -> Result<Self> {
        if episode_scores.is_empty() {
            return Err(Error::Domain("an evaluation needs at least one episode".into()));
        }
        let n = episode_scores.len() as f64;
        let mean = episode_scores.iter().sum::<f64>() / n;
        let var = episode_scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        let high = episode_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            episodes: episode_scores.len(),
            episode_scores,
            mean,
            std: var.sqrt(),
            high,
            env_steps_used,
        })
    }

    /// Standard error of the mean.
    pub fn standard_error(&self) -> f64 {
        self.std / (self.episodes as f64).sqrt()
    }
}

/// Plays whole episodes, sampling actions from `policy`, until at least
/// `total_steps` environment steps have been taken. The episode running at
/// the cutoff is played to the end and counted.
pub fn evaluate<P: Policy + ?Sized>(
    policy: &P,
    spec: &EnvSpec,
    total_steps: u64,
    seed: u64,
) -> Result<EvalReport> {
    if total_steps == 0 {
        return Err(Error::Domain("evaluation needs total_steps >= 1".into()));
    }
    if policy.obs_dim() != spec.obs_dim() || policy.action_count() != spec.action_count() {
        return Err(Error::Config(format!(
            "policy (obs {}, {} actions) does not fit {} (obs {}, {} actions)",
            policy.obs_dim(),
            policy.action_count(),
            spec.label(),
            spec.obs_dim(),
            spec.action_count()
        )));
    }
    let mut env = Env::new(spec, seed, 0)?;
    let mut action_rng = rng::stream(seed, "eval-actor", 0);
    let mut scores = Vec::new();
    let mut steps = 0u64;
    while steps < total_steps {
        let mut obs = env.reset();
        let mut score = 0.0;
        loop {
            let probs = policy.action_probs(&Matrix::from_vec(1, obs.len(), obs)?)?;
            let action = sample_categorical(probs.row(0), &mut action_rng);
            let step = env.step(action)?;
            steps += 1;
            score += step.reward;
            if step.done {
                break;
            }
            obs = step.observation;
        }
        scores.push(score);
    }
    EvalReport::from_scores(scores, steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{optimal_return, GreedyPolicy};
    use crate::policy::UniformPolicy;

    #[test]
    fn greedy_oracle_scores_optimal_on_deterministic_chain() {
        let spec = EnvSpec::chain(10, 0.0);
        let greedy = GreedyPolicy::for_spec(&spec, 1.0).unwrap();
        let r = evaluate(&greedy, &spec, 1000, 3).unwrap();
        let opt = optimal_return(&spec, 1.0).unwrap();
        assert!((r.mean - opt).abs() < 1e-9);
        assert!(r.std < 1e-12);
        assert!(r.episode_scores.iter().all(|&s| s == r.high));
    }

    #[test]
    fn single_episode_report() {
        let spec = EnvSpec::grid(2);
        let greedy = GreedyPolicy::for_spec(&spec, 1.0).unwrap();
        let r = evaluate(&greedy, &spec, 1, 0).unwrap();
        assert_eq!(r.episodes, 1);
        assert_eq!(r.env_steps_used, 2);
        assert_eq!(r.mean, r.high);
    }

    #[test]
    fn cutoff_episode_is_completed() {
        let spec = EnvSpec::chain(5, 0.0);
        let greedy = GreedyPolicy::for_spec(&spec, 1.0).unwrap();
        // 4 steps per episode: 10 steps need 3 episodes
        let r = evaluate(&greedy, &spec, 10, 0).unwrap();
        assert_eq!(r.episodes, 3);
        assert_eq!(r.env_steps_used, 12);
    }

    #[test]
    fn seeded_and_mean_consistent() {
        let spec = EnvSpec::chain(6, 0.2);
        let u = UniformPolicy {
            obs_dim: 6,
            action_count: 2,
        };
        let a = evaluate(&u, &spec, 2000, 9).unwrap();
        let b = evaluate(&u, &spec, 2000, 9).unwrap();
        assert_eq!(a, b);
        let mean = a.episode_scores.iter().sum::<f64>() / a.episodes as f64;
        assert!((mean - a.mean).abs() < 1e-12);
    }

    #[test]
    fn rejects_zero_budget_and_wrong_policy() {
        let spec = EnvSpec::chain(6, 0.2);
        let u = UniformPolicy {
            obs_dim: 6,
            action_count: 2,
        };
        assert!(evaluate(&u, &spec, 0, 0).is_err());
        let wrong = UniformPolicy {
            obs_dim: 5,
            action_count: 2,
        };
        assert!(matches!(evaluate(&wrong, &spec, 10, 0), Err(Error::Config(_))));
    }
}
