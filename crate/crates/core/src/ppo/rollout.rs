use crate::envs::{Env, EnvSpec};
use crate::error::{Error, Result};
use crate::nn::{softmax_in_place, ActorCriticNet, Matrix};
use crate::rng::{self, sample_categorical, StreamRng};

/// `num_actors` environments stepped in lock-step, each with its own
/// environment stream and action-sampling stream. Episodes that are still
/// running carry over from one rollout to the next.
#[derive(Debug, Clone)]
pub struct ActorPool {
    envs: Vec<Env>,
    rngs: Vec<StreamRng>,
    obs: Vec<Vec<f64>>,
    running_returns: Vec<f64>,
    finished: Vec<f64>,
}

impl ActorPool {
    pub fn new(spec: &EnvSpec, num_actors: usize, seed: u64) -> Result<Self> {
        let mut envs = Vec::with_capacity(num_actors);
        let mut obs = Vec::with_capacity(num_actors);
        for i in 0..num_actors {
            let mut env = Env::new(spec, seed, i as u64)?;
            obs.push(env.reset());
            envs.push(env);
        }
        Ok(Self {
            envs,
            rngs: (0..num_actors as u64)
                .map(|i| rng::stream(seed, "actor", i))
                .collect(),
            obs,
            running_returns: vec![0.0; num_actors],
            finished: Vec::new(),
        })
    }

    pub fn num_actors(&self) -> usize {
        self.envs.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.envs.first().map_or(0, Env::obs_dim)
    }

    /// Returns of episodes completed since the last call, in completion order.
    pub fn take_finished_returns(&mut self) -> Vec<f64> {
        std::mem::take(&mut self.finished)
    }

    fn current_obs(&self) -> Result<Matrix> {
        Matrix::from_rows(&self.obs)
    }
}

/// On-policy trajectories, indexed `[actor * horizon + t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    pub num_actors: usize,
    pub horizon: usize,
    pub obs_dim: usize,
    /// Row `actor * horizon + t`.
    pub observations: Matrix,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub values: Vec<f64>,
    /// Value estimate of each actor's observation after the last step.
    pub bootstrap_values: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.num_actors * self.horizon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, actor: usize, t: usize) -> usize {
        actor * self.horizon + t
    }
}

/// Steps every actor `horizon` times, sampling actions from the softmax of
/// the policy logits and resetting environments as episodes finish.
pub fn collect_rollout(
    policy: &ActorCriticNet,
    pool: &mut ActorPool,
    horizon: usize,
) -> Result<RolloutBuffer> {
    let actors = pool.num_actors();
    let obs_dim = pool.obs_dim();
    if obs_dim != policy.obs_dim() {
        return Err(Error::Config(format!(
            "environment observations have {obs_dim} entries, policy expects {}",
            policy.obs_dim()
        )));
    }
    let n = actors * horizon;
    let mut observations = Matrix::zeros(n, obs_dim);
    let mut actions = vec![0; n];
    let mut log_probs = vec![0.0; n];
    let mut rewards = vec![0.0; n];
    let mut dones = vec![false; n];
    let mut values = vec![0.0; n];

    for t in 0..horizon {
        let obs = pool.current_obs()?;
        let out = policy.forward(&obs)?;
        for a in 0..actors {
            let idx = a * horizon + t;
            let mut probs = out.logits.row(a).to_vec();
            softmax_in_place(&mut probs);
            let action = sample_categorical(&probs, &mut pool.rngs[a]);
            let step = pool.envs[a]
                .step(action)
                .map_err(|e| Error::Usage(format!("actor {a}: {e}")))?;
            observations.row_mut(idx).copy_from_slice(obs.row(a));
            actions[idx] = action;
            log_probs[idx] = probs[action].ln().min(0.0);
            rewards[idx] = step.reward;
            dones[idx] = step.done;
            values[idx] = out.values[a];
            pool.running_returns[a] += step.reward;
            if step.done {
                pool.finished.push(pool.running_returns[a]);
                pool.running_returns[a] = 0.0;
                pool.obs[a] = pool.envs[a].reset();
            } else {
                pool.obs[a] = step.observation;
            }
        }
    }
    let bootstrap_values = policy.forward(&pool.current_obs()?)?.values;
    Ok(RolloutBuffer {
        num_actors: actors,
        horizon,
        obs_dim,
        observations,
        actions,
        log_probs,
        rewards,
        dones,
        values,
        bootstrap_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Topology;

    fn zero_net(obs: usize, actions: usize) -> ActorCriticNet {
        ActorCriticNet::zeros(Topology::new(obs, actions, &[4])).unwrap()
    }

    #[test]
    fn uniform_policy_samples_evenly() {
        let spec = EnvSpec::chain(10, 0.1);
        let net = zero_net(10, 2);
        let mut pool = ActorPool::new(&spec, 10, 42).unwrap();
        let buf = collect_rollout(&net, &mut pool, 1000).unwrap();
        let right = buf.actions.iter().filter(|&&a| a == 1).count() as f64 / buf.len() as f64;
        assert!((right - 0.5).abs() < 0.02, "right fraction {right}");
        for &lp in &buf.log_probs {
            assert!((lp - 0.5f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn shapes_for_tiny_horizon() {
        let spec = EnvSpec::grid(3);
        let net = zero_net(9, 4);
        let mut pool = ActorPool::new(&spec, 2, 0).unwrap();
        let buf = collect_rollout(&net, &mut pool, 1).unwrap();
        assert_eq!(buf.len(), 2);
        assert_eq!(buf.observations.rows(), 2);
        assert_eq!(buf.bootstrap_values.len(), 2);
    }

    #[test]
    fn same_seed_same_buffer() {
        let spec = EnvSpec::chain(6, 0.2);
        let mut r = rng::stream(1, "init", 0);
        let net = ActorCriticNet::init(Topology::new(6, 2, &[8]), &mut r).unwrap();
        let a = collect_rollout(&net, &mut ActorPool::new(&spec, 4, 9).unwrap(), 64).unwrap();
        let b = collect_rollout(&net, &mut ActorPool::new(&spec, 4, 9).unwrap(), 64).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn episodes_auto_reset_and_are_reported() {
        let spec = EnvSpec::chain(3, 0.0);
        let net = zero_net(3, 2);
        let mut pool = ActorPool::new(&spec, 3, 5).unwrap();
        let buf = collect_rollout(&net, &mut pool, 200).unwrap();
        let done_count = buf.dones.iter().filter(|&&d| d).count();
        let returns = pool.take_finished_returns();
        assert!(done_count > 0);
        assert_eq!(returns.len(), done_count);
        assert!(pool.take_finished_returns().is_empty());
    }
}
