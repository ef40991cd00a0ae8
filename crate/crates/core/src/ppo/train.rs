use std::collections::VecDeque;

use rand::seq::SliceRandom;

use super::config::PpoConfig;
use super::gae::{compute_gae, normalize_advantages, AdvantageEstimates};
use super::loss::{ppo_loss_and_grad_with, CriticGradient, LossCoefficients, PpoBatch, PpoLossStats};
use super::rollout::{collect_rollout, ActorPool, RolloutBuffer};
use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::nn::{ActorCriticNet, AdamState, CapacityTier, Matrix};
use crate::rng::{self, StreamRng};

/// Episodes averaged into each learning-curve point.
pub const CURVE_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub env_steps: u64,
    /// Mean undiscounted return over the trailing window of finished
    /// episodes; NaN until the first episode finishes.
    pub mean_return: f64,
    pub std_return: f64,
    /// Episodes in the window.
    pub episodes: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: ActorCriticNet,
    pub curve: Vec<CurvePoint>,
    pub env_steps: u64,
}

/// Runs `update_epochs` passes of shuffled minibatches over one rollout.
/// Advantages are normalized over the whole rollout first.
pub fn ppo_update(
    net: &mut ActorCriticNet,
    adam: &mut AdamState,
    buffer: &RolloutBuffer,
    estimates: &AdvantageEstimates,
    config: &PpoConfig,
    critic: CriticGradient,
    shuffle_rng: &mut StreamRng,
) -> Result<PpoLossStats> {
    let n = buffer.len();
    if config.minibatch_size == 0 || !n.is_multiple_of(config.minibatch_size) {
        return Err(Error::Config(format!(
            "rollout of {n} transitions is not divisible into minibatches of {}",
            config.minibatch_size
        )));
    }
    let advantages = normalize_advantages(estimates.advantages.as_slice());
    let returns = estimates.returns.as_slice();
    let coefs = LossCoefficients {
        clip: config.clip,
        value_coef: config.value_coef,
        entropy_coef: config.entropy_coef,
    };
    let mut order: Vec<usize> = (0..n).collect();
    let mut sum = PpoLossStats::default();
    let mut batches = 0usize;
    for _ in 0..config.update_epochs {
        order.shuffle(shuffle_rng);
        for chunk in order.chunks(config.minibatch_size) {
            let mut obs = Matrix::zeros(chunk.len(), buffer.obs_dim);
            for (r, &i) in chunk.iter().enumerate() {
                obs.row_mut(r).copy_from_slice(buffer.observations.row(i));
            }
            let batch = PpoBatch {
                obs,
                actions: chunk.iter().map(|&i| buffer.actions[i]).collect(),
                old_log_probs: chunk.iter().map(|&i| buffer.log_probs[i]).collect(),
                advantages: chunk.iter().map(|&i| advantages[i]).collect(),
                returns: chunk.iter().map(|&i| returns[i]).collect(),
            };
            let (stats, grads) = ppo_loss_and_grad_with(net, &batch, coefs, critic)?;
            net.apply_adam(adam, &grads, config.stepsize)?;
            sum.total += stats.total;
            sum.policy_loss += stats.policy_loss;
            sum.value_loss += stats.value_loss;
            sum.entropy += stats.entropy;
            sum.clip_fraction += stats.clip_fraction;
            batches += 1;
        }
    }
    let k = batches.max(1) as f64;
    Ok(PpoLossStats {
        total: sum.total / k,
        policy_loss: sum.policy_loss / k,
        value_loss: sum.value_loss / k,
        entropy: sum.entropy / k,
        clip_fraction: sum.clip_fraction / k,
    })
}

/// Trains a freshly initialized network of the given capacity.
pub fn train(spec: &EnvSpec, tier: &CapacityTier, config: &PpoConfig, seed: u64) -> Result<TrainOutcome> {
    let topology = tier.topology(spec.obs_dim(), spec.action_count());
    let net = ActorCriticNet::init(topology, &mut rng::stream(seed, "init", 0))?;
    train_from(net, spec, config, seed)
}

/// Collect, estimate advantages, update; repeated for as many whole updates
/// as fit in `config.total_env_steps`.
pub fn train_from(
    net: ActorCriticNet,
    spec: &EnvSpec,
    config: &PpoConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    train_from_with(net, spec, config, CriticGradient::Shared, seed)
}

/// [`train_from`] with a choice of how the value loss reaches the body.
pub fn train_from_with(
    mut net: ActorCriticNet,
    spec: &EnvSpec,
    config: &PpoConfig,
    critic: CriticGradient,
    seed: u64,
) -> Result<TrainOutcome> {
    config.validate()?;
    if net.obs_dim() != spec.obs_dim() || net.action_count() != spec.action_count() {
        return Err(Error::Config(format!(
            "network ({}) does not fit {} (obs {}, {} actions)",
            net.topology().describe(),
            spec.label(),
            spec.obs_dim(),
            spec.action_count()
        )));
    }
    let mut pool = ActorPool::new(spec, config.num_actors, rng::derive_seed(seed, "rollout"))?;
    let mut shuffle_rng = rng::stream(seed, "shuffle", 0);
    let mut adam = AdamState::new(net.parameter_count());
    let mut window: VecDeque<f64> = VecDeque::with_capacity(CURVE_WINDOW);
    let mut curve = Vec::new();
    let mut env_steps = 0u64;
    let updates = config.num_updates();
    for update in 0..updates {
        let buffer = collect_rollout(&net, &mut pool, config.horizon)?;
        env_steps += buffer.len() as u64;
        for ret in pool.take_finished_returns() {
            if window.len() == CURVE_WINDOW {
                window.pop_front();
            }
            window.push_back(ret);
        }
        let estimates = compute_gae(&buffer, config.gamma, config.lambda)?;
        let stats = ppo_update(&mut net, &mut adam, &buffer, &estimates, config, critic, &mut shuffle_rng)?;
        let (mean, std) = mean_std(window.iter().copied());
        curve.push(CurvePoint {
            env_steps,
            mean_return: mean,
            std_return: std,
            episodes: window.len(),
        });
        log::debug!(
            "update {}/{updates} steps {env_steps} return {mean:.4} loss {:.4} entropy {:.4} clip {:.3}",
            update + 1,
            stats.total,
            stats.entropy,
            stats.clip_fraction
        );
    }
    Ok(TrainOutcome {
        net,
        curve,
        env_steps,
    })
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tier;

    fn small_config(updates: u64) -> PpoConfig {
        PpoConfig {
            num_actors: 4,
            horizon: 32,
            total_env_steps: updates * 128,
            update_epochs: 4,
            stepsize: 3e-3,
            ..PpoConfig::default()
        }
    }

    #[test]
    fn same_seed_same_curve_and_params() {
        let spec = EnvSpec::chain(5, 0.1);
        let tier = CapacityTier::default_for(Tier::Low);
        let a = train(&spec, &tier, &small_config(3), 11).unwrap();
        let b = train(&spec, &tier, &small_config(3), 11).unwrap();
        assert_eq!(a.net.params(), b.net.params());
        assert_eq!(format!("{:?}", a.curve), format!("{:?}", b.curve));
        assert_eq!(a.curve.len(), 3);
        assert_eq!(a.env_steps, 384);
    }

    #[test]
    fn zero_budget_leaves_network_alone() {
        let spec = EnvSpec::chain(5, 0.1);
        let net = ActorCriticNet::init(
            CapacityTier::default_for(Tier::Low).topology(5, 2),
            &mut rng::stream(1, "init", 0),
        )
        .unwrap();
        let out = train_from(net.clone(), &spec, &small_config(0), 3).unwrap();
        assert_eq!(out.net.params(), net.params());
        assert!(out.curve.is_empty());
    }

    #[test]
    fn rejects_mismatched_network() {
        let net = ActorCriticNet::zeros(CapacityTier::default_for(Tier::Low).topology(4, 2)).unwrap();
        let err = train_from(net, &EnvSpec::chain(5, 0.1), &small_config(1), 0).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn learns_a_short_chain() {
        let spec = EnvSpec::chain(5, 0.0);
        let tier = CapacityTier::default_for(Tier::Low);
        let out = train(&spec, &tier, &small_config(40), 2).unwrap();
        let last = out.curve.last().unwrap();
        // optimum is 0.96 (four steps)
        assert!(last.mean_return > 0.9, "{last:?}");
    }
}
