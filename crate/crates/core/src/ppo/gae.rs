use super::rollout::RolloutBuffer;
use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Advantages and value targets, one row per actor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageEstimates {
    pub advantages: Matrix,
    pub returns: Matrix,
}

/// Generalized advantage estimation, run backwards over each actor's
/// trajectory:
///
/// `delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t)`
/// `A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}`
///
/// The value after the last step comes from the buffer's bootstrap values.
/// Returns are `A_t + V(s_t)`.
pub fn compute_gae(buffer: &RolloutBuffer, gamma: f64, lambda: f64) -> Result<AdvantageEstimates> {
    let n = buffer.len();
    if buffer.rewards.len() != n
        || buffer.values.len() != n
        || buffer.dones.len() != n
        || buffer.bootstrap_values.len() != buffer.num_actors
    {
        return Err(Error::Config(format!(
            "rollout buffer arrays do not match its {}x{} shape",
            buffer.num_actors, buffer.horizon
        )));
    }
    let mut advantages = Matrix::zeros(buffer.num_actors, buffer.horizon);
    let mut returns = Matrix::zeros(buffer.num_actors, buffer.horizon);
    for actor in 0..buffer.num_actors {
        let mut next_adv = 0.0;
        let mut next_value = buffer.bootstrap_values[actor];
        for t in (0..buffer.horizon).rev() {
            let i = buffer.index(actor, t);
            let live = if buffer.dones[i] { 0.0 } else { 1.0 };
            let delta = buffer.rewards[i] + gamma * next_value * live - buffer.values[i];
            let adv = delta + gamma * lambda * live * next_adv;
            advantages.row_mut(actor)[t] = adv;
            returns.row_mut(actor)[t] = adv + buffer.values[i];
            next_adv = adv;
            next_value = buffer.values[i];
        }
    }
    Ok(AdvantageEstimates {
        advantages,
        returns,
    })
}

/// Shifts to zero mean and scales to unit (population) standard deviation,
/// with the deviation floored at 1e-8.
pub fn normalize_advantages(adv: &[f64]) -> Vec<f64> {
    if adv.is_empty() {
        return Vec::new();
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    adv.iter().map(|a| (a - mean) / std).collect()
}
