use crate::error::{Error, Result};
use crate::nn::{log_softmax, ActorCriticNet, Gradients, Matrix};

/// A minibatch of transitions for the clipped PPO objective.
#[derive(Debug, Clone)]
pub struct PpoBatch {
    pub obs: Matrix,
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

/// How the value loss reaches the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CriticGradient {
    /// The value loss trains the value head and the shared body.
    #[default]
    Shared,
    /// The value loss trains the value head only; the body is shaped by the
    /// policy objective alone. Used when a fresh critic is attached to an
    /// already trained actor, whose early value errors would otherwise
    /// overwrite the actor's features.
    HeadOnly,
    /// Only the value head is trained; the actor is frozen. Used to warm up a
    /// fresh critic before its advantages are allowed to move the policy.
    CriticOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoefficients {
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PpoLossStats {
    pub total: f64,
    /// Negated mean clipped surrogate.
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// `min(ratio * adv, clamp(ratio, 1 - clip, 1 + clip) * adv)`
pub fn clipped_surrogate(ratio: f64, adv: f64, clip: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
    (ratio * adv).min(clipped * adv)
}

/// Shannon entropy in nats; zero-probability entries contribute nothing.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
}

struct Evaluated {
    stats: PpoLossStats,
    d_logits: Matrix,
    d_values: Vec<f64>,
}

fn evaluate(
    net: &ActorCriticNet,
    batch: &PpoBatch,
    coefs: LossCoefficients,
    logits: &Matrix,
    values: &[f64],
) -> Result<Evaluated> {
    let m = batch.actions.len();
    if m == 0
        || batch.obs.rows() != m
        || batch.old_log_probs.len() != m
        || batch.advantages.len() != m
        || batch.returns.len() != m
    {
        return Err(Error::Config(format!(
            "ppo batch arrays disagree on length ({m} actions, {} observations)",
            batch.obs.rows()
        )));
    }
    let inv_m = 1.0 / m as f64;
    let a_count = net.action_count();
    let mut d_logits = Matrix::zeros(m, a_count);
    let mut d_values = vec![0.0; m];
    let mut surrogate_sum = 0.0;
    let mut value_sum = 0.0;
    let mut entropy_sum = 0.0;
    let mut clipped = 0usize;

    for i in 0..m {
        let action = batch.actions[i];
        if action >= a_count {
            return Err(Error::Domain(format!("action {action} outside [0, {a_count})")));
        }
        let logp = log_softmax(logits.row(i));
        let probs: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
        let ratio = (logp[action] - batch.old_log_probs[i]).exp();
        let adv = batch.advantages[i];
        let surrogate = clipped_surrogate(ratio, adv, coefs.clip);
        surrogate_sum += surrogate;
        if (ratio - 1.0).abs() > coefs.clip {
            clipped += 1;
        }
        // the unclipped branch is the active one whenever it attains the min
        let d_surr_d_logp = if ratio * adv <= surrogate { ratio * adv } else { 0.0 };
        let h: f64 = -probs.iter().zip(&logp).map(|(p, l)| p * l).sum::<f64>();
        entropy_sum += h;

        let row = d_logits.row_mut(i);
        for (j, d) in row.iter_mut().enumerate() {
            let indicator = if j == action { 1.0 } else { 0.0 };
            // policy: -(1/m) d_surr/d_logp * (1[j=a] - p_j)
            let policy = -d_surr_d_logp * (indicator - probs[j]);
            // entropy bonus: -(c_e/m) dH/dz_j with dH/dz_j = -p_j (log p_j + H)
            let ent = coefs.entropy_coef * probs[j] * (logp[j] + h);
            *d = inv_m * (policy + ent);
        }
        let err = values[i] - batch.returns[i];
        value_sum += err * err;
        d_values[i] = 2.0 * coefs.value_coef * err * inv_m;
    }

    let policy_loss = -surrogate_sum * inv_m;
    let value_loss = value_sum * inv_m;
    let entropy = entropy_sum * inv_m;
    let total = policy_loss + coefs.value_coef * value_loss - coefs.entropy_coef * entropy;
    if !total.is_finite() {
        return Err(Error::Numeric(format!("ppo loss is {total}")));
    }
    Ok(Evaluated {
        stats: PpoLossStats {
            total,
            policy_loss,
            value_loss,
            entropy,
            clip_fraction: clipped as f64 * inv_m,
        },
        d_logits,
        d_values,
    })
}

/// Total PPO loss:
/// `-mean(clipped surrogate) + value_coef * mean((V - R)^2) - entropy_coef * mean(H)`.
pub fn ppo_loss(net: &ActorCriticNet, batch: &PpoBatch, coefs: LossCoefficients) -> Result<PpoLossStats> {
    let out = net.forward(&batch.obs)?;
    Ok(evaluate(net, batch, coefs, &out.logits, &out.values)?.stats)
}

pub fn ppo_loss_and_grad(
    net: &ActorCriticNet,
    batch: &PpoBatch,
    coefs: LossCoefficients,
) -> Result<(PpoLossStats, Gradients)> {
    ppo_loss_and_grad_with(net, batch, coefs, CriticGradient::Shared)
}

/// [`ppo_loss_and_grad`] with a choice of where the value loss flows. With
/// [`CriticGradient::HeadOnly`] the body gradient is that of the policy and
/// entropy terms only.
pub fn ppo_loss_and_grad_with(
    net: &ActorCriticNet,
    batch: &PpoBatch,
    coefs: LossCoefficients,
    critic: CriticGradient,
) -> Result<(PpoLossStats, Gradients)> {
    let out = net.forward(&batch.obs)?;
    let e = evaluate(net, batch, coefs, &out.logits, &out.values)?;
    let grads = match critic {
        CriticGradient::Shared => net.backward(&out.cache, &e.d_logits, &e.d_values)?,
        CriticGradient::HeadOnly => {
            let mut grads = net.backward(&out.cache, &e.d_logits, &vec![0.0; e.d_values.len()])?;
            let no_logits = Matrix::zeros(e.d_logits.rows(), e.d_logits.cols());
            let critic = net.backward(&out.cache, &no_logits, &e.d_values)?;
            let head = net.value_head();
            let range = head.weight_range().start..head.bias_range().end;
            grads.0[range.clone()].copy_from_slice(&critic[range]);
            grads
        }
        CriticGradient::CriticOnly => {
            let no_logits = Matrix::zeros(e.d_logits.rows(), e.d_logits.cols());
            let critic = net.backward(&out.cache, &no_logits, &e.d_values)?;
            let head = net.value_head();
            let range = head.weight_range().start..head.bias_range().end;
            let mut grads = Gradients(vec![0.0; critic.0.len()]);
            grads.0[range.clone()].copy_from_slice(&critic[range]);
            grads
        }
    };
    Ok((e.stats, grads))
}
