use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::kl::{kl_loss, kl_loss_grad, sharpen_probabilities};
use super::replay::ReplayBuffer;
use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::nn::{ActorCriticNet, AdamState, Matrix};
use crate::ppo::{train_from_with, CriticGradient, PpoConfig, TrainOutcome};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillConfig {
    pub epochs: usize,
    pub minibatch_size: usize,
    pub stepsize: f64,
    /// 1 fits the teacher distribution as recorded; values below 1 sharpen
    /// the targets first.
    pub temperature: f64,
    pub prob_floor: f64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            minibatch_size: 32,
            stepsize: 3e-4,
            temperature: 1.0,
            prob_floor: 1e-8,
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("distill.epochs must be at least 1".into()));
        }
        if self.minibatch_size == 0 {
            return Err(Error::Config("distill.minibatch_size must be positive".into()));
        }
        if !(self.stepsize > 0.0) {
            return Err(Error::Config("distill.stepsize must be positive".into()));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::Config("distill.temperature must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.prob_floor) {
            return Err(Error::Config("distill.prob_floor must be in [0,1)".into()));
        }
        Ok(())
    }
}

fn targets(buffer: &ReplayBuffer, temperature: f64) -> Result<Matrix> {
    let mut t = buffer.teacher_targets();
    if temperature != 1.0 {
        for r in 0..t.rows() {
            let sharp = sharpen_probabilities(t.row(r), temperature)?;
            t.row_mut(r).copy_from_slice(&sharp);
        }
    }
    Ok(t)
}

fn check_shapes(student: &ActorCriticNet, buffer: &ReplayBuffer) -> Result<()> {
    if student.obs_dim() != buffer.obs_dim || student.action_count() != buffer.action_count {
        return Err(Error::Config(format!(
            "student ({}) does not match buffer (obs {}, {} actions)",
            student.topology().describe(),
            buffer.obs_dim,
            buffer.action_count
        )));
    }
    Ok(())
}

/// Phase three: fits the student's policy head and body to the recorded
/// teacher distributions by minibatch Adam on the KL loss. Records are
/// reshuffled every epoch; the value head receives no gradient. Returns the
/// mean training loss of each epoch.
///
/// No environment is involved.
pub fn distill(
    student: &mut ActorCriticNet,
    buffer: &ReplayBuffer,
    config: &DistillConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    config.validate()?;
    buffer.validate()?;
    check_shapes(student, buffer)?;
    let observations = buffer.observations();
    let targets = targets(buffer, config.temperature)?;
    let n = buffer.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = rng::stream(seed, "distill-shuffle", 0);
    let mut adam = AdamState::new(student.parameter_count());
    let mut curve = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.minibatch_size) {
            let mut obs = Matrix::zeros(chunk.len(), buffer.obs_dim);
            let mut teacher = Matrix::zeros(chunk.len(), buffer.action_count);
            for (r, &i) in chunk.iter().enumerate() {
                obs.row_mut(r).copy_from_slice(observations.row(i));
                teacher.row_mut(r).copy_from_slice(targets.row(i));
            }
            let out = student.forward(&obs)?;
            let loss = kl_loss(&teacher, &out.logits, config.prob_floor)?;
            let d_logits = kl_loss_grad(&teacher, &out.logits)?;
            let grads = student.backward(&out.cache, &d_logits, &vec![0.0; chunk.len()])?;
            student.apply_adam(&mut adam, &grads, config.stepsize)?;
            epoch_loss += loss * chunk.len() as f64;
        }
        curve.push(epoch_loss / n as f64);
    }
    Ok(curve)
}

/// Mean KL of the student against the (optionally sharpened) targets over
/// the whole buffer.
pub fn mean_kl(student: &ActorCriticNet, buffer: &ReplayBuffer, config: &DistillConfig) -> Result<f64> {
    buffer.validate()?;
    check_shapes(student, buffer)?;
    let out = student.forward(&buffer.observations())?;
    kl_loss(&targets(buffer, config.temperature)?, &out.logits, config.prob_floor)
}

/// Continues training a distilled student with PPO in the environment.
///
/// Distillation only transfers the policy, so the value head is re-drawn
/// before the first update and trained on top of the body without
/// back-propagating into it; the body keeps following the policy objective.
/// A budget too small for one update returns the student untouched.
pub fn finetune(
    student: ActorCriticNet,
    spec: &EnvSpec,
    config: &PpoConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    config.validate()?;
    if config.num_updates() == 0 {
        return Ok(TrainOutcome {
            net: student,
            curve: Vec::new(),
            env_steps: 0,
        });
    }
    let mut student = student;
    student.reinit_value_head(&mut rng::stream(seed, "value-head", 0));
    // the first quarter of the budget fits the fresh critic with the actor frozen
    let per_update = config.steps_per_update();
    let warmup = config.num_updates() / 4;
    if warmup == 0 {
        return train_from_with(student, spec, config, CriticGradient::HeadOnly, seed);
    }
    let warm = train_from_with(
        student,
        spec,
        &PpoConfig {
            total_env_steps: warmup * per_update,
            ..config.clone()
        },
        CriticGradient::CriticOnly,
        rng::derive_seed(seed, "critic-warmup"),
    )?;
    let tuned = train_from_with(
        warm.net,
        spec,
        &PpoConfig {
            total_env_steps: (config.num_updates() - warmup) * per_update,
            ..config.clone()
        },
        CriticGradient::HeadOnly,
        seed,
    )?;
    let mut curve = warm.curve;
    curve.extend(tuned.curve.into_iter().map(|mut p| {
        p.env_steps += warm.env_steps;
        p
    }));
    Ok(TrainOutcome {
        net: tuned.net,
        curve,
        env_steps: warm.env_steps + tuned.env_steps,
    })
}
