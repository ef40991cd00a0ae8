//! Proximal policy optimization with generalized advantage estimation.

mod config;
mod gae;
mod loss;
mod rollout;
mod train;

pub use config::PpoConfig;
pub use gae::{compute_gae, normalize_advantages, AdvantageEstimates};
pub use loss::{
    clipped_surrogate, entropy, ppo_loss, ppo_loss_and_grad, ppo_loss_and_grad_with, CriticGradient,
    LossCoefficients, PpoBatch, PpoLossStats,
};
pub use rollout::{collect_rollout, ActorPool, RolloutBuffer};
pub use train::{ppo_update, train, train_from, train_from_with, CurvePoint, TrainOutcome, CURVE_WINDOW};
