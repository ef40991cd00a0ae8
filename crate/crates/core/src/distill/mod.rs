//! Offline policy distillation: replay collection, the KL objective, the
//! student trainer, and PPO fine-tuning of distilled students.

mod kl;
mod replay;
mod sweep;
mod trainer;

pub use kl::{kl_loss, kl_loss_grad, sharpen_distribution, sharpen_probabilities};
pub use replay::{collect_replay, ReplayBuffer, ReplayMetadata, ReplayRecord};
pub use sweep::{epoch_sweep, sweep_row_seed, SweepRow};
pub use trainer::{distill, finetune, mean_kl, DistillConfig};
