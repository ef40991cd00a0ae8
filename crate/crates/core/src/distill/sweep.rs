use rayon::prelude::*;

use super::replay::ReplayBuffer;
use super::trainer::{distill, DistillConfig};
use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::nn::{ActorCriticNet, CapacityTier};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub tier: CapacityTier,
    pub epochs: usize,
    pub final_loss: f64,
    pub report: EvalReport,
}

/// Seed of one `(tier, epochs)` point; independent of where the point sits
/// in the input lists.
pub fn sweep_row_seed(seed: u64, tier: &CapacityTier, epochs: usize) -> u64 {
    rng::derive_seed(seed, &format!("sweep/{}/{:?}/{epochs}", tier.tier, tier.hidden))
}

/// Distills a freshly initialized student for every `(tier, epochs)` pair
/// and evaluates it. Rows come back tier-major in input order; they are
/// computed in parallel.
pub fn epoch_sweep(
    tiers: &[CapacityTier],
    epoch_list: &[usize],
    buffer: &ReplayBuffer,
    spec: &EnvSpec,
    config: &DistillConfig,
    eval_steps: u64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if epoch_list.is_empty() || tiers.is_empty() {
        return Err(Error::Config("sweep needs at least one tier and one epoch count".into()));
    }
    let points: Vec<(&CapacityTier, usize)> = tiers
        .iter()
        .flat_map(|t| epoch_list.iter().map(move |&e| (t, e)))
        .collect();
    points
        .par_iter()
        .map(|&(tier, epochs)| {
            let row_seed = sweep_row_seed(seed, tier, epochs);
            let topology = tier.topology(buffer.obs_dim, buffer.action_count);
            let mut student = ActorCriticNet::init(topology, &mut rng::stream(row_seed, "init", 0))?;
            let config = DistillConfig {
                epochs,
                ..config.clone()
            };
            let curve = distill(&mut student, buffer, &config, row_seed)?;
            let report = evaluate(&student, spec, eval_steps, rng::derive_seed(row_seed, "eval"))?;
            Ok(SweepRow {
                tier: tier.clone(),
                epochs,
                final_loss: *curve.last().expect("epochs >= 1"),
                report,
            })
        })
        .collect()
}
