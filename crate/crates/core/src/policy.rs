use crate::error::{Error, Result};
use crate::nn::{softmax_in_place, ActorCriticNet, Matrix};

/// Anything that maps a batch of observations to action distributions.
pub trait Policy {
    fn obs_dim(&self) -> usize;
    fn action_count(&self) -> usize;
    /// One probability row per observation row.
    fn action_probs(&self, obs: &Matrix) -> Result<Matrix>;
}

impl Policy for ActorCriticNet {
    fn obs_dim(&self) -> usize {
        ActorCriticNet::obs_dim(self)
    }

    fn action_count(&self) -> usize {
        ActorCriticNet::action_count(self)
    }

    fn action_probs(&self, obs: &Matrix) -> Result<Matrix> {
        let mut probs = self.forward(obs)?.logits;
        for r in 0..probs.rows() {
            softmax_in_place(probs.row_mut(r));
        }
        Ok(probs)
    }
}

/// Picks every action with equal probability.
#[derive(Debug, Clone, Copy)]
pub struct UniformPolicy {
    pub obs_dim: usize,
    pub action_count: usize,
}

impl Policy for UniformPolicy {
    fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    fn action_count(&self) -> usize {
        self.action_count
    }

    fn action_probs(&self, obs: &Matrix) -> Result<Matrix> {
        check_obs(self, obs)?;
        let p = 1.0 / self.action_count as f64;
        Matrix::from_vec(
            obs.rows(),
            self.action_count,
            vec![p; obs.rows() * self.action_count],
        )
    }
}

pub(crate) fn check_obs<P: Policy + ?Sized>(policy: &P, obs: &Matrix) -> Result<()> {
    if obs.cols() != policy.obs_dim() {
        return Err(Error::Config(format!(
            "observation has {} columns, policy expects {}",
            obs.cols(),
            policy.obs_dim()
        )));
    }
    Ok(())
}
