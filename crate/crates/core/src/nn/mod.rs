//! Dense actor-critic networks with hand-written backpropagation and Adam.

mod adam;
mod matrix;
mod net;
mod softmax;
mod tier;

pub use adam::AdamState;
pub use matrix::Matrix;
pub use net::{
    Activation, ActorCriticNet, DenseLayer, ForwardCache, ForwardOutput, Gradients, Topology,
};
pub(crate) use softmax::softmax_in_place;
pub use softmax::{argmax, log_softmax, softmax};
pub use tier::{CapacityTier, Tier};
