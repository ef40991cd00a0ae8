use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::matrix::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }
}

/// Shape of an actor-critic network: a dense body followed by a policy head
/// with `action_count` logits and a scalar value head, both linear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub obs_dim: usize,
    pub action_count: usize,
    pub hidden: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl Topology {
    /// Body of `hidden` tanh layers.
    pub fn new(obs_dim: usize, action_count: usize, hidden: &[usize]) -> Self {
        Self {
            obs_dim,
            action_count,
            hidden: hidden.to_vec(),
            activations: vec![Activation::Tanh; hidden.len()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.obs_dim == 0 {
            return Err(Error::Config("obs_dim must be positive".into()));
        }
        if self.action_count < 2 {
            return Err(Error::Config(format!(
                "action_count must be at least 2, got {}",
                self.action_count
            )));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden widths must be positive".into()));
        }
        if self.hidden.len() != self.activations.len() {
            return Err(Error::Config(format!(
                "{} hidden layers but {} activation tags",
                self.hidden.len(),
                self.activations.len()
            )));
        }
        Ok(())
    }

    /// Exact number of scalar parameters (weights and biases).
    pub fn parameter_count(&self) -> usize {
        let mut inputs = self.obs_dim;
        let mut count = 0;
        for &w in &self.hidden {
            count += inputs * w + w;
            inputs = w;
        }
        count + inputs * self.action_count + self.action_count + inputs + 1
    }

    pub fn describe(&self) -> String {
        format!(
            "obs {} -> hidden {:?} -> {} actions",
            self.obs_dim, self.hidden, self.action_count
        )
    }
}

/// Location of one dense layer inside the flat parameter vector.
/// Weights are `[out x in]` row-major, followed by `out` biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    offset: usize,
}

impl DenseLayer {
    pub fn weight_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.in_dim * self.out_dim
    }

    pub fn bias_range(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.in_dim * self.out_dim;
        start..start + self.out_dim
    }

    fn param_len(&self) -> usize {
        self.in_dim * self.out_dim + self.out_dim
    }

    fn forward(&self, params: &[f64], input: &Matrix) -> Matrix {
        let w = &params[self.weight_range()];
        let b = &params[self.bias_range()];
        let mut out = Matrix::zeros(input.rows(), self.out_dim);
        for r in 0..input.rows() {
            let x = input.row(r);
            let y = out.row_mut(r);
            for (o, y_o) in y.iter_mut().enumerate() {
                let w_row = &w[o * self.in_dim..(o + 1) * self.in_dim];
                let dot: f64 = w_row.iter().zip(x).map(|(a, b)| a * b).sum();
                *y_o = self.activation.apply(dot + b[o]);
            }
        }
        out
    }

    /// Accumulates parameter gradients for `d_pre` (gradient w.r.t. the
    /// pre-activation) and returns the gradient w.r.t. the layer input.
    fn backward(
        &self,
        params: &[f64],
        input: &Matrix,
        d_pre: &Matrix,
        grads: &mut [f64],
        want_input_grad: bool,
    ) -> Option<Matrix> {
        let w = &params[self.weight_range()];
        let (gw, gb) = grads[self.offset..self.offset + self.param_len()]
            .split_at_mut(self.in_dim * self.out_dim);
        for r in 0..input.rows() {
            let x = input.row(r);
            for (o, &d) in d_pre.row(r).iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                for (g, xi) in gw[o * self.in_dim..(o + 1) * self.in_dim].iter_mut().zip(x) {
                    *g += d * xi;
                }
            }
        }
        if !want_input_grad {
            return None;
        }
        let mut d_in = Matrix::zeros(input.rows(), self.in_dim);
        for r in 0..input.rows() {
            let di = d_in.row_mut(r);
            for (o, &d) in d_pre.row(r).iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (g, wi) in di.iter_mut().zip(&w[o * self.in_dim..(o + 1) * self.in_dim]) {
                    *g += d * wi;
                }
            }
        }
        Some(d_in)
    }
}

static GENERATION: AtomicU64 = AtomicU64::new(1);

fn next_generation() -> u64 {
    GENERATION.fetch_add(1, Ordering::Relaxed)
}

/// Shared-body actor-critic network.
///
/// All parameters live in one flat vector in the order body layer 0
/// (weights, biases), ..., policy head, value head. That order is also the
/// checkpoint payload order and the layout of [`Gradients`].
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCriticNet {
    topology: Topology,
    body: Vec<DenseLayer>,
    policy_head: DenseLayer,
    value_head: DenseLayer,
    params: Vec<f64>,
    generation: u64,
}

/// Activations recorded by [`ActorCriticNet::forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    /// `acts[0]` is the observation batch, `acts[l + 1]` the output of body layer `l`.
    acts: Vec<Matrix>,
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub logits: Matrix,
    pub values: Vec<f64>,
    pub cache: ForwardCache,
}

/// Gradient of a scalar loss, laid out like the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<f64>);

impl std::ops::Deref for Gradients {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl ActorCriticNet {
    /// Network with every parameter set to zero.
    pub fn zeros(topology: Topology) -> Result<Self> {
        topology.validate()?;
        let mut body = Vec::with_capacity(topology.hidden.len());
        let mut offset = 0;
        let mut inputs = topology.obs_dim;
        for (&w, &activation) in topology.hidden.iter().zip(&topology.activations) {
            let layer = DenseLayer {
                in_dim: inputs,
                out_dim: w,
                activation,
                offset,
            };
            offset += layer.param_len();
            body.push(layer);
            inputs = w;
        }
        let policy_head = DenseLayer {
            in_dim: inputs,
            out_dim: topology.action_count,
            activation: Activation::Linear,
            offset,
        };
        offset += policy_head.param_len();
        let value_head = DenseLayer {
            in_dim: inputs,
            out_dim: 1,
            activation: Activation::Linear,
            offset,
        };
        offset += value_head.param_len();
        debug_assert_eq!(offset, topology.parameter_count());
        Ok(Self {
            topology,
            body,
            policy_head,
            value_head,
            params: vec![0.0; offset],
            generation: next_generation(),
        })
    }

    /// Scaled-uniform initialization: weights `U(-a, a)` with
    /// `a = gain * sqrt(3 / fan_in)`, biases zero. Gains are 1.0 for the body,
    /// 0.01 for the policy head and 1.0 for the value head.
    pub fn init<R: Rng + ?Sized>(topology: Topology, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(topology)?;
        let layers: Vec<(DenseLayer, f64)> = net
            .body
            .iter()
            .map(|l| (*l, 1.0))
            .chain([(net.policy_head, 0.01), (net.value_head, 1.0)])
            .collect();
        for (layer, gain) in layers {
            init_layer(&mut net.params, &layer, gain, rng);
        }
        Ok(net)
    }

    /// Re-draws the value head, leaving the body and policy head intact.
    pub fn reinit_value_head<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let head = self.value_head;
        init_layer(&mut self.params, &head, 1.0, rng);
        self.params[head.bias_range()].fill(0.0);
        self.generation = next_generation();
    }

    pub fn from_params(topology: Topology, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(topology)?;
        if params.len() != net.params.len() {
            return Err(Error::Config(format!(
                "{} parameters supplied for a network with {}",
                params.len(),
                net.params.len()
            )));
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::Numeric(format!("parameter {i} is {}", params[i])));
        }
        net.params = params;
        Ok(net)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn obs_dim(&self) -> usize {
        self.topology.obs_dim
    }

    pub fn action_count(&self) -> usize {
        self.topology.action_count
    }

    pub fn body_layers(&self) -> &[DenseLayer] {
        &self.body
    }

    pub fn policy_head(&self) -> &DenseLayer {
        &self.policy_head
    }

    pub fn value_head(&self) -> &DenseLayer {
        &self.value_head
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable parameter access. Invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.generation = next_generation();
        &mut self.params
    }

    pub fn forward(&self, obs: &Matrix) -> Result<ForwardOutput> {
        if obs.rows() == 0 {
            return Err(Error::Config("forward needs a batch of at least 1".into()));
        }
        if obs.cols() != self.topology.obs_dim {
            return Err(Error::Config(format!(
                "observation batch has {} columns, network expects {}",
                obs.cols(),
                self.topology.obs_dim
            )));
        }
        if !obs.is_finite() {
            return Err(Error::Numeric("non-finite observation".into()));
        }
        let mut acts = Vec::with_capacity(self.body.len() + 1);
        acts.push(obs.clone());
        for (i, layer) in self.body.iter().enumerate() {
            let out = layer.forward(&self.params, acts.last().expect("non-empty"));
            if !out.is_finite() {
                return Err(Error::Numeric(format!("non-finite output at body layer {i}")));
            }
            acts.push(out);
        }
        let features = acts.last().expect("non-empty");
        let logits = self.policy_head.forward(&self.params, features);
        if !logits.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite output at policy head (layer {})",
                self.body.len()
            )));
        }
        let values = self.value_head.forward(&self.params, features).into_vec();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite output at value head (layer {})",
                self.body.len() + 1
            )));
        }
        Ok(ForwardOutput {
            logits,
            values,
            cache: ForwardCache {
                generation: self.generation,
                acts,
            },
        })
    }

    /// Reverse-mode pass. `d_logits` and `d_values` are the derivatives of the
    /// scalar loss w.r.t. each output, so any batch averaging must already be
    /// folded into them.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        d_logits: &Matrix,
        d_values: &[f64],
    ) -> Result<Gradients> {
        if cache.generation != self.generation {
            return Err(Error::Usage(
                "forward cache is stale or belongs to a different network".into(),
            ));
        }
        let batch = cache.acts[0].rows();
        if d_logits.rows() != batch
            || d_logits.cols() != self.topology.action_count
            || d_values.len() != batch
        {
            return Err(Error::Usage(format!(
                "output gradients [{}x{}], [{}] do not match cached batch of {batch}",
                d_logits.rows(),
                d_logits.cols(),
                d_values.len()
            )));
        }
        let mut grads = vec![0.0; self.params.len()];
        let features = cache.acts.last().expect("non-empty");
        let want_body = !self.body.is_empty();
        let d_values = Matrix::from_vec(batch, 1, d_values.to_vec())?;
        let d_from_policy =
            self.policy_head
                .backward(&self.params, features, d_logits, &mut grads, want_body);
        let d_from_value =
            self.value_head
                .backward(&self.params, features, &d_values, &mut grads, want_body);
        if let (Some(mut d_act), Some(dv)) = (d_from_policy, d_from_value) {
            for (a, b) in d_act.as_mut_slice().iter_mut().zip(dv.as_slice()) {
                *a += b;
            }
            for (l, layer) in self.body.iter().enumerate().rev() {
                let out = &cache.acts[l + 1];
                for (d, y) in d_act.as_mut_slice().iter_mut().zip(out.as_slice()) {
                    *d *= layer.activation.derivative_from_output(*y);
                }
                match layer.backward(&self.params, &cache.acts[l], &d_act, &mut grads, l > 0) {
                    Some(next) => d_act = next,
                    None => break,
                }
            }
        }
        Ok(Gradients(grads))
    }

    /// One Adam update of every parameter.
    pub fn apply_adam(
        &mut self,
        state: &mut AdamState,
        grads: &Gradients,
        stepsize: f64,
    ) -> Result<()> {
        state.step(&mut self.params, grads, stepsize)?;
        self.generation = next_generation();
        Ok(())
    }
}

fn init_layer<R: Rng + ?Sized>(params: &mut [f64], layer: &DenseLayer, gain: f64, rng: &mut R) {
    let bound = gain * (3.0 / layer.in_dim as f64).sqrt();
    for w in &mut params[layer.weight_range()] {
        *w = rng.gen_range(-bound..=bound);
    }
    params[layer.bias_range()].fill(0.0);
}
