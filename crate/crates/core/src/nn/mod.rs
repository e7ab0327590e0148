//! Layers with hand-derived backward passes, Xavier initialization, and the
//! RMSProp optimizer.
//!
//! Every layer exposes a plain forward function plus a `*_cached` variant
//! that returns the intermediates its backward pass needs. Gradients are
//! returned in the same struct type as the parameters they belong to, so a
//! gradient can be handed straight to [`RmsPropState::step`].

mod dense;
mod gcn;
mod lstm;
mod rmsprop;

pub use dense::{dense_backward, dense_forward, dense_forward_cached, DenseCache, DenseParams};
pub use gcn::{
    gcn_backward, gcn_forward, gcn_forward_filtered, GcnCache, GcnGrads, GcnLayerParams,
    GraphFilter,
};
pub use lstm::{
    lstm_backward_through_time, lstm_forward_sequence, lstm_step, lstm_step_cached, GateParams,
    LstmParams, LstmSequenceCache, LstmState, LstmStepCache,
};
pub use rmsprop::{rmsprop_update, RmsPropState};

use serde::{Deserialize, Serialize};

use crate::linalg::{Matrix, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Linear,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the activation's own output `y`.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }

    pub(crate) fn apply_inplace(self, m: &mut Matrix) {
        if self != Activation::Linear {
            m.map_inplace(|v| self.apply(v));
        }
    }

    /// `grad ⊙ f'(output)`.
    pub(crate) fn backprop(self, output: &Matrix, grad: &Matrix) -> Matrix {
        let mut out = grad.clone();
        if self != Activation::Linear {
            for (g, &y) in out.data_mut().iter_mut().zip(output.data()) {
                *g *= self.derivative_from_output(y);
            }
        }
        out
    }
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "linear" => Ok(Activation::Linear),
            other => Err(format!("unknown activation '{other}'")),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// A fixed, ordered collection of parameter matrices.
///
/// `named_tensors` and `tensors_mut` must enumerate the same matrices in the
/// same order; optimizers and checkpoints rely on it.
pub trait ParamSet {
    fn named_tensors(&self) -> Vec<(String, &Matrix)>;

    fn tensors_mut(&mut self) -> Vec<&mut Matrix>;

    /// Same structure with every entry zero; used as a gradient accumulator.
    fn zeros_like(&self) -> Self
    where
        Self: Sized;

    fn tensors(&self) -> Vec<&Matrix> {
        self.named_tensors().into_iter().map(|(_, m)| m).collect()
    }

    fn sq_norm(&self) -> f64 {
        self.tensors().iter().map(|m| m.frobenius_norm_sq()).sum()
    }

    fn max_abs(&self) -> f64 {
        self.tensors()
            .iter()
            .fold(0.0, |acc, m| acc.max(m.max_abs()))
    }

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|m| m.len()).sum()
    }

    fn scale_inplace(&mut self, k: f64) {
        for m in self.tensors_mut() {
            m.map_inplace(|v| v * k);
        }
    }

    /// `self += alpha · other`, tensor by tensor.
    fn axpy(&mut self, alpha: f64, other: &Self)
    where
        Self: Sized,
    {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            dst.axpy(alpha, src)
                .expect("ParamSet::axpy on structurally different sets");
        }
    }
}

/// Glorot/Xavier uniform draw on `[-√(6/(rows+cols)), √(6/(rows+cols))]`.
pub fn xavier_init(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let bound = xavier_bound(rows, cols);
    let data = (0..rows * cols)
        .map(|_| rng.uniform_in(-bound, bound))
        .collect();
    Matrix::new(rows, cols, data).expect("length matches by construction")
}

pub fn xavier_bound(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}

/// Clamps every parameter entry into `[-c, c]`.
pub fn clip_params<P: ParamSet>(params: &mut P, c: f64) {
    for m in params.tensors_mut() {
        m.map_inplace(|v| v.clamp(-c, c));
    }
}
