use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::ParamSet;

/// Running average of squared gradients, one accumulator per parameter
/// matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RmsPropState {
    accumulators: Vec<Matrix>,
    pub decay: f64,
    pub eps: f64,
}

impl RmsPropState {
    pub fn new<P: ParamSet>(params: &P, decay: f64, eps: f64) -> Self {
        Self {
            accumulators: params
                .tensors()
                .iter()
                .map(|m| Matrix::zeros(m.rows(), m.cols()))
                .collect(),
            decay,
            eps,
        }
    }

    pub fn accumulators(&self) -> &[Matrix] {
        &self.accumulators
    }

    /// Applies one RMSProp update to every tensor of `params`.
    pub fn step<P: ParamSet>(&mut self, params: &mut P, grads: &P, lr: f64) -> Result<()> {
        let grads = grads.tensors();
        let params = params.tensors_mut();
        if params.len() != self.accumulators.len() || grads.len() != params.len() {
            return Err(Error::shape(
                "rmsprop",
                format!(
                    "{} params, {} grads, {} accumulators",
                    params.len(),
                    grads.len(),
                    self.accumulators.len()
                ),
            ));
        }
        for ((p, g), acc) in params.into_iter().zip(grads).zip(&mut self.accumulators) {
            rmsprop_update(p, g, acc, self.decay, self.eps, lr)?;
        }
        Ok(())
    }
}

/// `acc ← ρ·acc + (1−ρ)·g²;  param ← param − lr·g / (√acc + ε)`.
pub fn rmsprop_update(
    param: &mut Matrix,
    grad: &Matrix,
    acc: &mut Matrix,
    decay: f64,
    eps: f64,
    lr: f64,
) -> Result<()> {
    if param.shape() != grad.shape() || param.shape() != acc.shape() {
        return Err(Error::shape(
            "rmsprop_update",
            format!(
                "param {:?}, grad {:?}, accumulator {:?}",
                param.shape(),
                grad.shape(),
                acc.shape()
            ),
        ));
    }
    for ((p, &g), a) in param
        .data_mut()
        .iter_mut()
        .zip(grad.data())
        .zip(acc.data_mut())
    {
        *a = decay * *a + (1.0 - decay) * g * g;
        *p -= lr * g / (a.sqrt() + eps);
    }
    Ok(())
}
