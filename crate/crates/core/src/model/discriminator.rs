use crate::error::{Error, Result};
use crate::linalg::{Matrix, Rng};
use crate::nn::{
    dense_backward, dense_forward_cached, Activation, DenseCache, DenseParams, ParamSet,
};

use super::generator::NamedTensors;

/// Critic `D`: flattened snapshot → sigmoid hidden layer → one linear unit.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorParams {
    pub hidden: DenseParams,
    pub output: DenseParams,
}

impl DiscriminatorParams {
    pub fn new(rng: &mut Rng, n_nodes: usize, hidden: usize) -> Self {
        Self {
            hidden: DenseParams::xavier(rng, n_nodes * n_nodes, hidden),
            output: DenseParams::xavier(rng, hidden, 1),
        }
    }

    pub fn zeros(n_nodes: usize, hidden: usize) -> Self {
        Self {
            hidden: DenseParams::zeros(n_nodes * n_nodes, hidden),
            output: DenseParams::zeros(hidden, 1),
        }
    }

    pub fn input_width(&self) -> usize {
        self.hidden.inputs()
    }

    pub fn hidden_units(&self) -> usize {
        self.hidden.outputs()
    }
}

impl ParamSet for DiscriminatorParams {
    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = self.hidden.prefixed("hidden");
        out.extend(self.output.prefixed("output"));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = self.hidden.tensors_mut();
        out.extend(self.output.tensors_mut());
        out
    }

    fn zeros_like(&self) -> Self {
        Self {
            hidden: self.hidden.zeros_like(),
            output: self.output.zeros_like(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DiscriminatorTrace {
    shape: (usize, usize),
    hidden: DenseCache,
    output: DenseCache,
}

pub fn discriminator_forward(a: &Matrix, params: &DiscriminatorParams) -> Result<f64> {
    discriminator_forward_cached(a, params).map(|(d, _)| d)
}

pub fn discriminator_forward_cached(
    a: &Matrix,
    params: &DiscriminatorParams,
) -> Result<(f64, DiscriminatorTrace)> {
    if !a.is_square() || a.len() != params.input_width() {
        return Err(Error::shape(
            "discriminator_forward",
            format!(
                "snapshot {:?} for a critic of width {}",
                a.shape(),
                params.input_width()
            ),
        ));
    }
    let flat = a.reshape_rowwise(1, a.len())?;
    let (h, hidden) = dense_forward_cached(&flat, &params.hidden, Activation::Sigmoid)?;
    let (y, output) = dense_forward_cached(&h, &params.output, Activation::Linear)?;
    let trace = DiscriminatorTrace {
        shape: a.shape(),
        hidden,
        output,
    };
    Ok((y.data()[0], trace))
}

/// Returns `(∂L/∂θ_D, ∂L/∂A)` for a loss with `∂L/∂D = grad`.
pub fn discriminator_backward(
    trace: &DiscriminatorTrace,
    params: &DiscriminatorParams,
    grad: f64,
) -> Result<(DiscriminatorParams, Matrix)> {
    let (output, grad_h) =
        dense_backward(&trace.output, &params.output, &Matrix::filled(1, 1, grad))?;
    let (hidden, grad_flat) = dense_backward(&trace.hidden, &params.hidden, &grad_h)?;
    let (r, c) = trace.shape;
    Ok((
        DiscriminatorParams { hidden, output },
        grad_flat.into_shape(r, c)?,
    ))
}
