use crate::error::{Error, Result};
use crate::linalg::{Matrix, Rng};

use super::{xavier_init, Activation, ParamSet};

/// Fully connected layer `y = f(x·W + b)` on row vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseParams {
    pub weight: Matrix,
    pub bias: Matrix,
}

impl DenseParams {
    pub fn new(weight: Matrix, bias: Matrix) -> Result<Self> {
        if bias.rows() != 1 || bias.cols() != weight.cols() {
            return Err(Error::shape(
                "DenseParams::new",
                format!(
                    "bias {}x{} for weight {}x{}",
                    bias.rows(),
                    bias.cols(),
                    weight.rows(),
                    weight.cols()
                ),
            ));
        }
        Ok(Self { weight, bias })
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Matrix::zeros(inputs, outputs),
            bias: Matrix::zeros(1, outputs),
        }
    }

    /// Xavier weights, zero bias.
    pub fn xavier(rng: &mut Rng, inputs: usize, outputs: usize) -> Self {
        Self {
            weight: xavier_init(rng, inputs, outputs),
            bias: Matrix::zeros(1, outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.cols()
    }
}

impl ParamSet for DenseParams {
    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        vec![("weight".into(), &self.weight), ("bias".into(), &self.bias)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        vec![&mut self.weight, &mut self.bias]
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.inputs(), self.outputs())
    }
}

#[derive(Clone, Debug)]
pub struct DenseCache {
    input: Matrix,
    output: Matrix,
    activation: Activation,
}

impl DenseCache {
    pub fn output(&self) -> &Matrix {
        &self.output
    }
}

pub fn dense_forward(x: &Matrix, params: &DenseParams, activation: Activation) -> Result<Matrix> {
    dense_forward_cached(x, params, activation).map(|(y, _)| y)
}

pub fn dense_forward_cached(
    x: &Matrix,
    params: &DenseParams,
    activation: Activation,
) -> Result<(Matrix, DenseCache)> {
    if x.rows() != 1 {
        return Err(Error::shape(
            "dense_forward",
            format!("expected a row vector, got {}x{}", x.rows(), x.cols()),
        ));
    }
    let mut y = x.matmul(&params.weight)?;
    y.add_assign(&params.bias)?;
    activation.apply_inplace(&mut y);
    let cache = DenseCache {
        input: x.clone(),
        output: y.clone(),
        activation,
    };
    Ok((y, cache))
}

/// Returns `(∂L/∂params, ∂L/∂x)` given `∂L/∂y`.
pub fn dense_backward(
    cache: &DenseCache,
    params: &DenseParams,
    grad_out: &Matrix,
) -> Result<(DenseParams, Matrix)> {
    if grad_out.shape() != cache.output.shape() {
        return Err(Error::shape(
            "dense_backward",
            format!(
                "gradient {:?} for output {:?}",
                grad_out.shape(),
                cache.output.shape()
            ),
        ));
    }
    let grad_pre = cache.activation.backprop(&cache.output, grad_out);
    let grads = DenseParams {
        weight: cache.input.t_matmul(&grad_pre)?,
        bias: grad_pre.clone(),
    };
    let grad_in = grad_pre.matmul_t(&params.weight)?;
    Ok((grads, grad_in))
}
