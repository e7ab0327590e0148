use crate::error::{Error, Result};
use crate::linalg::{Matrix, Rng};

use super::{xavier_init, Activation, ParamSet};

/// Weight of a single graph convolution unit.
#[derive(Clone, Debug, PartialEq)]
pub struct GcnLayerParams {
    pub weight: Matrix,
}

impl GcnLayerParams {
    pub fn xavier(rng: &mut Rng, inputs: usize, outputs: usize) -> Self {
        Self {
            weight: xavier_init(rng, inputs, outputs),
        }
    }
}

impl ParamSet for GcnLayerParams {
    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        vec![("weight".into(), &self.weight)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        vec![&mut self.weight]
    }

    fn zeros_like(&self) -> Self {
        Self {
            weight: Matrix::zeros(self.weight.rows(), self.weight.cols()),
        }
    }
}

/// First-order spectral filter `D̂^{-1/2} (A + I) D̂^{-1/2}` of one snapshot.
///
/// Depends only on the adjacency matrix, so it is built once per snapshot and
/// reused across training iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphFilter(Matrix);

impl GraphFilter {
    pub fn new(adjacency: &Matrix) -> Result<Self> {
        if !adjacency.is_square() {
            return Err(Error::shape(
                "gcn filter",
                format!(
                    "adjacency must be square, got {}x{}",
                    adjacency.rows(),
                    adjacency.cols()
                ),
            ));
        }
        if adjacency.data().iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation(
                "adjacency entries must be finite and nonnegative".into(),
            ));
        }
        let n = adjacency.rows();
        let mut a_hat = adjacency.clone();
        for i in 0..n {
            a_hat[(i, i)] += 1.0;
        }
        let mut inv_sqrt_deg = Vec::with_capacity(n);
        for i in 0..n {
            let d: f64 = a_hat.row(i).iter().sum();
            if d <= 0.0 {
                return Err(Error::shape(
                    "gcn filter",
                    format!("row {i} of A + I sums to {d}"),
                ));
            }
            inv_sqrt_deg.push(1.0 / d.sqrt());
        }
        for i in 0..n {
            for j in 0..n {
                a_hat[(i, j)] *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
            }
        }
        Ok(Self(a_hat))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn n_nodes(&self) -> usize {
        self.0.rows()
    }
}

#[derive(Clone, Debug)]
pub struct GcnCache {
    /// `filter · Z`
    propagated: Matrix,
    output: Matrix,
    activation: Activation,
}

impl GcnCache {
    pub fn output(&self) -> &Matrix {
        &self.output
    }
}

#[derive(Clone, Debug)]
pub struct GcnGrads {
    pub weight: GcnLayerParams,
    pub input: Matrix,
}

/// `activation(filter(A) · Z · W)`.
pub fn gcn_forward(
    z: &Matrix,
    adjacency: &Matrix,
    params: &GcnLayerParams,
    activation: Activation,
) -> Result<Matrix> {
    let filter = GraphFilter::new(adjacency)?;
    gcn_forward_filtered(z, &filter, params, activation).map(|(x, _)| x)
}

pub fn gcn_forward_filtered(
    z: &Matrix,
    filter: &GraphFilter,
    params: &GcnLayerParams,
    activation: Activation,
) -> Result<(Matrix, GcnCache)> {
    if z.rows() != filter.n_nodes() {
        return Err(Error::shape(
            "gcn_forward",
            format!(
                "features have {} rows for {} nodes",
                z.rows(),
                filter.n_nodes()
            ),
        ));
    }
    let propagated = filter.matrix().matmul(z)?;
    let mut out = propagated.matmul(&params.weight)?;
    activation.apply_inplace(&mut out);
    let cache = GcnCache {
        propagated,
        output: out.clone(),
        activation,
    };
    Ok((out, cache))
}

pub fn gcn_backward(
    filter: &GraphFilter,
    cache: &GcnCache,
    params: &GcnLayerParams,
    grad_out: &Matrix,
) -> Result<GcnGrads> {
    if grad_out.shape() != cache.output.shape() {
        return Err(Error::shape(
            "gcn_backward",
            format!(
                "gradient {:?} for output {:?}",
                grad_out.shape(),
                cache.output.shape()
            ),
        ));
    }
    let grad_pre = cache.activation.backprop(&cache.output, grad_out);
    let weight = cache.propagated.t_matmul(&grad_pre)?;
    let input = filter
        .matrix()
        .t_matmul(&grad_pre.matmul_t(&params.weight)?)?;
    Ok(GcnGrads {
        weight: GcnLayerParams { weight },
        input,
    })
}
