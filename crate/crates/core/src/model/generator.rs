use crate::error::{Error, Result};
use crate::linalg::{Matrix, Rng};
use crate::nn::{
    dense_backward, dense_forward_cached, gcn_backward, gcn_forward_filtered,
    lstm_backward_through_time, lstm_forward_sequence, Activation, DenseCache, DenseParams,
    GcnCache, GcnLayerParams, GraphFilter, LstmParams, LstmSequenceCache, ParamSet,
};

/// Generator `G`: one GCN unit shared by every snapshot of the window, an
/// LSTM over the flattened GCN outputs, and a sigmoid dense layer producing
/// the `N²` entries of the predicted snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    pub gcn: GcnLayerParams,
    pub lstm: LstmParams,
    pub output: DenseParams,
}

impl GeneratorParams {
    /// Xavier-initialized generator for `n_nodes` nodes. The GCN maps the
    /// `N × N` noise to `N × gcn_out`, the LSTM reads vectors of width
    /// `N · gcn_out`.
    pub fn new(
        rng: &mut Rng,
        n_nodes: usize,
        gcn_out: usize,
        lstm_hidden: usize,
        candidate_activation: Activation,
    ) -> Self {
        Self {
            gcn: GcnLayerParams::xavier(rng, n_nodes, gcn_out),
            lstm: LstmParams::xavier(rng, n_nodes * gcn_out, lstm_hidden, candidate_activation),
            output: DenseParams::xavier(rng, lstm_hidden, n_nodes * n_nodes),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.gcn.weight.rows()
    }

    pub fn gcn_out(&self) -> usize {
        self.gcn.weight.cols()
    }

    pub fn lstm_hidden(&self) -> usize {
        self.lstm.hidden()
    }
}

impl ParamSet for GeneratorParams {
    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = Vec::new();
        for (prefix, set) in [
            ("gcn", &self.gcn as &dyn NamedTensors),
            ("lstm", &self.lstm),
            ("output", &self.output),
        ] {
            out.extend(set.prefixed(prefix));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = self.gcn.tensors_mut();
        out.extend(self.lstm.tensors_mut());
        out.extend(self.output.tensors_mut());
        out
    }

    fn zeros_like(&self) -> Self {
        Self {
            gcn: self.gcn.zeros_like(),
            lstm: self.lstm.zeros_like(),
            output: self.output.zeros_like(),
        }
    }
}

/// Object-safe helper for building dotted tensor names.
pub(crate) trait NamedTensors {
    fn prefixed(&self, prefix: &str) -> Vec<(String, &Matrix)>;
}

impl<P: ParamSet> NamedTensors for P {
    fn prefixed(&self, prefix: &str) -> Vec<(String, &Matrix)> {
        self.named_tensors()
            .into_iter()
            .map(|(n, m)| (format!("{prefix}.{n}"), m))
            .collect()
    }
}

/// Precomputes the graph filter of every snapshot in a window.
pub fn window_filters(window: &[Matrix]) -> Result<Vec<GraphFilter>> {
    if window.is_empty() {
        return Err(Error::Validation("snapshot window is empty".into()));
    }
    window.iter().map(GraphFilter::new).collect()
}

/// Forward intermediates of one generator evaluation.
#[derive(Clone, Debug)]
pub struct GeneratorTrace {
    gcn: Vec<GcnCache>,
    lstm: LstmSequenceCache,
    output: DenseCache,
}

pub fn generator_forward(
    z: &Matrix,
    window: &[Matrix],
    params: &GeneratorParams,
) -> Result<Matrix> {
    let filters = window_filters(window)?;
    generator_forward_filtered(z, &filters, params).map(|(a, _)| a)
}

pub fn generator_forward_filtered(
    z: &Matrix,
    filters: &[GraphFilter],
    params: &GeneratorParams,
) -> Result<(Matrix, GeneratorTrace)> {
    let n = params.n_nodes();
    if filters.is_empty() {
        return Err(Error::Validation("snapshot window is empty".into()));
    }
    if z.shape() != (n, n) {
        return Err(Error::shape(
            "generator_forward",
            format!("noise {:?}, expected ({n}, {n})", z.shape()),
        ));
    }
    if let Some(f) = filters.iter().find(|f| f.n_nodes() != n) {
        return Err(Error::shape(
            "generator_forward",
            format!("snapshot with {} nodes, generator expects {n}", f.n_nodes()),
        ));
    }

    let mut gcn_caches = Vec::with_capacity(filters.len());
    let mut inputs = Vec::with_capacity(filters.len());
    for filter in filters {
        let (x, cache) = gcn_forward_filtered(z, filter, &params.gcn, Activation::Sigmoid)?;
        inputs.push(x.into_shape(1, n * params.gcn_out())?);
        gcn_caches.push(cache);
    }
    let (state, lstm_cache) = lstm_forward_sequence(&inputs, &params.lstm)?;
    let (flat, out_cache) =
        dense_forward_cached(&state.hidden, &params.output, Activation::Sigmoid)?;
    let trace = GeneratorTrace {
        gcn: gcn_caches,
        lstm: lstm_cache,
        output: out_cache,
    };
    Ok((flat.into_shape(n, n)?, trace))
}

/// Gradient of a scalar loss with respect to every generator parameter,
/// given `∂L/∂Ã` for the `N × N` output of the traced forward pass.
pub fn generator_backward(
    filters: &[GraphFilter],
    trace: &GeneratorTrace,
    params: &GeneratorParams,
    grad_output: &Matrix,
) -> Result<GeneratorParams> {
    let n = params.n_nodes();
    if grad_output.shape() != (n, n) {
        return Err(Error::shape(
            "generator_backward",
            format!("gradient {:?}, expected ({n}, {n})", grad_output.shape()),
        ));
    }
    if trace.gcn.len() != filters.len() {
        return Err(Error::Usage(format!(
            "trace holds {} steps but {} filters were supplied",
            trace.gcn.len(),
            filters.len()
        )));
    }
    let grad_flat = grad_output.reshape_rowwise(1, n * n)?;
    let (output, grad_hidden) = dense_backward(&trace.output, &params.output, &grad_flat)?;
    let (lstm, grad_inputs) = lstm_backward_through_time(&trace.lstm, &params.lstm, &grad_hidden)?;
    let mut gcn = params.gcn.zeros_like();
    for ((filter, cache), gx) in filters.iter().zip(&trace.gcn).zip(grad_inputs) {
        let gx = gx.into_shape(n, params.gcn_out())?;
        let g = gcn_backward(filter, cache, &params.gcn, &gx)?;
        gcn.weight.add_assign(&g.weight.weight)?;
    }
    Ok(GeneratorParams { gcn, lstm, output })
}
