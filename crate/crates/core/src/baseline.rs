//! Plain LSTM comparator: the generator without its GCN unit, noise input or
//! adversarial phase, trained on reconstruction error alone.
//!
//! Its predictions are evaluated unrefined by default. The sigmoid output is
//! strictly positive, so every true zero is predicted as a (small) edge;
//! that inability to produce exact zeros is what the comparison exposes.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Rng};
use crate::model::{refine, NamedTensors, TrainConfig};
use crate::nn::{
    dense_backward, dense_forward_cached, lstm_backward_through_time, lstm_forward_sequence,
    Activation, DenseCache, DenseParams, LstmParams, LstmSequenceCache, ParamSet, RmsPropState,
};

#[derive(Clone, Debug, PartialEq)]
pub struct LstmBaselineParams {
    pub lstm: LstmParams,
    pub output: DenseParams,
}

impl LstmBaselineParams {
    pub fn new(
        rng: &mut Rng,
        n_nodes: usize,
        hidden: usize,
        candidate_activation: Activation,
    ) -> Self {
        let width = n_nodes * n_nodes;
        Self {
            lstm: LstmParams::xavier(rng, width, hidden, candidate_activation),
            output: DenseParams::xavier(rng, hidden, width),
        }
    }

    pub fn n_nodes(&self) -> usize {
        (self.output.outputs() as f64).sqrt().round() as usize
    }

    pub fn hidden(&self) -> usize {
        self.lstm.hidden()
    }

    /// Hidden width scaled from 128 units at 38 nodes.
    pub fn default_hidden(n_nodes: usize) -> usize {
        ((128 * n_nodes) as f64 / 38.0).round().max(4.0) as usize
    }
}

impl ParamSet for LstmBaselineParams {
    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = self.lstm.prefixed("lstm");
        out.extend(self.output.prefixed("output"));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = self.lstm.tensors_mut();
        out.extend(self.output.tensors_mut());
        out
    }

    fn zeros_like(&self) -> Self {
        Self {
            lstm: self.lstm.zeros_like(),
            output: self.output.zeros_like(),
        }
    }
}

/// Parameters plus optimizer state.
#[derive(Clone, Debug)]
pub struct LstmBaseline {
    pub params: LstmBaselineParams,
    opt: RmsPropState,
}

impl LstmBaseline {
    pub fn new(rng: &mut Rng, n_nodes: usize, hidden: usize, cfg: &TrainConfig) -> Self {
        Self::from_params(
            LstmBaselineParams::new(rng, n_nodes, hidden, cfg.candidate_activation),
            cfg,
        )
    }

    pub fn from_params(params: LstmBaselineParams, cfg: &TrainConfig) -> Self {
        Self {
            opt: RmsPropState::new(&params, cfg.rms_decay, cfg.rms_eps),
            params,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BaselineTrace {
    lstm: LstmSequenceCache,
    output: DenseCache,
}

fn flatten_window(window: &[Matrix], n: usize) -> Result<Vec<Matrix>> {
    if window.is_empty() {
        return Err(Error::Validation("snapshot window is empty".into()));
    }
    window
        .iter()
        .map(|a| {
            if a.shape() != (n, n) {
                return Err(Error::shape(
                    "baseline_forward",
                    format!("snapshot {:?}, expected ({n}, {n})", a.shape()),
                ));
            }
            a.reshape_rowwise(1, n * n)
        })
        .collect()
}

pub fn baseline_forward(window: &[Matrix], params: &LstmBaselineParams) -> Result<Matrix> {
    baseline_forward_cached(window, params).map(|(a, _)| a)
}

pub fn baseline_forward_cached(
    window: &[Matrix],
    params: &LstmBaselineParams,
) -> Result<(Matrix, BaselineTrace)> {
    let n = params.n_nodes();
    let inputs = flatten_window(window, n)?;
    let (state, lstm) = lstm_forward_sequence(&inputs, &params.lstm)?;
    let (y, output) = dense_forward_cached(&state.hidden, &params.output, Activation::Sigmoid)?;
    Ok((y.into_shape(n, n)?, BaselineTrace { lstm, output }))
}

/// `‖target − forward(window)‖²_F` and its parameter gradient.
pub fn baseline_loss_and_grad(
    params: &LstmBaselineParams,
    window: &[Matrix],
    target: &Matrix,
) -> Result<(f64, LstmBaselineParams)> {
    let n = params.n_nodes();
    if target.shape() != (n, n) {
        return Err(Error::shape(
            "baseline_loss",
            format!("target {:?}, expected ({n}, {n})", target.shape()),
        ));
    }
    let (out, trace) = baseline_forward_cached(window, params)?;
    let residual = out.sub(target)?;
    let grad_out = residual.scale(2.0).into_shape(1, n * n)?;
    let (output, grad_h) = dense_backward(&trace.output, &params.output, &grad_out)?;
    let (lstm, _) = lstm_backward_through_time(&trace.lstm, &params.lstm, &grad_h)?;
    Ok((
        residual.frobenius_norm_sq(),
        LstmBaselineParams { lstm, output },
    ))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BaselineSliceTrace {
    /// Loss at each iteration, before its update.
    pub loss: Vec<f64>,
    pub time: Duration,
}

/// `n₀ + n` RMSProp steps at the pre-training rate, matching the GCN-GAN
/// gradient-step budget per slice.
pub fn baseline_train_for_slice(
    model: &mut LstmBaseline,
    history: &[Matrix],
    target: &Matrix,
    cfg: &TrainConfig,
) -> Result<BaselineSliceTrace> {
    cfg.validate()?;
    if history.len() != cfg.window + 1 {
        return Err(Error::Validation(format!(
            "training needs {} input snapshots (l + 1), got {}",
            cfg.window + 1,
            history.len()
        )));
    }
    let started = Instant::now();
    let mut trace = BaselineSliceTrace::default();
    for _ in 0..cfg.pretrain_iters + cfg.train_iters {
        let (loss, grad) = baseline_loss_and_grad(&model.params, history, target)?;
        model.opt.step(&mut model.params, &grad, cfg.pretrain_lr)?;
        trace.loss.push(loss);
    }
    trace.time = started.elapsed();
    Ok(trace)
}

/// Rescaled prediction; refined with `threshold · max_weight` only when
/// `threshold` is given.
pub fn baseline_predict(
    params: &LstmBaselineParams,
    window: &[Matrix],
    max_weight: f64,
    threshold: Option<f64>,
) -> Result<Matrix> {
    if !(max_weight > 0.0) {
        return Err(Error::Validation(format!(
            "max_weight must be positive, got {max_weight}"
        )));
    }
    let raw = baseline_forward(window, params)?.scale(max_weight);
    match threshold {
        Some(eps) => refine(&raw, eps * max_weight),
        None => Ok(raw),
    }
}
