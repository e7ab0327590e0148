//! LSTM cell and its backward pass through time.
//!
//! Gates, for input row vector `x` and previous state `(h, s)`:
//!
//! ```text
//! i = σ(x·Wxi + h·Whi + bi)      f = σ(x·Wxf + h·Whf + bf)
//! o = σ(x·Wxo + h·Who + bo)      c = g(x·Wxc + h·Whc + bc)
//! s' = f ⊙ s + i ⊙ c             h' = o ⊙ tanh(s')
//! ```
//!
//! The candidate activation `g` defaults to the sigmoid; `tanh` is available
//! through [`LstmParams::candidate_activation`].

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Rng};

use super::{xavier_init, Activation, ParamSet};

#[derive(Clone, Debug, PartialEq)]
pub struct GateParams {
    pub input_weight: Matrix,
    pub recurrent_weight: Matrix,
    pub bias: Matrix,
}

impl GateParams {
    fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            input_weight: Matrix::zeros(inputs, hidden),
            recurrent_weight: Matrix::zeros(hidden, hidden),
            bias: Matrix::zeros(1, hidden),
        }
    }

    fn xavier(rng: &mut Rng, inputs: usize, hidden: usize) -> Self {
        Self {
            input_weight: xavier_init(rng, inputs, hidden),
            recurrent_weight: xavier_init(rng, hidden, hidden),
            bias: Matrix::zeros(1, hidden),
        }
    }

    /// `x·Wx + h·Wh + b`
    fn pre_activation(&self, x: &Matrix, h: &Matrix) -> Result<Matrix> {
        let mut a = x.matmul(&self.input_weight)?;
        a.add_assign(&h.matmul(&self.recurrent_weight)?)?;
        a.add_assign(&self.bias)?;
        Ok(a)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub input: GateParams,
    pub forget: GateParams,
    pub output: GateParams,
    pub candidate: GateParams,
    pub candidate_activation: Activation,
}

impl LstmParams {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            input: GateParams::zeros(inputs, hidden),
            forget: GateParams::zeros(inputs, hidden),
            output: GateParams::zeros(inputs, hidden),
            candidate: GateParams::zeros(inputs, hidden),
            candidate_activation: Activation::Sigmoid,
        }
    }

    pub fn xavier(
        rng: &mut Rng,
        inputs: usize,
        hidden: usize,
        candidate_activation: Activation,
    ) -> Self {
        Self {
            input: GateParams::xavier(rng, inputs, hidden),
            forget: GateParams::xavier(rng, inputs, hidden),
            output: GateParams::xavier(rng, inputs, hidden),
            candidate: GateParams::xavier(rng, inputs, hidden),
            candidate_activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.input.input_weight.rows()
    }

    pub fn hidden(&self) -> usize {
        self.input.input_weight.cols()
    }

    fn gates(&self) -> [&GateParams; 4] {
        [&self.input, &self.forget, &self.output, &self.candidate]
    }

    fn gates_mut(&mut self) -> [&mut GateParams; 4] {
        [
            &mut self.input,
            &mut self.forget,
            &mut self.output,
            &mut self.candidate,
        ]
    }
}

const GATE_NAMES: [&str; 4] = ["input", "forget", "output", "candidate"];

impl ParamSet for LstmParams {
    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = Vec::with_capacity(12);
        for (name, g) in GATE_NAMES.iter().zip(self.gates()) {
            out.push((format!("{name}.input_weight"), &g.input_weight));
            out.push((format!("{name}.recurrent_weight"), &g.recurrent_weight));
            out.push((format!("{name}.bias"), &g.bias));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::with_capacity(12);
        for g in self.gates_mut() {
            out.push(&mut g.input_weight);
            out.push(&mut g.recurrent_weight);
            out.push(&mut g.bias);
        }
        out
    }

    fn zeros_like(&self) -> Self {
        Self {
            candidate_activation: self.candidate_activation,
            ..Self::zeros(self.inputs(), self.hidden())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmState {
    pub hidden: Matrix,
    pub cell: Matrix,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            hidden: Matrix::zeros(1, hidden),
            cell: Matrix::zeros(1, hidden),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LstmStepCache {
    x: Matrix,
    prev: LstmState,
    input_gate: Matrix,
    forget_gate: Matrix,
    output_gate: Matrix,
    candidate: Matrix,
    tanh_cell: Matrix,
}

pub fn lstm_step(x: &Matrix, prev: &LstmState, params: &LstmParams) -> Result<LstmState> {
    lstm_step_cached(x, prev, params).map(|(s, _)| s)
}

pub fn lstm_step_cached(
    x: &Matrix,
    prev: &LstmState,
    params: &LstmParams,
) -> Result<(LstmState, LstmStepCache)> {
    let m_h = params.hidden();
    if x.rows() != 1 || x.cols() != params.inputs() {
        return Err(Error::shape(
            "lstm_step",
            format!("input {:?}, expected (1, {})", x.shape(), params.inputs()),
        ));
    }
    if prev.hidden.shape() != (1, m_h) || prev.cell.shape() != (1, m_h) {
        return Err(Error::shape(
            "lstm_step",
            format!(
                "state h {:?} s {:?}, expected (1, {m_h})",
                prev.hidden.shape(),
                prev.cell.shape()
            ),
        ));
    }
    let gate = |g: &GateParams, act: Activation| -> Result<Matrix> {
        let mut a = g.pre_activation(x, &prev.hidden)?;
        act.apply_inplace(&mut a);
        Ok(a)
    };
    let i = gate(&params.input, Activation::Sigmoid)?;
    let f = gate(&params.forget, Activation::Sigmoid)?;
    let o = gate(&params.output, Activation::Sigmoid)?;
    let c = gate(&params.candidate, params.candidate_activation)?;

    let mut cell = f.hadamard(&prev.cell)?;
    cell.add_assign(&i.hadamard(&c)?)?;
    let tanh_cell = cell.map(f64::tanh);
    let hidden = o.hadamard(&tanh_cell)?;

    let cache = LstmStepCache {
        x: x.clone(),
        prev: prev.clone(),
        input_gate: i,
        forget_gate: f,
        output_gate: o,
        candidate: c,
        tanh_cell,
    };
    Ok((LstmState { hidden, cell }, cache))
}

#[derive(Clone, Debug, Default)]
pub struct LstmSequenceCache {
    steps: Vec<LstmStepCache>,
}

impl LstmSequenceCache {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Unrolls the cell over `inputs` from the zero state and returns the final
/// state.
pub fn lstm_forward_sequence(
    inputs: &[Matrix],
    params: &LstmParams,
) -> Result<(LstmState, LstmSequenceCache)> {
    if inputs.is_empty() {
        return Err(Error::Validation("LSTM input sequence is empty".into()));
    }
    let mut state = LstmState::zeros(params.hidden());
    let mut cache = LstmSequenceCache {
        steps: Vec::with_capacity(inputs.len()),
    };
    for x in inputs {
        let (next, step) = lstm_step_cached(x, &state, params)?;
        cache.steps.push(step);
        state = next;
    }
    Ok((state, cache))
}

/// Backpropagates a gradient on the final hidden state through every cached
/// step. Returns parameter gradients summed over time and the gradient with
/// respect to each input row vector.
pub fn lstm_backward_through_time(
    cache: &LstmSequenceCache,
    params: &LstmParams,
    grad_last_hidden: &Matrix,
) -> Result<(LstmParams, Vec<Matrix>)> {
    if cache.is_empty() {
        return Err(Error::Usage(
            "lstm backward called without a cached forward pass".into(),
        ));
    }
    let m_h = params.hidden();
    if grad_last_hidden.shape() != (1, m_h) {
        return Err(Error::shape(
            "lstm_backward_through_time",
            format!(
                "gradient {:?}, expected (1, {m_h})",
                grad_last_hidden.shape()
            ),
        ));
    }
    let mut grads = params.zeros_like();
    let mut grad_inputs = vec![Matrix::zeros(1, params.inputs()); cache.len()];
    let mut dh = grad_last_hidden.clone();
    let mut ds_next = Matrix::zeros(1, m_h);

    for (t, step) in cache.steps.iter().enumerate().rev() {
        let mut da_i = Matrix::zeros(1, m_h);
        let mut da_f = Matrix::zeros(1, m_h);
        let mut da_o = Matrix::zeros(1, m_h);
        let mut da_c = Matrix::zeros(1, m_h);
        let mut ds_prev = Matrix::zeros(1, m_h);
        for k in 0..m_h {
            let (i, f, o, c) = (
                step.input_gate.data()[k],
                step.forget_gate.data()[k],
                step.output_gate.data()[k],
                step.candidate.data()[k],
            );
            let th = step.tanh_cell.data()[k];
            let dh_k = dh.data()[k];
            let ds = ds_next.data()[k] + dh_k * o * (1.0 - th * th);
            da_o.data_mut()[k] = dh_k * th * o * (1.0 - o);
            da_i.data_mut()[k] = ds * c * i * (1.0 - i);
            da_f.data_mut()[k] = ds * step.prev.cell.data()[k] * f * (1.0 - f);
            da_c.data_mut()[k] = ds * i * params.candidate_activation.derivative_from_output(c);
            ds_prev.data_mut()[k] = ds * f;
        }

        let mut dx = Matrix::zeros(1, params.inputs());
        let mut dh_prev = Matrix::zeros(1, m_h);
        for ((g, p), da) in grads
            .gates_mut()
            .into_iter()
            .zip(params.gates())
            .zip([&da_i, &da_f, &da_o, &da_c])
        {
            g.input_weight.add_assign(&step.x.t_matmul(da)?)?;
            g.recurrent_weight
                .add_assign(&step.prev.hidden.t_matmul(da)?)?;
            g.bias.add_assign(da)?;
            dx.add_assign(&da.matmul_t(&p.input_weight)?)?;
            dh_prev.add_assign(&da.matmul_t(&p.recurrent_weight)?)?;
        }
        grad_inputs[t] = dx;
        dh = dh_prev;
        ds_next = ds_prev;
    }
    Ok((grads, grad_inputs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_hand_case() {
        let p = LstmParams::zeros(3, 2);
        let s = lstm_step(&Matrix::zeros(1, 3), &LstmState::zeros(2), &p).unwrap();
        for k in 0..2 {
            assert!((s.cell.data()[k] - 0.25).abs() < 1e-15);
            assert!((s.hidden.data()[k] - 0.122_459_331_201_854_57).abs() < 1e-12);
        }
    }

    #[test]
    fn saturated_forget_gate_preserves_cell() {
        let mut p = LstmParams::zeros(2, 3);
        p.forget.bias = Matrix::filled(1, 3, 60.0);
        p.input.bias = Matrix::filled(1, 3, -60.0);
        let prev = LstmState {
            hidden: Matrix::from_rows(&[[0.1, -0.2, 0.3]]),
            cell: Matrix::from_rows(&[[0.7, -1.5, 2.0]]),
        };
        let next = lstm_step(&Matrix::from_rows(&[[0.4, 0.9]]), &prev, &p).unwrap();
        for (a, b) in next.cell.data().iter().zip(prev.cell.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_inputs_give_symmetric_hidden_units() {
        let mut rng = Rng::new(4);
        let mut p = LstmParams::xavier(&mut rng, 5, 4, Activation::Sigmoid);
        for g in p.gates_mut() {
            g.bias.fill(0.0);
        }
        let s = lstm_step(&Matrix::zeros(1, 5), &LstmState::zeros(4), &p).unwrap();
        let first = s.hidden.data()[0];
        assert!(s.hidden.data().iter().all(|&v| v == first));
    }

    #[test]
    fn hidden_stays_in_open_interval() {
        let mut rng = Rng::new(8);
        let p = LstmParams::xavier(&mut rng, 6, 5, Activation::Sigmoid);
        let xs: Vec<Matrix> = (0..20)
            .map(|_| Matrix::uniform_noise(&mut rng, 1, 6).scale(10.0))
            .collect();
        let (state, _) = lstm_forward_sequence(&xs, &p).unwrap();
        assert!(state.hidden.data().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn shape_and_usage_errors() {
        let p = LstmParams::zeros(3, 2);
        assert!(lstm_step(&Matrix::zeros(1, 4), &LstmState::zeros(2), &p).is_err());
        assert!(lstm_step(&Matrix::zeros(1, 3), &LstmState::zeros(3), &p).is_err());
        let err =
            lstm_backward_through_time(&LstmSequenceCache::default(), &p, &Matrix::zeros(1, 2))
                .unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    fn check_bptt(candidate: Activation) {
        let mut rng = Rng::new(21);
        let mut p = LstmParams::xavier(&mut rng, 3, 4, candidate);
        for g in p.gates_mut() {
            g.bias = Matrix::uniform_noise(&mut rng, 1, 4).add_scalar(-0.5);
        }
        let xs: Vec<Matrix> = (0..4)
            .map(|_| Matrix::uniform_noise(&mut rng, 1, 3))
            .collect();
        let weights = Matrix::from_rows(&[[0.3, -1.2, 0.8, 0.5]]);
        // L = Σ w ⊙ h_T
        let loss = |p: &LstmParams, xs: &[Matrix]| {
            let (s, _) = lstm_forward_sequence(xs, p).unwrap();
            s.hidden.hadamard(&weights).unwrap().sum()
        };
        let (_, cache) = lstm_forward_sequence(&xs, &p).unwrap();
        let (g, gx) = lstm_backward_through_time(&cache, &p, &weights).unwrap();
        let h = 1e-5;
        let grads = g.tensors();
        let n_tensors = grads.len();
        assert_eq!(n_tensors, 12);
        for t in 0..n_tensors {
            for k in 0..grads[t].len() {
                let mut up = p.clone();
                up.tensors_mut()[t].data_mut()[k] += h;
                let mut down = p.clone();
                down.tensors_mut()[t].data_mut()[k] -= h;
                let fd = (loss(&up, &xs) - loss(&down, &xs)) / (2.0 * h);
                let an = grads[t].data()[k];
                assert!(
                    (fd - an).abs() <= 1e-7 + 1e-5 * an.abs(),
                    "tensor {t}[{k}]: {fd} vs {an}"
                );
            }
        }
        for (t, gxt) in gx.iter().enumerate() {
            for k in 0..3 {
                let mut up = xs.clone();
                up[t].data_mut()[k] += h;
                let mut down = xs.clone();
                down[t].data_mut()[k] -= h;
                let fd = (loss(&p, &up) - loss(&p, &down)) / (2.0 * h);
                assert!((fd - gxt.data()[k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn bptt_matches_finite_differences_sigmoid_candidate() {
        check_bptt(Activation::Sigmoid);
    }

    #[test]
    fn bptt_matches_finite_differences_tanh_candidate() {
        check_bptt(Activation::Tanh);
    }
}
