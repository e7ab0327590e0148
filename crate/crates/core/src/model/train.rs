use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Rng};
use crate::nn::{clip_params, ParamSet, RmsPropState};

use super::config::TrainConfig;
use super::discriminator::DiscriminatorParams;
use super::generator::{generator_forward_filtered, window_filters, GeneratorParams};
use super::loss::{critic_loss_and_grad, generator_adv_loss_and_grad, pretrain_loss_and_grad};
use super::refine::refine;

/// Layer widths of a GCN-GAN instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GcnGanShape {
    pub n_nodes: usize,
    pub gcn_out: usize,
    pub lstm_hidden: usize,
    pub critic_hidden: usize,
}

impl GcnGanShape {
    /// Generator widths tied to `N`; critic hidden width scaled from 512
    /// units at 38 nodes.
    pub fn for_nodes(n_nodes: usize) -> Self {
        Self {
            n_nodes,
            gcn_out: n_nodes,
            lstm_hidden: n_nodes,
            critic_hidden: ((512 * n_nodes) as f64 / 38.0).round().max(8.0) as usize,
        }
    }
}

/// Generator, critic and their optimizer state: everything one training run
/// owns exclusively.
#[derive(Clone, Debug)]
pub struct GcnGan {
    pub generator: GeneratorParams,
    pub critic: DiscriminatorParams,
    pretrain_opt: RmsPropState,
    generator_opt: RmsPropState,
    critic_opt: RmsPropState,
}

impl GcnGan {
    pub fn new(rng: &mut Rng, shape: GcnGanShape, cfg: &TrainConfig) -> Self {
        let generator = GeneratorParams::new(
            rng,
            shape.n_nodes,
            shape.gcn_out,
            shape.lstm_hidden,
            cfg.candidate_activation,
        );
        let critic = DiscriminatorParams::new(rng, shape.n_nodes, shape.critic_hidden);
        Self::from_params(generator, critic, cfg)
    }

    pub fn from_params(
        generator: GeneratorParams,
        critic: DiscriminatorParams,
        cfg: &TrainConfig,
    ) -> Self {
        Self {
            pretrain_opt: RmsPropState::new(&generator, cfg.rms_decay, cfg.rms_eps),
            generator_opt: RmsPropState::new(&generator, cfg.rms_decay, cfg.rms_eps),
            critic_opt: RmsPropState::new(&critic, cfg.rms_decay, cfg.rms_eps),
            generator,
            critic,
        }
    }

    pub fn shape(&self) -> GcnGanShape {
        GcnGanShape {
            n_nodes: self.generator.n_nodes(),
            gcn_out: self.generator.gcn_out(),
            lstm_hidden: self.generator.lstm_hidden(),
            critic_hidden: self.critic.hidden_units(),
        }
    }
}

/// Per-iteration loss values recorded while training on one time slice.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SliceTrace {
    /// Reconstruction loss at each pre-training iteration, before its update.
    pub pretrain: Vec<f64>,
    /// Critic loss at each adversarial iteration, before its update.
    pub critic: Vec<f64>,
    /// Generator adversarial loss at each iteration, before its update.
    pub generator: Vec<f64>,
    /// `max |θ_D|` right after each critic update and clip.
    pub critic_max_abs: Vec<f64>,
    pub pretrain_time: Duration,
    pub adversarial_time: Duration,
}

fn check_window(history: &[Matrix], target: &Matrix, cfg: &TrainConfig, n: usize) -> Result<()> {
    if history.len() != cfg.window + 1 {
        return Err(Error::Validation(format!(
            "training needs {} input snapshots (l + 1), got {}",
            cfg.window + 1,
            history.len()
        )));
    }
    if target.shape() != (n, n) {
        return Err(Error::shape(
            "train_for_slice",
            format!("target {:?}, expected ({n}, {n})", target.shape()),
        ));
    }
    Ok(())
}

/// One time slice of training: `n₀` reconstruction steps, then `n`
/// alternating critic / generator steps. `history` holds the `l + 1`
/// normalized input snapshots and `target` the normalized ground truth.
pub fn train_for_slice(
    model: &mut GcnGan,
    history: &[Matrix],
    target: &Matrix,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<SliceTrace> {
    cfg.validate()?;
    let n = model.generator.n_nodes();
    check_window(history, target, cfg, n)?;
    let filters = window_filters(history)?;
    let mut trace = SliceTrace::default();

    let started = Instant::now();
    for _ in 0..cfg.pretrain_iters {
        let z = Matrix::uniform_noise(rng, n, n);
        let (loss, grad) = pretrain_loss_and_grad(&model.generator, &z, &filters, target, cfg.l2)?;
        model
            .pretrain_opt
            .step(&mut model.generator, &grad, cfg.pretrain_lr)?;
        trace.pretrain.push(loss);
    }
    trace.pretrain_time = started.elapsed();

    let started = Instant::now();
    for _ in 0..cfg.train_iters {
        let z = Matrix::uniform_noise(rng, n, n);
        let (fake, _) = generator_forward_filtered(&z, &filters, &model.generator)?;
        let (c_loss, c_grad) = critic_loss_and_grad(&model.critic, target, &fake, cfg.critic_sign)?;
        model
            .critic_opt
            .step(&mut model.critic, &c_grad, cfg.critic_lr)?;
        clip_params(&mut model.critic, cfg.clip);
        trace.critic.push(c_loss);
        trace.critic_max_abs.push(model.critic.max_abs());

        let z = Matrix::uniform_noise(rng, n, n);
        let (g_loss, g_grad) =
            generator_adv_loss_and_grad(&model.generator, &model.critic, &z, &filters)?;
        model
            .generator_opt
            .step(&mut model.generator, &g_grad, cfg.generator_lr)?;
        trace.generator.push(g_loss);
    }
    trace.adversarial_time = started.elapsed();
    Ok(trace)
}

/// Generates the next snapshot from the `l + 1` most recent normalized
/// snapshots, rescales it by `max_weight`, and refines it with the threshold
/// `threshold · max_weight`.
pub fn predict(
    generator: &GeneratorParams,
    window: &[Matrix],
    rng: &mut Rng,
    max_weight: f64,
    threshold: f64,
) -> Result<Matrix> {
    if !(max_weight > 0.0) {
        return Err(Error::Validation(format!(
            "max_weight must be positive, got {max_weight}"
        )));
    }
    let filters = window_filters(window)?;
    let n = generator.n_nodes();
    let z = Matrix::uniform_noise(rng, n, n);
    let (raw, _) = generator_forward_filtered(&z, &filters, generator)?;
    refine(&raw.scale(max_weight), threshold * max_weight)
}
