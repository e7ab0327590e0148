//! The three training objectives and their gradients.
//!
//! * reconstruction (pre-training): `‖A − G(Z, window)‖²_F + λ/2 · ‖θ_G‖²`
//! * critic: `D(fake) − D(real)` (or the reverse, see [`CriticSign`])
//! * generator adversarial: `−D(G(Z, window))`
//!
//! Expectations are single-draw estimates: each time slice supplies exactly
//! one training sequence.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{GraphFilter, ParamSet};

use super::config::CriticSign;
use super::discriminator::{
    discriminator_backward, discriminator_forward, discriminator_forward_cached,
    DiscriminatorParams,
};
use super::generator::{
    generator_backward, generator_forward_filtered, window_filters, GeneratorParams,
};

fn check_target(target: &Matrix, n: usize) -> Result<()> {
    if target.shape() != (n, n) {
        return Err(Error::shape(
            "loss",
            format!("target {:?}, expected ({n}, {n})", target.shape()),
        ));
    }
    Ok(())
}

pub fn pretrain_loss(
    params: &GeneratorParams,
    z: &Matrix,
    window: &[Matrix],
    target: &Matrix,
    l2: f64,
) -> Result<f64> {
    let filters = window_filters(window)?;
    check_target(target, params.n_nodes())?;
    let (out, _) = generator_forward_filtered(z, &filters, params)?;
    Ok(out.sub(target)?.frobenius_norm_sq() + 0.5 * l2 * params.sq_norm())
}

pub fn pretrain_loss_and_grad(
    params: &GeneratorParams,
    z: &Matrix,
    filters: &[GraphFilter],
    target: &Matrix,
    l2: f64,
) -> Result<(f64, GeneratorParams)> {
    check_target(target, params.n_nodes())?;
    let (out, trace) = generator_forward_filtered(z, filters, params)?;
    let residual = out.sub(target)?;
    let loss = residual.frobenius_norm_sq() + 0.5 * l2 * params.sq_norm();
    let mut grad = generator_backward(filters, &trace, params, &residual.scale(2.0))?;
    if l2 != 0.0 {
        grad.axpy(l2, params);
    }
    Ok((loss, grad))
}

fn critic_weights(sign: CriticSign) -> (f64, f64) {
    // (coefficient of D(real), coefficient of D(fake))
    match sign {
        CriticSign::Wasserstein => (-1.0, 1.0),
        CriticSign::AsPrinted => (1.0, -1.0),
    }
}

pub fn critic_loss(
    params: &DiscriminatorParams,
    real: &Matrix,
    fake: &Matrix,
    sign: CriticSign,
) -> Result<f64> {
    let (wr, wf) = critic_weights(sign);
    Ok(wr * discriminator_forward(real, params)? + wf * discriminator_forward(fake, params)?)
}

pub fn critic_loss_and_grad(
    params: &DiscriminatorParams,
    real: &Matrix,
    fake: &Matrix,
    sign: CriticSign,
) -> Result<(f64, DiscriminatorParams)> {
    let (wr, wf) = critic_weights(sign);
    let (d_real, t_real) = discriminator_forward_cached(real, params)?;
    let (d_fake, t_fake) = discriminator_forward_cached(fake, params)?;
    let (mut grad, _) = discriminator_backward(&t_real, params, wr)?;
    let (g_fake, _) = discriminator_backward(&t_fake, params, wf)?;
    grad.axpy(1.0, &g_fake);
    Ok((wr * d_real + wf * d_fake, grad))
}

pub fn generator_adv_loss(params: &DiscriminatorParams, fake: &Matrix) -> Result<f64> {
    Ok(-discriminator_forward(fake, params)?)
}

/// `−D(G(Z, window))` and its gradient with respect to `θ_G`, `θ_D` fixed.
pub fn generator_adv_loss_and_grad(
    generator: &GeneratorParams,
    critic: &DiscriminatorParams,
    z: &Matrix,
    filters: &[GraphFilter],
) -> Result<(f64, GeneratorParams)> {
    let (fake, g_trace) = generator_forward_filtered(z, filters, generator)?;
    let (d_fake, d_trace) = discriminator_forward_cached(&fake, critic)?;
    let (_, grad_fake) = discriminator_backward(&d_trace, critic, -1.0)?;
    let grad = generator_backward(filters, &g_trace, generator, &grad_fake)?;
    Ok((-d_fake, grad))
}
