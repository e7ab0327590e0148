//! GCN-GAN: generator, critic, training objectives, the per-slice training
//! procedure, and prediction with refinement.

mod config;
mod discriminator;
mod generator;
mod loss;
mod refine;
mod train;

pub use config::{CriticSign, Preset, TrainConfig};
pub use discriminator::{
    discriminator_backward, discriminator_forward, discriminator_forward_cached,
    DiscriminatorParams, DiscriminatorTrace,
};
pub use generator::{
    generator_backward, generator_forward, generator_forward_filtered, window_filters,
    GeneratorParams, GeneratorTrace,
};
pub use loss::{
    critic_loss, critic_loss_and_grad, generator_adv_loss, generator_adv_loss_and_grad,
    pretrain_loss, pretrain_loss_and_grad,
};
pub use refine::refine;
pub use train::{predict, train_for_slice, GcnGan, GcnGanShape, SliceTrace};

pub(crate) use generator::NamedTensors;
