use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Activation;

/// Direction of the critic objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticSign {
    /// Minimize `D(fake) − D(real)`, the usual Wasserstein critic.
    Wasserstein,
    /// Minimize `D(real) − D(fake)`. Kept for fidelity experiments; with this
    /// sign both players push `D(fake)` the same way.
    AsPrinted,
}

impl std::str::FromStr for CriticSign {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "wasserstein" => Ok(CriticSign::Wasserstein),
            "as-printed" => Ok(CriticSign::AsPrinted),
            other => Err(format!(
                "unknown critic sign '{other}' (wasserstein|as-printed)"
            )),
        }
    }
}

/// Per-dataset settings for λ, ε and the three learning rates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Ucsb,
    Kaist,
    BjTaxi,
    NumFabric,
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ucsb" => Ok(Preset::Ucsb),
            "kaist" => Ok(Preset::Kaist),
            "bj-taxi" | "bjtaxi" => Ok(Preset::BjTaxi),
            "numfabric" => Ok(Preset::NumFabric),
            other => Err(format!(
                "unknown preset '{other}' (ucsb|kaist|bj-taxi|numfabric)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// `l`: a training window holds `l + 1` snapshots.
    pub window: usize,
    /// `α₀`
    pub pretrain_lr: f64,
    /// `α_D`
    pub critic_lr: f64,
    /// `α_G`
    pub generator_lr: f64,
    /// `n₀`
    pub pretrain_iters: usize,
    /// `n`
    pub train_iters: usize,
    /// `c`: critic parameters are clipped to `[-c, c]`.
    pub clip: f64,
    /// `λ`
    pub l2: f64,
    /// `ε`, in the normalized `[0, 1]` domain.
    pub threshold: f64,
    pub seed: u64,
    pub rms_decay: f64,
    pub rms_eps: f64,
    pub critic_sign: CriticSign,
    pub candidate_activation: Activation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::preset(Preset::Ucsb)
    }
}

impl TrainConfig {
    pub fn preset(preset: Preset) -> Self {
        let (l2, threshold, pretrain_lr, critic_lr, generator_lr) = match preset {
            Preset::Ucsb => (0.0, 0.01, 0.005, 0.001, 0.001),
            Preset::Kaist => (1e-5, 0.01, 0.01, 0.0005, 0.0005),
            Preset::BjTaxi => (1e-5, 0.01, 0.005, 0.001, 0.001),
            Preset::NumFabric => (0.0, 0.5, 0.001, 0.001, 0.001),
        };
        Self {
            window: 10,
            pretrain_lr,
            critic_lr,
            generator_lr,
            pretrain_iters: 100,
            train_iters: 100,
            clip: 0.01,
            l2,
            threshold,
            seed: 0,
            rms_decay: 0.9,
            rms_eps: 1e-8,
            critic_sign: CriticSign::Wasserstein,
            candidate_activation: Activation::Sigmoid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Validation(msg.to_string()));
        if self.window < 1 {
            return fail("window l must be at least 1");
        }
        for (name, lr) in [
            ("pretrain_lr", self.pretrain_lr),
            ("critic_lr", self.critic_lr),
            ("generator_lr", self.generator_lr),
        ] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::Validation(format!(
                    "{name} must be positive, got {lr}"
                )));
            }
        }
        if !(self.clip > 0.0 && self.clip.is_finite()) {
            return fail("clip bound c must be positive");
        }
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return fail("threshold ε must be nonnegative");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return fail("l2 λ must be nonnegative");
        }
        if !(0.0..1.0).contains(&self.rms_decay) {
            return fail("rms_decay must lie in [0, 1)");
        }
        if !(self.rms_eps > 0.0) {
            return fail("rms_eps must be positive");
        }
        Ok(())
    }
}
