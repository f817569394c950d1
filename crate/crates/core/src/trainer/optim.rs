use std::f64::consts::PI;

use super::{EncoderParams, TrainConfig};
use crate::error::{Error, Result};

/// Cosine-annealed learning rate for epoch `t`, floored at `lr0 · gamma³`.
pub fn cosine_lr(t: usize, cfg: &TrainConfig) -> Result<f64> {
    if t >= cfg.epochs {
        return Err(Error::Contract(format!(
            "epoch {t} outside schedule of {} epochs",
            cfg.epochs
        )));
    }
    let floor = cfg.lr_floor();
    let phase = PI * t as f64 / cfg.epochs as f64;
    Ok(floor + 0.5 * (cfg.lr0 - floor) * (1.0 + phase.cos()))
}

/// Per-parameter velocity buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    pub velocity: EncoderParams,
}

impl MomentumState {
    pub fn new(like: &EncoderParams) -> Self {
        MomentumState {
            velocity: like.zeros_like(),
        }
    }
}

/// Classical momentum with weight decay folded into the gradient:
/// `v ← m·v + (g + wd·θ)`, `θ ← θ − lr·v`.
pub fn sgd_momentum_step(
    params: &mut EncoderParams,
    grads: &EncoderParams,
    state: &mut MomentumState,
    lr: f64,
    cfg: &TrainConfig,
) {
    let m = cfg.momentum;
    let wd = cfg.weight_decay;
    for ((theta, g), v) in params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(state.velocity.tensors_mut())
    {
        assert_eq!(theta.len(), g.len(), "gradient shape mismatch");
        for ((t, &gi), vi) in theta.iter_mut().zip(g).zip(v.iter_mut()) {
            *vi = m * *vi + (gi + wd * *t);
            *t -= lr * *vi;
        }
    }
}
