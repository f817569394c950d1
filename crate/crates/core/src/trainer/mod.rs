//! MLP encoder, SGD with momentum on a cosine schedule, and the supervised
//! contrastive training loop.

mod checkpoint;
mod encoder;
mod optim;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use encoder::{
    encoder_backward, encoder_forward, features, init_params, EncoderOutput, EncoderParams,
    EncoderShape, ForwardCache,
};
pub use optim::{cosine_lr, sgd_momentum_step, MomentumState};

use serde::{Deserialize, Serialize};

use crate::data::{make_batches, make_views, AugmentConfig, Dataset, SplitTag};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};
use crate::scl::{scl_loss_and_grad, SclBatch, SclConfig};
use crate::scoring::ScoreSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Decay rate; the cosine floor is `lr0 · gamma³`.
    pub gamma: f64,
    pub tau: f64,
    /// Set from the run-level seed, so not part of the serialized section.
    #[serde(skip)]
    pub seed: u64,
    pub score_space: ScoreSpace,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 128,
            lr0: 0.5,
            momentum: 0.9,
            weight_decay: 1e-4,
            gamma: 0.1,
            tau: 0.1,
            seed: 0,
            score_space: ScoreSpace::Feature,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr0.is_finite() && self.lr0 > 0.0) {
            return Err(Error::Config(format!(
                "lr0 must be positive, got {}",
                self.lr0
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Config(format!(
                "weight_decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if self.batch_size < 2 {
            return Err(Error::Config(format!(
                "batch_size must be >= 2, got {}",
                self.batch_size
            )));
        }
        self.scl().validate()
    }

    pub fn lr_floor(&self) -> f64 {
        self.lr0 * self.gamma.powi(3)
    }

    pub fn scl(&self) -> SclConfig {
        SclConfig { tau: self.tau }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub mean_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,lr,mean_loss\n");
        for r in &self.records {
            out.push_str(&format!("{},{:.16e},{:.16e}\n", r.epoch, r.lr, r.mean_loss));
        }
        out
    }
}

/// Trains an encoder on `ds` with two augmented views per sample.
///
/// The seed drives three independent streams (initialization, batching,
/// augmentation), so results are bit-identical for a fixed configuration.
pub fn train(
    ds: &Dataset,
    shape: EncoderShape,
    tc: &TrainConfig,
    ac: &AugmentConfig,
) -> Result<(EncoderParams, TrainLog)> {
    tc.validate()?;
    ac.validate()?;
    if ds.split() != SplitTag::Train {
        return Err(Error::Input(format!(
            "training needs a train split, got {:?}",
            ds.split()
        )));
    }
    if ds.k() < 2 {
        return Err(Error::InsufficientData(format!(
            "need k >= 2 classes, got {}",
            ds.k()
        )));
    }

    let mut root = Rng::new(tc.seed);
    let mut init_rng = root.fork();
    let mut batch_rng = root.fork();
    let mut aug_rng = root.fork();

    let mut params = init_params(ds.d_in(), shape, &mut init_rng)?;
    let mut state = MomentumState::new(&params);
    let mut log = TrainLog::default();
    let scl = tc.scl();

    for epoch in 0..tc.epochs {
        let lr = cosine_lr(epoch, tc)?;
        let batches = make_batches(ds, tc.batch_size, &mut batch_rng)?;
        if batches.is_empty() {
            return Err(Error::InsufficientData(format!(
                "{} samples do not fill a usable batch",
                ds.len()
            )));
        }
        let mut loss_sum = 0.0;
        for (b, idx) in batches.iter().enumerate() {
            let loss = train_step(
                ds,
                idx,
                &mut params,
                &mut state,
                lr,
                tc,
                ac,
                &scl,
                &mut aug_rng,
            )
            .map_err(|e| e.context(format!("epoch {epoch}, batch {b}")))?;
            loss_sum += loss;
        }
        log.records.push(EpochRecord {
            epoch,
            lr,
            mean_loss: loss_sum / batches.len() as f64,
        });
    }
    params.validate()?;
    Ok((params, log))
}

#[allow(clippy::too_many_arguments)]
fn train_step(
    ds: &Dataset,
    idx: &[usize],
    params: &mut EncoderParams,
    state: &mut MomentumState,
    lr: f64,
    tc: &TrainConfig,
    ac: &AugmentConfig,
    scl: &SclConfig,
    rng: &mut Rng,
) -> Result<f64> {
    let n = idx.len();
    let d = ds.d_in();
    let mut x = Matrix::zeros(2 * n, d);
    let mut labels = vec![0i32; 2 * n];
    for (slot, &i) in idx.iter().enumerate() {
        let (a, b) = make_views(&ds.samples()[i], ac, rng)?;
        x.row_mut(slot).copy_from_slice(&a.x);
        x.row_mut(slot + n).copy_from_slice(&b.x);
        labels[slot] = a.y;
        labels[slot + n] = b.y;
    }
    let out = encoder_forward(params, &x)?;
    let batch = SclBatch::new(out.embeddings, labels)?;
    let (loss, g_z) = scl_loss_and_grad(&batch, scl)?;
    let grads = encoder_backward(params, &out.cache, &g_z)?;
    sgd_momentum_step(params, &grads, state, lr, tc);
    if params
        .tensors()
        .iter()
        .any(|t| t.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::Numeric("parameters after SGD step".into()));
    }
    Ok(loss)
}

/// Encodes `x` into the requested scoring space: backbone features, or the
/// unit projection embeddings.
pub fn embed(params: &EncoderParams, x: &Matrix, space: ScoreSpace) -> Result<Matrix> {
    match space {
        ScoreSpace::Feature => features(params, x),
        ScoreSpace::Projection => encoder_forward(params, x).map(|o| o.embeddings),
    }
}
