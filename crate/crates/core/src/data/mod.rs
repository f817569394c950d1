//! Labeled datasets: CIFAR-10 binary ingestion, the synthetic Gaussian
//! mixture, two-view augmentation and epoch batching.

mod augment;
mod batch;
mod cifar;
mod synthetic;

pub use augment::{crop_padded, hflip, make_views, AugmentConfig, AugmentMode, IMAGE_SIDE};
pub use batch::make_batches;
pub use cifar::{
    parse_cifar10_batch, serialize_cifar10, CIFAR_CLASSES, CIFAR_PIXELS, CIFAR_RECORD_LEN,
};
pub use synthetic::{gen_gaussian_mixture, MixtureConfig, MixtureSplits};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Label carried by every out-of-distribution sample.
pub const OOD_LABEL: i32 = -1;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    /// Class index, or [`OOD_LABEL`].
    pub y: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Train,
    IdTest,
    OodTest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<LabeledSample>,
    k: usize,
    d_in: usize,
    split: SplitTag,
}

impl Dataset {
    /// Validates dimensions, finiteness and labels against the split: OoD
    /// splits must carry only [`OOD_LABEL`], the others only `0..k`.
    pub fn new(
        samples: Vec<LabeledSample>,
        k: usize,
        d_in: usize,
        split: SplitTag,
    ) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            if s.x.len() != d_in {
                return Err(Error::dimension("sample input dimension", d_in, s.x.len())
                    .context(format!("sample {i}")));
            }
            if s.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("sample {i} features")));
            }
            let ok = match split {
                SplitTag::OodTest => s.y == OOD_LABEL,
                _ => s.y >= 0 && (s.y as usize) < k,
            };
            if !ok {
                return Err(Error::Input(format!(
                    "sample {i}: label {} invalid for {split:?} split with k={k}",
                    s.y
                )));
            }
        }
        Ok(Dataset {
            samples,
            k,
            d_in,
            split,
        })
    }

    /// Builds a dataset from a feature matrix and labels.
    pub fn from_matrix(x: &Matrix, labels: &[i32], k: usize, split: SplitTag) -> Result<Self> {
        if labels.len() != x.rows() {
            return Err(Error::dimension("label count", x.rows(), labels.len()));
        }
        let samples = x
            .iter_rows()
            .zip(labels)
            .map(|(row, &y)| LabeledSample { x: row.to_vec(), y })
            .collect();
        Dataset::new(samples, k, x.cols(), split)
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn split(&self) -> SplitTag {
        self.split
    }

    pub fn labels(&self) -> Vec<i32> {
        self.samples.iter().map(|s| s.y).collect()
    }

    pub fn features(&self) -> Matrix {
        Matrix::from_fn(self.len(), self.d_in, |r, c| self.samples[r].x[c])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ood_split_requires_sentinel() {
        let s = |y| LabeledSample { x: vec![0.0], y };
        assert!(Dataset::new(vec![s(-1)], 2, 1, SplitTag::OodTest).is_ok());
        assert!(Dataset::new(vec![s(0)], 2, 1, SplitTag::OodTest).is_err());
        assert!(Dataset::new(vec![s(-1)], 2, 1, SplitTag::Train).is_err());
        assert!(Dataset::new(vec![s(2)], 2, 1, SplitTag::IdTest).is_err());
    }

    #[test]
    fn rejects_ragged_and_nonfinite() {
        let a = LabeledSample {
            x: vec![0.0, 1.0],
            y: 0,
        };
        let b = LabeledSample { x: vec![0.0], y: 0 };
        assert!(Dataset::new(vec![a.clone(), b], 1, 2, SplitTag::Train).is_err());
        let c = LabeledSample {
            x: vec![f64::INFINITY, 1.0],
            y: 0,
        };
        assert!(matches!(
            Dataset::new(vec![a, c], 1, 2, SplitTag::Train),
            Err(Error::Numeric(_))
        ));
    }
}
