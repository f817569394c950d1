//! Supervised-contrastive encoder training with class-mean distance scoring
//! for out-of-distribution detection.
//!
//! An encoder is trained with the supervised contrastive loss ([`scl`]),
//! per-class mean feature vectors are fitted on the training split, and each
//! test sample is scored by its Euclidean distance to the nearest class mean
//! ([`scoring`]). Larger scores mean "more out-of-distribution"; [`metrics`]
//! turns ID and OoD score sets into AUROC and FPR at 95% TPR.

pub mod cli;
pub mod data;
pub mod embedding_file;
pub mod error;
pub mod metrics;
pub mod numerics;
pub mod scl;
pub mod scoring;
pub mod trainer;

pub use error::{Error, Result};
