//! Supervised contrastive loss over a batch of unit embeddings.
//!
//! For anchor `i` with positives `P(i)` (other rows sharing its label) and
//! candidates `A(i)` (every other row):
//!
//! ```text
//! ℓ_i = −1/|P(i)| · Σ_{p∈P(i)} log( exp(z_i·z_p/τ) / Σ_{a∈A(i)} exp(z_i·z_a/τ) )
//! L   = mean of ℓ_i over anchors with |P(i)| ≥ 1
//! ```
//!
//! Anchors without positives are left out of the mean entirely.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, Matrix, EPS_NORM};

/// Rows of an [`SclBatch`] must have unit norm within this tolerance.
pub const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SclConfig {
    pub tau: f64,
}

impl Default for SclConfig {
    fn default() -> Self {
        SclConfig { tau: 0.1 }
    }
}

impl SclConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::Config(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// Embeddings plus labels. The trainer lays views out as
/// `[view_a(0..N), view_b(0..N)]`, so rows `i` and `i+N` share a label, but
/// the loss itself accepts any row order.
#[derive(Debug, Clone)]
pub struct SclBatch {
    z: Matrix,
    labels: Vec<i32>,
}

impl SclBatch {
    /// Checks label count and that every row is unit-norm.
    pub fn new(z: Matrix, labels: Vec<i32>) -> Result<Self> {
        let batch = SclBatch::new_unchecked(z, labels)?;
        for (i, row) in batch.z.iter_rows().enumerate() {
            let n = numerics::norm(row);
            if (n - 1.0).abs() > UNIT_TOL {
                return Err(Error::Invariant(format!(
                    "row {i} has norm {n}, expected 1"
                )));
            }
        }
        Ok(batch)
    }

    /// Skips the unit-norm check. The loss expression is still well defined
    /// off the sphere, which is what finite-difference probes need.
    pub fn new_unchecked(z: Matrix, labels: Vec<i32>) -> Result<Self> {
        if labels.len() != z.rows() {
            return Err(Error::dimension("SCL label count", z.rows(), labels.len()));
        }
        Ok(SclBatch { z, labels })
    }

    pub fn z(&self) -> &Matrix {
        &self.z
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }
}

pub fn scl_loss(b: &SclBatch, cfg: &SclConfig) -> Result<f64> {
    forward_backward(b, cfg, false).map(|(l, _)| l)
}

/// `∂L/∂z_i` for every row, accumulating both the anchor and the candidate
/// role of each row.
pub fn scl_grad(b: &SclBatch, cfg: &SclConfig) -> Result<Matrix> {
    scl_loss_and_grad(b, cfg).map(|(_, g)| g)
}

pub fn scl_loss_and_grad(b: &SclBatch, cfg: &SclConfig) -> Result<(f64, Matrix)> {
    forward_backward(b, cfg, true).map(|(l, g)| (l, g.expect("gradient requested")))
}

fn forward_backward(
    b: &SclBatch,
    cfg: &SclConfig,
    want_grad: bool,
) -> Result<(f64, Option<Matrix>)> {
    cfg.validate()?;
    let n = b.z.rows();
    let inv_tau = 1.0 / cfg.tau;
    let n_pos: Vec<usize> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && b.labels[j] == b.labels[i])
                .count()
        })
        .collect();
    let anchors = n_pos.iter().filter(|&&p| p > 0).count();
    if anchors == 0 {
        return Err(Error::EmptyPositives);
    }

    let gram = b.z.matmul_t(&b.z)?;
    // coef[i][j] = ∂L/∂(z_i·z_j) through anchor i's term
    let mut coef = want_grad.then(|| Matrix::zeros(n, n));
    let scale = inv_tau / anchors as f64;
    let mut weights = vec![0.0; n];
    let mut total = 0.0;
    for (i, &np) in n_pos.iter().enumerate() {
        if np == 0 {
            continue;
        }
        let yi = b.labels[i];
        let logits = gram.row(i);
        let max = (0..n)
            .filter(|&j| j != i)
            .map(|j| logits[j] * inv_tau)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sum_exp = 0.0;
        let mut gap = 0.0;
        for j in 0..n {
            if j == i {
                weights[j] = 0.0;
                continue;
            }
            let l = logits[j] * inv_tau;
            weights[j] = (l - max).exp();
            sum_exp += weights[j];
            if b.labels[j] == yi {
                gap += max - l;
            }
        }
        let inv_pos = 1.0 / np as f64;
        // both terms are non-negative, so ℓ_i >= 0 exactly
        total += gap * inv_pos + sum_exp.ln();

        if let Some(c) = coef.as_mut() {
            let row = c.row_mut(i);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let target = if b.labels[j] == yi { inv_pos } else { 0.0 };
                row[j] = (weights[j] / sum_exp - target) * scale;
            }
        }
    }
    let grad = match coef {
        Some(c) => {
            let mut sym = c.clone();
            for i in 0..n {
                for j in 0..n {
                    sym.set(i, j, c.get(i, j) + c.get(j, i));
                }
            }
            Some(sym.matmul(&b.z)?)
        }
        None => None,
    };
    let loss = total / anchors as f64;
    if !loss.is_finite() {
        return Err(Error::Numeric("SCL loss".into()));
    }
    if let Some(g) = &grad {
        if !g.is_finite() {
            return Err(Error::Numeric("SCL gradient".into()));
        }
    }
    Ok((loss, grad))
}

/// Chain rule through `z = u/‖u‖`: `(g_z − (g_z·z) z) / ‖u‖`.
pub fn backprop_normalize(u: &[f64], g_z: &[f64]) -> Result<Vec<f64>> {
    if u.len() != g_z.len() {
        return Err(Error::dimension("backprop_normalize", u.len(), g_z.len()));
    }
    let norm = numerics::norm(u);
    if norm.is_nan() || norm <= EPS_NORM {
        return Err(Error::DegenerateVector {
            norm,
            threshold: EPS_NORM,
        });
    }
    let radial: f64 = u.iter().zip(g_z).map(|(a, g)| a * g).sum::<f64>() / norm;
    Ok(g_z
        .iter()
        .zip(u)
        .map(|(g, a)| (g - radial * a / norm) / norm)
        .collect())
}
