//! Dense row-major matrices, vector kernels and the seeded RNG.
//!
//! Everything here computes in `f64`; the 32-bit embedding container is a
//! storage format only.

mod matrix;
mod rng;

pub use matrix::Matrix;
pub use rng::Rng;

use crate::error::{Error, Result};

/// Norms at or below this are treated as having no direction.
pub const EPS_NORM: f64 = 1e-12;

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dimension("dot", a.len(), b.len()));
    }
    Ok(dot_unchecked(a, b))
}

#[inline]
pub(crate) fn dot_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot_unchecked(v, v).sqrt()
}

/// Returns `v / ‖v‖`, failing when `‖v‖ <= EPS_NORM`.
pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let n = norm(v);
    if n.is_nan() || n <= EPS_NORM {
        return Err(Error::DegenerateVector {
            norm: n,
            threshold: EPS_NORM,
        });
    }
    Ok(v.iter().map(|x| x / n).collect())
}

#[inline]
pub(crate) fn sq_dist_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Squared Euclidean distances between every row of `a` and every row of `b`.
///
/// Uses explicit differences rather than `‖a‖² + ‖b‖² − 2a·b`, so
/// near-duplicate rows give exact small distances instead of cancellation noise.
pub fn pairwise_sq_dist(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::dimension("pairwise_sq_dist", a.cols(), b.cols()));
    }
    let mut out = Matrix::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        let ai = a.row(i);
        let dst = out.row_mut(i);
        for (j, d) in dst.iter_mut().enumerate() {
            *d = sq_dist_unchecked(ai, b.row(j));
        }
    }
    Ok(out)
}

/// Haar-ish random orthogonal `d×d` matrix: Gram-Schmidt on Gaussian columns.
pub fn random_orthogonal(d: usize, rng: &mut Rng) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        // two passes keep the basis orthogonal to ~1e-15
        for _ in 0..2 {
            for q in &cols {
                let p = dot_unchecked(&v, q);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= p * b);
            }
        }
        if let Ok(u) = l2_normalize(&v) {
            cols.push(u);
        }
    }
    Matrix::from_fn(d, d, |r, c| cols[c][r])
}
