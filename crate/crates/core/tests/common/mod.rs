//! Independent oracles and helpers shared by the integration tests.

#![allow(dead_code)]

use supeuclid::numerics::{Matrix, Rng};
use supeuclid::scl::{scl_loss, SclBatch, SclConfig};
use supeuclid::trainer::{encoder_forward, EncoderParams};

/// AUROC by counting every (id, ood) pair.
pub fn pairwise_auroc(id: &[f64], ood: &[f64]) -> f64 {
    let (mut wins, mut ties) = (0u64, 0u64);
    for &i in id {
        for &o in ood {
            if o > i {
                wins += 1;
            } else if o == i {
                ties += 1;
            }
        }
    }
    (wins as f64 + 0.5 * ties as f64) / (id.len() as f64 * ood.len() as f64)
}

pub struct ScanResult {
    /// FPR at the most permissive feasible candidate threshold.
    pub fpr: f64,
    /// Largest feasible threshold among the observed scores, or the
    /// float just below the smallest score when none is feasible.
    pub observed_threshold: f64,
}

/// Scans every observed score, every midpoint between consecutive distinct
/// scores and one point beyond each end, flagging `score > t`.
pub fn scan_fpr(id: &[f64], ood: &[f64], target: f64) -> ScanResult {
    let mut all: Vec<f64> = id.iter().chain(ood).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let mut candidates = all.clone();
    candidates.extend(all.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    candidates.push(all[0] - 1.0);
    candidates.push(all[all.len() - 1] + 1.0);

    let above = |xs: &[f64], t: f64| xs.iter().filter(|&&x| x > t).count();
    let feasible = |t: f64| above(ood, t) as f64 / ood.len() as f64 >= target;

    let best = candidates
        .iter()
        .copied()
        .filter(|&t| feasible(t))
        .fold(f64::NEG_INFINITY, f64::max);
    let observed_threshold = all
        .iter()
        .copied()
        .filter(|&t| feasible(t))
        .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.max(t))))
        .unwrap_or_else(|| all[0].next_down());
    ScanResult {
        fpr: above(id, best) as f64 / id.len() as f64,
        observed_threshold,
    }
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn rel_err(a: f64, n: f64, floor: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(floor)
}

pub fn random_unit_rows(n: usize, d: usize, rng: &mut Rng) -> Matrix {
    let m = Matrix::from_fn(n, d, |_, _| rng.normal());
    m.normalize_rows().unwrap()
}

/// Labels in `0..k` where every class occurs at least twice.
pub fn covering_labels(n: usize, k: usize, rng: &mut Rng) -> Vec<i32> {
    let mut labels: Vec<i32> = (0..n)
        .map(|i| {
            if i < 2 * k {
                (i % k) as i32
            } else {
                rng.below(k) as i32
            }
        })
        .collect();
    rng.shuffle(&mut labels);
    labels
}

/// Central differences of the loss with respect to every entry of `z`.
pub fn fd_scl_grad(z: &Matrix, labels: &[i32], cfg: &SclConfig, h: f64) -> Matrix {
    let mut out = Matrix::zeros(z.rows(), z.cols());
    for r in 0..z.rows() {
        for c in 0..z.cols() {
            let eval = |delta: f64| {
                let mut zz = z.clone();
                zz.set(r, c, z.get(r, c) + delta);
                scl_loss(&SclBatch::new_unchecked(zz, labels.to_vec()).unwrap(), cfg).unwrap()
            };
            out.set(r, c, (eval(h) - eval(-h)) / (2.0 * h));
        }
    }
    out
}

/// Loss of the encoder's normalized output on `x`.
pub fn encoder_loss(p: &EncoderParams, x: &Matrix, labels: &[i32], cfg: &SclConfig) -> f64 {
    let out = encoder_forward(p, x).unwrap();
    scl_loss(
        &SclBatch::new(out.embeddings, labels.to_vec()).unwrap(),
        cfg,
    )
    .unwrap()
}

/// Central differences of [`encoder_loss`] for every parameter, laid out
/// like `EncoderParams::tensors`.
pub fn fd_encoder_grad(
    p: &EncoderParams,
    x: &Matrix,
    labels: &[i32],
    cfg: &SclConfig,
    h: f64,
) -> Vec<Vec<f64>> {
    let sizes: Vec<usize> = p.tensors().iter().map(|t| t.len()).collect();
    let mut out = Vec::new();
    for (t, &len) in sizes.iter().enumerate() {
        let mut g = vec![0.0; len];
        for (i, gi) in g.iter_mut().enumerate() {
            let eval = |delta: f64| {
                let mut q = p.clone();
                q.tensors_mut()[t][i] += delta;
                encoder_loss(&q, x, labels, cfg)
            };
            *gi = (eval(h) - eval(-h)) / (2.0 * h);
        }
        out.push(g);
    }
    out
}

/// Applies `q` (d×d) and then adds `shift` to every row.
pub fn rigid(f: &Matrix, q: &Matrix, shift: &[f64]) -> Matrix {
    let mut out = f.matmul(q).unwrap();
    out.add_row(shift).unwrap();
    out
}
