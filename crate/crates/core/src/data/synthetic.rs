use serde::{Deserialize, Serialize};

use super::{Dataset, LabeledSample, SplitTag, OOD_LABEL};
use crate::error::{Error, Result};
use crate::numerics::{self, Matrix, Rng};

/// Isotropic Gaussian mixture with one far (or near) out-of-distribution
/// cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixtureConfig {
    pub k: usize,
    pub d_in: usize,
    pub n_per_class: usize,
    pub class_sep: f64,
    pub ood_offset: f64,
    pub n_ood: usize,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        MixtureConfig {
            k: 4,
            d_in: 8,
            n_per_class: 500,
            class_sep: 6.0,
            ood_offset: 30.0,
            n_ood: 400,
        }
    }
}

impl MixtureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 classes, got {}",
                self.k
            )));
        }
        if self.d_in == 0 {
            return Err(Error::Config("d_in must be at least 1".into()));
        }
        if !(self.class_sep.is_finite() && self.class_sep > 0.0) {
            return Err(Error::Config(format!(
                "class_sep must be positive, got {}",
                self.class_sep
            )));
        }
        if !(self.ood_offset.is_finite() && self.ood_offset >= 0.0) {
            return Err(Error::Config(format!(
                "ood_offset must be non-negative, got {}",
                self.ood_offset
            )));
        }
        if self.n_per_class < 5 {
            return Err(Error::InsufficientData(format!(
                "n_per_class must be at least 5, got {}",
                self.n_per_class
            )));
        }
        if self.n_ood == 0 {
            return Err(Error::InsufficientData("n_ood must be at least 1".into()));
        }

        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MixtureSplits {
    pub train: Dataset,
    pub id_test: Dataset,
    pub ood_test: Dataset,
    /// Row `c` is the center of class `c`.
    pub centers: Matrix,
    pub ood_center: Vec<f64>,
}

/// Samples the mixture.
///
/// Class `c` is centered at `class_sep · u_c`. When `k <= d_in` the `u_c` are
/// the first `k` standard basis vectors; otherwise they are random unit
/// vectors drawn from `rng`. The OoD cluster sits `ood_offset` away from the
/// centroid of the class centers, along a random unit direction orthogonal to
/// every `u_c` where one exists. All clusters have unit isotropic variance.
/// Per class, the first 80% of draws go to `train` and the rest to `id_test`.
pub fn gen_gaussian_mixture(cfg: &MixtureConfig, rng: &mut Rng) -> Result<MixtureSplits> {
    cfg.validate()?;
    let (k, d) = (cfg.k, cfg.d_in);
    let directions = if k <= d {
        Matrix::from_fn(k, d, |r, c| if r == c { 1.0 } else { 0.0 })
    } else {
        let mut m = Matrix::zeros(k, d);
        for r in 0..k {
            let v = random_unit(rng, d);
            m.row_mut(r).copy_from_slice(&v);
        }
        m
    };
    let centers = directions.scale(cfg.class_sep);
    let centroid: Vec<f64> = centers.column_sums().iter().map(|s| s / k as f64).collect();

    let ood_dir = orthogonal_direction(rng, &directions);
    let ood_center: Vec<f64> = centroid
        .iter()
        .zip(&ood_dir)
        .map(|(c, u)| c + cfg.ood_offset * u)
        .collect();

    let n_train = cfg.n_per_class * 4 / 5;
    let mut train = Vec::with_capacity(k * n_train);
    let mut id_test = Vec::with_capacity(k * (cfg.n_per_class - n_train));
    for c in 0..k {
        for i in 0..cfg.n_per_class {
            let s = LabeledSample {
                x: draw_around(rng, centers.row(c)),
                y: c as i32,
            };
            if i < n_train {
                train.push(s);
            } else {
                id_test.push(s);
            }
        }
    }
    let ood = (0..cfg.n_ood)
        .map(|_| LabeledSample {
            x: draw_around(rng, &ood_center),
            y: OOD_LABEL,
        })
        .collect();

    Ok(MixtureSplits {
        train: Dataset::new(train, k, d, SplitTag::Train)?,
        id_test: Dataset::new(id_test, k, d, SplitTag::IdTest)?,
        ood_test: Dataset::new(ood, k, d, SplitTag::OodTest)?,
        centers,
        ood_center,
    })
}

fn draw_around(rng: &mut Rng, center: &[f64]) -> Vec<f64> {
    center.iter().map(|c| c + rng.normal()).collect()
}

fn random_unit(rng: &mut Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        if let Ok(u) = numerics::l2_normalize(&v) {
            return u;
        }
    }
}

/// Random unit vector with the span of `basis` rows projected out (modified
/// Gram-Schmidt). Falls back to an unconstrained direction when the rows
/// span the whole space.
fn orthogonal_direction(rng: &mut Rng, basis: &Matrix) -> Vec<f64> {
    let d = basis.cols();
    let raw = random_unit(rng, d);
    if basis.rows() >= d {
        return raw;
    }
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for r in basis.iter_rows() {
        let mut v = r.to_vec();
        for q in &ortho {
            let p = numerics::dot_unchecked(&v, q);
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= p * b);
        }
        if let Ok(u) = numerics::l2_normalize(&v) {
            ortho.push(u);
        }
    }
    let mut v = raw.clone();
    for q in &ortho {
        let p = numerics::dot_unchecked(&v, q);
        v.iter_mut().zip(q).for_each(|(a, b)| *a -= p * b);
    }
    numerics::l2_normalize(&v).unwrap_or(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> MixtureConfig {
        MixtureConfig {
            k: 4,
            d_in: 8,
            n_per_class: 20,
            class_sep: 6.0,
            ood_offset: 30.0,
            n_ood: 10,
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = gen_gaussian_mixture(&cfg(), &mut Rng::new(9)).unwrap();
        let b = gen_gaussian_mixture(&cfg(), &mut Rng::new(9)).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.id_test, b.id_test);
        assert_eq!(a.ood_test, b.ood_test);
        let c = gen_gaussian_mixture(&cfg(), &mut Rng::new(10)).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn split_sizes_and_labels() {
        let s = gen_gaussian_mixture(&cfg(), &mut Rng::new(1)).unwrap();
        assert_eq!(s.train.len(), 4 * 16);
        assert_eq!(s.id_test.len(), 4 * 4);
        assert_eq!(s.ood_test.len(), 10);
        for c in 0..4 {
            assert_eq!(s.train.labels().iter().filter(|&&y| y == c).count(), 16);
        }
        assert!(s.ood_test.labels().iter().all(|&y| y == OOD_LABEL));
    }

    #[test]
    fn zero_offset_puts_ood_at_centroid() {
        let mut c = cfg();
        c.ood_offset = 0.0;
        let s = gen_gaussian_mixture(&c, &mut Rng::new(2)).unwrap();
        let expect = [1.5, 1.5, 1.5, 1.5, 0.0, 0.0, 0.0, 0.0];
        for (a, b) in s.ood_center.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ood_center_at_configured_offset() {
        let s = gen_gaussian_mixture(&cfg(), &mut Rng::new(4)).unwrap();
        let centroid = [1.5, 1.5, 1.5, 1.5, 0.0, 0.0, 0.0, 0.0];
        let dist = numerics::sq_dist_unchecked(&s.ood_center, &centroid).sqrt();
        assert!((dist - 30.0).abs() < 1e-9);
        // orthogonal to every class direction
        for c in 0..4 {
            assert!((s.ood_center[c] - 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn more_classes_than_dims() {
        let mut c = cfg();
        c.k = 5;
        c.d_in = 3;
        let s = gen_gaussian_mixture(&c, &mut Rng::new(4)).unwrap();
        for r in s.centers.iter_rows() {
            assert!((numerics::norm(r) - 6.0).abs() < 1e-9);
        }
    }

    #[test]
    fn validation_errors() {
        let mut c = cfg();
        c.n_per_class = 4;
        assert!(matches!(
            gen_gaussian_mixture(&c, &mut Rng::new(0)),
            Err(Error::InsufficientData(_))
        ));
        let mut c = cfg();
        c.k = 1;
        assert!(gen_gaussian_mixture(&c, &mut Rng::new(0)).is_err());
        let mut c = cfg();
        c.class_sep = 0.0;
        assert!(gen_gaussian_mixture(&c, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn class_mean_concentrates() {
        let c = MixtureConfig {
            n_per_class: 500,
            ..cfg()
        };
        let s = gen_gaussian_mixture(&c, &mut Rng::new(77)).unwrap();
        let rows: Vec<&LabeledSample> = s
            .train
            .samples()
            .iter()
            .chain(s.id_test.samples())
            .filter(|x| x.y == 0)
            .collect();
        assert_eq!(rows.len(), 500);
        for j in 0..8 {
            let mean = rows.iter().map(|r| r.x[j]).sum::<f64>() / 500.0;
            assert!(
                (mean - s.centers.get(0, j)).abs() < 0.2,
                "coord {j}: {mean}"
            );
        }
    }
}
