use serde::{Deserialize, Serialize};

use super::{LabeledSample, CIFAR_PIXELS};
use crate::error::{Error, Result};
use crate::numerics::Rng;

pub const IMAGE_SIDE: usize = 32;
const CHANNELS: usize = 3;
const PLANE: usize = IMAGE_SIDE * IMAGE_SIDE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentMode {
    GaussianNoise,
    CropFlip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentConfig {
    pub mode: AugmentMode,
    pub noise_sigma: f64,
    pub crop_pad: usize,
    pub flip_prob: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            mode: AugmentMode::GaussianNoise,
            noise_sigma: 0.3,
            crop_pad: 4,
            flip_prob: 0.5,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Config(format!(
                "noise_sigma must be finite and >= 0, got {}",
                self.noise_sigma
            )));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return Err(Error::Config(format!(
                "flip_prob must lie in [0, 1], got {}",
                self.flip_prob
            )));
        }
        Ok(())
    }
}

/// Two independent augmentations of `s.x`, both labeled `s.y`.
pub fn make_views(
    s: &LabeledSample,
    cfg: &AugmentConfig,
    rng: &mut Rng,
) -> Result<(LabeledSample, LabeledSample)> {
    cfg.validate()?;
    if cfg.mode == AugmentMode::CropFlip && s.x.len() != CIFAR_PIXELS {
        return Err(Error::Mode(format!(
            "crop_flip needs a 3x32x32 image, got a vector of length {}",
            s.x.len()
        )));
    }
    let a = augment_once(&s.x, cfg, rng);
    let b = augment_once(&s.x, cfg, rng);
    Ok((
        LabeledSample { x: a, y: s.y },
        LabeledSample { x: b, y: s.y },
    ))
}

fn augment_once(x: &[f64], cfg: &AugmentConfig, rng: &mut Rng) -> Vec<f64> {
    match cfg.mode {
        AugmentMode::GaussianNoise => {
            if cfg.noise_sigma == 0.0 {
                return x.to_vec();
            }
            x.iter()
                .map(|v| v + cfg.noise_sigma * rng.normal())
                .collect()
        }
        AugmentMode::CropFlip => {
            let span = 2 * cfg.crop_pad + 1;
            let ox = rng.below(span);
            let oy = rng.below(span);
            let cropped = crop_padded(x, cfg.crop_pad, ox, oy);
            if rng.bernoulli(cfg.flip_prob) {
                hflip(&cropped)
            } else {
                cropped
            }
        }
    }
}

/// Zero-pads each plane of a 3×32×32 image by `pad` on every side and cuts
/// the 32×32 window whose top-left corner is at `(ox, oy)` in padded
/// coordinates. `(pad, pad)` returns the image unchanged.
pub fn crop_padded(img: &[f64], pad: usize, ox: usize, oy: usize) -> Vec<f64> {
    debug_assert_eq!(img.len(), CIFAR_PIXELS);
    let mut out = vec![0.0; CIFAR_PIXELS];
    for ch in 0..CHANNELS {
        let src = &img[ch * PLANE..(ch + 1) * PLANE];
        let dst = &mut out[ch * PLANE..(ch + 1) * PLANE];
        for r in 0..IMAGE_SIDE {
            let sr = (r + oy).wrapping_sub(pad);
            if sr >= IMAGE_SIDE {
                continue;
            }
            for c in 0..IMAGE_SIDE {
                let sc = (c + ox).wrapping_sub(pad);
                if sc < IMAGE_SIDE {
                    dst[r * IMAGE_SIDE + c] = src[sr * IMAGE_SIDE + sc];
                }
            }
        }
    }
    out
}

/// Mirrors each plane left to right.
pub fn hflip(img: &[f64]) -> Vec<f64> {
    debug_assert_eq!(img.len(), CIFAR_PIXELS);
    let mut out = img.to_vec();
    for row in out.chunks_exact_mut(IMAGE_SIDE) {
        row.reverse();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(rng: &mut Rng) -> Vec<f64> {
        (0..CIFAR_PIXELS).map(|_| rng.uniform01()).collect()
    }

    #[test]
    fn zero_noise_views_equal_input() {
        let s = LabeledSample {
            x: vec![1.0, -2.0, 3.0],
            y: 1,
        };
        let cfg = AugmentConfig {
            noise_sigma: 0.0,
            ..Default::default()
        };
        let (a, b) = make_views(&s, &cfg, &mut Rng::new(0)).unwrap();
        assert_eq!(a, s);
        assert_eq!(b, s);
    }

    #[test]
    fn noise_energy_matches_chi_square_mean() {
        let s = LabeledSample {
            x: vec![0.5; 8],
            y: 0,
        };
        let cfg = AugmentConfig {
            noise_sigma: 0.1,
            ..Default::default()
        };
        let mut rng = Rng::new(123);
        let draws = 10_000;
        let mut total = 0.0;
        for _ in 0..draws / 2 {
            let (a, b) = make_views(&s, &cfg, &mut rng).unwrap();
            for v in [a, b] {
                total +=
                    v.x.iter()
                        .zip(&s.x)
                        .map(|(p, q)| (p - q).powi(2))
                        .sum::<f64>();
            }
        }
        let mean = total / draws as f64;
        assert!((mean - 0.08).abs() < 0.008, "mean {mean}");
    }

    #[test]
    fn views_are_independent() {
        let s = LabeledSample {
            x: vec![0.0; 4],
            y: 2,
        };
        let (a, b) = make_views(&s, &AugmentConfig::default(), &mut Rng::new(1)).unwrap();
        assert_ne!(a.x, b.x);
        assert_eq!((a.y, b.y), (2, 2));
    }

    #[test]
    fn flip_is_an_involution() {
        let mut rng = Rng::new(8);
        let img = image(&mut rng);
        let crop = crop_padded(&img, 4, 1, 6);
        assert_eq!(hflip(&hflip(&crop)), crop);
        assert_ne!(hflip(&crop), crop);
    }

    #[test]
    fn centered_crop_is_identity() {
        let img = image(&mut Rng::new(2));
        assert_eq!(crop_padded(&img, 4, 4, 4), img);
    }

    #[test]
    fn shifted_crop_moves_pixels() {
        let img = image(&mut Rng::new(2));
        // window shifted one column right: output (r, c) = input (r, c + 1)
        let out = crop_padded(&img, 4, 5, 4);
        assert_eq!(out[0], img[1]);
        assert_eq!(out[IMAGE_SIDE - 1], 0.0);
    }

    #[test]
    fn crop_flip_rejects_vectors() {
        let s = LabeledSample {
            x: vec![0.0; 8],
            y: 0,
        };
        let cfg = AugmentConfig {
            mode: AugmentMode::CropFlip,
            ..Default::default()
        };
        assert!(matches!(
            make_views(&s, &cfg, &mut Rng::new(0)),
            Err(Error::Mode(_))
        ));
    }

    #[test]
    fn crop_flip_on_image() {
        let img = image(&mut Rng::new(5));
        let s = LabeledSample { x: img, y: 3 };
        let cfg = AugmentConfig {
            mode: AugmentMode::CropFlip,
            crop_pad: 4,
            flip_prob: 1.0,
            ..Default::default()
        };
        let (a, b) = make_views(&s, &cfg, &mut Rng::new(0)).unwrap();
        assert_eq!(a.x.len(), CIFAR_PIXELS);
        assert_eq!(b.y, 3);
    }

    #[test]
    fn invalid_flip_prob() {
        let cfg = AugmentConfig {
            flip_prob: 1.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
