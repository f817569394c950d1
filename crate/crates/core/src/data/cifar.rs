//! CIFAR-10 binary batches: 3073-byte records of one label byte followed by
//! the R, G and B planes of a 32×32 image.

use super::{Dataset, LabeledSample, SplitTag};
use crate::error::{Error, Result};

pub const CIFAR_PIXELS: usize = 3 * 32 * 32;
pub const CIFAR_RECORD_LEN: usize = 1 + CIFAR_PIXELS;
pub const CIFAR_CLASSES: usize = 10;

/// Parses a batch file into a training split with pixels scaled to `[0, 1]`.
pub fn parse_cifar10_batch(bytes: &[u8]) -> Result<Dataset> {
    if !bytes.len().is_multiple_of(CIFAR_RECORD_LEN) {
        return Err(Error::Format(format!(
            "CIFAR-10 stream length {} is not a multiple of {CIFAR_RECORD_LEN}",
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(CIFAR_RECORD_LEN)
        .enumerate()
        .map(|(i, rec)| {
            let label = rec[0];
            if label as usize >= CIFAR_CLASSES {
                return Err(Error::Format(format!("record {i}: label byte {label} > 9")));
            }
            Ok(LabeledSample {
                x: rec[1..].iter().map(|&p| f64::from(p) / 255.0).collect(),
                y: i32::from(label),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples, CIFAR_CLASSES, CIFAR_PIXELS, SplitTag::Train)
}

/// Inverse of [`parse_cifar10_batch`]. Every pixel must be `v/255`, either
/// exactly or as narrowed to `f32` by an embedding file.
pub fn serialize_cifar10(ds: &Dataset) -> Result<Vec<u8>> {
    if ds.d_in() != CIFAR_PIXELS {
        return Err(Error::dimension(
            "CIFAR image size",
            CIFAR_PIXELS,
            ds.d_in(),
        ));
    }
    let mut out = Vec::with_capacity(ds.len() * CIFAR_RECORD_LEN);
    for (i, s) in ds.samples().iter().enumerate() {
        if !(0..CIFAR_CLASSES as i32).contains(&s.y) {
            return Err(Error::Format(format!(
                "sample {i}: label {} not a CIFAR class",
                s.y
            )));
        }
        out.push(s.y as u8);
        for (j, &v) in s.x.iter().enumerate() {
            let byte = (v * 255.0).round();
            let exact = f64::from(byte as u8) / 255.0;
            if !(0.0..=255.0).contains(&byte) || (exact != v && exact as f32 != v as f32) {
                return Err(Error::Format(format!(
                    "sample {i} pixel {j}: {v} is not an 8-bit intensity"
                )));
            }
            out.push(byte as u8);
        }
    }
    Ok(out)
}
