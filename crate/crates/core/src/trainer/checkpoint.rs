//! Checkpoint layout (little-endian):
//!
//! ```text
//! "SEPM" | version u32 | d_in u32 | hidden u32 | feat_dim u32 | proj_dim u32
//! | W1 | b1 | W2 | b2 | Wp      (f64, row-major, declaration order)
//! ```

use super::{EncoderParams, EncoderShape};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SEPM";
pub const CHECKPOINT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 * 4;

pub fn write_checkpoint(p: &EncoderParams) -> Result<Vec<u8>> {
    p.validate()?;
    let shape = p.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * p.num_params());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for dim in [p.d_in(), shape.hidden, shape.feat_dim, shape.proj_dim] {
        let dim = u32::try_from(dim)
            .map_err(|_| Error::Format(format!("dimension {dim} exceeds u32")))?;
        out.extend_from_slice(&dim.to_le_bytes());
    }
    for t in p.tensors() {
        for x in t {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<EncoderParams> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "checkpoint truncated: {} bytes",
            bytes.len()
        )));
    }
    if &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::Format("bad checkpoint magic".into()));
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let d_in = u32_at(8) as usize;
    let shape = EncoderShape {
        hidden: u32_at(12) as usize,
        feat_dim: u32_at(16) as usize,
        proj_dim: u32_at(20) as usize,
    };
    let mut p = EncoderParams::zeros(d_in, shape);
    let expected = HEADER_LEN + 8 * p.num_params();
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "checkpoint length {} does not match header (expected {expected})",
            bytes.len()
        )));
    }
    let mut values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    for t in p.tensors_mut() {
        for (slot, v) in t.iter_mut().zip(&mut values) {
            *slot = v;
        }
    }
    p.validate()
        .map_err(|e| Error::Format(format!("checkpoint tensors: {e}")))?;
    Ok(p)
}
