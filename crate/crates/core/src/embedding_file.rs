//! The `SEMB` embedding container used between pipeline stages and for
//! ingesting externally computed features.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "SEMB" | version u32 | n u64 | d u32 | has_labels u8
//! | n·d f32 rows (row-major) | n i32 labels, only if has_labels
//! ```
//!
//! Values are stored as `f32`; the engine computes in `f64`, so anything read
//! back is reproducible only to 32-bit precision.

use std::fs;
use std::path::Path;

use crate::data::{Dataset, SplitTag};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const EMBEDDING_MAGIC: &[u8; 4] = b"SEMB";
pub const EMBEDDING_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 8 + 4 + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    n: usize,
    d: usize,
    rows: Vec<f32>,
    labels: Option<Vec<i32>>,
}

impl EmbeddingFile {
    pub fn new(n: usize, d: usize, rows: Vec<f32>, labels: Option<Vec<i32>>) -> Result<Self> {
        if rows.len() != n * d {
            return Err(Error::dimension("embedding row data", n * d, rows.len()));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::dimension("embedding labels", n, l.len()));
            }
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("embedding values".into()));
        }
        Ok(EmbeddingFile { n, d, rows, labels })
    }

    /// Narrows to `f32`; values that overflow `f32` are rejected.
    pub fn from_matrix(m: &Matrix, labels: Option<&[i32]>) -> Result<Self> {
        let rows = m.as_slice().iter().map(|&v| v as f32).collect();
        EmbeddingFile::new(m.rows(), m.cols(), rows, labels.map(<[i32]>::to_vec))
    }

    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        EmbeddingFile::from_matrix(&ds.features(), Some(&ds.labels()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rows(&self) -> &[f32] {
        &self.rows
    }

    pub fn labels(&self) -> Option<&[i32]> {
        self.labels.as_deref()
    }

    /// Labels, or −1 for every row when the file is unlabeled.
    pub fn labels_or_unlabeled(&self) -> Vec<i32> {
        self.labels.clone().unwrap_or_else(|| vec![-1; self.n])
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::new(
            self.n,
            self.d,
            self.rows.iter().map(|&v| f64::from(v)).collect(),
        )
        .expect("rows validated finite on construction")
    }

    /// Rebuilds a dataset; `k` is taken as one past the largest label.
    pub fn to_dataset(&self, split: SplitTag) -> Result<Dataset> {
        let labels = self.labels_or_unlabeled();
        let k = labels
            .iter()
            .copied()
            .max()
            .map_or(0, |m| (m + 1).max(0) as usize);
        Dataset::from_matrix(&self.to_matrix(), &labels, k, split)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let label_bytes = self.labels.as_ref().map_or(0, |l| 4 * l.len());
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.rows.len() + label_bytes);
        out.extend_from_slice(EMBEDDING_MAGIC);
        out.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.d as u32).to_le_bytes());
        out.push(u8::from(self.labels.is_some()));
        for v in &self.rows {
            out.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(l) = &self.labels {
            for y in l {
                out.extend_from_slice(&y.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "embedding file truncated: {} bytes",
                bytes.len()
            )));
        }
        if &bytes[..4] != EMBEDDING_MAGIC {
            return Err(Error::Format("bad embedding file magic".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != EMBEDDING_VERSION {
            return Err(Error::Format(format!(
                "unsupported embedding file version {version}"
            )));
        }
        let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let d = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as u64;
        let has_labels = match bytes[20] {
            0 => false,
            1 => true,
            other => {
                return Err(Error::Format(format!(
                    "has_labels flag must be 0 or 1, got {other}"
                )))
            }
        };
        let expected = n
            .checked_mul(d)
            .and_then(|nd| nd.checked_add(if has_labels { n } else { 0 }))
            .and_then(|words| words.checked_mul(4))
            .and_then(|b| b.checked_add(HEADER_LEN as u64));
        if expected != Some(bytes.len() as u64) {
            return Err(Error::Format(format!(
                "embedding file is {} bytes but its header (n={n}, d={d}, labels={has_labels}) implies {}",
                bytes.len(),
                expected.map_or("an overflowing size".to_string(), |e| e.to_string())
            )));
        }
        let (n, d) = (n as usize, d as usize);
        let body = &bytes[HEADER_LEN..];
        let rows = body[..4 * n * d]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let labels = has_labels.then(|| {
            body[4 * n * d..]
                .chunks_exact(4)
                .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
                .collect()
        });
        EmbeddingFile::new(n, d, rows, labels)
            .map_err(|e| Error::Format(format!("embedding file: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        EmbeddingFile::from_bytes(&bytes).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}
