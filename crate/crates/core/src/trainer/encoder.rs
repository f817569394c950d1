use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};
use crate::scl::backprop_normalize;

/// Layer widths after the input: `d_in → hidden → feat_dim → proj_dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderShape {
    pub hidden: usize,
    pub feat_dim: usize,
    pub proj_dim: usize,
}

impl Default for EncoderShape {
    fn default() -> Self {
        EncoderShape {
            hidden: 64,
            feat_dim: 32,
            proj_dim: 16,
        }
    }
}

/// MLP encoder with a bias-free projection head:
/// `H = relu(X·W1 + b1)·W2 + b2`, `Z = normalize(H·Wp)`.
///
/// Also used to hold gradients and momentum buffers of the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub wp: Matrix,
}

impl EncoderParams {
    pub fn zeros(d_in: usize, shape: EncoderShape) -> Self {
        EncoderParams {
            w1: Matrix::zeros(d_in, shape.hidden),
            b1: vec![0.0; shape.hidden],
            w2: Matrix::zeros(shape.hidden, shape.feat_dim),
            b2: vec![0.0; shape.feat_dim],
            wp: Matrix::zeros(shape.feat_dim, shape.proj_dim),
        }
    }

    pub fn d_in(&self) -> usize {
        self.w1.rows()
    }

    pub fn shape(&self) -> EncoderShape {
        EncoderShape {
            hidden: self.w1.cols(),
            feat_dim: self.w2.cols(),
            proj_dim: self.wp.cols(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        EncoderParams::zeros(self.d_in(), self.shape())
    }

    /// Checks that the five tensors chain together and are finite.
    pub fn validate(&self) -> Result<()> {
        let h = self.w1.cols();
        let f = self.w2.cols();
        if self.b1.len() != h {
            return Err(Error::dimension("b1 length", h, self.b1.len()));
        }
        if self.w2.rows() != h {
            return Err(Error::dimension("W2 rows", h, self.w2.rows()));
        }
        if self.b2.len() != f {
            return Err(Error::dimension("b2 length", f, self.b2.len()));
        }
        if self.wp.rows() != f {
            return Err(Error::dimension("Wp rows", f, self.wp.rows()));
        }
        if self
            .tensors()
            .iter()
            .any(|t| t.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::Numeric("encoder parameters".into()));
        }
        Ok(())
    }

    /// Tensors in declaration order: W1, b1, W2, b2, Wp.
    pub fn tensors(&self) -> [&[f64]; 5] {
        [
            self.w1.as_slice(),
            &self.b1,
            self.w2.as_slice(),
            &self.b2,
            self.wp.as_slice(),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.w1.as_mut_slice(),
            &mut self.b1,
            self.w2.as_mut_slice(),
            &mut self.b2,
            self.wp.as_mut_slice(),
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for t in self.tensors() {
            h.write_usize(t.len());
            for x in t {
                h.write_u64(x.to_bits());
            }
        }
        h.finish()
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(d_in: usize, shape: EncoderShape, rng: &mut Rng) -> Result<EncoderParams> {
    if d_in == 0 || shape.hidden == 0 || shape.feat_dim == 0 || shape.proj_dim == 0 {
        return Err(Error::Config(format!(
            "encoder dimensions must be >= 1, got d_in={d_in} {shape:?}"
        )));
    }
    let mut glorot = |fan_in: usize, fan_out: usize| {
        let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Matrix::from_fn(fan_in, fan_out, |_, _| rng.uniform(-s, s))
    };
    let w1 = glorot(d_in, shape.hidden);
    let w2 = glorot(shape.hidden, shape.feat_dim);
    let wp = glorot(shape.feat_dim, shape.proj_dim);
    Ok(EncoderParams {
        w1,
        b1: vec![0.0; shape.hidden],
        w2,
        b2: vec![0.0; shape.feat_dim],
        wp,
    })
}

/// Activations retained by [`encoder_forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    x: Matrix,
    pre_relu: Matrix,
    hidden: Matrix,
    features: Matrix,
    projected: Matrix,
    params_fingerprint: u64,
}

#[derive(Debug, Clone)]
pub struct EncoderOutput {
    /// Backbone features `H`, `n × feat_dim`.
    pub features: Matrix,
    /// Unit projection embeddings `Z`, `n × proj_dim`.
    pub embeddings: Matrix,
    pub cache: ForwardCache,
}

pub fn encoder_forward(p: &EncoderParams, x: &Matrix) -> Result<EncoderOutput> {
    let (pre_relu, hidden, features) = encode_features(p, x)?;
    let projected = features.matmul(&p.wp)?;
    if !projected.is_finite() {
        return Err(Error::Numeric("projection activations".into()));
    }
    let embeddings = projected.normalize_rows()?;
    Ok(EncoderOutput {
        features: features.clone(),
        embeddings,
        cache: ForwardCache {
            x: x.clone(),
            pre_relu,
            hidden,
            features,
            projected,
            params_fingerprint: p.fingerprint(),
        },
    })
}

/// Backbone features only; never fails on a zero projection.
pub fn features(p: &EncoderParams, x: &Matrix) -> Result<Matrix> {
    encode_features(p, x).map(|(_, _, f)| f)
}

fn encode_features(p: &EncoderParams, x: &Matrix) -> Result<(Matrix, Matrix, Matrix)> {
    if x.cols() != p.d_in() {
        return Err(Error::dimension(
            "encoder input dimension",
            p.d_in(),
            x.cols(),
        ));
    }
    let mut pre_relu = x.matmul(&p.w1)?;
    pre_relu.add_row(&p.b1)?;
    let hidden = pre_relu.map(|v| v.max(0.0));
    let mut features = hidden.matmul(&p.w2)?;
    features.add_row(&p.b2)?;
    if !features.is_finite() {
        return Err(Error::Numeric("encoder features".into()));
    }
    Ok((pre_relu, hidden, features))
}

/// Reverse pass for a loss that depends on the unit embeddings `Z` only.
///
/// The ReLU derivative at exactly 0 is taken as 0.
pub fn encoder_backward(
    p: &EncoderParams,
    cache: &ForwardCache,
    g_z: &Matrix,
) -> Result<EncoderParams> {
    if cache.params_fingerprint != p.fingerprint() {
        return Err(Error::Contract(
            "forward cache was produced by different parameters".into(),
        ));
    }
    if g_z.shape() != cache.projected.shape() {
        return Err(Error::dimension(
            "embedding gradient rows",
            cache.projected.rows(),
            g_z.rows(),
        ));
    }
    let mut g_proj = Matrix::zeros(g_z.rows(), g_z.cols());
    for r in 0..g_z.rows() {
        let g = backprop_normalize(cache.projected.row(r), g_z.row(r))?;
        g_proj.row_mut(r).copy_from_slice(&g);
    }
    let wp = cache.features.t_matmul(&g_proj)?;
    let g_feat = g_proj.matmul_t(&p.wp)?;
    let w2 = cache.hidden.t_matmul(&g_feat)?;
    let b2 = g_feat.column_sums();
    let mut g_pre = g_feat.matmul_t(&p.w2)?;
    for (g, a) in g_pre
        .as_mut_slice()
        .iter_mut()
        .zip(cache.pre_relu.as_slice())
    {
        if *a <= 0.0 {
            *g = 0.0;
        }
    }
    let w1 = cache.x.t_matmul(&g_pre)?;
    let b1 = g_pre.column_sums();
    Ok(EncoderParams { w1, b1, w2, b2, wp })
}
