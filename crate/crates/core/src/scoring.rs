//! Class-mean prototypes and minimum-Euclidean-distance OoD scores.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{pairwise_sq_dist, Matrix};

/// Which encoder output is scored: backbone features or unit projections.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSpace {
    #[default]
    Feature,
    Projection,
}

impl FromStr for ScoreSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "feature" => Ok(ScoreSpace::Feature),
            "projection" => Ok(ScoreSpace::Projection),
            other => Err(Error::Config(format!(
                "score space must be `feature` or `projection`, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for ScoreSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreSpace::Feature => "feature",
            ScoreSpace::Projection => "projection",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet {
    mu: Matrix,
    counts: Vec<usize>,
    space: ScoreSpace,
}

impl PrototypeSet {
    /// Row `c` is the mean of class `c`.
    pub fn means(&self) -> &Matrix {
        &self.mu
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn space(&self) -> ScoreSpace {
        self.space
    }

    pub fn k(&self) -> usize {
        self.mu.rows()
    }

    pub fn dim(&self) -> usize {
        self.mu.cols()
    }
}

/// Per-class arithmetic means of the rows of `f`.
pub fn fit_prototypes(
    f: &Matrix,
    labels: &[i32],
    k: usize,
    space: ScoreSpace,
) -> Result<PrototypeSet> {
    if labels.len() != f.rows() {
        return Err(Error::dimension(
            "prototype label count",
            f.rows(),
            labels.len(),
        ));
    }
    let mut mu = Matrix::zeros(k, f.cols());
    let mut counts = vec![0usize; k];
    for (row, &y) in f.iter_rows().zip(labels) {
        if y < 0 || y as usize >= k {
            return Err(Error::Input(format!("label {y} outside 0..{k}")));
        }
        let c = y as usize;
        counts[c] += 1;
        mu.row_mut(c).iter_mut().zip(row).for_each(|(m, x)| *m += x);
    }
    for (c, &n) in counts.iter().enumerate() {
        if n == 0 {
            return Err(Error::EmptyClass { class: c });
        }
        mu.row_mut(c).iter_mut().for_each(|m| *m /= n as f64);
    }
    if !mu.is_finite() {
        return Err(Error::Numeric("class means".into()));
    }
    Ok(PrototypeSet { mu, counts, space })
}

/// OoD scores, oriented so that higher means more out-of-distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
}

/// `min_c ‖F_i − μ_c‖` for every row (the distance itself, not its square).
pub fn score(f: &Matrix, protos: &PrototypeSet) -> Result<ScoreVector> {
    if f.cols() != protos.dim() {
        return Err(Error::dimension(
            "feature dimension vs prototypes",
            protos.dim(),
            f.cols(),
        ));
    }
    let d = pairwise_sq_dist(f, &protos.mu)?;
    let scores = d
        .iter_rows()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min).sqrt())
        .collect();
    Ok(ScoreVector { scores })
}

/// Nearest prototype; ties go to the lower class index.
pub fn predict_class(f: &Matrix, protos: &PrototypeSet) -> Result<Vec<usize>> {
    if f.cols() != protos.dim() {
        return Err(Error::dimension(
            "feature dimension vs prototypes",
            protos.dim(),
            f.cols(),
        ));
    }
    let d = pairwise_sq_dist(f, &protos.mu)?;
    Ok(d.iter_rows()
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate().skip(1) {
                if v < row[best] {
                    best = c;
                }
            }
            best
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRecord {
    pub index: usize,
    pub label: i32,
    pub score: f64,
}

/// Renders `index,label,score` rows under a header. Scores are written with
/// 17 significant digits, which round-trips every `f64`.
pub fn write_scores_csv(labels: &[i32], scores: &ScoreVector) -> Result<String> {
    if labels.len() != scores.scores.len() {
        return Err(Error::dimension(
            "score CSV labels",
            scores.scores.len(),
            labels.len(),
        ));
    }
    let mut out = String::from("index,label,score\n");
    for (i, (y, s)) in labels.iter().zip(&scores.scores).enumerate() {
        out.push_str(&format!("{i},{y},{s:.16e}\n"));
    }
    Ok(out)
}

pub fn read_scores_csv(text: &str) -> Result<Vec<ScoreRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("index,label,score") => {}
        other => {
            return Err(Error::Format(format!(
                "score CSV header must be `index,label,score`, got {other:?}"
            )))
        }
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let bad = || Error::Format(format!("score CSV line {}: `{line}`", n + 2));
            let mut parts = line.split(',');
            let (Some(i), Some(y), Some(s), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(bad());
            };
            let rec = ScoreRecord {
                index: i.parse().map_err(|_| bad())?,
                label: y.parse().map_err(|_| bad())?,
                score: s.parse().map_err(|_| bad())?,
            };
            if !rec.score.is_finite() || rec.index != n {
                return Err(bad());
            }
            Ok(rec)
        })
        .collect()
}
