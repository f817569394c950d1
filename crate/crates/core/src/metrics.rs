//! AUROC and FPR at a target TPR for ID-vs-OoD score sets.
//!
//! OoD is the positive class throughout: a sample is flagged as OoD when its
//! score is strictly greater than the threshold, and TPR is the fraction of
//! OoD samples flagged.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CONVENTION: &str = "ood-positive";
pub const TPR_TARGET: f64 = 0.95;

fn check(name: &str, scores: &[f64]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::Input(format!("{name} score set is empty")));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::Input(format!("{name} score {i} is not finite")));
    }
    Ok(())
}

fn cmp(a: &f64, b: &f64) -> Ordering {
    a.partial_cmp(b).expect("scores checked finite")
}

/// Probability that a random OoD score exceeds a random ID score, ties
/// counted as one half.
///
/// Sort-based, and exact: the numerator is the integer `2·#wins + #ties`, so
/// the result equals the pairwise definition bit for bit.
pub fn auroc(id_scores: &[f64], ood_scores: &[f64]) -> Result<f64> {
    check("ID", id_scores)?;
    check("OoD", ood_scores)?;
    let mut id = id_scores.to_vec();
    let mut ood = ood_scores.to_vec();
    id.sort_by(cmp);
    ood.sort_by(cmp);

    // For each run of equal OoD scores, count ID scores below and equal.
    let mut twice_wins: u128 = 0;
    let mut below = 0usize;
    let mut j = 0;
    while j < ood.len() {
        let s = ood[j];
        let mut run = 0u128;
        while j < ood.len() && ood[j] == s {
            run += 1;
            j += 1;
        }
        while below < id.len() && id[below] < s {
            below += 1;
        }
        let mut equal = 0usize;
        while below + equal < id.len() && id[below + equal] == s {
            equal += 1;
        }
        twice_wins += run * (2 * below as u128 + equal as u128);
    }
    let denom = 2 * id.len() as u128 * ood.len() as u128;
    Ok(twice_wins as f64 / denom as f64)
}

/// FPR at the most permissive threshold that still flags at least
/// `tpr_target` of the OoD scores.
///
/// Returns `(fpr, threshold)`. The threshold is the largest observed score
/// that meets the target; when no observed score does (the target needs every
/// sample at the global minimum) it is the next float below that minimum.
pub fn fpr_at_tpr(id_scores: &[f64], ood_scores: &[f64], tpr_target: f64) -> Result<(f64, f64)> {
    check("ID", id_scores)?;
    check("OoD", ood_scores)?;
    if !(tpr_target > 0.0 && tpr_target <= 1.0) {
        return Err(Error::Input(format!(
            "TPR target must lie in (0, 1], got {tpr_target}"
        )));
    }
    let n_ood = ood_scores.len();
    let mut ood = ood_scores.to_vec();
    ood.sort_by(|a, b| cmp(b, a));
    // smallest flagged count meeting the target, using the same float test
    // a threshold scan would
    let needed = (1..=n_ood)
        .find(|&c| c as f64 / n_ood as f64 >= tpr_target)
        .unwrap_or(n_ood);
    let cutoff = ood[needed - 1];
    let threshold = id_scores
        .iter()
        .chain(ood_scores)
        .copied()
        .filter(|&s| s < cutoff)
        .fold(None, |acc: Option<f64>, s| {
            Some(acc.map_or(s, |a| a.max(s)))
        })
        .unwrap_or_else(|| cutoff.next_down());
    let false_pos = id_scores.iter().filter(|&&s| s > threshold).count();
    Ok((false_pos as f64 / id_scores.len() as f64, threshold))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auroc: f64,
    pub fpr95: f64,
    pub threshold: f64,
    pub n_id: usize,
    pub n_ood: usize,
    pub convention: String,
}

pub fn evaluate(id_scores: &[f64], ood_scores: &[f64]) -> Result<EvalReport> {
    let auroc = auroc(id_scores, ood_scores)?;
    let (fpr95, threshold) = fpr_at_tpr(id_scores, ood_scores, TPR_TARGET)?;
    Ok(EvalReport {
        auroc,
        fpr95,
        threshold,
        n_id: id_scores.len(),
        n_ood: ood_scores.len(),
        convention: CONVENTION.to_string(),
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("report JSON: {e}")))
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "# OoD is the positive class; flagged when score > threshold"
        )?;
        writeln!(f, "{:<12} {:>14}", "metric", "value")?;
        writeln!(f, "{:<12} {:>14.6}", "AUROC", self.auroc)?;
        writeln!(f, "{:<12} {:>14.6}", "FPR95", self.fpr95)?;
        writeln!(f, "{:<12} {:>14.6}", "threshold", self.threshold)?;
        writeln!(f, "{:<12} {:>14}", "n_id", self.n_id)?;
        writeln!(f, "{:<12} {:>14}", "n_ood", self.n_ood)?;
        write!(f, "{:<12} {:>14}", "convention", self.convention)
    }
}
