use serde::{Deserialize, Serialize};

use crate::autodiff::{Matrix, Tape, Var};
use crate::error::{GlnoError, Result};

/// `||target - pred|| / ||target||` for `V x C` fields (row-major), with
/// per-vertex weights (lumped mass on meshes) or uniform weights.
pub fn relative_l2(pred: &[f64], target: &[f64], weights: Option<&[f64]>) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(GlnoError::ShapeMismatch(format!(
            "prediction has {} values, target {}",
            pred.len(),
            target.len()
        )));
    }
    let cols = match weights {
        Some(w) if w.is_empty() || !target.len().is_multiple_of(w.len()) => {
            return Err(GlnoError::ShapeMismatch(format!(
                "{} weights for {} values",
                w.len(),
                target.len()
            )))
        }
        Some(w) => target.len() / w.len(),
        None => 1,
    };
    let (mut num, mut den) = (0.0, 0.0);
    for (k, (p, t)) in pred.iter().zip(target).enumerate() {
        let w = weights.map_or(1.0, |w| w[k / cols]);
        num += w * (t - p) * (t - p);
        den += w * t * t;
    }
    if !(den > 0.0) {
        return Err(GlnoError::InvalidArgument(
            "relative L2 of a zero-norm target".into(),
        ));
    }
    if !num.is_finite() {
        return Err(GlnoError::NonFinite("relative L2".into()));
    }
    Ok((num / den).sqrt())
}

/// Mean over rows of `logsumexp(logits_v) - logits_v[label_v]`.
pub fn nll_loss(logits: &Matrix, labels: &[usize]) -> Result<f64> {
    check_labels(logits, labels)?;
    let mut total = 0.0;
    for (v, &y) in labels.iter().enumerate() {
        let row = &logits.data[v * logits.cols..(v + 1) * logits.cols];
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
        total += lse - row[y];
    }
    Ok(total / labels.len() as f64)
}

/// Fraction of rows whose arg-max equals the label.
pub fn accuracy(logits: &Matrix, labels: &[usize]) -> Result<f64> {
    check_labels(logits, labels)?;
    let hits = labels
        .iter()
        .enumerate()
        .filter(|&(v, &y)| {
            let row = &logits.data[v * logits.cols..(v + 1) * logits.cols];
            let best = (0..row.len()).fold(0, |b, c| if row[c] > row[b] { c } else { b });
            best == y
        })
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

fn check_labels(logits: &Matrix, labels: &[usize]) -> Result<()> {
    if logits.rows != labels.len() || labels.is_empty() {
        return Err(GlnoError::ShapeMismatch(format!(
            "{} logit rows for {} labels",
            logits.rows,
            labels.len()
        )));
    }
    if let Some(y) = labels.iter().find(|&&y| y >= logits.cols) {
        return Err(GlnoError::InvalidArgument(format!(
            "label {y} out of range for {} classes",
            logits.cols
        )));
    }
    Ok(())
}

/// Class indices stored as floats in a dataset target column.
pub fn labels_from_targets(targets: &[f64], classes: usize) -> Result<Vec<usize>> {
    targets
        .iter()
        .map(|&t| {
            if t >= 0.0 && t.fract() == 0.0 && (t as usize) < classes {
                Ok(t as usize)
            } else {
                Err(GlnoError::InvalidArgument(format!(
                    "target {t} is not a class index"
                )))
            }
        })
        .collect()
}

/// Recorded relative L2 of `pred` against a constant target on the tape,
/// weighted per row.
pub fn relative_l2_var(
    tape: &mut Tape,
    pred: Var,
    target: &Matrix,
    weights: &[f64],
) -> Result<Var> {
    let den: f64 = target
        .data
        .iter()
        .enumerate()
        .map(|(k, t)| weights[k / target.cols] * t * t)
        .sum();
    if !(den > 0.0) {
        return Err(GlnoError::InvalidArgument(
            "relative L2 of a zero-norm target".into(),
        ));
    }
    let t = tape.leaf(target.clone());
    let diff = tape.sub(pred, t)?;
    let sq = tape.mul(diff, diff)?;
    let w = tape.leaf(Matrix::column(weights.to_vec()));
    let wsq = tape.mul_col(sq, w)?;
    let num = tape.sum(wsq);
    let num = tape.offset(num, 1e-30);
    let root = tape.sqrt(num);
    Ok(tape.scale(root, 1.0 / den.sqrt()))
}

/// One line of `metrics.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Validation relative L2 (regression) or accuracy (classification);
    /// `None` on epochs without validation.
    pub val_metric: Option<f64>,
    pub lr: f64,
    pub seconds: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(GlnoError::InvalidArgument(
            "slope fit needs two or more positive pairs".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(GlnoError::InvalidArgument(
            "slope fit needs distinct sizes".into(),
        ));
    }
    Ok(sxy / sxx)
}
