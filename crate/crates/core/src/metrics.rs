//! Evaluation metrics: permutation-invariant factor error, coefficient and
//! graph errors, relative count-reconstruction error, and ranking metrics
//! for link recovery.

use ndarray::{Array1, Array2};

use crate::assignment::min_cost_assignment;
use crate::error::{Error, Result};

/// Permutation-invariant factor error with normalized columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PermMse {
    pub mse: f64,
    /// Set when an all-zero column had to be mapped to the zero vector.
    pub had_zero_column: bool,
}

fn normalized_columns(m: &Array2<f64>) -> (Array2<f64>, bool) {
    let mut out = m.clone();
    let mut had_zero = false;
    for f in 0..m.ncols() {
        let norm: f64 = m.column(f).iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            had_zero = true;
            continue;
        }
        for i in 0..m.nrows() {
            out[(i, f)] /= norm;
        }
    }
    (out, had_zero)
}

/// Mean squared distance between normalized columns, minimized over column
/// permutations. The minimum is computed exactly as an assignment problem on
/// the pairwise cost matrix, since the objective is additive over matched
/// column pairs.
pub fn perm_mse(estimate: &Array2<f64>, truth: &Array2<f64>) -> Result<PermMse> {
    if estimate.dim() != truth.dim() {
        return Err(Error::DimensionMismatch(format!(
            "factor shapes differ: {:?} vs {:?}",
            estimate.dim(),
            truth.dim()
        )));
    }
    let f_dim = estimate.ncols();
    if f_dim == 0 {
        return Err(Error::InvalidArgument("factor matrices need >= 1 column".into()));
    }
    let (est_n, zero_a) = normalized_columns(estimate);
    let (tru_n, zero_b) = normalized_columns(truth);

    let mut cost = Array2::zeros((f_dim, f_dim));
    for g in 0..f_dim {
        for f in 0..f_dim {
            let mut acc = 0.0;
            for i in 0..estimate.nrows() {
                let d = tru_n[(i, g)] - est_n[(i, f)];
                acc += d * d;
            }
            cost[(g, f)] = acc;
        }
    }
    let (_, total) = min_cost_assignment(&cost);
    Ok(PermMse {
        mse: total / f_dim as f64,
        had_zero_column: zero_a || zero_b,
    })
}

/// `(1/R) || a_hat - a_true ||_2^2`.
pub fn alpha_mse(a_hat: &Array1<f64>, a_true: &Array1<f64>) -> Result<f64> {
    if a_hat.len() != a_true.len() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient lengths differ: {} vs {}",
            a_hat.len(),
            a_true.len()
        )));
    }
    let sq: f64 = a_hat
        .iter()
        .zip(a_true.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sq / a_hat.len() as f64)
}

/// Scale-invariant entrywise error: both matrices are divided by their own
/// Frobenius norm before the mean squared difference. A zero matrix is kept
/// as the zero matrix.
pub fn graph_mse(g_hat: &Array2<f64>, g_true: &Array2<f64>) -> Result<f64> {
    if g_hat.dim() != g_true.dim() {
        return Err(Error::DimensionMismatch(format!(
            "graph shapes differ: {:?} vs {:?}",
            g_hat.dim(),
            g_true.dim()
        )));
    }
    let scale = |m: &Array2<f64>| {
        let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            log::warn!("graph_mse: zero-norm matrix treated as the zero matrix");
            m.clone()
        } else {
            m / norm
        }
    };
    let a = scale(g_hat);
    let b = scale(g_true);
    let sq: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sq / a.len() as f64)
}

/// Relative root mean squared error `||Y_hat - Y_obs||_F / ||Y_obs||_F`.
/// Callers restrict both matrices to observed entries first.
pub fn rrmse(y_hat: &Array2<f64>, y_obs: &Array2<f64>) -> Result<f64> {
    if y_hat.dim() != y_obs.dim() {
        return Err(Error::DimensionMismatch(format!(
            "count shapes differ: {:?} vs {:?}",
            y_hat.dim(),
            y_obs.dim()
        )));
    }
    let denom: f64 = y_obs.iter().map(|x| x * x).sum::<f64>().sqrt();
    if denom == 0.0 {
        return Err(Error::DegenerateInput("observed counts are all zero".into()));
    }
    let num: f64 = y_hat
        .iter()
        .zip(y_obs.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(num / denom)
}

fn check_binary_labels(labels: &[bool]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&l| l).count();
    (pos, labels.len() - pos)
}

/// Area under the ROC curve via the rank statistic with midrank tie handling.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch("scores and labels differ in length".into()));
    }
    let (pos, neg) = check_binary_labels(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateInput(
            "AUROC needs at least one positive and one negative label".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    let mut rank_sum_pos = 0.0;
    let mut idx = 0;
    while idx < order.len() {
        let mut end = idx;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[idx]] {
            end += 1;
        }
        // ranks are 1-based; ties share the midrank
        let midrank = (idx + 1 + end + 1) as f64 / 2.0;
        for &k in &order[idx..=end] {
            if labels[k] {
                rank_sum_pos += midrank;
            }
        }
        idx = end + 1;
    }
    let pos = pos as f64;
    let neg = neg as f64;
    Ok((rank_sum_pos - pos * (pos + 1.0) / 2.0) / (pos * neg))
}

/// Area under the precision-recall curve in average-precision form, with tied
/// scores processed as one group.
pub fn auprc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch("scores and labels differ in length".into()));
    }
    let (pos, _) = check_binary_labels(labels);
    if pos == 0 {
        return Err(Error::DegenerateInput("AUPRC needs at least one positive label".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let total_pos = pos as f64;
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    let mut idx = 0;
    while idx < order.len() {
        let mut end = idx;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[idx]] {
            end += 1;
        }
        for &k in &order[idx..=end] {
            if labels[k] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
        }
        let recall = tp / total_pos;
        let precision = tp / (tp + fp);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
        idx = end + 1;
    }
    Ok(area)
}
