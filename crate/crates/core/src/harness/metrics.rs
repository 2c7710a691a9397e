//! Accuracy and rank-based AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    /// Absent when the evaluated targets contain a single class.
    pub auc: Option<f64>,
    pub n: usize,
}

/// Label at threshold 0.5; a score of exactly 0.5 maps to 1.
pub fn label(score: f64) -> u8 {
    u8::from(score >= 0.5)
}

fn check_binary(targets: &[u8]) -> Result<()> {
    match targets.iter().find(|&&t| t > 1) {
        Some(t) => Err(Error::Validation(format!("target {t} not in {{0,1}}"))),
        None => Ok(()),
    }
}

pub fn accuracy(preds: &[u8], targets: &[u8]) -> Result<f64> {
    if preds.len() != targets.len() {
        return Err(Error::Validation(format!("{} predictions for {} targets", preds.len(), targets.len())));
    }
    if preds.is_empty() {
        return Err(Error::Validation("accuracy of an empty set".into()));
    }
    check_binary(targets)?;
    let correct = preds.iter().zip(targets).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / preds.len() as f64)
}

/// Mann-Whitney AUC: `P(s_pos > s_neg) + ½ P(s_pos = s_neg)`, computed from
/// average ranks.
pub fn auc(scores: &[f64], targets: &[u8]) -> Result<f64> {
    if scores.len() != targets.len() {
        return Err(Error::Validation(format!("{} scores for {} targets", scores.len(), targets.len())));
    }
    check_binary(targets)?;
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Numeric(format!("score {s} in AUC input")));
    }
    let n_pos = targets.iter().filter(|&&t| t == 1).count();
    let n_neg = targets.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Validation("AUC is undefined when only one class is present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let avg = (i + j + 2) as f64 / 2.0;
        let pos_in_run = order[i..=j].iter().filter(|&&k| targets[k] == 1).count();
        rank_sum_pos += avg * pos_in_run as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Accuracy at 0.5 and AUC (when both classes occur) from raw scores.
pub fn evaluate(scores: &[f64], y: &[f64]) -> Result<MetricSet> {
    let targets: Vec<u8> = y.iter().map(|&v| u8::from(v >= 0.5)).collect();
    let preds: Vec<u8> = scores.iter().map(|&s| label(s)).collect();
    let accuracy = accuracy(&preds, &targets)?;
    let auc = match auc(scores, &targets) {
        Ok(a) => Some(a),
        Err(Error::Validation(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricSet { accuracy, auc, n: scores.len() })
}

/// Pearson correlation; 0 when either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}
