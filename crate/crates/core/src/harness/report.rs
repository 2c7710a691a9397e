//! Comparison tables and per-epoch curve files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::metrics::MetricSet;
use crate::train::TrainReport;

/// Header of every curves file.
pub const CURVE_COLUMNS: [&str; 7] = ["epoch", "train_loss", "val_loss", "train_acc", "val_acc", "test_acc", "checkpoint"];

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub model_type: String,
    pub metrics: MetricSet,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the per-epoch history. `test_acc` is filled only on the retained
/// epoch, which is also the only row with `checkpoint = 1`.
pub fn export_curves(report: &TrainReport, path: &Path) -> Result<()> {
    std::fs::write(path, curves_csv(report)?).map_err(|e| Error::io(path, e))
}

pub fn curves_csv(report: &TrainReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CURVE_COLUMNS)?;
    for e in &report.epochs {
        let best = e.epoch == report.best_epoch;
        let test = if best { opt(report.test.as_ref().map(|m| m.accuracy)) } else { String::new() };
        w.write_record([
            e.epoch.to_string(),
            e.train_loss.to_string(),
            opt(e.val_loss),
            opt(e.train_acc),
            opt(e.val_acc),
            test,
            u8::from(best).to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
}

/// CSV with columns `ModelType,Accuracy,AUC`, rows in the order given.
pub fn comparison_csv(rows: &[ComparisonRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["ModelType", "Accuracy", "AUC"])?;
    for r in rows {
        w.write_record([r.model_type.clone(), format!("{:.4}", r.metrics.accuracy), r.metrics.auc.map(|a| format!("{a:.4}")).unwrap_or_default()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
}

/// Aligned text table. With two or more rows, each row after the first also
/// shows its accuracy difference from the first.
pub fn comparison_text(rows: &[ComparisonRow]) -> String {
    let width = rows.iter().map(|r| r.model_type.len()).max().unwrap_or(0).max("ModelType".len());
    let deltas = rows.len() > 1;
    let mut out = format!("{:<width$}  {:>8}  {:>8}", "ModelType", "Accuracy", "AUC");
    if deltas {
        out.push_str(&format!("  {:>9}", "dAccuracy"));
    }
    out.push('\n');
    let base = rows.first().map(|r| r.metrics.accuracy).unwrap_or(0.0);
    for (i, r) in rows.iter().enumerate() {
        let auc = r.metrics.auc.map(|a| format!("{a:.4}")).unwrap_or_else(|| "n/a".into());
        let _ = write!(out, "{:<width$}  {:>8.4}  {:>8}", r.model_type, r.metrics.accuracy, auc);
        if deltas {
            let d = if i == 0 { "-".to_string() } else { format!("{:+.4}", r.metrics.accuracy - base) };
            let _ = write!(out, "  {d:>9}");
        }
        out.push('\n');
    }
    out
}

/// Writes `out` (CSV) and the same table as text next to it (`.txt`).
pub fn compare_table(rows: &[ComparisonRow], out: &Path) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Validation("compare needs at least one report".into()));
    }
    std::fs::write(out, comparison_csv(rows)?).map_err(|e| Error::io(out, e))?;
    let text = comparison_text(rows);
    let txt = out.with_extension("txt");
    std::fs::write(&txt, &text).map_err(|e| Error::io(&txt, e))?;
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::{EpochRecord, Selection};

    fn row(name: &str, acc: f64, auc: Option<f64>) -> ComparisonRow {
        ComparisonRow { model_type: name.into(), metrics: MetricSet { accuracy: acc, auc, n: 10 } }
    }

    #[test]
    fn two_reports_keep_declared_order() {
        let rows = [row("SSL ConjointNet", 0.9, Some(0.95)), row("Conjoint", 0.7, Some(0.75))];
        let csv = comparison_csv(&rows).unwrap();
        assert_eq!(csv, "ModelType,Accuracy,AUC\nSSL ConjointNet,0.9000,0.9500\nConjoint,0.7000,0.7500\n");
        let text = comparison_text(&rows);
        assert!(text.contains("dAccuracy"));
        assert!(text.contains("-0.2000"));
    }

    #[test]
    fn single_report_has_no_deltas() {
        let text = comparison_text(&[row("Conjoint", 0.5, None)]);
        assert!(!text.contains("dAccuracy"));
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("n/a"));
    }

    #[test]
    fn empty_compare_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(compare_table(&[], &dir.path().join("c.csv")).is_err());
    }

    #[test]
    fn curves_mark_checkpoint_once() {
        let mut r = TrainReport::new("m", Selection::ValAccuracy);
        for e in 1..=100 {
            r.epochs.push(EpochRecord {
                epoch: e,
                train_loss: 1.0 / e as f64,
                val_loss: None,
                train_acc: Some(0.5),
                val_acc: Some(0.6),
            });
        }
        r.best_epoch = 37;
        r.test = Some(MetricSet { accuracy: 0.61, auc: Some(0.7), n: 5 });
        let text = curves_csv(&r).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CURVE_COLUMNS.join(","));
        assert_eq!(lines.len(), 101);
        let marked: Vec<&&str> = lines[1..].iter().filter(|l| l.ends_with(",1")).collect();
        assert_eq!(marked.len(), 1);
        assert!(marked[0].starts_with("37,") && marked[0].contains(",0.61,"));
    }
}
