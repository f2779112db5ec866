//! Deterministic text renderings of run artifacts: the training report,
//! per-epoch CSV, confusion CSV, and prediction reports.
//!
//! Formatting rules keep same-seed reruns byte-identical: floats print
//! either with Rust's shortest round-trip formatting or a fixed precision,
//! and wall-clock time never enters a file (it goes to stdout only).

use std::fmt::Write as _;

use pconv_core::patterns::{ConfusionMatrix, PatternReport};
use pconv_core::predictor::PredictionReport;
use pconv_core::trainer::TrainReport;

/// Configuration echo carried into the training report file.
#[derive(Debug, Clone)]
pub struct RunMeta {
    pub modulus: u64,
    pub limit: u64,
    pub nprimes: usize,
    pub context_len: usize,
    pub kernel: usize,
    pub channels: Vec<usize>,
    pub batches: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

/// `key: value` training report. Wall time is deliberately absent; see the
/// module docs.
pub fn train_report_text(report: &TrainReport, meta: &RunMeta) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "format: pconv-train-report v1");
    let _ = writeln!(out, "modulus: {}", meta.modulus);
    let _ = writeln!(out, "limit: {}", meta.limit);
    let _ = writeln!(out, "nprimes: {}", meta.nprimes);
    let _ = writeln!(out, "context_len: {}", meta.context_len);
    let _ = writeln!(out, "kernel: {}", meta.kernel);
    let channels: Vec<String> = meta.channels.iter().map(|c| c.to_string()).collect();
    let _ = writeln!(out, "channels: {}", channels.join(","));
    let _ = writeln!(out, "batches: {}", meta.batches);
    let _ = writeln!(out, "batch_size: {}", meta.batch_size);
    let _ = writeln!(out, "epochs: {}", meta.epochs);
    let _ = writeln!(out, "learning_rate: {}", meta.learning_rate);
    let _ = writeln!(out, "seed: {}", meta.seed);
    let _ = writeln!(out, "first_batch_loss: {}", report.first_batch_loss);
    let _ = writeln!(out, "updates: {}", report.updates);
    let _ = writeln!(out, "best_epoch: {}", report.best_epoch);
    let _ = writeln!(out, "best_accuracy: {}", report.best_accuracy);
    out
}

/// Per-epoch metrics as CSV.
pub fn epochs_csv(report: &TrainReport) -> String {
    let mut out = String::from("epoch,train_loss,val_accuracy\n");
    for (i, e) in report.epoch_metrics.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", i + 1, e.train_loss, e.val_accuracy);
    }
    out
}

/// Confusion matrix as CSV with class indices as header row and column.
pub fn confusion_csv(c: &ConfusionMatrix) -> String {
    let m = c.classes();
    let mut out = String::new();
    for j in 0..m {
        let _ = write!(out, ",{j}");
    }
    out.push('\n');
    for i in 0..m {
        let _ = write!(out, "{i}");
        for j in 0..m {
            let _ = write!(out, ",{}", c.at(i, j));
        }
        out.push('\n');
    }
    out
}

/// Structured text form of a prediction.
pub fn prediction_text(r: &PredictionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "modulus: {}", r.modulus);
    let _ = writeln!(out, "context_len: {}", r.context_len);
    let _ = writeln!(out, "solvable: {}", r.solvable);
    let comps: Vec<String> = r
        .components
        .iter()
        .map(|c| format!("{}^{} j={}", c.prime, c.exponent, c.solvable_exponent))
        .collect();
    let _ = writeln!(out, "components: {}", comps.join("; "));
    let _ = writeln!(out, "partition: {}", r.partition.encode());
    let _ = writeln!(
        out,
        "expected_accuracy: {} ({})",
        r.expected_accuracy,
        r.expected_accuracy.to_f64()
    );
    out
}

pub const PREDICTION_CSV_HEADER: &str = "m,B,solvable,expected_accuracy,partition";

/// One CSV row per prediction; groups are `;`-separated, members joined by
/// `+`, so the field needs no quoting.
pub fn prediction_csv_row(r: &PredictionReport) -> String {
    format!(
        "{},{},{},{},{}",
        r.modulus,
        r.context_len,
        r.solvable,
        r.expected_accuracy.to_f64(),
        r.partition.encode()
    )
}

/// Structured text form of a pattern analysis.
pub fn pattern_text(p: &PatternReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "verdict: {}", p.verdict);
    let identified: Vec<String> = p.identified.iter().map(|c| c.to_string()).collect();
    let _ = writeln!(out, "identified: {}", identified.join(","));
    let groups: Vec<String> = p
        .middle_groups
        .iter()
        .map(|g| {
            g.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join("+")
        })
        .collect();
    let _ = writeln!(out, "middle_groups: {}", groups.join(";"));
    match p.stripe_spacing {
        Some(s) => {
            let _ = writeln!(out, "stripe_spacing: {s}");
        }
        None => {
            let _ = writeln!(out, "stripe_spacing: none");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use pconv_core::predictor::predict;

    #[test]
    fn prediction_text_is_stable() {
        let r = predict(13, 8).unwrap();
        let text = prediction_text(&r);
        assert!(text.contains("solvable: false"));
        assert!(text.contains("components: 13^1 j=0"));
        assert!(text.contains("partition: 0;1+2+3+4;5;6;7;8;9;10;11;12"));
        assert!(text.contains("expected_accuracy: 10/13 (0.7692307692307693)"));
    }

    #[test]
    fn prediction_csv_row_shape() {
        let r = predict(4, 2).unwrap();
        assert_eq!(prediction_csv_row(&r), "4,2,true,1,0;1;2;3");
    }

    #[test]
    fn confusion_csv_layout() {
        let mut c = ConfusionMatrix::new(2);
        c.record(0, 0);
        c.record(1, 0);
        c.record(1, 1);
        assert_eq!(confusion_csv(&c), ",0,1\n0,1,0\n1,1,1\n");
    }
}
