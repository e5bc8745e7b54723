//! Confusion counts, accuracy, per-category recall and comparison tables.
//!
//! The positive class is **Normal** (label 0). Most intrusion-detection
//! literature treats Attack as positive; here `tp` counts Normal records
//! classified Normal and `fp` counts Normal records flagged as Attack.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{Category, FeatureMode};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    /// Normal classified Normal.
    pub tp: usize,
    /// Attack classified Attack.
    pub tn: usize,
    /// Normal misclassified as Attack.
    pub fp: usize,
    /// Attack misclassified as Normal.
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// Labels: 0 = Normal, 1 = Attack.
pub fn confusion(pred: &[u8], truth: &[u8]) -> Result<ConfusionCounts> {
    check_lengths(pred.len(), truth.len())?;
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.iter().zip(truth) {
        match (t, p) {
            (0, 0) => c.tp += 1,
            (0, _) => c.fp += 1,
            (_, 0) => c.fn_ += 1,
            _ => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn accuracy(c: &ConfusionCounts) -> Result<f64> {
    let total = c.total();
    if total == 0 {
        return Err(Error::EmptyEvaluation);
    }
    Ok((c.tp + c.tn) as f64 / total as f64)
}

/// Attack categories: fraction predicted Attack. Normal: fraction predicted
/// Normal. Categories without records are omitted.
pub fn per_category_recall(pred: &[u8], categories: &[Category]) -> Result<BTreeMap<Category, f64>> {
    check_lengths(pred.len(), categories.len())?;
    let mut hits: BTreeMap<Category, (usize, usize)> = BTreeMap::new();
    for (&p, &c) in pred.iter().zip(categories) {
        let e = hits.entry(c).or_default();
        e.1 += 1;
        let want = if c == Category::Normal { 0 } else { 1 };
        if p == want {
            e.0 += 1;
        }
    }
    Ok(hits
        .into_iter()
        .map(|(c, (hit, n))| (c, hit as f64 / n as f64))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitEval {
    pub accuracy: f64,
    pub confusion: ConfusionCounts,
}

pub fn evaluate_split(pred: &[u8], truth: &[u8]) -> Result<SplitEval> {
    let confusion = confusion(pred, truth)?;
    Ok(SplitEval {
        accuracy: accuracy(&confusion)?,
        confusion,
    })
}

/// One comparison row. `failure` is set when training or evaluation of this
/// row aborted; the split fields are then whatever completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub feature_mode: FeatureMode,
    pub train: Option<SplitEval>,
    pub validation: Option<SplitEval>,
    pub test: Option<SplitEval>,
    pub test_category_recall: BTreeMap<Category, f64>,
    pub failure: Option<String>,
}

impl EvalReport {
    pub fn new(model: impl Into<String>, feature_mode: FeatureMode) -> Self {
        EvalReport {
            model: model.into(),
            feature_mode,
            train: None,
            validation: None,
            test: None,
            test_category_recall: BTreeMap::new(),
            failure: None,
        }
    }

    pub fn failed(model: impl Into<String>, feature_mode: FeatureMode, reason: impl Into<String>) -> Self {
        EvalReport {
            failure: Some(reason.into()),
            ..EvalReport::new(model, feature_mode)
        }
    }

    pub fn train_accuracy(&self) -> Option<f64> {
        self.train.map(|s| s.accuracy)
    }

    pub fn validation_accuracy(&self) -> Option<f64> {
        self.validation.map(|s| s.accuracy)
    }

    pub fn test_accuracy(&self) -> Option<f64> {
        self.test.map(|s| s.accuracy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Text,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(format!("unknown format {s:?} (expected text, csv or json)")),
        }
    }
}

const FAILED: &str = "failed";

fn cell(v: Option<f64>, text: bool) -> String {
    match v {
        Some(a) if text => format!("{a:.3}"),
        Some(a) => a.to_string(),
        None => FAILED.to_string(),
    }
}

fn table_caption(mode: FeatureMode) -> &'static str {
    match mode {
        FeatureMode::Full => "Model performance with all features.",
        FeatureMode::Sdn => "Model performance with 6 SDN features.",
    }
}

#[derive(Serialize)]
struct JsonRow<'a> {
    algorithm: &'a str,
    feature_mode: FeatureMode,
    train_accuracy: Option<f64>,
    validation_accuracy: Option<f64>,
    test_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

/// Renders rows in the order given. Text output rounds to three decimals;
/// csv and json keep full precision.
pub fn render_comparison(rows: &[EvalReport], format: ReportFormat) -> Result<String> {
    let Some(first) = rows.first() else {
        return Err(Error::EmptyEvaluation);
    };
    if rows.iter().any(|r| r.feature_mode != first.feature_mode) {
        return Err(Error::MixedFeatureModes);
    }
    let mut out = String::new();
    match format {
        ReportFormat::Text => {
            let name_w = rows.iter().map(|r| r.model.len()).max().unwrap_or(0).max(9);
            let heads = ["Train Accuracy", "Validation Accuracy", "Test Accuracy"];
            let _ = writeln!(out, "{}", table_caption(first.feature_mode));
            let _ = write!(out, "{:<name_w$}", "Algorithm");
            for h in heads {
                let _ = write!(out, "  {h}");
            }
            out.push('\n');
            for r in rows {
                let _ = write!(out, "{:<name_w$}", r.model);
                let vals = [r.train_accuracy(), r.validation_accuracy(), r.test_accuracy()];
                for (h, v) in heads.iter().zip(vals) {
                    let _ = write!(out, "  {:>w$}", cell(v, true), w = h.len());
                }
                out.push('\n');
            }
        }
        ReportFormat::Csv => {
            out.push_str("Algorithm,Train Accuracy,Validation Accuracy,Test Accuracy\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    r.model,
                    cell(r.train_accuracy(), false),
                    cell(r.validation_accuracy(), false),
                    cell(r.test_accuracy(), false)
                );
            }
        }
        ReportFormat::Json => {
            let json: Vec<JsonRow> = rows
                .iter()
                .map(|r| JsonRow {
                    algorithm: &r.model,
                    feature_mode: r.feature_mode,
                    train_accuracy: r.train_accuracy(),
                    validation_accuracy: r.validation_accuracy(),
                    test_accuracy: r.test_accuracy(),
                    error: r.failure.as_deref(),
                })
                .collect();
            out = serde_json::to_string_pretty(&json).expect("rows serialize");
            out.push('\n');
        }
    }
    Ok(out)
}

/// Detailed single-model report: accuracies, confusion counts per split and
/// test-set recall per category.
pub fn render_report(r: &EvalReport, format: ReportFormat) -> String {
    let splits = [
        ("train", r.train),
        ("validation", r.validation),
        ("test", r.test),
    ];
    let mut out = String::new();
    match format {
        ReportFormat::Text => {
            let _ = writeln!(out, "model: {} ({} features)", r.model, r.feature_mode);
            for (name, s) in splits {
                if let Some(s) = s {
                    let c = s.confusion;
                    let _ = writeln!(
                        out,
                        "{name} accuracy: {:.4}  (tp={} tn={} fp={} fn={})",
                        s.accuracy, c.tp, c.tn, c.fp, c.fn_
                    );
                }
            }
            if !r.test_category_recall.is_empty() {
                out.push_str("test recall by category:\n");
                for (c, v) in &r.test_category_recall {
                    let _ = writeln!(out, "  {c:<13} {v:.4}");
                }
            }
            if let Some(f) = &r.failure {
                let _ = writeln!(out, "failed: {f}");
            }
        }
        ReportFormat::Csv => {
            out.push_str("split,accuracy,tp,tn,fp,fn\n");
            for (name, s) in splits {
                if let Some(s) = s {
                    let c = s.confusion;
                    let _ = writeln!(out, "{name},{},{},{},{},{}", s.accuracy, c.tp, c.tn, c.fp, c.fn_);
                }
            }
            for (c, v) in &r.test_category_recall {
                let _ = writeln!(out, "recall:{c},{v},,,,");
            }
        }
        ReportFormat::Json => {
            out = serde_json::to_string_pretty(r).expect("report serializes");
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> ConfusionCounts {
        ConfusionCounts { tp, tn, fp, fn_ }
    }

    #[test]
    fn confusion_examples() {
        assert_eq!(confusion(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), counts(2, 2, 0, 0));
        assert_eq!(confusion(&[1], &[0]).unwrap(), counts(0, 0, 1, 0));
        assert_eq!(confusion(&[0], &[1]).unwrap(), counts(0, 0, 0, 1));
        assert!(matches!(confusion(&[0], &[]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&counts(5, 5, 0, 0)).unwrap(), 1.0);
        assert_eq!(accuracy(&counts(3, 2, 1, 4)).unwrap(), 0.5);
        assert_eq!(accuracy(&counts(0, 0, 1, 1)).unwrap(), 0.0);
        assert!(matches!(accuracy(&counts(0, 0, 0, 0)), Err(Error::EmptyEvaluation)));
    }

    #[test]
    fn recall_examples() {
        let cats = [Category::DoS; 4];
        let r = per_category_recall(&[1, 1, 1, 0], &cats).unwrap();
        assert_eq!(r[&Category::DoS], 0.75);
        assert!(!r.contains_key(&Category::U2R));
        let cats = [Category::Normal, Category::Probe];
        let r = per_category_recall(&[0, 1], &cats).unwrap();
        assert_eq!(r.values().copied().collect::<Vec<_>>(), vec![1.0, 1.0]);
    }

    fn row(name: &str, mode: FeatureMode, acc: [f64; 3]) -> EvalReport {
        let s = |a: f64| {
            Some(SplitEval {
                accuracy: a,
                confusion: ConfusionCounts::default(),
            })
        };
        EvalReport {
            train: s(acc[0]),
            validation: s(acc[1]),
            test: s(acc[2]),
            ..EvalReport::new(name, mode)
        }
    }

    #[test]
    fn render_single_row() {
        let rows = [row("Decision Tree", FeatureMode::Full, [1.0, 0.99781234, 0.778])];
        let text = render_comparison(&rows, ReportFormat::Text).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("Algorithm"));
        assert!(lines[2].contains("0.998") && lines[2].contains("1.000"));
        let csv = render_comparison(&rows, ReportFormat::Csv).unwrap();
        assert_eq!(
            csv,
            "Algorithm,Train Accuracy,Validation Accuracy,Test Accuracy\nDecision Tree,1,0.99781234,0.778\n"
        );
        let json: serde_json::Value =
            serde_json::from_str(&render_comparison(&rows, ReportFormat::Json).unwrap()).unwrap();
        assert_eq!(json[0]["algorithm"], "Decision Tree");
        assert_eq!(json[0]["feature_mode"], "full");
        assert_eq!(json[0]["validation_accuracy"], 0.99781234);
    }

    #[test]
    fn render_rejects_mixed_modes_and_empty() {
        let rows = [
            row("a", FeatureMode::Full, [1.0; 3]),
            row("b", FeatureMode::Sdn, [1.0; 3]),
        ];
        assert!(matches!(
            render_comparison(&rows, ReportFormat::Text),
            Err(Error::MixedFeatureModes)
        ));
        assert!(render_comparison(&[], ReportFormat::Csv).is_err());
    }

    #[test]
    fn failed_rows_are_marked() {
        let rows = [EvalReport::failed("Deep Neural Network", FeatureMode::Sdn, "diverged")];
        let csv = render_comparison(&rows, ReportFormat::Csv).unwrap();
        assert!(csv.ends_with("Deep Neural Network,failed,failed,failed\n"));
        let json = render_comparison(&rows, ReportFormat::Json).unwrap();
        assert!(json.contains("\"error\": \"diverged\""));
    }

    #[test]
    fn confusion_serializes_fn_key() {
        let s = serde_json::to_string(&counts(1, 2, 3, 4)).unwrap();
        assert_eq!(s, r#"{"tp":1,"tn":2,"fp":3,"fn":4}"#);
    }
}
