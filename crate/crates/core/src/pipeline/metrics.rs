use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    /// Unset when the class is never predicted.
    pub precision: Option<f64>,
    /// Unset when the class never occurs in the gold labels.
    pub recall: Option<f64>,
    /// 0 when nothing of the class is predicted correctly; unset when the
    /// class is neither predicted nor present.
    pub f1: Option<f64>,
    pub support: usize,
    pub predicted: usize,
}

/// Counts with the `true` class as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Indexed by [`Label::index`].
    pub classes: [ClassMetrics; 2],
    pub avg_recall: f64,
    pub avg_f1: f64,
    pub accuracy: f64,
    pub confusion: Confusion,
}

impl MetricsReport {
    pub fn class(&self, label: Label) -> &ClassMetrics {
        &self.classes[label.index()]
    }
}

fn class_metrics(correct: usize, support: usize, predicted: usize) -> ClassMetrics {
    let precision = (predicted > 0).then(|| correct as f64 / predicted as f64);
    let recall = (support > 0).then(|| correct as f64 / support as f64);
    let f1 = match (precision, recall) {
        _ if support == 0 && predicted == 0 => None,
        (Some(p), Some(r)) if correct > 0 => Some(2.0 * p * r / (p + r)),
        _ => Some(0.0),
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        support,
        predicted,
    }
}

/// Per-class precision, recall and F1 plus their macro averages and accuracy.
/// Undefined recalls and F1s count as 0 in the averages.
pub fn compute_metrics(gold: &[Label], predicted: &[Label]) -> Result<MetricsReport> {
    if gold.len() != predicted.len() {
        return Err(Error::invalid(format!("{} gold labels but {} predictions", gold.len(), predicted.len())));
    }
    if gold.is_empty() {
        return Err(Error::invalid("no examples to score"));
    }
    let mut c = Confusion::default();
    for (g, p) in gold.iter().zip(predicted) {
        match (g, p) {
            (Label::True, Label::True) => c.tp += 1,
            (Label::False, Label::False) => c.tn += 1,
            (Label::False, Label::True) => c.fp += 1,
            (Label::True, Label::False) => c.fn_ += 1,
        }
    }
    let classes = [
        class_metrics(c.tn, c.tn + c.fp, c.tn + c.fn_),
        class_metrics(c.tp, c.tp + c.fn_, c.tp + c.fp),
    ];
    let avg = |f: fn(&ClassMetrics) -> Option<f64>| classes.iter().map(|m| f(m).unwrap_or(0.0)).sum::<f64>() / 2.0;
    Ok(MetricsReport {
        classes,
        avg_recall: avg(|m| m.recall),
        avg_f1: avg(|m| m.f1),
        accuracy: (c.tp + c.tn) as f64 / c.total() as f64,
        confusion: c,
    })
}

/// Percentage with one decimal, `--` when undefined.
pub fn format_percent(v: Option<f64>) -> String {
    v.map_or_else(|| "--".to_string(), |v| format!("{:.1}", 100.0 * v))
}

pub const TABLE_COLUMNS: [&str; 9] = ["P_false", "R_false", "F1_false", "P_true", "R_true", "F1_true", "AvgR", "AvgF1", "Acc"];

/// Named report rows rendered with the columns of [`TABLE_COLUMNS`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<(String, MetricsReport)>,
}

impl MetricsTable {
    pub fn push(&mut self, name: impl Into<String>, report: MetricsReport) {
        self.rows.push((name.into(), report));
    }

    fn cells(r: &MetricsReport) -> Vec<String> {
        let mut out = Vec::new();
        for m in &r.classes {
            out.extend([format_percent(m.precision), format_percent(m.recall), format_percent(m.f1)]);
        }
        out.extend([r.avg_recall, r.avg_f1, r.accuracy].map(|v| format_percent(Some(v))));
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("system,{}\n", TABLE_COLUMNS.join(","));
        for (name, r) in &self.rows {
            out.push_str(&format!("{name},{}\n", Self::cells(r).join(",")));
        }
        out
    }

    /// Fixed-width text table.
    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max("System".len());
        let mut out = format!("{:<width$}", "System");
        for c in TABLE_COLUMNS {
            out.push_str(&format!(" {c:>8}"));
        }
        out.push('\n');
        for (name, r) in &self.rows {
            out.push_str(&format!("{name:<width$}"));
            for cell in Self::cells(r) {
                out.push_str(&format!(" {cell:>8}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Predictions of the all-`label` baseline.
pub fn constant_predictions(n: usize, label: Label) -> Vec<Label> {
    vec![label; n]
}
