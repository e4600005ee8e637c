//! Validity-filtered multi-label evaluation.
//!
//! Each label is scored only over the documents valid for it. Predictions of
//! a label on a document outside its valid set are dropped before counting
//! (validity filtering) rather than penalized.
//!
//! Undefined ratios (0/0) are reported as 0 and flagged per label.

mod report;
mod wilcoxon;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use report::{format_rate, write_report, ReportTable};
pub use wilcoxon::{compare, wilcoxon_signed_rank, Alternative, WilcoxonMethod, WilcoxonReport};

use crate::datasets::LabeledDataset;
use crate::error::{Error, Result};
use crate::pmid::Pmid;

/// Predicted label sets by document.
pub type Predictions = BTreeMap<Pmid, BTreeSet<String>>;

#[derive(Serialize, Deserialize)]
struct PredictionLine {
    pmid: Pmid,
    labels: Vec<String>,
}

/// Reads the shared predictions schema `{ "pmid": str, "labels": [str] }`.
/// Repeated pmids are merged.
pub fn read_predictions(path: impl AsRef<Path>) -> Result<Predictions> {
    let lines: Vec<PredictionLine> = crate::corpus::read_jsonl(path.as_ref())?;
    let mut out = Predictions::new();
    for l in lines {
        out.entry(l.pmid).or_default().extend(l.labels);
    }
    Ok(out)
}

pub fn write_predictions(path: impl AsRef<Path>, predictions: &Predictions) -> Result<()> {
    let lines: Vec<PredictionLine> = predictions
        .iter()
        .map(|(p, l)| PredictionLine {
            pmid: p.clone(),
            labels: l.iter().cloned().collect(),
        })
        .collect();
    crate::corpus::write_jsonl(path.as_ref(), &lines)
}

fn unknown_pmid(predictions: &Predictions, dataset: &LabeledDataset) -> Result<()> {
    match predictions.keys().find(|p| dataset.row(p).is_none()) {
        Some(p) => Err(Error::UnknownPmid(p.0.clone())),
        None => Ok(()),
    }
}

/// Keeps, for every document, only the predicted labels it is valid for.
pub fn validity_filter(predictions: &Predictions, dataset: &LabeledDataset) -> Result<Predictions> {
    unknown_pmid(predictions, dataset)?;
    Ok(predictions
        .iter()
        .map(|(p, labels)| {
            let valid = &dataset.row(p).expect("checked above").valid_labels;
            (p.clone(), labels.intersection(valid).cloned().collect())
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreOptions {
    pub validity_filter: bool,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions {
            validity_filter: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScore {
    pub label: String,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when the corresponding ratio was 0/0 and reported as 0.
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

impl LabelScore {
    pub fn from_counts(label: impl Into<String>, tp: u64, fp: u64, fn_: u64) -> Self {
        let (precision, pu) = ratio(tp, tp + fp);
        let (recall, ru) = ratio(tp, tp + fn_);
        let (f1, fu) = f1(precision, recall);
        LabelScore {
            label: label.into(),
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
            precision_undefined: pu,
            recall_undefined: ru,
            f1_undefined: fu,
        }
    }
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn f1(p: f64, r: f64) -> (f64, bool) {
    if p + r == 0.0 {
        (0.0, true)
    } else {
        (2.0 * p * r / (p + r), false)
    }
}

/// Mean and population variance.
pub(crate) fn mean_var(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    (mean, var)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub name: String,
    pub labels: Vec<LabelScore>,
    pub macro_precision: f64,
    pub macro_precision_var: f64,
    pub macro_recall: f64,
    pub macro_recall_var: f64,
    pub macro_f1: f64,
    pub macro_f1_var: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    /// Example-based F1 averaged over documents with a true or predicted
    /// label.
    pub example_f1: f64,
    pub example_f1_sum: f64,
    pub example_docs: u64,
}

impl EvalResult {
    /// Aggregates per-label scores; example-based figures are passed through.
    pub fn from_labels(
        name: impl Into<String>,
        labels: Vec<LabelScore>,
        example_f1_sum: f64,
        example_docs: u64,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("empty label set".into()));
        }
        let (macro_precision, macro_precision_var) = mean_var(labels.iter().map(|l| l.precision));
        let (macro_recall, macro_recall_var) = mean_var(labels.iter().map(|l| l.recall));
        let (macro_f1, macro_f1_var) = mean_var(labels.iter().map(|l| l.f1));
        let tp: u64 = labels.iter().map(|l| l.tp).sum();
        let fp: u64 = labels.iter().map(|l| l.fp).sum();
        let fn_: u64 = labels.iter().map(|l| l.fn_).sum();
        let micro = LabelScore::from_counts("", tp, fp, fn_);
        Ok(EvalResult {
            name: name.into(),
            labels,
            macro_precision,
            macro_precision_var,
            macro_recall,
            macro_recall_var,
            macro_f1,
            macro_f1_var,
            micro_precision: micro.precision,
            micro_recall: micro.recall,
            micro_f1: micro.f1,
            example_f1: if example_docs == 0 {
                0.0
            } else {
                example_f1_sum / example_docs as f64
            },
            example_f1_sum,
            example_docs,
        })
    }

    pub fn label(&self, label: &str) -> Option<&LabelScore> {
        self.labels.iter().find(|l| l.label == label)
    }

    pub fn totals(&self) -> (u64, u64, u64) {
        self.labels.iter().fold((0, 0, 0), |(a, b, c), l| {
            (a + l.tp, b + l.fp, c + l.fn_)
        })
    }
}

/// Scores `predictions` against the positives of `dataset`.
pub fn score(
    name: &str,
    predictions: &Predictions,
    dataset: &LabeledDataset,
    options: ScoreOptions,
) -> Result<EvalResult> {
    unknown_pmid(predictions, dataset)?;
    let labels = dataset.labels();
    if labels.is_empty() {
        return Err(Error::InvalidArgument("empty label set".into()));
    }
    let empty = BTreeSet::new();
    let mut counts: BTreeMap<&str, (u64, u64, u64)> =
        labels.iter().map(|l| (l.as_str(), (0, 0, 0))).collect();
    let mut example_sum = 0.0;
    let mut example_docs = 0u64;
    for row in &dataset.rows {
        let predicted = predictions.get(&row.pmid).unwrap_or(&empty);
        let considered = |l: &String| {
            counts.contains_key(l.as_str()) && (!options.validity_filter || row.valid_labels.contains(l))
        };
        let z: BTreeSet<&String> = predicted.iter().filter(|l| considered(l)).collect();
        let y: BTreeSet<&String> = row.positive_labels.iter().filter(|l| considered(l)).collect();
        for l in &labels {
            if options.validity_filter && !row.valid_labels.contains(l) {
                continue;
            }
            let c = counts.get_mut(l.as_str()).expect("label in set");
            match (y.contains(l), z.contains(l)) {
                (true, true) => c.0 += 1,
                (false, true) => c.1 += 1,
                (true, false) => c.2 += 1,
                (false, false) => {}
            }
        }
        if !y.is_empty() || !z.is_empty() {
            let inter = y.intersection(&z).count() as f64;
            example_sum += 2.0 * inter / (y.len() + z.len()) as f64;
            example_docs += 1;
        }
    }
    let per_label = counts
        .into_iter()
        .map(|(l, (tp, fp, fn_))| LabelScore::from_counts(l, tp, fp, fn_))
        .collect();
    EvalResult::from_labels(name, per_label, example_sum, example_docs)
}

/// Pools several results (for instance one per year) into one over the
/// union of their labels: macro figures average all per-label scores, micro
/// figures sum all counts.
pub fn pool(name: &str, results: &[EvalResult]) -> Result<EvalResult> {
    let labels: Vec<LabelScore> = results.iter().flat_map(|r| r.labels.clone()).collect();
    let sum = results.iter().map(|r| r.example_f1_sum).sum();
    let docs = results.iter().map(|r| r.example_docs).sum();
    EvalResult::from_labels(name, labels, sum, docs)
}
