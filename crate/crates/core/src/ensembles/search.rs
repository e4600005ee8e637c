//! Exhaustive search over labeling-function subsets and ensemble methods,
//! scored against ground truth.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::{combine, enumerate_combinations, EnhancedLabels, LabelModelConfig, Method, VoteMatrix};
use crate::datasets::LabeledDataset;
use crate::error::Result;
use crate::eval::{format_rate, score, Predictions, ScoreOptions};
use crate::labelers::{LfId, VoteSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchRow {
    pub lfs: Vec<LfId>,
    /// Method -> (maF1, miF1).
    pub scores: BTreeMap<Method, (f64, f64)>,
    /// Sample variance of maF1 across the methods run on this subset.
    pub macro_f1_var: f64,
}

impl SearchRow {
    pub fn best_macro_f1(&self) -> f64 {
        self.scores.values().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn best_micro_f1(&self) -> f64 {
        self.scores.values().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub methods: Vec<Method>,
    pub rows: Vec<SearchRow>,
}

impl SearchReport {
    /// Columns: subset, maF1 per method, maF1 variance, miF1 per method.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("lfs");
        for m in &self.methods {
            let _ = write!(out, "\tmaF1_{m}");
        }
        out.push_str("\tmaF1_var");
        for m in &self.methods {
            let _ = write!(out, "\tmiF1_{m}");
        }
        out.push('\n');
        for r in &self.rows {
            let names: Vec<&str> = r.lfs.iter().map(|l| l.as_str()).collect();
            out.push_str(&names.join(","));
            let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), format_rate);
            for m in &self.methods {
                let _ = write!(out, "\t{}", cell(r.scores.get(m).map(|s| s.0)));
            }
            let _ = write!(out, "\t{}", format_rate(r.macro_f1_var));
            for m in &self.methods {
                let _ = write!(out, "\t{}", cell(r.scores.get(m).map(|s| s.1)));
            }
            out.push('\n');
        }
        out
    }
}

fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64
}

pub(crate) fn as_predictions(labels: &EnhancedLabels) -> Predictions {
    labels.by_document()
}

/// Scores every subset of `lfs` with at least two members under each of
/// `methods` (LM only for subsets of three or more). Rows are sorted by best
/// maF1, then best miF1 (both descending), then subset in canonical order.
pub fn search_combinations(
    votes: &VoteSet,
    truth: &LabeledDataset,
    lfs: &[LfId],
    methods: &[Method],
    config: &LabelModelConfig,
) -> Result<SearchReport> {
    let mut lfs = lfs.to_vec();
    lfs.sort();
    lfs.dedup();
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();
    let subsets = enumerate_combinations(&lfs, 2);
    let mut rows = subsets
        .par_iter()
        .map(|subset| -> Result<SearchRow> {
            let matrix = VoteMatrix::from_votes(votes, subset)?;
            let mut scores = BTreeMap::new();
            for &m in methods.iter().filter(|m| subset.len() >= m.min_columns()) {
                let labels = combine(&matrix, m, config)?;
                let r = score(m.as_str(), &as_predictions(&labels), truth, ScoreOptions::default())?;
                scores.insert(m, (r.macro_f1, r.micro_f1));
            }
            let ma: Vec<f64> = scores.values().map(|s| s.0).collect();
            Ok(SearchRow {
                lfs: subset.clone(),
                macro_f1_var: sample_variance(&ma),
                scores,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        b.best_macro_f1()
            .total_cmp(&a.best_macro_f1())
            .then_with(|| b.best_micro_f1().total_cmp(&a.best_micro_f1()))
            .then_with(|| a.lfs.cmp(&b.lfs))
    });
    Ok(SearchReport { methods, rows })
}

