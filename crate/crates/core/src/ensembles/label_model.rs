//! Generative label model: a latent binary true label per row and
//! conditionally independent voters, each with its own sensitivity
//! `s_j = P(vote = 1 | y = 1)` and specificity `t_j = P(vote = 0 | y = 0)`.
//! Parameters are fitted by expectation-maximization; one model per label.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EnhancedLabels, Method, VoteMatrix};
use crate::error::{Error, Result};
use crate::labelers::LfId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelModelConfig {
    pub max_iterations: usize,
    /// Stop once the largest absolute parameter change falls below this.
    pub tolerance: f64,
    /// Parameters are kept inside `[clamp, 1 - clamp]`.
    pub clamp: f64,
}

impl Default for LabelModelConfig {
    fn default() -> Self {
        LabelModelConfig {
            max_iterations: 500,
            tolerance: 1e-6,
            clamp: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoCoinParams {
    pub prior: f64,
    pub sensitivity: Vec<f64>,
    pub specificity: Vec<f64>,
}

impl TwoCoinParams {
    /// Log joint densities `(ln P(y=1, votes), ln P(y=0, votes))`.
    fn log_joint(&self, votes: &[u8]) -> (f64, f64) {
        let mut pos = self.prior.ln();
        let mut neg = (1.0 - self.prior).ln();
        for ((&v, &s), &t) in votes.iter().zip(&self.sensitivity).zip(&self.specificity) {
            if v == 1 {
                pos += s.ln();
                neg += (1.0 - t).ln();
            } else {
                pos += (1.0 - s).ln();
                neg += t.ln();
            }
        }
        (pos, neg)
    }

    /// `P(y = 1 | votes)` by Bayes' rule.
    pub fn posterior(&self, votes: &[u8]) -> f64 {
        let (pos, neg) = self.log_joint(votes);
        1.0 / (1.0 + (neg - pos).exp())
    }

    /// Observed-data log-likelihood of the rows of `cells` (row-major,
    /// `self.sensitivity.len()` columns).
    pub fn log_likelihood(&self, cells: &[u8]) -> f64 {
        let m = self.sensitivity.len();
        cells
            .chunks(m)
            .map(|row| {
                let (a, b) = self.log_joint(row);
                let hi = a.max(b);
                hi + ((a - hi).exp() + (b - hi).exp()).ln()
            })
            .sum()
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d = (self.prior - other.prior).abs();
        for (a, b) in self.sensitivity.iter().zip(&other.sensitivity) {
            d = d.max((a - b).abs());
        }
        for (a, b) in self.specificity.iter().zip(&other.specificity) {
            d = d.max((a - b).abs());
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoCoinFit {
    pub params: TwoCoinParams,
    /// Log-likelihood at initialization followed by one entry per iteration.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn ratio_or(num: f64, den: f64, fallback: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        fallback
    }
}

/// EM fit on `cells` (row-major, `m` columns).
///
/// Initialization uses strict-majority pseudo-labels: the prior is their
/// positive rate clamped to `[0.01, 0.99]`, and each voter's sensitivity and
/// specificity are its agreement rates with them.
pub fn fit_two_coin(cells: &[u8], m: usize, config: &LabelModelConfig) -> Result<TwoCoinFit> {
    if m < 3 {
        return Err(Error::InvalidArgument(format!(
            "label model needs at least 3 labeling functions, got {m}"
        )));
    }
    if cells.is_empty() || cells.len() % m != 0 {
        return Err(Error::EmptyInput("label model needs at least one row".into()));
    }
    let lo = config.clamp;
    let hi = 1.0 - config.clamp;
    let clamp = |x: f64| x.clamp(lo, hi);
    let n = (cells.len() / m) as f64;

    let pseudo: Vec<f64> = cells
        .chunks(m)
        .map(|row| {
            let votes: usize = row.iter().map(|&v| v as usize).sum();
            if 2 * votes > m {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let mut params = m_step(cells, m, &pseudo, None, clamp);
    params.prior = (pseudo.iter().sum::<f64>() / n).clamp(0.01, 0.99);

    let mut trace = vec![params.log_likelihood(cells)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        let q: Vec<f64> = cells.chunks(m).map(|row| params.posterior(row)).collect();
        let next = m_step(cells, m, &q, Some(&params), clamp);
        let ll = next.log_likelihood(cells);
        let prev = *trace.last().expect("initial entry");
        debug_assert!(
            ll >= prev - 1e-9 * prev.abs().max(1.0),
            "EM log-likelihood decreased: {prev} -> {ll}"
        );
        trace.push(ll);
        let delta = next.max_abs_diff(&params);
        params = next;
        if delta < config.tolerance {
            converged = true;
            break;
        }
    }
    Ok(TwoCoinFit {
        params,
        log_likelihood: trace,
        iterations,
        converged,
    })
}

/// Maximizes the expected complete-data log-likelihood given posteriors `q`.
/// Each parameter's objective is concave in one variable, so clamping the
/// unconstrained maximizer gives the constrained one.
fn m_step(
    cells: &[u8],
    m: usize,
    q: &[f64],
    prev: Option<&TwoCoinParams>,
    clamp: impl Fn(f64) -> f64,
) -> TwoCoinParams {
    let q_sum: f64 = q.iter().sum();
    let n = q.len() as f64;
    let mut hit_pos = vec![0.0; m];
    let mut miss_neg = vec![0.0; m];
    for (row, &qi) in cells.chunks(m).zip(q) {
        for (j, &v) in row.iter().enumerate() {
            if v == 1 {
                hit_pos[j] += qi;
            } else {
                miss_neg[j] += 1.0 - qi;
            }
        }
    }
    let sensitivity = (0..m)
        .map(|j| {
            let fallback = prev.map_or(0.5, |p| p.sensitivity[j]);
            clamp(ratio_or(hit_pos[j], q_sum, fallback))
        })
        .collect();
    let specificity = (0..m)
        .map(|j| {
            let fallback = prev.map_or(0.5, |p| p.specificity[j]);
            clamp(ratio_or(miss_neg[j], n - q_sum, fallback))
        })
        .collect();
    TwoCoinParams {
        prior: clamp(q_sum / n),
        sensitivity,
        specificity,
    }
}

/// One fitted model per label, over a fixed column set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelModelParams {
    pub columns: Vec<LfId>,
    pub labels: BTreeMap<String, TwoCoinFit>,
}

pub fn fit_label_model(matrix: &VoteMatrix, config: &LabelModelConfig) -> Result<LabelModelParams> {
    matrix.require_columns(Method::Lm)?;
    if matrix.n_rows() == 0 {
        return Err(Error::EmptyInput("empty vote matrix".into()));
    }
    let m = matrix.columns().len();
    let groups: Vec<(&str, Vec<usize>)> = matrix.label_rows().into_iter().collect();
    let fits = groups
        .par_iter()
        .map(|(label, rows)| {
            let cells: Vec<u8> = rows.iter().flat_map(|&r| matrix.row(r)).copied().collect();
            fit_two_coin(&cells, m, config).map(|f| (label.to_string(), f))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelModelParams {
        columns: matrix.columns().to_vec(),
        labels: fits.into_iter().collect(),
    })
}

/// Assigns a label where its posterior is strictly above 0.5.
pub fn apply_label_model(matrix: &VoteMatrix, params: &LabelModelParams) -> Result<EnhancedLabels> {
    if matrix.columns() != params.columns.as_slice() {
        return Err(Error::ColumnMismatch {
            expected: params.columns.iter().map(|c| c.to_string()).collect(),
            found: matrix.columns().iter().map(|c| c.to_string()).collect(),
        });
    }
    let mut positives = std::collections::BTreeSet::new();
    for i in 0..matrix.n_rows() {
        let (pmid, label) = matrix.key(i);
        let fit = params.labels.get(label).ok_or_else(|| {
            Error::InvalidArgument(format!("no fitted label model for {label:?}"))
        })?;
        if fit.params.posterior(matrix.row(i)) > 0.5 {
            positives.insert((pmid.clone(), label.clone()));
        }
    }
    Ok(EnhancedLabels {
        method: Some(Method::Lm),
        lfs: super::canonical(matrix.columns()),
        positives,
    })
}
