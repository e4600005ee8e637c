//! Wilcoxon signed-rank test on paired per-label F1 scores.
//!
//! Zero differences are dropped before ranking; tied absolute differences
//! share their average rank. Differences closer than `1e-12` are treated as
//! equal, so values that agree up to floating-point noise tie. With at most
//! 25 non-zero pairs the null distribution of `W+` is enumerated exactly
//! (over the actual, possibly tied, ranks); above that a normal
//! approximation with tie and continuity corrections is used.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::EvalResult;
use crate::error::{Error, Result};

const EPS: f64 = 1e-12;
const EXACT_MAX: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    TwoSided,
    /// The first sample tends to be smaller.
    Less,
    /// The first sample tends to be larger.
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonReport {
    pub pairs: usize,
    pub nonzero: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    pub alternative: Alternative,
    pub method: WilcoxonMethod,
    pub p_value: f64,
}

/// Signed ranks of the non-zero differences, as doubled integers so tied
/// half ranks stay exact.
fn doubled_ranks(diffs: &[f64]) -> Vec<(u64, bool)> {
    let mut nz: Vec<(f64, bool)> = diffs
        .iter()
        .filter(|d| d.abs() >= EPS)
        .map(|&d| (d.abs(), d > 0.0))
        .collect();
    nz.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::with_capacity(nz.len());
    let mut i = 0;
    while i < nz.len() {
        let mut j = i + 1;
        while j < nz.len() && nz[j].0 - nz[j - 1].0 < EPS {
            j += 1;
        }
        // Ranks i+1..=j share their mean (i+1+j)/2; doubled: i+1+j.
        let doubled = (i + 1 + j) as u64;
        out.extend(nz[i..j].iter().map(|&(_, pos)| (doubled, pos)));
        i = j;
    }
    out
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alternative: Alternative) -> Result<WilcoxonReport> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let ranks = doubled_ranks(&diffs);
    let n = ranks.len();
    let w_plus2: u64 = ranks.iter().filter(|r| r.1).map(|r| r.0).sum();
    let total2: u64 = ranks.iter().map(|r| r.0).sum();
    let w_plus = w_plus2 as f64 / 2.0;
    let w_minus = (total2 - w_plus2) as f64 / 2.0;

    let (method, p_value) = if n == 0 {
        (WilcoxonMethod::Exact, 1.0)
    } else if n <= EXACT_MAX {
        (WilcoxonMethod::Exact, exact_p(&ranks, w_plus2, alternative))
    } else {
        (WilcoxonMethod::Normal, normal_p(&ranks, w_plus, alternative))
    };
    Ok(WilcoxonReport {
        pairs: a.len(),
        nonzero: n,
        w_plus,
        w_minus,
        alternative,
        method,
        p_value,
    })
}

fn exact_p(ranks: &[(u64, bool)], w_plus2: u64, alternative: Alternative) -> f64 {
    let total: u64 = ranks.iter().map(|r| r.0).sum();
    // counts[s]: sign assignments whose positive doubled-rank sum is s.
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &(r, _) in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(ranks.len() as i32);
    let w = w_plus2 as usize;
    let lower = counts[..=w].iter().sum::<f64>() / all;
    let upper = counts[w..].iter().sum::<f64>() / all;
    match alternative {
        Alternative::Less => lower,
        Alternative::Greater => upper,
        Alternative::TwoSided => (2.0 * lower.min(upper)).min(1.0),
    }
}

fn normal_p(ranks: &[(u64, bool)], w_plus: f64, alternative: Alternative) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted: Vec<u64> = ranks.iter().map(|r| r.0).collect();
    sorted.sort_unstable();
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let sd = var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    match alternative {
        Alternative::Less => normal.cdf((w_plus - mean + 0.5) / sd),
        Alternative::Greater => 1.0 - normal.cdf((w_plus - mean - 0.5) / sd),
        Alternative::TwoSided => {
            let z = ((w_plus - mean).abs() - 0.5).max(0.0) / sd;
            (2.0 * (1.0 - normal.cdf(z))).min(1.0)
        }
    }
}

/// Pairs the per-label F1 of two results by label and tests them.
pub fn compare(a: &EvalResult, b: &EvalResult, alternative: Alternative) -> Result<WilcoxonReport> {
    let la: Vec<&str> = a.labels.iter().map(|l| l.label.as_str()).collect();
    let mut lb: Vec<&str> = b.labels.iter().map(|l| l.label.as_str()).collect();
    let mut sorted_a = la.clone();
    sorted_a.sort_unstable();
    lb.sort_unstable();
    if sorted_a != lb {
        return Err(Error::InvalidArgument(format!(
            "label sets differ between {:?} and {:?}",
            a.name, b.name
        )));
    }
    if la.len() < 6 {
        return Err(Error::InvalidArgument(format!(
            "comparison needs at least 6 labels, got {}",
            la.len()
        )));
    }
    let fa: Vec<f64> = la.iter().map(|l| a.label(l).expect("same set").f1).collect();
    let fb: Vec<f64> = la.iter().map(|l| b.label(l).expect("same set").f1).collect();
    wilcoxon_signed_rank(&fa, &fb, alternative)
}
