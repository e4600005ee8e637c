//! Combining labeling-function votes into enhanced weak labels.
//!
//! A non-match is an explicit negative vote, not an abstain: every function
//! votes on every row of a [`VoteMatrix`].

mod label_model;
mod search;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use label_model::{
    apply_label_model, fit_label_model, fit_two_coin, LabelModelConfig, LabelModelParams,
    TwoCoinFit, TwoCoinParams,
};
pub use search::{search_combinations, SearchReport, SearchRow};

use crate::error::{Error, Result};
use crate::labelers::{LfId, VoteSet};
use crate::pmid::Pmid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Mv,
    Alo,
    Lm,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Mv, Method::Alo, Method::Lm];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mv => "MV",
            Method::Alo => "ALO",
            Method::Lm => "LM",
        }
    }

    /// Fewest voters the method accepts.
    pub fn min_columns(self) -> usize {
        match self {
            Method::Mv | Method::Alo => 2,
            Method::Lm => 3,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown ensemble method {s:?}")))
    }
}

/// Binary votes, one row per (pmid, label) pair and one column per
/// labeling function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteMatrix {
    columns: Vec<LfId>,
    keys: Vec<(Pmid, String)>,
    cells: Vec<u8>,
}

impl VoteMatrix {
    pub fn new(columns: Vec<LfId>, keys: Vec<(Pmid, String)>, cells: Vec<u8>) -> Result<Self> {
        let unique: HashSet<&LfId> = columns.iter().collect();
        if unique.len() != columns.len() {
            return Err(Error::InvalidArgument("duplicate vote matrix column".into()));
        }
        if cells.len() != keys.len() * columns.len() {
            return Err(Error::InvalidArgument(format!(
                "{} cells for {} rows x {} columns",
                cells.len(),
                keys.len(),
                columns.len()
            )));
        }
        if cells.iter().any(|&c| c > 1) {
            return Err(Error::InvalidArgument("votes must be 0 or 1".into()));
        }
        let unique: HashSet<&(Pmid, String)> = keys.iter().collect();
        if unique.len() != keys.len() {
            return Err(Error::InvalidArgument("duplicate vote matrix row".into()));
        }
        Ok(VoteMatrix {
            columns,
            keys,
            cells,
        })
    }

    /// Selects `lfs` (in canonical order) from a vote set.
    pub fn from_votes(votes: &VoteSet, lfs: &[LfId]) -> Result<Self> {
        let mut columns = lfs.to_vec();
        columns.sort();
        columns.dedup();
        if let Some(missing) = columns.iter().find(|lf| !votes.lfs().contains(lf)) {
            return Err(Error::InvalidArgument(format!(
                "vote set has no column for {missing}"
            )));
        }
        let mut keys = Vec::with_capacity(votes.len());
        let mut cells = Vec::with_capacity(votes.len() * columns.len());
        for (pmid, label, mask) in votes.iter() {
            keys.push((pmid.clone(), label.to_owned()));
            cells.extend(columns.iter().map(|lf| mask.contains(*lf) as u8));
        }
        Ok(VoteMatrix {
            columns,
            keys,
            cells,
        })
    }

    pub fn columns(&self) -> &[LfId] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.keys.len()
    }

    pub fn key(&self, row: usize) -> &(Pmid, String) {
        &self.keys[row]
    }

    pub fn row(&self, row: usize) -> &[u8] {
        let m = self.columns.len();
        &self.cells[row * m..(row + 1) * m]
    }

    /// Row indexes grouped by label.
    pub fn label_rows(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut out: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, (_, label)) in self.keys.iter().enumerate() {
            out.entry(label.as_str()).or_default().push(i);
        }
        out
    }

    fn require_columns(&self, method: Method) -> Result<()> {
        if self.columns.len() < method.min_columns() {
            return Err(Error::InvalidArgument(format!(
                "{method} needs at least {} labeling functions, got {}",
                method.min_columns(),
                self.columns.len()
            )));
        }
        Ok(())
    }

    fn select(&self, method: Method, keep: impl Fn(&[u8]) -> bool) -> EnhancedLabels {
        let positives = (0..self.n_rows())
            .filter(|&i| keep(self.row(i)))
            .map(|i| self.keys[i].clone())
            .collect();
        EnhancedLabels {
            method: Some(method),
            lfs: canonical(&self.columns),
            positives,
        }
    }
}

fn canonical(lfs: &[LfId]) -> Vec<LfId> {
    let mut v = lfs.to_vec();
    v.sort();
    v
}

/// Weak labels produced by an ensemble (or by a single function when
/// `method` is `None`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnhancedLabels {
    pub method: Option<Method>,
    pub lfs: Vec<LfId>,
    pub positives: BTreeSet<(Pmid, String)>,
}

#[derive(Serialize, Deserialize)]
struct EnhancedLine {
    pmid: Pmid,
    labels: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    method: Option<Method>,
    lfs: Vec<LfId>,
}

impl EnhancedLabels {
    /// Positives of one labeling function taken alone.
    pub fn single(votes: &VoteSet, lf: LfId) -> Result<Self> {
        if !votes.lfs().contains(&lf) {
            return Err(Error::InvalidArgument(format!("vote set has no column for {lf}")));
        }
        Ok(EnhancedLabels {
            method: None,
            lfs: vec![lf],
            positives: votes.positives(lf),
        })
    }

    /// Positive labels grouped by document.
    pub fn by_document(&self) -> BTreeMap<Pmid, BTreeSet<String>> {
        let mut out: BTreeMap<Pmid, BTreeSet<String>> = BTreeMap::new();
        for (p, l) in &self.positives {
            out.entry(p.clone()).or_default().insert(l.clone());
        }
        out
    }

    /// One line per document with at least one label.
    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let lines: Vec<EnhancedLine> = self
            .by_document()
            .into_iter()
            .map(|(pmid, labels)| EnhancedLine {
                pmid,
                labels: labels.into_iter().collect(),
                method: self.method,
                lfs: self.lfs.clone(),
            })
            .collect();
        crate::corpus::write_jsonl(path.as_ref(), &lines)
    }

    pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let lines: Vec<EnhancedLine> = crate::corpus::read_jsonl(path.as_ref())?;
        let mut out = EnhancedLabels {
            method: None,
            lfs: Vec::new(),
            positives: BTreeSet::new(),
        };
        for (i, line) in lines.into_iter().enumerate() {
            if i == 0 {
                out.method = line.method;
                out.lfs = canonical(&line.lfs);
            } else if line.method != out.method || canonical(&line.lfs) != out.lfs {
                return Err(Error::Parse {
                    path: path.as_ref().to_owned(),
                    line: i + 1,
                    message: "mixed ensemble provenance in one file".into(),
                });
            }
            for l in line.labels {
                out.positives.insert((line.pmid.clone(), l));
            }
        }
        Ok(out)
    }
}

/// Strict majority: more than half of the columns vote 1.
pub fn combine_mv(matrix: &VoteMatrix) -> Result<EnhancedLabels> {
    matrix.require_columns(Method::Mv)?;
    let m = matrix.columns.len();
    Ok(matrix.select(Method::Mv, |row| {
        2 * row.iter().map(|&v| v as usize).sum::<usize>() > m
    }))
}

/// At least one column votes 1.
pub fn combine_alo(matrix: &VoteMatrix) -> Result<EnhancedLabels> {
    matrix.require_columns(Method::Alo)?;
    Ok(matrix.select(Method::Alo, |row| row.contains(&1)))
}

/// Runs `method` on `matrix`, fitting a label model first for LM.
pub fn combine(matrix: &VoteMatrix, method: Method, config: &LabelModelConfig) -> Result<EnhancedLabels> {
    match method {
        Method::Mv => combine_mv(matrix),
        Method::Alo => combine_alo(matrix),
        Method::Lm => {
            let params = fit_label_model(matrix, config)?;
            apply_label_model(matrix, &params)
        }
    }
}

/// All subsets of `items` with at least `min_size` elements, ordered by size
/// and then lexicographically by position in `items`.
pub fn enumerate_combinations<T: Clone>(items: &[T], min_size: usize) -> Vec<Vec<T>> {
    let n = items.len();
    let mut out = Vec::new();
    for k in min_size.max(1)..=n {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(idx.iter().map(|&i| items[i].clone()).collect());
            // Advance to the next k-combination in lexicographic order.
            let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
                break;
            };
            idx[pos] += 1;
            for j in pos + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}
