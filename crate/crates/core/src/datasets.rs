//! Per-year development and test datasets, the 90-10 split, and negative
//! undersampling.
//!
//! A document is *valid* for a fine-grained label when it is annotated with
//! the label's host descriptor or any descendant of it. Rows carry their
//! valid labels, and positives are always a subset of them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::{read_json, read_jsonl, write_json, write_jsonl, Corpus, Document, YearFilter};
use crate::ensembles::Method;
use crate::error::{Error, Result};
use crate::labelers::LfId;
use crate::pmid::Pmid;
use crate::thesaurus::{SelectionThresholds, Thesaurus, UseCase};

/// Where a dataset's positive labels come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    GroundTruth,
    /// Weak labels from one function (`method` = None) or an ensemble.
    Weak {
        method: Option<Method>,
        lfs: Vec<LfId>,
    },
}

const DEFAULT_TRIPLE: [LfId; 3] = [LfId::Co, LfId::Nl, LfId::Sl];

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::GroundTruth => f.write_str("ground_truth"),
            Source::Weak { method: None, lfs } if lfs.len() == 1 => write!(f, "weak_{}", lfs[0]),
            Source::Weak {
                method: Some(m),
                lfs,
            } if lfs.as_slice() == DEFAULT_TRIPLE => write!(f, "weak_{m}3"),
            Source::Weak { method, lfs } => {
                let names: Vec<&str> = lfs.iter().map(|l| l.as_str()).collect();
                let m = method.map_or("LF", Method::as_str);
                write!(f, "weak_{m}_{}", names.join("-"))
            }
        }
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown dataset source {s:?}"));
        if s == "ground_truth" {
            return Ok(Source::GroundTruth);
        }
        let rest = s.strip_prefix("weak_").ok_or_else(bad)?;
        if let Ok(lf) = rest.parse::<LfId>() {
            return Ok(Source::Weak {
                method: None,
                lfs: vec![lf],
            });
        }
        if let Some(m) = rest.strip_suffix('3') {
            if let Ok(method) = m.parse::<Method>() {
                return Ok(Source::Weak {
                    method: Some(method),
                    lfs: DEFAULT_TRIPLE.to_vec(),
                });
            }
        }
        let (m, lfs) = rest.split_once('_').ok_or_else(bad)?;
        let method = if m == "LF" { None } else { Some(m.parse()?) };
        let lfs = lfs
            .split('-')
            .map(str::parse)
            .collect::<Result<Vec<LfId>>>()?;
        Ok(Source::Weak { method, lfs })
    }
}

impl Serialize for Source {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Source {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub pmid: Pmid,
    /// Title and abstract joined by a newline.
    pub text: String,
    pub positive_labels: BTreeSet<String>,
    pub valid_labels: BTreeSet<String>,
}

/// Self-describing sidecar written next to every dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub year: i32,
    pub labels: Vec<String>,
    pub use_cases: Vec<UseCase>,
    pub source: Source,
    pub rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balance_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<SelectionThresholds>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub year: i32,
    pub use_cases: Vec<UseCase>,
    pub source: Source,
    pub rows: Vec<DatasetRow>,
    pub seed: Option<u64>,
    pub balance_n: Option<f64>,
    pub thresholds: Option<SelectionThresholds>,
}

impl LabeledDataset {
    /// Fine-grained labels, sorted.
    pub fn labels(&self) -> Vec<String> {
        let mut v: Vec<String> = self.use_cases.iter().map(|u| u.fine_ui.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, pmid: &Pmid) -> Option<&DatasetRow> {
        self.rows
            .binary_search_by(|r| r.pmid.cmp(pmid))
            .ok()
            .map(|i| &self.rows[i])
    }

    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            year: self.year,
            labels: self.labels(),
            use_cases: self.use_cases.clone(),
            source: self.source.clone(),
            rows: self.rows.len(),
            seed: self.seed,
            balance_n: self.balance_n,
            thresholds: self.thresholds,
        }
    }

    /// Checks the row invariants: positives within valid labels, every row
    /// valid for some label, labels drawn from the label set, pmids strictly
    /// ascending.
    pub fn check(&self) -> Result<()> {
        let labels: BTreeSet<String> = self.labels().into_iter().collect();
        if labels.is_empty() {
            return Err(Error::InvalidArgument("dataset has an empty label set".into()));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.positive_labels.is_subset(&r.valid_labels) {
                return Err(Error::InvalidArgument(format!(
                    "pmid {}: positive labels not within valid labels",
                    r.pmid
                )));
            }
            if r.valid_labels.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "pmid {} is valid for no label",
                    r.pmid
                )));
            }
            if !r.valid_labels.is_subset(&labels) {
                return Err(Error::InvalidArgument(format!(
                    "pmid {} carries a label outside the label set",
                    r.pmid
                )));
            }
            if i > 0 && self.rows[i - 1].pmid >= r.pmid {
                return Err(Error::InvalidArgument(format!(
                    "rows not in strictly ascending pmid order at {}",
                    r.pmid
                )));
            }
        }
        Ok(())
    }

    /// Writes `path` (JSONL rows) and `manifest_path(path)`.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        self.check()?;
        let path = path.as_ref();
        write_jsonl(path, &self.rows)?;
        write_json(&manifest_path(path), &self.manifest())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rows: Vec<DatasetRow> = read_jsonl(path)?;
        rows.sort_by(|a, b| a.pmid.cmp(&b.pmid));
        let m: DatasetManifest = read_json(&manifest_path(path))?;
        let ds = LabeledDataset {
            year: m.year,
            use_cases: m.use_cases,
            source: m.source,
            rows,
            seed: m.seed,
            balance_n: m.balance_n,
            thresholds: m.thresholds,
        };
        ds.check().map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: 0,
            message: e.to_string(),
        })?;
        Ok(ds)
    }
}

/// `dev.jsonl` -> `dev.manifest.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.manifest.json"))
}

/// Host subtrees of a year's labels, for validity checks.
#[derive(Debug, Clone)]
pub struct Validity {
    /// label -> host ui with all its descendants
    hosts: BTreeMap<String, BTreeSet<String>>,
}

impl Validity {
    pub fn new(use_cases: &[UseCase], thesaurus: &Thesaurus) -> Result<Self> {
        let mut hosts = BTreeMap::new();
        for uc in use_cases {
            hosts.insert(uc.fine_ui.clone(), thesaurus.subtree(&uc.host_ui)?);
        }
        Ok(Validity { hosts })
    }

    pub fn valid_labels(&self, doc: &Document) -> BTreeSet<String> {
        self.hosts
            .iter()
            .filter(|(_, subtree)| doc.descriptor_uis.iter().any(|u| subtree.contains(u)))
            .map(|(l, _)| l.clone())
            .collect()
    }
}

fn common_year(use_cases: &[UseCase]) -> Result<i32> {
    let first = use_cases
        .first()
        .ok_or_else(|| Error::InvalidArgument("no use cases".into()))?;
    if use_cases.iter().any(|u| u.year != first.year) {
        return Err(Error::InvalidArgument("use cases span several years".into()));
    }
    Ok(first.year)
}

/// Documents on one side of the year boundary that are valid for at least
/// one label, with their valid labels, in ascending pmid order.
pub fn candidates<'a>(
    use_cases: &[UseCase],
    corpus: &'a Corpus,
    thesaurus: &Thesaurus,
    filter: YearFilter,
) -> Result<Vec<(&'a Document, BTreeSet<String>)>> {
    let validity = Validity::new(use_cases, thesaurus)?;
    let mut docs: BTreeMap<&Pmid, &Document> = BTreeMap::new();
    let hosts: BTreeSet<&str> = use_cases.iter().map(|u| u.host_ui.as_str()).collect();
    for host in hosts {
        for d in corpus.query(host, thesaurus, filter)? {
            docs.insert(&d.pmid, d);
        }
    }
    Ok(docs
        .into_values()
        .map(|d| (d, validity.valid_labels(d)))
        .filter(|(_, v)| !v.is_empty())
        .collect())
}

/// Weakly-labeled development dataset: every document before the year
/// that is valid for some label. Weak positives outside a row's valid
/// labels are dropped.
pub fn build_dev(
    use_cases: &[UseCase],
    corpus: &Corpus,
    thesaurus: &Thesaurus,
    source: Source,
    weak_positives: &BTreeSet<(Pmid, String)>,
) -> Result<LabeledDataset> {
    let year = common_year(use_cases)?;
    let rows: Vec<DatasetRow> = candidates(use_cases, corpus, thesaurus, YearFilter::Before(year))?
        .into_iter()
        .map(|(doc, valid)| {
            let positive = valid
                .iter()
                .filter(|l| weak_positives.contains(&(doc.pmid.clone(), (*l).clone())))
                .cloned()
                .collect();
            DatasetRow {
                pmid: doc.pmid.clone(),
                text: doc.text(),
                positive_labels: positive,
                valid_labels: valid,
            }
        })
        .collect();
    finish(year, use_cases, source, rows)
}

/// Ground-truth test dataset: documents from the year on, positive for a
/// label when annotated with its fine-grained descriptor.
pub fn build_test(use_cases: &[UseCase], corpus: &Corpus, thesaurus: &Thesaurus) -> Result<LabeledDataset> {
    let year = common_year(use_cases)?;
    let rows: Vec<DatasetRow> =
        candidates(use_cases, corpus, thesaurus, YearFilter::AtOrAfter(year))?
            .into_iter()
            .map(|(doc, valid)| {
                let positive = valid
                    .iter()
                    .filter(|l| doc.descriptor_uis.contains(*l))
                    .cloned()
                    .collect();
                DatasetRow {
                    pmid: doc.pmid.clone(),
                    text: doc.text(),
                    positive_labels: positive,
                    valid_labels: valid,
                }
            })
            .collect();
    finish(year, use_cases, Source::GroundTruth, rows)
}

fn finish(year: i32, use_cases: &[UseCase], source: Source, rows: Vec<DatasetRow>) -> Result<LabeledDataset> {
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no documents qualify for the {year} use cases"
        )));
    }
    let mut use_cases = use_cases.to_vec();
    use_cases.sort_by(|a, b| a.fine_ui.cmp(&b.fine_ui));
    Ok(LabeledDataset {
        year,
        use_cases,
        source,
        rows,
        seed: None,
        balance_n: None,
        thresholds: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: LabeledDataset,
    pub val: LabeledDataset,
    pub seed: u64,
}

/// Uniform random 90-10 partition by document. The validation part gets
/// `round(n / 10)` rows (at least one).
pub fn split_90_10(dataset: &LabeledDataset, seed: u64) -> Result<SplitPair> {
    let n = dataset.rows.len();
    if n < 10 {
        return Err(Error::InvalidArgument(format!(
            "dataset has {n} rows; a 90-10 split needs at least 10"
        )));
    }
    let n_val = ((n as f64) / 10.0).round().max(1.0) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut in_val = vec![false; n];
    for &i in &order[..n_val] {
        in_val[i] = true;
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (row, v) in dataset.rows.iter().zip(in_val) {
        if v {
            val.push(row.clone());
        } else {
            train.push(row.clone());
        }
    }
    let part = |rows| LabeledDataset {
        rows,
        seed: Some(seed),
        ..dataset.clone()
    };
    Ok(SplitPair {
        train: part(train),
        val: part(val),
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceConfig {
    /// Target ceiling on valid negatives per positive, for every label.
    pub balance_n: f64,
    pub seed: u64,
}

/// What one undersampling run did.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UndersampleTrace {
    pub negatives: usize,
    pub checked: usize,
    pub removed: Vec<Pmid>,
}

impl UndersampleTrace {
    pub fn all_checked(&self) -> bool {
        self.checked == self.negatives
    }
}

pub fn undersample(dataset: &LabeledDataset, config: &BalanceConfig) -> Result<LabeledDataset> {
    undersample_traced(dataset, config).map(|(d, _)| d)
}

/// Removes superfluous negative rows until every label has at most
/// `balance_n` valid negatives per positive, or every negative row has been
/// examined.
///
/// A negative row has no positive label. Rows are examined in a seeded
/// random order; a row is kept when it is valid for some label that is at or
/// under its target ratio, and removed otherwise. Rows with a positive label
/// are never removed.
pub fn undersample_traced(
    dataset: &LabeledDataset,
    config: &BalanceConfig,
) -> Result<(LabeledDataset, UndersampleTrace)> {
    // Also rejects NaN.
    if !(config.balance_n >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "balance_n must be at least 1, got {}",
            config.balance_n
        )));
    }
    let labels = dataset.labels();
    let index: BTreeMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let mut positives = vec![0usize; labels.len()];
    let mut valid_negatives = vec![0usize; labels.len()];
    for r in &dataset.rows {
        for l in &r.valid_labels {
            let Some(&i) = index.get(l.as_str()) else { continue };
            if r.positive_labels.contains(l) {
                positives[i] += 1;
            } else {
                valid_negatives[i] += 1;
            }
        }
    }
    let over = |vn: usize, pos: usize| vn as f64 > config.balance_n * pos as f64;

    let mut negatives: Vec<usize> = (0..dataset.rows.len())
        .filter(|&i| dataset.rows[i].positive_labels.is_empty())
        .collect();
    negatives.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));

    let mut removed = vec![false; dataset.rows.len()];
    let mut trace = UndersampleTrace {
        negatives: negatives.len(),
        ..Default::default()
    };
    for &i in &negatives {
        let any_over = (0..labels.len()).any(|l| over(valid_negatives[l], positives[l]));
        if !any_over {
            break;
        }
        trace.checked += 1;
        let row = &dataset.rows[i];
        let row_labels: Vec<usize> = row
            .valid_labels
            .iter()
            .filter_map(|l| index.get(l.as_str()).copied())
            .collect();
        let necessary = row_labels
            .iter()
            .any(|&l| !over(valid_negatives[l], positives[l]));
        if !necessary {
            removed[i] = true;
            trace.removed.push(row.pmid.clone());
            for &l in &row_labels {
                valid_negatives[l] -= 1;
            }
        }
    }
    let rows = dataset
        .rows
        .iter()
        .zip(&removed)
        .filter(|(_, &r)| !r)
        .map(|(row, _)| row.clone())
        .collect();
    let out = LabeledDataset {
        rows,
        seed: Some(config.seed),
        balance_n: Some(config.balance_n),
        ..dataset.clone()
    };
    Ok((out, trace))
}
