//! Logistic-regression baseline: binary lexical and semantic features,
//! F-ANOVA selection, L2 grid search on a held-out split, and majority
//! voting over seeds.

mod anova;
mod features;
mod model;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{read_json, write_json};
use crate::datasets::{split_90_10, undersample, BalanceConfig, LabeledDataset};
use crate::error::{Error, Result};
use crate::eval::Predictions;

pub use anova::{f_scores, f_statistic, top_k};
pub use features::{FeatureSpace, FeatureVec, Occurrences};
pub use model::{gradient, minimize, objective, CompiledModel, Fit, LrModel, Problem, GRAD_TOLERANCE, MAX_ITERATIONS};

pub const DEFAULT_SEEDS: [u64; 6] = [11, 21, 31, 41, 51, 61];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub ks: Vec<usize>,
    /// Inverse regularization strengths.
    pub l2_cs: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            ks: vec![5, 10, 100, 1000],
            l2_cs: vec![0.01, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6, 1e9],
        }
    }
}

impl Grid {
    /// Candidates in tie-break order: smaller k first, then smaller C.
    pub fn candidates(&self) -> Vec<(usize, f64)> {
        let mut ks = self.ks.clone();
        ks.sort_unstable();
        ks.dedup();
        let mut cs = self.l2_cs.clone();
        cs.sort_by(f64::total_cmp);
        cs.dedup();
        ks.iter()
            .flat_map(|&k| cs.iter().map(move |&c| (k, c)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() || self.l2_cs.is_empty() {
            return Err(Error::InvalidArgument("empty hyperparameter grid".into()));
        }
        if self.ks.contains(&0) || self.l2_cs.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "grid needs k >= 1 and finite positive C".into(),
            ));
        }
        Ok(())
    }
}

/// Instances of one label: rows valid for it, with their targets.
fn instances<'a>(
    dataset: &LabeledDataset,
    x: &'a [FeatureVec],
    label: &str,
) -> (Vec<&'a FeatureVec>, Vec<bool>) {
    dataset
        .rows
        .iter()
        .zip(x)
        .filter(|(r, _)| r.valid_labels.contains(label))
        .map(|(r, f)| (f, r.positive_labels.contains(label)))
        .unzip()
}

fn fit_selected(
    space: &FeatureSpace,
    label: &str,
    rows: &[&FeatureVec],
    y: &[bool],
    selected: &[u32],
    k: usize,
    l2_c: f64,
    seed: Option<u64>,
) -> LrModel {
    let problem = Problem::new(rows, y.to_vec(), selected);
    let fit = minimize(&problem, l2_c);
    if !fit.converged {
        log::debug!(
            "{label}: no convergence after {} iterations (k={k}, C={l2_c})",
            fit.iterations
        );
    }
    LrModel {
        label: label.to_string(),
        seed,
        k,
        l2_c,
        features: selected.iter().map(|&f| space.name(f).to_string()).collect(),
        weights: fit.weights,
        bias: fit.bias,
        iterations: fit.iterations,
        converged: fit.converged,
        constant: None,
    }
}

/// Selects the `k` best features by F-ANOVA over the label's valid rows.
pub fn f_anova_select(
    dataset: &LabeledDataset,
    x: &[FeatureVec],
    space: &FeatureSpace,
    label: &str,
    k: usize,
) -> Result<Vec<u32>> {
    let (rows, y) = instances(dataset, x, label);
    let scores = f_scores(label, &rows, &y, space.len())?;
    Ok(top_k(&scores, k))
}

/// Trains one label on its valid rows. `x` holds the encoded rows of
/// `dataset`.
pub fn train_lr(
    dataset: &LabeledDataset,
    x: &[FeatureVec],
    space: &FeatureSpace,
    label: &str,
    k: usize,
    l2_c: f64,
) -> Result<LrModel> {
    let (rows, y) = instances(dataset, x, label);
    let scores = f_scores(label, &rows, &y, space.len())?;
    let selected = top_k(&scores, k);
    Ok(fit_selected(space, label, &rows, &y, &selected, k, l2_c, dataset.seed))
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridChoice {
    pub k: usize,
    pub l2_c: f64,
    pub f1: f64,
    pub model: LrModel,
}

/// Picks the grid point with the best F1 against the weak labels of the
/// validation part. Ties go to the smaller k, then the smaller C.
pub fn grid_search(
    train: (&LabeledDataset, &[FeatureVec]),
    val: (&LabeledDataset, &[FeatureVec]),
    space: &FeatureSpace,
    label: &str,
    grid: &Grid,
) -> Result<GridChoice> {
    grid.validate()?;
    let (rows, y) = instances(train.0, train.1, label);
    let scores = f_scores(label, &rows, &y, space.len())?;
    let (val_rows, val_y) = instances(val.0, val.1, label);
    let fitted: Vec<GridChoice> = grid
        .candidates()
        .into_par_iter()
        .map(|(k, c)| {
            let selected = top_k(&scores, k);
            let model = fit_selected(space, label, &rows, &y, &selected, k, c, train.0.seed);
            let compiled = model.compile(space);
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for (x, &t) in val_rows.iter().zip(&val_y) {
                match (compiled.predict(x), t) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => {}
                }
            }
            GridChoice {
                k,
                l2_c: c,
                f1: f1(tp, fp, fn_),
                model,
            }
        })
        .collect();
    let mut best: Option<GridChoice> = None;
    for g in fitted {
        if best.as_ref().map_or(true, |b| g.f1 > b.f1) {
            best = Some(g);
        }
    }
    Ok(best.expect("validated grid is non-empty"))
}

/// Constant model for a label whose training rows hold a single class.
fn degenerate_model(dataset: &LabeledDataset, label: &str) -> LrModel {
    let valid = dataset.rows.iter().filter(|r| r.valid_labels.contains(label));
    let mut any = false;
    let mut all = true;
    for r in valid {
        any = true;
        all &= r.positive_labels.contains(label);
    }
    LrModel::constant(label, dataset.seed, any && all)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrConfig {
    pub seeds: Vec<u64>,
    pub balance_n: f64,
    pub grid: Grid,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig {
            seeds: DEFAULT_SEEDS.to_vec(),
            balance_n: 10.0,
            grid: Grid::default(),
        }
    }
}

impl LrConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let distinct: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if self.seeds.is_empty() || distinct.len() != self.seeds.len() {
            return Err(Error::InvalidArgument("seeds must be non-empty and distinct".into()));
        }
        if !(self.balance_n >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "balance_n must be at least 1, got {}",
                self.balance_n
            )));
        }
        Ok(())
    }
}

/// Models of every label for one seed: split the weak development data,
/// undersample the training part, and grid-search each label.
pub fn train_seed(
    dev: &LabeledDataset,
    occurrences: &Occurrences,
    space: &FeatureSpace,
    seed: u64,
    config: &LrConfig,
) -> Result<Vec<LrModel>> {
    let split = split_90_10(dev, seed)?;
    let train = undersample(
        &split.train,
        &BalanceConfig {
            balance_n: config.balance_n,
            seed,
        },
    )?;
    let train_x = space.encode_dataset(&train, occurrences);
    let val_x = space.encode_dataset(&split.val, occurrences);
    dev.labels()
        .par_iter()
        .map(|label| {
            match grid_search((&train, &train_x), (&split.val, &val_x), space, label, &config.grid) {
                Ok(choice) => Ok(choice.model),
                Err(Error::DegenerateLabel(_)) => {
                    log::warn!("{label}: single-class training data for seed {seed}");
                    Ok(degenerate_model(&train, label))
                }
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Per-seed models for all labels, as written by `train-lr`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrEnsemble {
    pub year: i32,
    pub config: LrConfig,
    pub models: Vec<LrModel>,
}

impl LrEnsemble {
    pub fn train(dev: &LabeledDataset, occurrences: &Occurrences, config: &LrConfig) -> Result<Self> {
        config.validate()?;
        let space = FeatureSpace::build(dev, occurrences);
        let mut models = Vec::new();
        for &seed in &config.seeds {
            models.extend(train_seed(dev, occurrences, &space, seed, config)?);
        }
        Ok(LrEnsemble {
            year: dev.year,
            config: config.clone(),
            models,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }

    pub fn predict(&self, dataset: &LabeledDataset, occurrences: &Occurrences) -> Result<Predictions> {
        predict_voted(&self.models, &self.config.seeds, dataset, occurrences)
    }
}

/// Assigns a label to a valid document when a strict majority of the seed
/// models predict it. Every label of the dataset needs a model per seed.
pub fn predict_voted(
    models: &[LrModel],
    seeds: &[u64],
    dataset: &LabeledDataset,
    occurrences: &Occurrences,
) -> Result<Predictions> {
    let mut by_label: BTreeMap<&str, BTreeMap<u64, &LrModel>> = BTreeMap::new();
    for m in models {
        let seed = m.seed.ok_or_else(|| Error::InvalidArgument(format!("model for {} has no seed", m.label)))?;
        by_label.entry(m.label.as_str()).or_default().insert(seed, m);
    }
    let space = FeatureSpace::from_names(models.iter().flat_map(|m| m.features.iter().cloned()));
    let labels = dataset.labels();
    let mut panels: Vec<(&str, Vec<CompiledModel>)> = Vec::new();
    for label in &labels {
        let per_seed = by_label.get(label.as_str());
        let mut panel = Vec::with_capacity(seeds.len());
        for s in seeds {
            let m = per_seed.and_then(|p| p.get(s)).ok_or(Error::MissingSeed(*s))?;
            panel.push(m.compile(&space));
        }
        panels.push((label.as_str(), panel));
    }
    let x = space.encode_dataset(dataset, occurrences);
    let rows: Vec<(crate::Pmid, BTreeSet<String>)> = dataset
        .rows
        .par_iter()
        .zip(&x)
        .map(|(row, x)| {
            let labels = panels
                .iter()
                .filter(|(l, _)| row.valid_labels.contains(*l))
                .filter(|(_, panel)| 2 * panel.iter().filter(|m| m.predict(x)).count() > panel.len())
                .map(|(l, _)| l.to_string())
                .collect();
            (row.pmid.clone(), labels)
        })
        .collect();
    Ok(rows.into_iter().filter(|(_, l)| !l.is_empty()).collect())
}
