//! Run configuration shared by the pipeline and the command line.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::read_json;
use crate::ensembles::{LabelModelConfig, Method};
use crate::error::{Error, Result};
use crate::labelers::LfId;
use crate::lr::{Grid, LrConfig, DEFAULT_SEEDS};
use crate::thesaurus::SelectionThresholds;

/// Relative data paths resolve against this directory when it is set.
pub const DATA_DIR_ENV: &str = "GRANUM_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub thesaurus: PathBuf,
    /// A corpus JSONL file or an ingested store directory.
    pub corpus: PathBuf,
    pub years: Vec<i32>,
    pub thresholds: SelectionThresholds,
    pub lfs: Vec<LfId>,
    pub method: Method,
    pub balance_n: f64,
    pub seeds: Vec<u64>,
    pub grid: Grid,
    pub label_model: LabelModelConfig,
    /// Methods tried by the combination search.
    pub search_methods: Vec<Method>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            thesaurus: PathBuf::from("thesaurus.json"),
            corpus: PathBuf::from("corpus.jsonl"),
            years: Vec::new(),
            thresholds: SelectionThresholds::default(),
            lfs: vec![LfId::Co, LfId::Nl, LfId::Sl],
            method: Method::Alo,
            balance_n: 10.0,
            seeds: DEFAULT_SEEDS.to_vec(),
            grid: Grid::default(),
            label_model: LabelModelConfig::default(),
            search_methods: vec![Method::Mv, Method::Alo, Method::Lm],
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }

    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        self.lr().validate()?;
        if self.years.is_empty() {
            return Err(Error::InvalidArgument("no years configured".into()));
        }
        let lfs: BTreeSet<LfId> = self.lfs.iter().copied().collect();
        if lfs.len() != self.lfs.len() || lfs.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "lf subset {:?} must be distinct and non-empty",
                self.lfs
            )));
        }
        if self.lfs.len() > 1 && self.lfs.len() < self.method.min_columns() {
            return Err(Error::InvalidArgument(format!(
                "{} needs at least {} labeling functions",
                self.method,
                self.method.min_columns()
            )));
        }
        Ok(())
    }

    pub fn lr(&self) -> LrConfig {
        LrConfig {
            seeds: self.seeds.clone(),
            balance_n: self.balance_n,
            grid: self.grid.clone(),
        }
    }

    pub fn thesaurus_path(&self) -> PathBuf {
        resolve_data_path(&self.thesaurus)
    }

    pub fn corpus_path(&self) -> PathBuf {
        resolve_data_path(&self.corpus)
    }

    /// SHA-256 of the canonical JSON form, leaving out the output directory.
    pub fn digest(&self) -> String {
        let canonical = RunConfig {
            output_dir: PathBuf::new(),
            ..self.clone()
        };
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex_digest(&json)
    }
}

pub fn resolve_data_path(path: &Path) -> PathBuf {
    match std::env::var_os(DATA_DIR_ENV) {
        Some(root) if path.is_relative() => Path::new(&root).join(path),
        _ => path.to_path_buf(),
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
