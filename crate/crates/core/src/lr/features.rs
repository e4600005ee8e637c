use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::datasets::LabeledDataset;
use crate::pmid::Pmid;
use crate::text::word_tokens;

/// Concept occurrences per document, the source of semantic features.
pub type Occurrences = BTreeMap<Pmid, BTreeSet<String>>;

/// Sorted feature ids present in one document.
pub type FeatureVec = Vec<u32>;

/// Binary lexical (`w:` + token) and semantic (`c:` + cui) features. Ids
/// follow the lexicographic order of the feature names.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpace {
    names: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

fn feature_names<'a>(text: &str, cuis: Option<&'a BTreeSet<String>>) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = word_tokens(text).into_iter().map(|t| format!("w:{t}")).collect();
    if let Some(cuis) = cuis {
        out.extend(cuis.iter().map(|c| format!("c:{c}")));
    }
    out
}

impl FeatureSpace {
    pub fn from_names(names: impl IntoIterator<Item = String>) -> Self {
        let names: BTreeSet<String> = names.into_iter().collect();
        let names: Vec<String> = names.into_iter().collect();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        FeatureSpace { names, index }
    }

    /// Every feature occurring in some row of the dataset.
    pub fn build(dataset: &LabeledDataset, occurrences: &Occurrences) -> Self {
        let mut names = BTreeSet::new();
        for row in &dataset.rows {
            names.extend(feature_names(&row.text, occurrences.get(&row.pmid)));
        }
        Self::from_names(names)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        if self.index.len() != self.names.len() {
            return self.names.binary_search_by(|n| n.as_str().cmp(name)).ok().map(|i| i as u32);
        }
        self.index.get(name).copied()
    }

    /// Features outside the space are dropped.
    pub fn encode(&self, text: &str, cuis: Option<&BTreeSet<String>>) -> FeatureVec {
        let mut ids: Vec<u32> = feature_names(text, cuis)
            .iter()
            .filter_map(|n| self.id(n))
            .collect();
        ids.sort_unstable();
        ids
    }

    pub fn encode_dataset(&self, dataset: &LabeledDataset, occurrences: &Occurrences) -> Vec<FeatureVec> {
        use rayon::prelude::*;
        dataset
            .rows
            .par_iter()
            .map(|r| self.encode(&r.text, occurrences.get(&r.pmid)))
            .collect()
    }
}
