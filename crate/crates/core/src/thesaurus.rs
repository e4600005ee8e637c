//! Versioned taxonomy snapshot and retrospective use-case selection.
//!
//! A snapshot is a flat list of descriptors, each carrying its hierarchy
//! edges (`parents`), the concepts it bundles, and the provenance of its
//! introduction. Fine-grained evaluation use cases are descriptors that were
//! created by promoting a subordinate concept of an existing host descriptor.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusStats;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub cui: String,
    pub preferred: bool,
    /// Name first, then synonyms.
    pub terms: Vec<String>,
}

impl Concept {
    pub fn name(&self) -> &str {
        &self.terms[0]
    }

    pub fn synonyms(&self) -> &[String] {
        &self.terms[1..]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProvenanceType {
    /// A subordinate concept promoted to a child of its previous host.
    #[serde(rename = "subdivision_1_2")]
    Subdivision,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Descriptor {
    pub ui: String,
    pub name: String,
    pub parents: Vec<String>,
    pub year_introduced: i32,
    pub provenance_type: ProvenanceType,
    pub host_ui: Option<String>,
    pub concepts: Vec<Concept>,
}

/// A promoted concept `concept_cui`, formerly hosted by `host_ui`, that became
/// the descriptor `fine_ui` in `year`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UseCase {
    pub concept_cui: String,
    pub fine_ui: String,
    pub host_ui: String,
    pub year: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionThresholds {
    pub test_positive_min: u64,
    pub dev_min: u64,
    pub dev_max: u64,
    pub dev_positive_min: u64,
}

impl Default for SelectionThresholds {
    fn default() -> Self {
        SelectionThresholds {
            test_positive_min: 10,
            dev_min: 10,
            dev_max: 1_000_000,
            dev_positive_min: 10,
        }
    }
}

impl SelectionThresholds {
    pub fn validate(&self) -> Result<()> {
        if self.dev_min > self.dev_max {
            return Err(Error::InvalidArgument(format!(
                "dev_min {} exceeds dev_max {}",
                self.dev_min, self.dev_max
            )));
        }
        Ok(())
    }
}

/// Immutable, validated taxonomy snapshot.
#[derive(Debug, Clone)]
pub struct Thesaurus {
    descriptors: BTreeMap<String, Descriptor>,
    children: BTreeMap<String, Vec<String>>,
}

impl Thesaurus {
    pub fn from_descriptors(list: Vec<Descriptor>) -> Result<Self> {
        let mut descriptors = BTreeMap::new();
        for d in list {
            validate_descriptor(&d)?;
            let ui = d.ui.clone();
            if descriptors.insert(ui.clone(), d).is_some() {
                return Err(Error::Thesaurus(format!("duplicate descriptor ui {ui}")));
            }
        }
        let mut children: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for d in descriptors.values() {
            for p in &d.parents {
                if !descriptors.contains_key(p) {
                    return Err(Error::Thesaurus(format!(
                        "descriptor {} lists unknown parent {p}",
                        d.ui
                    )));
                }
                children.entry(p.clone()).or_default().push(d.ui.clone());
            }
        }
        for c in children.values_mut() {
            c.sort();
            c.dedup();
        }
        let t = Thesaurus {
            descriptors,
            children,
        };
        t.check_acyclic()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn get(&self, ui: &str) -> Option<&Descriptor> {
        self.descriptors.get(ui)
    }

    pub fn descriptor(&self, ui: &str) -> Result<&Descriptor> {
        self.get(ui)
            .ok_or_else(|| Error::UnknownDescriptor(ui.to_owned()))
    }

    /// Descriptors in ascending ui order.
    pub fn iter(&self) -> impl Iterator<Item = &Descriptor> {
        self.descriptors.values()
    }

    pub fn children(&self, ui: &str) -> &[String] {
        self.children.get(ui).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_leaf(&self, ui: &str) -> bool {
        self.children(ui).is_empty()
    }

    /// Transitive closure of child edges, excluding `ui` itself.
    pub fn descendants(&self, ui: &str) -> Result<BTreeSet<String>> {
        self.descriptor(ui)?;
        let mut out = BTreeSet::new();
        let mut stack: Vec<&str> = self.children(ui).iter().map(String::as_str).collect();
        while let Some(next) = stack.pop() {
            if out.insert(next.to_owned()) {
                stack.extend(self.children(next).iter().map(String::as_str));
            }
        }
        Ok(out)
    }

    /// `{ui} ∪ descendants(ui)`: every descriptor whose annotation counts as
    /// an annotation with `ui`.
    pub fn subtree(&self, ui: &str) -> Result<BTreeSet<String>> {
        let mut s = self.descendants(ui)?;
        s.insert(ui.to_owned());
        Ok(s)
    }

    /// Transitive closure of parent edges, excluding `ui` itself.
    pub fn ancestors(&self, ui: &str) -> Result<BTreeSet<String>> {
        let d = self.descriptor(ui)?;
        let mut out = BTreeSet::new();
        let mut stack: Vec<&str> = d.parents.iter().map(String::as_str).collect();
        while let Some(next) = stack.pop() {
            if out.insert(next.to_owned()) {
                stack.extend(self.descriptors[next].parents.iter().map(String::as_str));
            }
        }
        Ok(out)
    }

    fn check_acyclic(&self) -> Result<()> {
        // Kahn's algorithm over parent -> child edges.
        let mut indegree: BTreeMap<&str, usize> = self
            .descriptors
            .values()
            .map(|d| {
                let unique: HashSet<&String> = d.parents.iter().collect();
                (d.ui.as_str(), unique.len())
            })
            .collect();
        let mut ready: Vec<&str> = indegree
            .iter()
            .filter(|(_, &n)| n == 0)
            .map(|(&u, _)| u)
            .collect();
        let mut seen = 0;
        while let Some(u) = ready.pop() {
            seen += 1;
            for c in self.children(u) {
                let n = indegree.get_mut(c.as_str()).expect("child is a descriptor");
                *n -= 1;
                if *n == 0 {
                    ready.push(c);
                }
            }
        }
        if seen == self.descriptors.len() {
            return Ok(());
        }
        let culprit = indegree
            .iter()
            .find(|(_, &n)| n > 0)
            .map(|(u, _)| *u)
            .unwrap_or_default();
        Err(Error::Thesaurus(format!(
            "hierarchy cycle through descriptor {culprit}"
        )))
    }
}

fn validate_descriptor(d: &Descriptor) -> Result<()> {
    let fail = |msg: &str| Err(Error::Thesaurus(format!("descriptor {:?}: {msg}", d.ui)));
    if d.ui.is_empty() {
        return fail("empty ui");
    }
    if d.parents.iter().any(|p| p == &d.ui) {
        return Err(Error::Thesaurus(format!(
            "hierarchy cycle: descriptor {} lists itself as parent",
            d.ui
        )));
    }
    if d.concepts.is_empty() {
        return fail("has zero concepts");
    }
    let mut cuis = HashSet::new();
    for c in &d.concepts {
        if c.cui.is_empty() {
            return fail("concept with empty cui");
        }
        if !cuis.insert(c.cui.as_str()) {
            return fail(&format!("duplicate concept cui {}", c.cui));
        }
        if c.terms.is_empty() {
            return fail(&format!("concept {} has no terms", c.cui));
        }
    }
    if d.concepts.iter().filter(|c| c.preferred).count() != 1 {
        return fail("must have exactly one preferred concept");
    }
    if d.provenance_type == ProvenanceType::Subdivision && d.host_ui.is_none() {
        return fail("subdivision_1_2 provenance without host_ui");
    }
    Ok(())
}

pub fn load_thesaurus(path: impl AsRef<Path>) -> Result<Thesaurus> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let list: Vec<Descriptor> = serde_json::from_str(&raw).map_err(|e| Error::Parse {
        path: path.to_owned(),
        line: e.line(),
        message: e.to_string(),
    })?;
    Thesaurus::from_descriptors(list)
}

/// Applies the three selection criteria to every descriptor introduced in
/// `year`. Output is sorted by `fine_ui`.
pub fn select_use_cases(
    thesaurus: &Thesaurus,
    stats: &CorpusStats,
    year: i32,
    thresholds: &SelectionThresholds,
) -> Vec<UseCase> {
    let mut out: Vec<UseCase> = thesaurus
        .iter()
        .filter_map(|d| candidate(thesaurus, d, year))
        .filter(|uc| {
            let test_pos = stats.test_count(&uc.fine_ui);
            let dev = stats.dev_count(&uc.host_ui);
            let dev_pos = stats.dev_concept_positive(&uc.host_ui, &uc.concept_cui);
            test_pos >= thresholds.test_positive_min
                && dev >= thresholds.dev_min
                && dev <= thresholds.dev_max
                && dev_pos >= thresholds.dev_positive_min
        })
        .collect();
    out.sort_by(|a, b| a.fine_ui.cmp(&b.fine_ui));
    out
}

/// Criteria 1 and 2: promotion provenance in `year`, a single concept, a leaf.
fn candidate(thesaurus: &Thesaurus, d: &Descriptor, year: i32) -> Option<UseCase> {
    if d.provenance_type != ProvenanceType::Subdivision || d.year_introduced != year {
        return None;
    }
    if d.concepts.len() != 1 || !thesaurus.is_leaf(&d.ui) {
        return None;
    }
    let host = d.host_ui.as_ref()?;
    thesaurus.get(host)?;
    Some(UseCase {
        concept_cui: d.concepts[0].cui.clone(),
        fine_ui: d.ui.clone(),
        host_ui: host.clone(),
        year,
    })
}

/// Host descriptors that at least one subdivision descriptor points to,
/// paired with the promoted concept cuis.
pub(crate) fn promoted_pairs(thesaurus: &Thesaurus) -> BTreeSet<(String, String)> {
    thesaurus
        .iter()
        .filter(|d| d.provenance_type == ProvenanceType::Subdivision)
        .filter_map(|d| d.host_ui.as_ref().map(|h| (h, d)))
        .flat_map(|(h, d)| d.concepts.iter().map(move |c| (h.clone(), c.cui.clone())))
        .collect()
}
