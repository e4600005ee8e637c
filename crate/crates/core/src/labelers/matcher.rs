//! One-pass multi-dictionary matching.
//!
//! Every distinct dictionary element becomes one pattern of an Aho-Corasick
//! automaton. Case-sensitive functions (NE, SE) search the raw text, the
//! others search its lowercased form, so two automata are kept. Overlapping
//! iteration reports every pattern ending at every position, which is then
//! filtered by the token-boundary rule.

use std::collections::HashMap;

use aho_corasick::{AhoCorasick, MatchKind};

use super::{Dictionary, LfId};
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::text::{at_token_boundary, lowercase};

struct Automaton {
    ac: AhoCorasick,
    /// Pattern id -> indexes of the dictionaries holding that element.
    owners: Vec<Vec<u32>>,
}

impl Automaton {
    fn build(entries: Vec<(&str, u32)>) -> Result<Option<Self>> {
        if entries.is_empty() {
            return Ok(None);
        }
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let mut patterns: Vec<&str> = Vec::new();
        let mut owners: Vec<Vec<u32>> = Vec::new();
        for (element, dict) in entries {
            let id = *ids.entry(element).or_insert_with(|| {
                patterns.push(element);
                owners.push(Vec::new());
                patterns.len() - 1
            });
            owners[id].push(dict);
        }
        for o in &mut owners {
            o.sort_unstable();
            o.dedup();
        }
        let ac = AhoCorasick::builder()
            .match_kind(MatchKind::Standard)
            .build(&patterns)
            .map_err(|e| Error::InvalidArgument(format!("cannot build automaton: {e}")))?;
        Ok(Some(Automaton { ac, owners }))
    }

    fn scan(&self, text: &str, hits: &mut Vec<u32>) {
        for m in self.ac.find_overlapping_iter(text) {
            if at_token_boundary(text, m.start(), m.end()) {
                hits.extend_from_slice(&self.owners[m.pattern().as_usize()]);
            }
        }
    }
}

/// Immutable automaton over a set of dictionaries.
pub struct Matcher {
    raw: Option<Automaton>,
    lower: Option<Automaton>,
    dictionaries: Vec<(String, LfId)>,
}

pub fn build_matcher(dictionaries: &[Dictionary]) -> Result<Matcher> {
    let mut raw = Vec::new();
    let mut lower = Vec::new();
    for (i, d) in dictionaries.iter().enumerate() {
        let idx = u32::try_from(i).expect("fewer than 2^32 dictionaries");
        let bucket = match d.lf {
            LfId::Co => {
                return Err(Error::InvalidArgument(
                    "CO has no dictionary to match".into(),
                ))
            }
            lf if lf.is_case_sensitive() => &mut raw,
            _ => &mut lower,
        };
        bucket.extend(
            d.elements
                .iter()
                .filter(|e| !e.is_empty())
                .map(|e| (e.as_str(), idx)),
        );
    }
    if raw.is_empty() && lower.is_empty() {
        return Err(Error::EmptyInput("matcher has no patterns".into()));
    }
    Ok(Matcher {
        raw: Automaton::build(raw)?,
        lower: Automaton::build(lower)?,
        dictionaries: dictionaries
            .iter()
            .map(|d| (d.label.clone(), d.lf))
            .collect(),
    })
}

impl Matcher {
    pub fn dictionary_count(&self) -> usize {
        self.dictionaries.len()
    }

    /// The (label, lf) key of a dictionary index.
    pub fn key(&self, dict: usize) -> (&str, LfId) {
        let (l, lf) = &self.dictionaries[dict];
        (l.as_str(), *lf)
    }

    /// Indexes of dictionaries with at least one bounded element occurrence
    /// in `title` or `abstract_text`; sorted, unique.
    pub fn matching_in(&self, title: &str, abstract_text: &str) -> Vec<usize> {
        let mut hits = Vec::new();
        for field in [title, abstract_text] {
            if let Some(a) = &self.raw {
                a.scan(field, &mut hits);
            }
            if let Some(a) = &self.lower {
                a.scan(&lowercase(field), &mut hits);
            }
        }
        hits.sort_unstable();
        hits.dedup();
        hits.into_iter().map(|i| i as usize).collect()
    }

    pub fn matching(&self, doc: &Document) -> Vec<usize> {
        self.matching_in(&doc.title, &doc.abstract_text)
    }
}
