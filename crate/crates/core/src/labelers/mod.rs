//! The nine labeling functions: concept occurrence (CO) and eight
//! dictionary variants built from a concept's name (N*) or synonyms (S*):
//! exact (E), lowercased (L), lowercased without punctuation (NP), and
//! single tokens (T).

mod dictionary;
mod matcher;
mod votes;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dictionary::{build_dictionary, normalize_terms, Dictionary};
pub use matcher::{build_matcher, Matcher};
pub use votes::{LfMask, VoteSet};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::pmid::Pmid;
use crate::text::{contains_bounded, lowercase};
use crate::thesaurus::{Thesaurus, UseCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LfId {
    #[serde(rename = "CO")]
    Co,
    #[serde(rename = "NE")]
    Ne,
    #[serde(rename = "SE")]
    Se,
    #[serde(rename = "NL")]
    Nl,
    #[serde(rename = "SL")]
    Sl,
    #[serde(rename = "NNP")]
    Nnp,
    #[serde(rename = "SNP")]
    Snp,
    #[serde(rename = "NT")]
    Nt,
    #[serde(rename = "ST")]
    St,
}

impl LfId {
    /// Canonical order.
    pub const ALL: [LfId; 9] = [
        LfId::Co,
        LfId::Ne,
        LfId::Se,
        LfId::Nl,
        LfId::Sl,
        LfId::Nnp,
        LfId::Snp,
        LfId::Nt,
        LfId::St,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LfId::Co => "CO",
            LfId::Ne => "NE",
            LfId::Se => "SE",
            LfId::Nl => "NL",
            LfId::Sl => "SL",
            LfId::Nnp => "NNP",
            LfId::Snp => "SNP",
            LfId::Nt => "NT",
            LfId::St => "ST",
        }
    }

    pub fn uses_synonyms(self) -> bool {
        matches!(self, LfId::Se | LfId::Sl | LfId::Snp | LfId::St)
    }

    /// NE and SE match the raw text; the rest match lowercased text.
    pub fn is_case_sensitive(self) -> bool {
        matches!(self, LfId::Ne | LfId::Se)
    }

    /// Parses a comma-separated list such as `CO,NL,SL`, returned in
    /// canonical order without duplicates.
    pub fn parse_list(s: &str) -> Result<Vec<LfId>> {
        let mut v = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<LfId>>>()?;
        v.sort();
        v.dedup();
        Ok(v)
    }
}

impl fmt::Display for LfId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LfId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LfId::ALL
            .into_iter()
            .find(|lf| lf.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown labeling function {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vote {
    pub pmid: Pmid,
    pub label: String,
    pub lf: LfId,
    pub value: u8,
}

/// What a single labeling function reads.
#[derive(Debug, Clone, Copy)]
pub enum LfSource<'a> {
    Dictionary(&'a Dictionary),
    Occurrence { label: &'a str, cui: &'a str },
}

/// Direct evaluation of one labeling function by exhaustive scanning. This
/// is the reference the automaton is checked against.
pub fn apply_lf<'a>(documents: impl IntoIterator<Item = &'a Document>, source: LfSource<'_>) -> Vec<Vote> {
    let mut votes: Vec<Vote> = documents
        .into_iter()
        .map(|doc| match source {
            LfSource::Occurrence { label, cui } => Vote {
                pmid: doc.pmid.clone(),
                label: label.to_owned(),
                lf: LfId::Co,
                value: doc.occurrences.contains(cui) as u8,
            },
            LfSource::Dictionary(dict) => {
                let fields: [String; 2] = if dict.lf.is_case_sensitive() {
                    [doc.title.clone(), doc.abstract_text.clone()]
                } else {
                    [lowercase(&doc.title), lowercase(&doc.abstract_text)]
                };
                let hit = dict
                    .elements
                    .iter()
                    .any(|e| fields.iter().any(|f| contains_bounded(f, e)));
                Vote {
                    pmid: doc.pmid.clone(),
                    label: dict.label.clone(),
                    lf: dict.lf,
                    value: hit as u8,
                }
            }
        })
        .collect();
    votes.sort();
    votes
}

#[derive(Debug, Clone)]
struct Target {
    label: String,
    cui: String,
}

/// All requested labeling functions for a set of use cases, backed by one
/// shared matcher.
pub struct Labeler {
    lfs: Vec<LfId>,
    targets: Vec<Target>,
    matcher: Option<Matcher>,
}

impl Labeler {
    pub fn new(use_cases: &[UseCase], thesaurus: &Thesaurus, lfs: &[LfId]) -> Result<Self> {
        let mut lfs = lfs.to_vec();
        lfs.sort();
        lfs.dedup();
        if lfs.is_empty() {
            return Err(Error::InvalidArgument("no labeling functions selected".into()));
        }
        let mut dictionaries = Vec::new();
        for uc in use_cases {
            for &lf in lfs.iter().filter(|&&lf| lf != LfId::Co) {
                dictionaries.push(build_dictionary(uc, thesaurus, lf)?);
            }
        }
        let matcher = if dictionaries.iter().any(|d| !d.elements.is_empty()) {
            Some(build_matcher(&dictionaries)?)
        } else {
            None
        };
        let targets = use_cases
            .iter()
            .map(|uc| Target {
                label: uc.fine_ui.clone(),
                cui: uc.concept_cui.clone(),
            })
            .collect();
        Ok(Labeler {
            lfs,
            targets,
            matcher,
        })
    }

    pub fn lfs(&self) -> &[LfId] {
        &self.lfs
    }

    /// Votes of every selected function for `doc` on each of `labels`.
    pub fn vote(&self, doc: &Document, labels: &[String]) -> Vec<(String, LfMask)> {
        let matched: Vec<(&str, LfId)> = self
            .matcher
            .as_ref()
            .map(|m| m.matching(doc).into_iter().map(|i| m.key(i)).collect())
            .unwrap_or_default();
        let co = self.lfs.contains(&LfId::Co);
        labels
            .iter()
            .map(|label| {
                let mut mask = LfMask::EMPTY;
                for (l, lf) in &matched {
                    if l == label {
                        mask.insert(*lf);
                    }
                }
                if co {
                    let hit = self
                        .targets
                        .iter()
                        .filter(|t| &t.label == label)
                        .any(|t| doc.occurrences.contains(&t.cui));
                    if hit {
                        mask.insert(LfId::Co);
                    }
                }
                (label.clone(), mask)
            })
            .collect()
    }

    /// Labels every `(document, labels)` pair in parallel on the current
    /// rayon pool. The result does not depend on the pool size.
    pub fn label(&self, items: &[(&Document, Vec<String>)]) -> VoteSet {
        let rows: Vec<(Pmid, Vec<(String, LfMask)>)> = items
            .par_iter()
            .map(|(doc, labels)| (doc.pmid.clone(), self.vote(doc, labels)))
            .collect();
        let mut set = VoteSet::new(self.lfs.clone());
        for (pmid, votes) in rows {
            for (label, mask) in votes {
                set.insert(pmid.clone(), label, mask);
            }
        }
        set
    }
}
