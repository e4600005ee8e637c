use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LfId;
use crate::error::{Error, Result};
use crate::pmid::Pmid;

/// Set of labeling functions voting 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct LfMask(u16);

impl LfMask {
    pub const EMPTY: LfMask = LfMask(0);

    pub fn insert(&mut self, lf: LfId) {
        self.0 |= 1 << lf.index();
    }

    pub fn contains(self, lf: LfId) -> bool {
        self.0 & (1 << lf.index()) != 0
    }

    pub fn iter(self) -> impl Iterator<Item = LfId> {
        LfId::ALL.into_iter().filter(move |lf| self.contains(*lf))
    }
}

impl FromIterator<LfId> for LfMask {
    fn from_iter<I: IntoIterator<Item = LfId>>(iter: I) -> Self {
        let mut m = LfMask::EMPTY;
        for lf in iter {
            m.insert(lf);
        }
        m
    }
}

/// Votes of a fixed set of labeling functions on (pmid, label) pairs.
///
/// Pairs absent from the set were not voted on (the document is not valid
/// for that label); present pairs carry an explicit 0 or 1 per function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteSet {
    lfs: Vec<LfId>,
    rows: BTreeMap<(Pmid, String), LfMask>,
}

#[derive(Serialize, Deserialize)]
struct DocVotes {
    pmid: Pmid,
    votes: BTreeMap<String, BTreeMap<LfId, u8>>,
}

impl VoteSet {
    pub fn new(mut lfs: Vec<LfId>) -> Self {
        lfs.sort();
        lfs.dedup();
        VoteSet {
            lfs,
            rows: BTreeMap::new(),
        }
    }

    pub fn lfs(&self) -> &[LfId] {
        &self.lfs
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Bits for functions outside the set are dropped.
    pub fn insert(&mut self, pmid: Pmid, label: String, mask: LfMask) {
        let mask = mask.iter().filter(|lf| self.lfs.contains(lf)).collect();
        self.rows.insert((pmid, label), mask);
    }

    pub fn get(&self, pmid: &Pmid, label: &str) -> Option<LfMask> {
        self.rows.get(&(pmid.clone(), label.to_owned())).copied()
    }

    /// Rows in (pmid, label) order.
    pub fn iter(&self) -> impl Iterator<Item = (&Pmid, &str, LfMask)> {
        self.rows.iter().map(|((p, l), m)| (p, l.as_str(), *m))
    }

    pub fn labels(&self) -> BTreeSet<&str> {
        self.rows.keys().map(|(_, l)| l.as_str()).collect()
    }

    /// Pairs on which `lf` voted 1.
    pub fn positives(&self, lf: LfId) -> BTreeSet<(Pmid, String)> {
        self.rows
            .iter()
            .filter(|(_, m)| m.contains(lf))
            .map(|(k, _)| k.clone())
            .collect()
    }

    /// TSV with columns `pmid label_ui lf value`, one line per vote.
    pub fn write_tsv(&self, path: impl AsRef<Path>, header: bool) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        if header {
            writeln!(w, "pmid\tlabel_ui\tlf\tvalue").map_err(io)?;
        }
        for ((pmid, label), mask) in &self.rows {
            for lf in &self.lfs {
                writeln!(w, "{pmid}\t{label}\t{lf}\t{}", mask.contains(*lf) as u8).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    pub fn read_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lfs = BTreeSet::new();
        let mut rows: BTreeMap<(Pmid, String), LfMask> = BTreeMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() || (i == 0 && line.starts_with("pmid\t")) {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message,
            };
            let cols: Vec<&str> = line.split('\t').collect();
            let [pmid, label, lf, value] = cols.as_slice() else {
                return Err(err(format!("expected 4 columns, found {}", cols.len())));
            };
            let lf: LfId = lf.parse().map_err(|e: Error| err(e.to_string()))?;
            let value = match *value {
                "0" => false,
                "1" => true,
                v => return Err(err(format!("vote value must be 0 or 1, found {v:?}"))),
            };
            lfs.insert(lf);
            let mask = rows
                .entry((Pmid::from(*pmid), label.to_string()))
                .or_default();
            if value {
                mask.insert(lf);
            }
        }
        Ok(VoteSet {
            lfs: lfs.into_iter().collect(),
            rows,
        })
    }

    /// Compact per-document JSONL form.
    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut docs: Vec<DocVotes> = Vec::new();
        for ((pmid, label), mask) in &self.rows {
            if docs.last().is_none_or(|d| &d.pmid != pmid) {
                docs.push(DocVotes {
                    pmid: pmid.clone(),
                    votes: BTreeMap::new(),
                });
            }
            let per_lf = self
                .lfs
                .iter()
                .map(|lf| (*lf, mask.contains(*lf) as u8))
                .collect();
            docs.last_mut()
                .expect("pushed above")
                .votes
                .insert(label.clone(), per_lf);
        }
        crate::corpus::write_jsonl(path.as_ref(), &docs)
    }

    pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let docs: Vec<DocVotes> = crate::corpus::read_jsonl(path.as_ref())?;
        let mut lfs = BTreeSet::new();
        let mut rows = BTreeMap::new();
        for d in docs {
            for (label, per_lf) in d.votes {
                let mut mask = LfMask::EMPTY;
                for (lf, v) in per_lf {
                    lfs.insert(lf);
                    if v == 1 {
                        mask.insert(lf);
                    }
                }
                rows.insert((d.pmid.clone(), label), mask);
            }
        }
        Ok(VoteSet {
            lfs: lfs.into_iter().collect(),
            rows,
        })
    }
}
