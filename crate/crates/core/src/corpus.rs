//! Document ingestion, the on-disk corpus store, and hierarchy-aware queries.
//!
//! The store is a directory of JSONL shards in ascending pmid order plus
//! sidecar indexes (`descriptor_index.json`, `year_index.json`). Descendant
//! expansion is never materialized in the indexes; it happens at query time.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmid::Pmid;
use crate::text::nfc;
use crate::thesaurus::{promoted_pairs, Thesaurus};

const SHARD_SIZE: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub pmid: Pmid,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    /// Indexing-snapshot year supplied by the data provider.
    pub year: i32,
    pub descriptor_uis: BTreeSet<String>,
    /// Concept identifiers found in title or abstract by an external
    /// recognizer.
    pub occurrences: BTreeSet<String>,
}

impl Document {
    /// Title and abstract joined by a newline.
    pub fn text(&self) -> String {
        format!("{}\n{}", self.title, self.abstract_text)
    }

    fn normalize(mut self) -> Self {
        self.title = nfc(&self.title);
        self.abstract_text = nfc(&self.abstract_text);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YearFilter {
    Any,
    /// Strictly before the year: the development side of a split.
    Before(i32),
    /// The year or later: the test side.
    AtOrAfter(i32),
}

impl YearFilter {
    pub fn accepts(self, year: i32) -> bool {
        match self {
            YearFilter::Any => true,
            YearFilter::Before(y) => year < y,
            YearFilter::AtOrAfter(y) => year >= y,
        }
    }
}

/// Validated, indexed, immutable set of documents.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: BTreeMap<Pmid, Document>,
    by_descriptor: BTreeMap<String, Vec<Pmid>>,
    by_year: BTreeMap<i32, Vec<Pmid>>,
}

impl Corpus {
    pub fn from_documents(docs: impl IntoIterator<Item = Document>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for d in docs {
            validate(&d).map_err(Error::InvalidArgument)?;
            let d = d.normalize();
            if map.contains_key(&d.pmid) {
                return Err(Error::DuplicatePmid(d.pmid.0));
            }
            map.insert(d.pmid.clone(), d);
        }
        Ok(Self::index(map))
    }

    fn index(docs: BTreeMap<Pmid, Document>) -> Self {
        let mut by_descriptor: BTreeMap<String, Vec<Pmid>> = BTreeMap::new();
        let mut by_year: BTreeMap<i32, Vec<Pmid>> = BTreeMap::new();
        // Iteration is in pmid order, so every posting list comes out sorted.
        for d in docs.values() {
            for ui in &d.descriptor_uis {
                by_descriptor.entry(ui.clone()).or_default().push(d.pmid.clone());
            }
            by_year.entry(d.year).or_default().push(d.pmid.clone());
        }
        Corpus {
            docs,
            by_descriptor,
            by_year,
        }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, pmid: &Pmid) -> Option<&Document> {
        self.docs.get(pmid)
    }

    /// All documents in ascending pmid order.
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.docs.values()
    }

    pub fn years(&self) -> impl Iterator<Item = (i32, usize)> + '_ {
        self.by_year.iter().map(|(y, v)| (*y, v.len()))
    }

    /// Documents annotated with `descriptor_ui` or any of its descendants,
    /// whose year passes `filter`, in ascending pmid order.
    pub fn query(
        &self,
        descriptor_ui: &str,
        thesaurus: &Thesaurus,
        filter: YearFilter,
    ) -> Result<Vec<&Document>> {
        let subtree = thesaurus.subtree(descriptor_ui)?;
        let pmids: BTreeSet<&Pmid> = subtree
            .iter()
            .filter_map(|ui| self.by_descriptor.get(ui))
            .flatten()
            .collect();
        Ok(pmids
            .into_iter()
            .map(|p| &self.docs[p])
            .filter(|d| filter.accepts(d.year))
            .collect())
    }

    /// Writes the canonical JSONL form (ascending pmid).
    pub fn export(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_jsonl(path, self.docs.values())
    }

    /// Persists the store: sorted shards plus index sidecars.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let docs: Vec<&Document> = self.docs.values().collect();
        let mut shards = Vec::new();
        for (i, chunk) in docs.chunks(SHARD_SIZE).enumerate() {
            let name = format!("docs-{i:05}.jsonl");
            write_jsonl(&dir.join(&name), chunk.iter().copied())?;
            shards.push(name);
        }
        let meta = StoreMeta {
            documents: self.docs.len(),
            shards,
        };
        write_json(&dir.join("store.json"), &meta)?;
        write_json(&dir.join("descriptor_index.json"), &self.by_descriptor)?;
        write_json(&dir.join("year_index.json"), &self.by_year)?;
        Ok(())
    }

    /// Loads a store written by [`Corpus::save`], checking the sidecar
    /// indexes against the shards.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta: StoreMeta = read_json(&dir.join("store.json"))?;
        let mut docs = BTreeMap::new();
        for shard in &meta.shards {
            for d in read_jsonl::<Document>(&dir.join(shard))? {
                if docs.contains_key(&d.pmid) {
                    return Err(Error::DuplicatePmid(d.pmid.0));
                }
                docs.insert(d.pmid.clone(), d);
            }
        }
        let corpus = Self::index(docs);
        let by_descriptor: BTreeMap<String, Vec<Pmid>> =
            read_json(&dir.join("descriptor_index.json"))?;
        let by_year: BTreeMap<i32, Vec<Pmid>> = read_json(&dir.join("year_index.json"))?;
        if corpus.docs.len() != meta.documents
            || by_descriptor != corpus.by_descriptor
            || by_year != corpus.by_year
        {
            return Err(Error::Parse {
                path: dir.to_owned(),
                line: 0,
                message: "index sidecars do not match shards".into(),
            });
        }
        Ok(corpus)
    }

    /// Opens a store directory, or ingests a JSONL file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if path.is_dir() {
            Self::open(path)
        } else {
            ingest(path)
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct StoreMeta {
    documents: usize,
    shards: Vec<String>,
}

fn validate(d: &Document) -> std::result::Result<(), String> {
    if d.pmid.0.is_empty() {
        return Err("empty pmid".into());
    }
    if d.year <= 0 {
        return Err(format!("pmid {}: year must be positive", d.pmid));
    }
    Ok(())
}

/// Parses and validates a corpus JSONL file. Blank lines are skipped.
pub fn ingest(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            message,
        };
        let doc: Document = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        validate(&doc).map_err(parse_err)?;
        let doc = doc.normalize();
        if docs.contains_key(&doc.pmid) {
            return Err(Error::DuplicatePmid(doc.pmid.0));
        }
        docs.insert(doc.pmid.clone(), doc);
    }
    Ok(Corpus::index(docs))
}

/// Ingests `path` and persists the store under `store_dir`.
pub fn ingest_into(path: impl AsRef<Path>, store_dir: impl AsRef<Path>) -> Result<Corpus> {
    let corpus = ingest(path)?;
    corpus.save(store_dir)?;
    Ok(corpus)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptorCounts {
    pub dev: u64,
    pub test: u64,
}

/// Per-descriptor article counts on either side of a year boundary.
///
/// Counts are hierarchy-inclusive: a document annotated with a descendant of
/// `d` counts for `d`. Concept-positive counts are kept for every
/// `(host, concept)` pair named by a promotion record in the thesaurus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub year: i32,
    pub descriptors: BTreeMap<String, DescriptorCounts>,
    /// host ui -> concept cui -> development documents with an occurrence.
    pub dev_concept_positive: BTreeMap<String, BTreeMap<String, u64>>,
}

impl CorpusStats {
    pub fn dev_count(&self, ui: &str) -> u64 {
        self.descriptors.get(ui).map_or(0, |c| c.dev)
    }

    pub fn test_count(&self, ui: &str) -> u64 {
        self.descriptors.get(ui).map_or(0, |c| c.test)
    }

    pub fn dev_concept_positive(&self, host_ui: &str, cui: &str) -> u64 {
        self.dev_concept_positive
            .get(host_ui)
            .and_then(|m| m.get(cui))
            .copied()
            .unwrap_or(0)
    }
}

pub fn compute_stats(corpus: &Corpus, thesaurus: &Thesaurus, year: i32) -> CorpusStats {
    let mut closure: HashMap<&str, Vec<String>> = HashMap::new();
    for d in thesaurus.iter() {
        let mut up: Vec<String> = thesaurus
            .ancestors(&d.ui)
            .expect("descriptor exists")
            .into_iter()
            .collect();
        up.push(d.ui.clone());
        closure.insert(d.ui.as_str(), up);
    }
    let mut hosts_by_cui: HashMap<String, Vec<String>> = HashMap::new();
    for (host, cui) in promoted_pairs(thesaurus) {
        hosts_by_cui.entry(cui).or_default().push(host);
    }

    let mut stats = CorpusStats {
        year,
        ..Default::default()
    };
    for doc in corpus.documents() {
        let annotated: BTreeSet<&str> = doc
            .descriptor_uis
            .iter()
            .filter_map(|ui| closure.get(ui.as_str()))
            .flatten()
            .map(String::as_str)
            .collect();
        let dev = doc.year < year;
        for ui in &annotated {
            let c = stats.descriptors.entry((*ui).to_owned()).or_default();
            if dev {
                c.dev += 1;
            } else {
                c.test += 1;
            }
        }
        if !dev {
            continue;
        }
        for cui in &doc.occurrences {
            for host in hosts_by_cui.get(cui).into_iter().flatten() {
                if annotated.contains(host.as_str()) {
                    *stats
                        .dev_concept_positive
                        .entry(host.clone())
                        .or_default()
                        .entry(cui.clone())
                        .or_default() += 1;
                }
            }
        }
    }
    stats
}

pub(crate) fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    items: impl IntoIterator<Item = &'a T>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&raw).map_err(|e| Error::Parse {
        path: path.to_owned(),
        line: e.line(),
        message: e.to_string(),
    })
}
