//! Deterministic synthetic thesaurus and corpus generator, for fixtures,
//! tests and trying the tool without licensed data.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_json, write_jsonl, Document};
use crate::error::{Error, Result};
use crate::pmid::Pmid;
use crate::thesaurus::{Concept, Descriptor, ProvenanceType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    /// Promotion year; documents before it form the development side.
    pub year: i32,
    pub dev_years: i32,
    pub test_years: i32,
    pub docs_per_year: usize,
    /// Promoted concepts that satisfy every selection criterion.
    pub use_cases: usize,
    /// Adds a non-leaf, a two-concept and an under-threshold candidate.
    pub distractors: bool,
    pub abstract_words: usize,
    /// Chance that a document is about the promoted concept of its group.
    pub relevance: f64,
    /// Chance that a document belongs to a second group.
    pub multi_label: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            year: 2006,
            dev_years: 4,
            test_years: 3,
            docs_per_year: 150,
            use_cases: 8,
            distractors: true,
            abstract_words: 40,
            relevance: 0.4,
            multi_label: 0.15,
        }
    }
}

/// Test documents of the under-threshold candidate annotated with it.
pub const UNDER_THRESHOLD_POSITIVES: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Qualifying,
    NonLeaf,
    TwoConcept,
    UnderThreshold,
}

struct Group {
    kind: Kind,
    host: String,
    fine: String,
    child: String,
    cui: String,
    terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub descriptors: Vec<Descriptor>,
    pub documents: Vec<Document>,
}

impl SynthData {
    /// Writes `thesaurus.json` and `corpus.jsonl` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(&dir.join("thesaurus.json"), &self.descriptors)?;
        write_jsonl(&dir.join("corpus.jsonl"), self.documents.iter())
    }
}

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ne", "ru", "sa", "te", "vo", "zi", "pa", "do", "fe", "gu", "ri", "xa", "be",
    "mon", "tar", "vel", "qui", "sor", "lin", "dar", "pes",
];
const KINDS: [&str; 4] = ["Disease", "Syndrome", "Deficiency", "Disorder"];
const COMMON: [&str; 14] = [
    "the", "of", "a", "type", "disease", "with", "in", "and", "patients", "case", "study", "was",
    "observed", "syndrome",
];

fn word(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    (0..syllables).map(|_| *SYLLABLES.choose(rng).expect("non-empty")).collect()
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn strip(term: &str) -> String {
    crate::text::strip_punctuation(&term.to_lowercase())
}

pub fn generate(config: &SynthConfig) -> Result<SynthData> {
    if config.use_cases == 0 || config.dev_years < 1 || config.test_years < 1 {
        return Err(Error::InvalidArgument(
            "synthetic data needs a use case and at least one year on each side".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let y = config.year;

    let mut kinds = vec![Kind::Qualifying; config.use_cases];
    if config.distractors {
        kinds.extend([Kind::NonLeaf, Kind::TwoConcept, Kind::UnderThreshold]);
    }
    let mut groups = Vec::new();
    let mut descriptors = vec![
        descriptor("D000001", "Diseases", &[], 1963, None, vec![concept("C0000001", true, "Diseases")]),
        descriptor("D000002", "Miscellany", &[], 1963, None, vec![concept("C0000002", true, "Miscellany")]),
    ];
    for (i, &kind) in kinds.iter().enumerate() {
        let (w1, w2, w3) = (capitalize(&word(&mut rng, 2)), capitalize(&word(&mut rng, 2)), capitalize(&word(&mut rng, 3)));
        let k = KINDS[i % KINDS.len()];
        let letter = (b'A' + (i % 26) as u8) as char;
        let terms = vec![
            format!("{w1}-{w2} {k}, Type {letter}"),
            format!("{w3} {k}"),
            format!("{w1}-{w2} Type {letter}"),
        ];
        let g = Group {
            kind,
            host: format!("D1{i:05}"),
            fine: format!("D2{i:05}"),
            child: format!("D3{i:05}"),
            cui: format!("C9{i:06}"),
            terms,
        };
        let host_name = format!("{w1} {k}s");
        descriptors.push(descriptor(
            &g.host,
            &host_name,
            &["D000001"],
            1990,
            None,
            vec![concept(&format!("C8{i:06}"), true, &host_name)],
        ));
        let mut concepts = vec![Concept {
            cui: g.cui.clone(),
            preferred: true,
            terms: g.terms.clone(),
        }];
        if kind == Kind::TwoConcept {
            concepts.push(concept(&format!("C7{i:06}"), false, &format!("{w3} Variant")));
        }
        descriptors.push(descriptor(&g.fine, &g.terms[0], &[g.host.as_str()], y, Some(&g.host), concepts));
        if kind == Kind::NonLeaf {
            let name = format!("{} Neonatal", g.terms[0]);
            descriptors.push(descriptor(
                &g.child,
                &name,
                &[g.fine.as_str()],
                y,
                None,
                vec![concept(&format!("C6{i:06}"), true, &name)],
            ));
        }
        groups.push(g);
    }

    let mut filler: Vec<String> = (0..300).map(|_| word(&mut rng, 3)).collect();
    filler.extend(COMMON.iter().map(|s| s.to_string()));

    let mut documents = Vec::new();
    let mut under_threshold_positives = 0usize;
    let mut pmid = 1000u64;
    for year in (y - config.dev_years)..(y + config.test_years) {
        for _ in 0..config.docs_per_year {
            pmid += 1;
            let mut doc = Document {
                pmid: Pmid(pmid.to_string()),
                title: String::new(),
                abstract_text: String::new(),
                year,
                descriptor_uis: BTreeSet::new(),
                occurrences: BTreeSet::new(),
            };
            let mut title: Vec<String> = (0..8).map(|_| filler.choose(&mut rng).expect("filler").clone()).collect();
            let mut body: Vec<String> = (0..config.abstract_words)
                .map(|_| filler.choose(&mut rng).expect("filler").clone())
                .collect();
            if rng.random_bool(0.1) {
                doc.descriptor_uis.insert("D000002".into());
            } else {
                let mut picked = vec![rng.random_range(0..groups.len())];
                if groups.len() > 1 && rng.random_bool(config.multi_label) {
                    let mut other = rng.random_range(0..groups.len() - 1);
                    if other >= picked[0] {
                        other += 1;
                    }
                    picked.push(other);
                }
                for gi in picked {
                    let g = &groups[gi];
                    let mut relevant = rng.random_bool(config.relevance);
                    if g.kind == Kind::UnderThreshold && year >= y {
                        relevant = under_threshold_positives < UNDER_THRESHOLD_POSITIVES;
                        if relevant {
                            under_threshold_positives += 1;
                        }
                    }
                    let mentioned = rng.random_bool(if relevant { 0.75 } else { 0.06 });
                    if mentioned {
                        let term = if rng.random_bool(0.5) { &g.terms[0] } else { g.terms[1..].choose(&mut rng).expect("synonyms") };
                        let target = if rng.random_bool(0.3) { &mut title } else { &mut body };
                        insert_mention(&mut rng, target, term, &filler);
                    }
                    let p_occ = match (relevant, mentioned) {
                        (true, true) => 0.7,
                        (true, false) => 0.3,
                        _ => 0.04,
                    };
                    if rng.random_bool(p_occ) {
                        doc.occurrences.insert(g.cui.clone());
                    }
                    if year >= y && relevant {
                        let fine = if g.kind == Kind::NonLeaf && rng.random_bool(0.3) { &g.child } else { &g.fine };
                        doc.descriptor_uis.insert(fine.clone());
                        if rng.random_bool(0.3) {
                            doc.descriptor_uis.insert(g.host.clone());
                        }
                    } else {
                        doc.descriptor_uis.insert(g.host.clone());
                    }
                }
            }
            if let Some(first) = title.first_mut() {
                *first = capitalize(first);
            }
            doc.title = title.join(" ");
            doc.abstract_text = sentences(&body);
            documents.push(doc);
        }
    }
    if config.distractors && under_threshold_positives != UNDER_THRESHOLD_POSITIVES {
        return Err(Error::InvalidArgument(
            "too few test documents to place the under-threshold candidate".into(),
        ));
    }
    Ok(SynthData {
        descriptors,
        documents,
    })
}

/// Inserts `term` in one of four surface forms: verbatim, lowercased,
/// lowercased without punctuation, or as scattered tokens.
fn insert_mention(rng: &mut ChaCha8Rng, words: &mut Vec<String>, term: &str, filler: &[String]) {
    let at = rng.random_range(0..=words.len());
    let form = rng.random_range(0..20);
    let pieces: Vec<String> = match form {
        0..=6 => vec![term.to_string()],
        7..=11 => vec![term.to_lowercase()],
        12..=15 => vec![strip(term)],
        _ => {
            let mut tokens: Vec<String> = strip(term).split(' ').map(str::to_string).collect();
            tokens.shuffle(rng);
            tokens.truncate(2);
            let mut out = Vec::new();
            for t in tokens {
                out.push(t);
                out.push(filler.choose(rng).expect("filler").clone());
            }
            out
        }
    };
    for (i, p) in pieces.into_iter().enumerate() {
        words.insert(at + i, p);
    }
}

fn sentences(words: &[String]) -> String {
    let mut out = String::new();
    for (i, chunk) in words.chunks(10).enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&capitalize(&chunk.join(" ")));
        out.push('.');
    }
    out
}

fn concept(cui: &str, preferred: bool, term: &str) -> Concept {
    Concept {
        cui: cui.into(),
        preferred,
        terms: vec![term.into()],
    }
}

fn descriptor(
    ui: &str,
    name: &str,
    parents: &[&str],
    year: i32,
    host: Option<&str>,
    concepts: Vec<Concept>,
) -> Descriptor {
    Descriptor {
        ui: ui.into(),
        name: name.into(),
        parents: parents.iter().map(|p| p.to_string()).collect(),
        year_introduced: year,
        provenance_type: if host.is_some() {
            ProvenanceType::Subdivision
        } else {
            ProvenanceType::Other
        },
        host_ui: host.map(str::to_string),
        concepts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{compute_stats, Corpus};
    use crate::thesaurus::{select_use_cases, SelectionThresholds, Thesaurus};

    #[test]
    fn deterministic_and_selectable() {
        let c = SynthConfig::default();
        let a = generate(&c).unwrap();
        assert_eq!(a, generate(&c).unwrap());
        let th = Thesaurus::from_descriptors(a.descriptors.clone()).unwrap();
        let corpus = Corpus::from_documents(a.documents.clone()).unwrap();
        let stats = compute_stats(&corpus, &th, c.year);
        let ucs = select_use_cases(&th, &stats, c.year, &SelectionThresholds::default());
        let fine: Vec<&str> = ucs.iter().map(|u| u.fine_ui.as_str()).collect();
        let expected: Vec<String> = (0..c.use_cases).map(|i| format!("D2{i:05}")).collect();
        assert_eq!(fine, expected);
    }
}
