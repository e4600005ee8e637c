#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use granum::corpus::Document;
use granum::thesaurus::{Concept, Descriptor, ProvenanceType};
use granum::Pmid;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn doc(pmid: &str, year: i32, descriptors: &[&str], occurrences: &[&str]) -> Document {
    Document {
        pmid: Pmid::from(pmid),
        title: String::new(),
        abstract_text: String::new(),
        year,
        descriptor_uis: set(descriptors),
        occurrences: set(occurrences),
    }
}

pub fn text_doc(pmid: &str, title: &str, abstract_text: &str) -> Document {
    Document {
        pmid: Pmid::from(pmid),
        title: title.into(),
        abstract_text: abstract_text.into(),
        year: 2000,
        descriptor_uis: BTreeSet::new(),
        occurrences: BTreeSet::new(),
    }
}

pub fn descriptor(ui: &str, parents: &[&str]) -> Descriptor {
    Descriptor {
        ui: ui.into(),
        name: format!("{ui} name"),
        parents: parents.iter().map(|p| p.to_string()).collect(),
        year_introduced: 1990,
        provenance_type: ProvenanceType::Other,
        host_ui: None,
        concepts: vec![Concept {
            cui: format!("C{ui}"),
            preferred: true,
            terms: vec![format!("{ui} name")],
        }],
    }
}

/// A descriptor promoted from `host` in `year`, with a single concept.
pub fn promoted(ui: &str, host: &str, year: i32, terms: &[&str]) -> Descriptor {
    Descriptor {
        ui: ui.into(),
        name: terms[0].into(),
        parents: vec![host.into()],
        year_introduced: year,
        provenance_type: ProvenanceType::Subdivision,
        host_ui: Some(host.into()),
        concepts: vec![Concept {
            cui: format!("C{ui}"),
            preferred: true,
            terms: terms.iter().map(|t| t.to_string()).collect(),
        }],
    }
}

pub fn use_case(fine: &str, host: &str) -> granum::thesaurus::UseCase {
    granum::thesaurus::UseCase {
        concept_cui: format!("C{fine}"),
        fine_ui: fine.into(),
        host_ui: host.into(),
        year: 2006,
    }
}

pub fn row(pmid: &str, positive: &[&str], valid: &[&str]) -> granum::datasets::DatasetRow {
    granum::datasets::DatasetRow {
        pmid: Pmid::from(pmid),
        text: String::new(),
        positive_labels: set(positive),
        valid_labels: set(valid),
    }
}

/// Ground-truth dataset over `labels`; rows are sorted by pmid.
pub fn dataset(mut rows: Vec<granum::datasets::DatasetRow>, labels: &[&str]) -> granum::datasets::LabeledDataset {
    rows.sort_by(|a, b| a.pmid.cmp(&b.pmid));
    granum::datasets::LabeledDataset {
        year: 2006,
        use_cases: labels.iter().map(|l| use_case(l, "H")).collect(),
        source: granum::datasets::Source::GroundTruth,
        rows,
        seed: None,
        balance_n: None,
        thresholds: None,
    }
}
