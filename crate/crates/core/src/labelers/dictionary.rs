use serde::{Deserialize, Serialize};

use super::LfId;
use crate::error::{Error, Result};
use crate::text::{lowercase, nfc, strip_punctuation};
use crate::thesaurus::{Thesaurus, UseCase};

/// Normalized dictionary elements of one labeling function for one
/// fine-grained label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dictionary {
    pub label: String,
    pub lf: LfId,
    pub elements: Vec<String>,
}

pub fn build_dictionary(use_case: &UseCase, thesaurus: &Thesaurus, lf: LfId) -> Result<Dictionary> {
    if lf == LfId::Co {
        return Err(Error::InvalidArgument(
            "CO reads concept occurrences and has no dictionary".into(),
        ));
    }
    let d = thesaurus.descriptor(&use_case.fine_ui)?;
    let [concept] = d.concepts.as_slice() else {
        return Err(Error::InvalidArgument(format!(
            "descriptor {} has {} concepts, expected one",
            d.ui,
            d.concepts.len()
        )));
    };
    let name = [nfc(concept.name())];
    let synonyms: Vec<String> = concept.synonyms().iter().map(|s| nfc(s)).collect();
    let terms: &[String] = if lf.uses_synonyms() { &synonyms } else { &name };
    Ok(Dictionary {
        label: use_case.fine_ui.clone(),
        lf,
        elements: normalize_terms(terms, lf),
    })
}

/// Applies the normalization chain of `lf` to raw terms. Empty results are
/// dropped and duplicates removed, keeping first occurrences.
pub fn normalize_terms(terms: &[String], lf: LfId) -> Vec<String> {
    use LfId::*;
    let mut out: Vec<String> = match lf {
        Co => Vec::new(),
        Ne | Se => terms.to_vec(),
        Nl | Sl => terms.iter().map(|t| lowercase(t)).collect(),
        Nnp | Snp => terms.iter().map(|t| strip_punctuation(&lowercase(t))).collect(),
        Nt | St => terms
            .iter()
            .flat_map(|t| {
                strip_punctuation(&lowercase(t))
                    .split_whitespace()
                    .map(str::to_owned)
                    .collect::<Vec<_>>()
            })
            .collect(),
    };
    out.retain(|e| !e.trim().is_empty());
    let mut seen = std::collections::HashSet::new();
    out.retain(|e| seen.insert(e.clone()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terms(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn niemann_pick_variants() {
        let name = terms(&["Niemann-Pick Disease, Type A"]);
        assert_eq!(normalize_terms(&name, LfId::Ne), name);
        assert_eq!(
            normalize_terms(&name, LfId::Nl),
            ["niemann-pick disease, type a"]
        );
        assert_eq!(
            normalize_terms(&name, LfId::Nnp),
            ["niemann pick disease type a"]
        );
        assert_eq!(
            normalize_terms(&name, LfId::Nt),
            ["niemann", "pick", "disease", "type", "a"]
        );
    }

    #[test]
    fn synonym_tokens_are_unique() {
        let syn = terms(&["Classical Niemann-Pick Disease", "Sphingomyelin Lipidosis"]);
        assert_eq!(
            normalize_terms(&syn, LfId::St),
            ["classical", "niemann", "pick", "disease", "sphingomyelin", "lipidosis"]
        );
        assert_eq!(
            normalize_terms(&syn, LfId::Snp),
            ["classical niemann pick disease", "sphingomyelin lipidosis"]
        );
    }

    #[test]
    fn single_letter_name() {
        let x = terms(&["X"]);
        assert_eq!(normalize_terms(&x, LfId::Ne), ["X"]);
        assert_eq!(normalize_terms(&x, LfId::Nl), ["x"]);
    }

    #[test]
    fn punctuation_only_terms_vanish() {
        assert!(normalize_terms(&terms(&["--", "()"]), LfId::Snp).is_empty());
        assert!(normalize_terms(&terms(&["--"]), LfId::Nt).is_empty());
    }
}
