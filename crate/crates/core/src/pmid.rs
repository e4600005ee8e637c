use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Article identifier.
///
/// Ordering is numeric for all-digit identifiers ("9" < "42" < "100") and
/// lexicographic otherwise; all-digit identifiers sort before the rest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pmid(pub String);

impl Pmid {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn numeric_key(&self) -> Option<&str> {
        let s = self.0.as_str();
        if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
            Some(s.trim_start_matches('0'))
        } else {
            None
        }
    }
}

impl Ord for Pmid {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.numeric_key(), other.numeric_key()) {
            (Some(a), Some(b)) => a
                .len()
                .cmp(&b.len())
                .then_with(|| a.cmp(b))
                .then_with(|| self.0.cmp(&other.0)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for Pmid {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Pmid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Pmid {
    fn from(s: &str) -> Self {
        Pmid(s.to_owned())
    }
}

impl From<String> for Pmid {
    fn from(s: String) -> Self {
        Pmid(s)
    }
}
