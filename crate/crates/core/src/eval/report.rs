use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::EvalResult;
use crate::error::{Error, Result};

/// One table: a row per evaluated model or labeling function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportTable {
    pub title: String,
    pub rows: Vec<EvalResult>,
}

pub fn format_rate(x: f64) -> String {
    format!("{x:.3}")
}

impl ReportTable {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("model\tmaP±var\tmaR±var\tmaF1±var\tmiP\tmiR\tmiF1\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}±{}\t{}±{}\t{}±{}\t{}\t{}\t{}",
                r.name,
                format_rate(r.macro_precision),
                format_rate(r.macro_precision_var),
                format_rate(r.macro_recall),
                format_rate(r.macro_recall_var),
                format_rate(r.macro_f1),
                format_rate(r.macro_f1_var),
                format_rate(r.micro_precision),
                format_rate(r.micro_recall),
                format_rate(r.micro_f1),
            );
        }
        out
    }
}

/// Writes `report_<title>.tsv` (3 decimals) and `report_<title>.json` (full
/// precision, per-label detail) for each table; returns the TSV paths.
pub fn write_report(dir: impl AsRef<Path>, tables: &[ReportTable]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for t in tables {
        let tsv = dir.join(format!("report_{}.tsv", t.title));
        fs::write(&tsv, t.to_tsv()).map_err(|e| Error::io(&tsv, e))?;
        crate::corpus::write_json(&dir.join(format!("report_{}.json", t.title)), t)?;
        written.push(tsv);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::LabelScore;

    #[test]
    fn rounding_and_layout() {
        assert_eq!(format_rate(0.6336), "0.634");
        let r = EvalResult::from_labels("CO", vec![LabelScore::from_counts("A", 3, 1, 2)], 0.0, 0)
            .unwrap();
        let t = ReportTable {
            title: "2006".into(),
            rows: vec![r],
        };
        let tsv = t.to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "CO\t0.750±0.000\t0.600±0.000\t0.667±0.000\t0.750\t0.600\t0.667");
    }

    #[test]
    fn json_keeps_full_precision() {
        let r = EvalResult::from_labels("x", vec![LabelScore::from_counts("A", 1, 2, 0)], 0.0, 0)
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_report(dir.path(), &[ReportTable { title: "t".into(), rows: vec![r] }]).unwrap();
        let json = fs::read_to_string(dir.path().join("report_t.json")).unwrap();
        assert!(json.contains("0.3333333333333333"), "{json}");
    }
}
