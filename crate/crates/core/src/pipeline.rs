//! End-to-end run for one or more years: select use cases, label, combine,
//! build datasets, search combinations, train the logistic baseline and
//! report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::corpus::{compute_stats, write_json, Corpus, Document, YearFilter};
use crate::datasets::{build_dev, build_test, candidates, LabeledDataset, Source};
use crate::ensembles::{
    combine, search_combinations, EnhancedLabels, LabelModelConfig, Method, SearchReport, VoteMatrix,
};
use crate::error::{Error, Result};
use crate::eval::{pool, score, write_predictions, write_report, EvalResult, ReportTable, ScoreOptions};
use crate::labelers::{Labeler, LfId, VoteSet};
use crate::lr::{LrEnsemble, Occurrences};
use crate::manifest;
use crate::thesaurus::{load_thesaurus, select_use_cases, Thesaurus, UseCase};

/// Weak labels from one labeling function, or an ensemble of several.
pub fn enhance(
    votes: &VoteSet,
    lfs: &[LfId],
    method: Method,
    config: &LabelModelConfig,
) -> Result<EnhancedLabels> {
    match lfs {
        [] => Err(Error::InvalidArgument("no labeling functions".into())),
        [lf] => EnhancedLabels::single(votes, *lf),
        _ => combine(&VoteMatrix::from_votes(votes, lfs)?, method, config),
    }
}

pub fn weak_source(lfs: &[LfId], method: Method) -> Source {
    let mut lfs = lfs.to_vec();
    lfs.sort();
    Source::Weak {
        method: (lfs.len() > 1).then_some(method),
        lfs,
    }
}

/// Report row name of an ensemble, e.g. `ALO_CO-NL-SL`.
pub fn ensemble_name(method: Method, lfs: &[LfId]) -> String {
    let names: Vec<&str> = lfs.iter().map(|l| l.as_str()).collect();
    format!("{method}_{}", names.join("-"))
}

/// Votes of every labeling function on the documents valid for some label on
/// one side of the year boundary.
pub fn label_side(
    labeler: &Labeler,
    use_cases: &[UseCase],
    corpus: &Corpus,
    thesaurus: &Thesaurus,
    filter: YearFilter,
) -> Result<VoteSet> {
    let items: Vec<(&Document, Vec<String>)> = candidates(use_cases, corpus, thesaurus, filter)?
        .into_iter()
        .map(|(d, valid)| (d, valid.into_iter().collect()))
        .collect();
    Ok(labeler.label(&items))
}

pub fn occurrences(corpus: &Corpus) -> Occurrences {
    corpus
        .documents()
        .map(|d| (d.pmid.clone(), d.occurrences.clone()))
        .collect()
}

#[derive(Debug, Clone)]
pub struct YearOutcome {
    pub year: i32,
    pub use_cases: Vec<UseCase>,
    pub table: ReportTable,
    pub search: SearchReport,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub years: Vec<YearOutcome>,
    pub pooled: Option<ReportTable>,
    pub reports: Vec<PathBuf>,
}

/// Runs every configured year and writes all artifacts to the output
/// directory. Years without a qualifying use case are skipped.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    let thesaurus_path = config.thesaurus_path();
    let corpus_path = config.corpus_path();
    let thesaurus = load_thesaurus(&thesaurus_path)?;
    let corpus = Corpus::load(&corpus_path)?;
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let occ = occurrences(&corpus);
    let mut years = Vec::new();
    let mut reports = Vec::new();
    let mut years_sorted = config.years.clone();
    years_sorted.sort_unstable();
    years_sorted.dedup();
    for &year in &years_sorted {
        let Some(outcome) = run_year(config, &thesaurus, &corpus, &occ, year, out)? else {
            log::warn!("{year}: no use case qualifies; skipped");
            continue;
        };
        reports.extend(write_report(out, std::slice::from_ref(&outcome.table))?);
        years.push(outcome);
    }
    if years.is_empty() {
        return Err(Error::EmptyInput("no configured year has a qualifying use case".into()));
    }
    let pooled = if years.len() > 1 {
        let table = pooled_table(&years)?;
        reports.extend(write_report(out, std::slice::from_ref(&table))?);
        Some(table)
    } else {
        None
    };
    manifest::record(
        out,
        "pipeline",
        "pipeline",
        Some(config.digest()),
        &[&thesaurus_path, &corpus_path],
    )?;
    Ok(PipelineOutcome {
        years,
        pooled,
        reports,
    })
}

/// One row per model name present in every year, over the union of labels.
fn pooled_table(years: &[YearOutcome]) -> Result<ReportTable> {
    let mut by_name: BTreeMap<&str, Vec<EvalResult>> = BTreeMap::new();
    for y in years {
        for r in &y.table.rows {
            by_name.entry(r.name.as_str()).or_default().push(r.clone());
        }
    }
    let mut rows = Vec::new();
    for r in &years[0].table.rows {
        let parts = &by_name[r.name.as_str()];
        if parts.len() == years.len() {
            rows.push(pool(&r.name, parts)?);
        }
    }
    Ok(ReportTable {
        title: "pooled".into(),
        rows,
    })
}

fn run_year(
    config: &RunConfig,
    thesaurus: &Thesaurus,
    corpus: &Corpus,
    occ: &Occurrences,
    year: i32,
    out: &Path,
) -> Result<Option<YearOutcome>> {
    let stats = compute_stats(corpus, thesaurus, year);
    let use_cases = select_use_cases(thesaurus, &stats, year, &config.thresholds);
    write_json(&out.join(format!("use_cases_{year}.json")), &use_cases)?;
    if use_cases.is_empty() {
        return Ok(None);
    }
    log::info!("{year}: {} use cases", use_cases.len());

    let labeler = Labeler::new(&use_cases, thesaurus, &LfId::ALL)?;
    let dev_votes = label_side(&labeler, &use_cases, corpus, thesaurus, YearFilter::Before(year))?;
    let test_votes = label_side(&labeler, &use_cases, corpus, thesaurus, YearFilter::AtOrAfter(year))?;
    dev_votes.write_tsv(out.join(format!("votes_dev_{year}.tsv")), true)?;
    test_votes.write_tsv(out.join(format!("votes_test_{year}.tsv")), true)?;

    let test = build_test(&use_cases, corpus, thesaurus)?;
    test.write(out.join(format!("test_{year}.jsonl")))?;

    let lm = &config.label_model;
    let opts = ScoreOptions::default();
    let mut rows = Vec::new();
    for lf in LfId::ALL {
        let labels = EnhancedLabels::single(&test_votes, lf)?;
        rows.push(score(lf.as_str(), &labels.by_document(), &test, opts)?);
    }
    if config.lfs.len() > 1 {
        let matrix = VoteMatrix::from_votes(&test_votes, &config.lfs)?;
        for m in [Method::Mv, Method::Alo, Method::Lm] {
            if config.lfs.len() >= m.min_columns() {
                let labels = combine(&matrix, m, lm)?;
                rows.push(score(&ensemble_name(m, matrix.columns()), &labels.by_document(), &test, opts)?);
            }
        }
    }

    let search = search_combinations(&test_votes, &test, &LfId::ALL, &config.search_methods, lm)?;
    let search_path = out.join(format!("search_{year}.tsv"));
    fs::write(&search_path, search.to_tsv()).map_err(|e| Error::io(&search_path, e))?;

    let weak = enhance(&dev_votes, &config.lfs, config.method, lm)?;
    weak.write_jsonl(out.join(format!("weak_dev_{year}.jsonl")))?;
    let dev = build_dev(
        &use_cases,
        corpus,
        thesaurus,
        weak_source(&config.lfs, config.method),
        &weak.positives,
    )?;
    let dev = LabeledDataset {
        thresholds: Some(config.thresholds),
        ..dev
    };
    dev.write(out.join(format!("dev_{year}.jsonl")))?;

    let lr = LrEnsemble::train(&dev, occ, &config.lr())?;
    lr.write(out.join(format!("lr_models_{year}.json")))?;
    let predictions = lr.predict(&test, occ)?;
    write_predictions(out.join(format!("predictions_lr_{year}.jsonl")), &predictions)?;
    rows.push(score("LR", &predictions, &test, opts)?);

    Ok(Some(YearOutcome {
        year,
        use_cases,
        table: ReportTable {
            title: year.to_string(),
            rows,
        },
        search,
    }))
}
