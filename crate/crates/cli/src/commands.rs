use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use granum::config::{resolve_data_path, RunConfig};
use granum::corpus::{compute_stats, ingest_into, Corpus, YearFilter};
use granum::datasets::{build_dev, build_test, undersample, BalanceConfig, LabeledDataset, Source};
use granum::ensembles::{search_combinations, EnhancedLabels, Method};
use granum::eval::{
    compare, read_predictions, score, write_predictions, write_report, Alternative, EvalResult,
    ReportTable, ScoreOptions,
};
use granum::labelers::{Labeler, LfId, VoteSet};
use granum::lr::{LrEnsemble, Occurrences};
use granum::pipeline::{enhance, label_side, occurrences, run_pipeline};
use granum::synth::{generate, SynthConfig};
use granum::thesaurus::{load_thesaurus, select_use_cases, UseCase};
use granum::{manifest, Error};

use crate::{AlternativeArg, Cli, Command, DataArgs, Side, VoteFormat};

pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: if e.is_data_error() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> CliError {
    CliError {
        code: 1,
        message: message.into(),
    }
}

type Result<T> = std::result::Result<T, CliError>;

struct Ctx {
    config: RunConfig,
    digest: Option<String>,
}

impl Ctx {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Ctx {
                config: RunConfig::default(),
                digest: None,
            });
        };
        let config = RunConfig::load(path).map_err(|e| match e {
            Error::Io { .. } => CliError::from(e),
            e => invalid(format!("invalid config: {e}")),
        })?;
        let digest = Some(config.digest());
        Ok(Ctx { config, digest })
    }

    fn thesaurus(&self, data: &DataArgs) -> PathBuf {
        data.thesaurus
            .as_deref()
            .map_or_else(|| self.config.thesaurus_path(), resolve_data_path)
    }

    fn corpus(&self, data: &DataArgs) -> PathBuf {
        data.corpus
            .as_deref()
            .map_or_else(|| self.config.corpus_path(), resolve_data_path)
    }

    fn record(&self, out: &Path, command: &str, inputs: &[&Path]) -> Result<()> {
        let dir = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let name = out
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| out.display().to_string());
        manifest::record(dir, &name, command, self.digest.clone(), inputs)?;
        Ok(())
    }
}

fn parse_lfs(s: Option<&str>, default: &[LfId]) -> Result<Vec<LfId>> {
    match s {
        Some(s) => Ok(LfId::parse_list(s)?),
        None => Ok(default.to_vec()),
    }
}

fn parse_method(s: Option<&str>, default: Method) -> Result<Method> {
    match s {
        Some(s) => Ok(s.parse()?),
        None => Ok(default),
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| invalid(format!("invalid seed {p:?}")))
        })
        .collect()
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError {
        code: 2,
        message: format!("{}: {e}", path.display()),
    })
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError {
        code: 2,
        message: format!("{}: {e}", path.display()),
    }
}

fn read_votes(path: &Path) -> Result<VoteSet> {
    let votes = if path.extension().is_some_and(|e| e == "jsonl") {
        VoteSet::read_jsonl(path)?
    } else {
        VoteSet::read_tsv(path)?
    };
    Ok(votes)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { input, store } => {
            let corpus = ingest_into(&input, &store)?;
            log::info!("ingested {} documents", corpus.len());
            manifest::record(&store, "store", "ingest", ctx.digest.clone(), &[&input])?;
        }
        Command::Synth {
            out,
            seed,
            year,
            use_cases,
            docs_per_year,
            no_distractors,
        } => {
            let config = SynthConfig {
                seed,
                year,
                use_cases,
                docs_per_year,
                distractors: !no_distractors,
                ..SynthConfig::default()
            };
            generate(&config)?.write(&out)?;
            let run = RunConfig {
                thesaurus: out.join("thesaurus.json"),
                corpus: out.join("corpus.jsonl"),
                years: vec![year],
                output_dir: out.join("run"),
                ..RunConfig::default()
            };
            write_json(&out.join("config.json"), &run)?;
        }
        Command::SelectUsecases {
            data,
            year,
            test_positive_min,
            dev_min,
            dev_max,
            dev_positive_min,
            out,
        } => {
            let year = match (year, ctx.config.years.as_slice()) {
                (Some(y), _) => y,
                (None, [y]) => *y,
                _ => return Err(invalid("--year is required")),
            };
            let mut t = ctx.config.thresholds;
            t.test_positive_min = test_positive_min.unwrap_or(t.test_positive_min);
            t.dev_min = dev_min.unwrap_or(t.dev_min);
            t.dev_max = dev_max.unwrap_or(t.dev_max);
            t.dev_positive_min = dev_positive_min.unwrap_or(t.dev_positive_min);
            t.validate()?;
            let (tp, cp) = (ctx.thesaurus(&data), ctx.corpus(&data));
            let thesaurus = load_thesaurus(&tp)?;
            let corpus = Corpus::load(&cp)?;
            let stats = compute_stats(&corpus, &thesaurus, year);
            let selected = select_use_cases(&thesaurus, &stats, year, &t);
            log::info!("{year}: {} use cases", selected.len());
            write_json(&out, &selected)?;
            ctx.record(&out, "select-usecases", &[&tp, &cp])?;
        }
        Command::Label {
            data,
            use_cases,
            side,
            lfs,
            format,
            no_header,
            out,
        } => {
            let lfs = parse_lfs(lfs.as_deref(), &LfId::ALL)?;
            let ucs: Vec<UseCase> = read_json(&use_cases)?;
            let year = ucs.first().map(|u| u.year).ok_or_else(|| invalid("no use cases"))?;
            let (tp, cp) = (ctx.thesaurus(&data), ctx.corpus(&data));
            let thesaurus = load_thesaurus(&tp)?;
            let corpus = Corpus::load(&cp)?;
            let labeler = Labeler::new(&ucs, &thesaurus, &lfs)?;
            let filter = match side {
                Side::Dev => YearFilter::Before(year),
                Side::Test => YearFilter::AtOrAfter(year),
            };
            let votes = label_side(&labeler, &ucs, &corpus, &thesaurus, filter)?;
            ensure_parent(&out)?;
            match format {
                VoteFormat::Tsv => votes.write_tsv(&out, !no_header)?,
                VoteFormat::Jsonl => votes.write_jsonl(&out)?,
            }
            ctx.record(&out, "label", &[&tp, &cp, &use_cases])?;
        }
        Command::Combine {
            votes,
            method,
            lfs,
            out,
        } => {
            let vs = read_votes(&votes)?;
            let lfs = parse_lfs(lfs.as_deref(), &ctx.config.lfs)?;
            let method = parse_method(method.as_deref(), ctx.config.method)?;
            let labels = enhance(&vs, &lfs, method, &ctx.config.label_model)?;
            ensure_parent(&out)?;
            labels.write_jsonl(&out)?;
            ctx.record(&out, "combine", &[&votes])?;
        }
        Command::SearchCombos {
            votes,
            truth,
            lfs,
            methods,
            out,
        } => {
            let vs = read_votes(&votes)?;
            let lfs = parse_lfs(lfs.as_deref(), vs.lfs())?;
            let methods: Vec<Method> = methods
                .split(',')
                .map(|m| m.trim().parse::<Method>())
                .collect::<granum::Result<_>>()?;
            let dataset = LabeledDataset::read(&truth)?;
            let report = search_combinations(&vs, &dataset, &lfs, &methods, &ctx.config.label_model)?;
            ensure_parent(&out)?;
            fs::write(&out, report.to_tsv()).map_err(|e| io_error(&out, e))?;
            ctx.record(&out, "search-combos", &[&votes, &truth])?;
        }
        Command::BuildDataset {
            data,
            use_cases,
            split,
            weak,
            out,
        } => {
            let ucs: Vec<UseCase> = read_json(&use_cases)?;
            let (tp, cp) = (ctx.thesaurus(&data), ctx.corpus(&data));
            let thesaurus = load_thesaurus(&tp)?;
            let corpus = Corpus::load(&cp)?;
            let mut inputs: Vec<&Path> = vec![&tp, &cp, &use_cases];
            let dataset = match split {
                Side::Test => build_test(&ucs, &corpus, &thesaurus)?,
                Side::Dev => {
                    let weak = weak
                        .as_deref()
                        .ok_or_else(|| invalid("--weak is required for the development split"))?;
                    inputs.push(weak);
                    let labels = EnhancedLabels::read_jsonl(weak)?;
                    let source = Source::Weak {
                        method: labels.method,
                        lfs: labels.lfs.clone(),
                    };
                    build_dev(&ucs, &corpus, &thesaurus, source, &labels.positives)?
                }
            };
            let dataset = LabeledDataset {
                thresholds: Some(ctx.config.thresholds),
                ..dataset
            };
            ensure_parent(&out)?;
            dataset.write(&out)?;
            ctx.record(&out, "build-dataset", &inputs)?;
        }
        Command::Undersample {
            dataset,
            balance_n,
            seed,
            out,
        } => {
            let ds = LabeledDataset::read(&dataset)?;
            let config = BalanceConfig {
                balance_n: balance_n.unwrap_or(ctx.config.balance_n),
                seed,
            };
            let balanced = undersample(&ds, &config)?;
            log::info!("kept {} of {} rows", balanced.len(), ds.len());
            ensure_parent(&out)?;
            balanced.write(&out)?;
            ctx.record(&out, "undersample", &[&dataset])?;
        }
        Command::TrainLr {
            dataset,
            corpus,
            seeds,
            balance_n,
            out,
            predict,
            predictions,
        } => {
            let mut lr = ctx.config.lr();
            if let Some(s) = seeds {
                lr.seeds = parse_seeds(&s)?;
            }
            lr.balance_n = balance_n.unwrap_or(lr.balance_n);
            let dev = LabeledDataset::read(&dataset)?;
            let corpus_path = corpus
                .as_deref()
                .map(resolve_data_path)
                .or_else(|| ctx.digest.as_ref().map(|_| ctx.config.corpus_path()));
            let occ: Occurrences = match &corpus_path {
                Some(p) => occurrences(&Corpus::load(p)?),
                None => {
                    log::warn!("no corpus given: lexical features only");
                    Occurrences::new()
                }
            };
            let models = LrEnsemble::train(&dev, &occ, &lr)?;
            ensure_parent(&out)?;
            models.write(&out)?;
            let mut inputs: Vec<&Path> = vec![&dataset];
            inputs.extend(corpus_path.as_deref());
            ctx.record(&out, "train-lr", &inputs)?;
            if let (Some(target), Some(pred_out)) = (predict, predictions) {
                let ds = LabeledDataset::read(&target)?;
                let preds = models.predict(&ds, &occ)?;
                ensure_parent(&pred_out)?;
                write_predictions(&pred_out, &preds)?;
                inputs.push(&target);
                ctx.record(&pred_out, "train-lr", &inputs)?;
            }
        }
        Command::Evaluate {
            predictions,
            dataset,
            name,
            no_validity_filter,
            out,
        } => {
            let preds = read_predictions(&predictions)?;
            let ds = LabeledDataset::read(&dataset)?;
            let name = name.unwrap_or_else(|| {
                predictions
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
            let opts = ScoreOptions {
                validity_filter: !no_validity_filter,
            };
            let result = score(&name, &preds, &ds, opts)?;
            write_json(&out, &result)?;
            ctx.record(&out, "evaluate", &[&predictions, &dataset])?;
        }
        Command::Report {
            results,
            title,
            out_dir,
            compare: pair,
            alternative,
        } => {
            let rows: Vec<EvalResult> = results.iter().map(|p| read_json(p)).collect::<Result<_>>()?;
            let table = ReportTable {
                title: title.clone(),
                rows,
            };
            write_report(&out_dir, std::slice::from_ref(&table))?;
            let inputs: Vec<&Path> = results.iter().map(PathBuf::as_path).collect();
            let name = format!("report_{title}.tsv");
            manifest::record(&out_dir, &name, "report", ctx.digest.clone(), &inputs)?;
            if let Some(pair) = pair {
                let (a, b) = pair
                    .split_once(',')
                    .ok_or_else(|| invalid("--compare expects NAME_A,NAME_B"))?;
                let find = |n: &str| {
                    table
                        .rows
                        .iter()
                        .find(|r| r.name == n)
                        .ok_or_else(|| invalid(format!("no result named {n:?}")))
                };
                let alt = match alternative {
                    AlternativeArg::TwoSided => Alternative::TwoSided,
                    AlternativeArg::Less => Alternative::Less,
                    AlternativeArg::Greater => Alternative::Greater,
                };
                let report = compare(find(a)?, find(b)?, alt)?;
                let path = out_dir.join(format!("compare_{a}_{b}.json"));
                write_json(&path, &report)?;
                manifest::record(
                    &out_dir,
                    &format!("compare_{a}_{b}.json"),
                    "report",
                    ctx.digest.clone(),
                    &inputs,
                )?;
            }
        }
        Command::Pipeline {
            data,
            years,
            output_dir,
            lfs,
            method,
            balance_n,
            seeds,
        } => {
            let mut config = ctx.config.clone();
            if data.thesaurus.is_some() {
                config.thesaurus = ctx.thesaurus(&data);
            }
            if data.corpus.is_some() {
                config.corpus = ctx.corpus(&data);
            }
            if !years.is_empty() {
                config.years = years;
            }
            if let Some(o) = output_dir {
                config.output_dir = o;
            }
            config.lfs = parse_lfs(lfs.as_deref(), &config.lfs)?;
            config.method = parse_method(method.as_deref(), config.method)?;
            config.balance_n = balance_n.unwrap_or(config.balance_n);
            if let Some(s) = seeds {
                config.seeds = parse_seeds(&s)?;
            }
            let distinct: BTreeSet<u64> = config.seeds.iter().copied().collect();
            if distinct.len() != config.seeds.len() {
                return Err(invalid("seeds must be distinct"));
            }
            let outcome = run_pipeline(&config)?;
            for p in &outcome.reports {
                log::info!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}
