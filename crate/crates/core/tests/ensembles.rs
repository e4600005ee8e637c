mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{dataset, row};
use granum::ensembles::{
    apply_label_model, combine, combine_alo, combine_mv, enumerate_combinations, fit_two_coin,
    search_combinations, LabelModelConfig, LabelModelParams, Method, TwoCoinFit, TwoCoinParams,
    VoteMatrix,
};
use granum::labelers::{LfId, LfMask, VoteSet};
use granum::Pmid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn keys(n: usize) -> Vec<(Pmid, String)> {
    (0..n).map(|i| (Pmid::from(format!("{}", i + 1)), "L".to_string())).collect()
}

fn random_matrix(rng: &mut ChaCha8Rng) -> (Vec<LfId>, Vec<Vec<u8>>) {
    let m = rng.random_range(2..=9);
    let n = rng.random_range(1..=50);
    let columns = LfId::ALL[..m].to_vec();
    let rows = (0..n)
        .map(|_| (0..m).map(|_| rng.random_bool(0.4) as u8).collect())
        .collect();
    (columns, rows)
}

fn positives_of(rows: &[Vec<u8>], keep: impl Fn(&[u8]) -> bool) -> BTreeSet<(Pmid, String)> {
    keys(rows.len())
        .into_iter()
        .zip(rows)
        .filter(|(_, r)| keep(r))
        .map(|(k, _)| k)
        .collect()
}

#[test]
fn mv_and_alo_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let (columns, rows) = random_matrix(&mut rng);
        let m = columns.len();
        let matrix = VoteMatrix::new(columns, keys(rows.len()), rows.concat()).unwrap();
        let mv = combine_mv(&matrix).unwrap();
        let alo = combine_alo(&matrix).unwrap();
        let ones = |r: &[u8]| r.iter().filter(|&&v| v == 1).count();
        assert_eq!(mv.positives, positives_of(&rows, |r| ones(r) * 2 > m));
        assert_eq!(alo.positives, positives_of(&rows, |r| ones(r) >= 1));
        assert!(mv.positives.is_subset(&alo.positives));
        assert_eq!(mv.method, Some(Method::Mv));
    }
}

#[test]
fn ensembles_ignore_row_and_column_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let (columns, rows) = random_matrix(&mut rng);
        let a = VoteMatrix::new(columns.clone(), keys(rows.len()), rows.concat()).unwrap();
        let rev_cols: Vec<LfId> = columns.iter().rev().copied().collect();
        let rev_rows: Vec<u8> = rows.iter().rev().flat_map(|r| r.iter().rev().copied()).collect();
        let rev_keys: Vec<_> = keys(rows.len()).into_iter().rev().collect();
        let b = VoteMatrix::new(rev_cols, rev_keys, rev_rows).unwrap();
        for m in [Method::Mv, Method::Alo] {
            let cfg = LabelModelConfig::default();
            let (x, y) = (combine(&a, m, &cfg).unwrap(), combine(&b, m, &cfg).unwrap());
            assert_eq!(x.positives, y.positives);
            assert_eq!(x.lfs, y.lfs);
        }
    }
}

#[test]
fn alo_absorbs_implied_column() {
    // Column A implies column B, so ALO over both equals B alone.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<u8>> = (0..200)
        .map(|_| {
            let b = rng.random_bool(0.5) as u8;
            let a = b & rng.random_bool(0.5) as u8;
            vec![a, b]
        })
        .collect();
    let matrix = VoteMatrix::new(vec![LfId::Ne, LfId::Nl], keys(rows.len()), rows.concat()).unwrap();
    let alo = combine_alo(&matrix).unwrap();
    assert_eq!(alo.positives, positives_of(&rows, |r| r[1] == 1));
}

#[test]
fn methods_reject_too_few_columns() {
    let one = VoteMatrix::new(vec![LfId::Co], keys(2), vec![1, 0]).unwrap();
    assert!(combine_mv(&one).is_err());
    assert!(combine_alo(&one).is_err());
    let two = VoteMatrix::new(vec![LfId::Co, LfId::Nl], keys(2), vec![1, 0, 0, 1]).unwrap();
    assert!(combine(&two, Method::Lm, &LabelModelConfig::default()).is_err());
    assert!(VoteMatrix::new(vec![LfId::Co, LfId::Co], keys(1), vec![1, 0]).is_err());
    assert!(VoteMatrix::new(vec![LfId::Co], keys(1), vec![2]).is_err());
}

#[test]
fn combination_counts() {
    assert_eq!(enumerate_combinations(&LfId::ALL, 2).len(), 502);
    assert_eq!(enumerate_combinations(&LfId::ALL, 3).len(), 466);
    assert_eq!(enumerate_combinations(&[1, 2, 3], 2).len(), 4);
    let all = enumerate_combinations(&LfId::ALL, 2);
    let unique: BTreeSet<_> = all.iter().collect();
    assert_eq!(unique.len(), all.len());
}

#[test]
fn hand_posterior() {
    let p = TwoCoinParams {
        prior: 0.5,
        sensitivity: vec![0.8; 3],
        specificity: vec![0.8; 3],
    };
    assert!((p.posterior(&[1, 1, 0]) - 0.8).abs() < 1e-12);
    assert!((p.posterior(&[0, 0, 1]) - 0.2).abs() < 1e-12);
}

fn model_of(params: TwoCoinParams, columns: &[LfId]) -> LabelModelParams {
    LabelModelParams {
        columns: columns.to_vec(),
        labels: BTreeMap::from([(
            "L".to_string(),
            TwoCoinFit {
                params,
                log_likelihood: vec![],
                iterations: 0,
                converged: true,
            },
        )]),
    }
}

#[test]
fn posterior_of_exactly_half_is_not_assigned() {
    let columns = [LfId::Co, LfId::Nl, LfId::Sl];
    let params = TwoCoinParams {
        prior: 0.5,
        sensitivity: vec![0.5; 3],
        specificity: vec![0.5; 3],
    };
    assert_eq!(params.posterior(&[1, 1, 1]), 0.5);
    let matrix = VoteMatrix::new(columns.to_vec(), keys(2), vec![1, 1, 1, 0, 0, 0]).unwrap();
    let out = apply_label_model(&matrix, &model_of(params, &columns)).unwrap();
    assert!(out.positives.is_empty());
}

#[test]
fn all_zero_row_is_negative_under_low_prior() {
    let columns = [LfId::Co, LfId::Nl, LfId::Sl];
    let params = TwoCoinParams {
        prior: 0.3,
        sensitivity: vec![0.7, 0.8, 0.9],
        specificity: vec![0.6, 0.7, 0.8],
    };
    let matrix = VoteMatrix::new(columns.to_vec(), keys(1), vec![0, 0, 0]).unwrap();
    assert!(apply_label_model(&matrix, &model_of(params.clone(), &columns)).unwrap().positives.is_empty());
    let other = VoteMatrix::new(vec![LfId::Co, LfId::Nl, LfId::St], keys(1), vec![0, 0, 0]).unwrap();
    assert!(apply_label_model(&other, &model_of(params, &columns)).is_err());
}

#[test]
fn identical_columns_reproduce_the_column() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let col: Vec<u8> = (0..300).map(|_| rng.random_bool(0.3) as u8).collect();
    let cells: Vec<u8> = col.iter().flat_map(|&v| [v; 4]).collect();
    let fit = fit_two_coin(&cells, 4, &LabelModelConfig::default()).unwrap();
    for (r, &v) in cells.chunks(4).zip(&col) {
        assert_eq!(fit.params.posterior(r) > 0.5, v == 1);
    }
}

fn planted(rng: &mut ChaCha8Rng, n: usize, m: usize, prior: f64, s: f64, t: f64) -> Vec<u8> {
    let mut cells = Vec::with_capacity(n * m);
    for _ in 0..n {
        let y = rng.random_bool(prior);
        for _ in 0..m {
            let v = if y { rng.random_bool(s) } else { !rng.random_bool(t) };
            cells.push(v as u8);
        }
    }
    cells
}

#[test]
fn em_log_likelihood_never_decreases() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let m = rng.random_range(3..=7);
        let n = rng.random_range(20..=400);
        let prior = rng.random_range(0.05..0.6);
        let s = rng.random_range(0.5..0.95);
        let t = rng.random_range(0.5..0.95);
        let cells = planted(&mut rng, n, m, prior, s, t);
        let fit = fit_two_coin(&cells, m, &LabelModelConfig::default()).unwrap();
        assert_eq!(fit.log_likelihood.len(), fit.iterations + 1);
        for w in fit.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
        let clamp = 1e-4;
        let p = &fit.params;
        for x in p.sensitivity.iter().chain(&p.specificity).chain([&p.prior]) {
            assert!((clamp..=1.0 - clamp).contains(x));
        }
    }
}

#[test]
fn em_recovers_planted_parameters() {
    let mut recovered = 0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let cells = planted(&mut rng, 2000, 5, 0.3, 0.9, 0.9);
        let fit = fit_two_coin(&cells, 5, &LabelModelConfig::default()).unwrap();
        let p = &fit.params;
        let ok = (p.prior - 0.3).abs() <= 0.05
            && p.sensitivity.iter().all(|s| (s - 0.9).abs() <= 0.05)
            && p.specificity.iter().all(|t| (t - 0.9).abs() <= 0.05);
        recovered += ok as usize;
    }
    assert!(recovered >= 18, "{recovered}/20");
}

#[test]
fn label_model_is_fitted_per_label() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let columns = vec![LfId::Co, LfId::Nl, LfId::Sl];
    let mut k = Vec::new();
    let mut cells = Vec::new();
    for (label, prior) in [("A", 0.2), ("B", 0.6)] {
        let c = planted(&mut rng, 500, 3, prior, 0.85, 0.85);
        for i in 0..500 {
            k.push((Pmid::from(format!("{}", i + 1)), label.to_string()));
        }
        cells.extend(c);
    }
    let matrix = VoteMatrix::new(columns, k, cells).unwrap();
    let params = granum::ensembles::fit_label_model(&matrix, &LabelModelConfig::default()).unwrap();
    assert_eq!(params.labels.len(), 2);
    assert!(params.labels["A"].params.prior < params.labels["B"].params.prior);
}

fn mask(bits: &[LfId]) -> LfMask {
    bits.iter().copied().collect()
}

/// Naive macro-F1 of a prediction set over the ground truth, with validity
/// filtering.
fn naive_macro_f1(pred: &BTreeSet<(Pmid, String)>, truth: &granum::datasets::LabeledDataset) -> f64 {
    let labels = truth.labels();
    let mut total = 0.0;
    for l in &labels {
        let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
        for r in truth.rows.iter().filter(|r| r.valid_labels.contains(l)) {
            let p = pred.contains(&(r.pmid.clone(), l.clone()));
            let y = r.positive_labels.contains(l);
            match (y, p) {
                (true, true) => tp += 1.0,
                (false, true) => fp += 1.0,
                (true, false) => fn_ += 1.0,
                _ => {}
            }
        }
        if tp > 0.0 {
            total += 2.0 * tp / (2.0 * tp + fp + fn_);
        }
    }
    total / labels.len() as f64
}

#[test]
fn search_scores_match_naive_rescoring() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lfs = [LfId::Co, LfId::Nl, LfId::Sl, LfId::Nt];
    let mut votes = VoteSet::new(lfs.to_vec());
    let mut rows = Vec::new();
    for i in 0..300 {
        let pmid = format!("{}", i + 1);
        let y = rng.random_bool(0.3);
        // CO is planted as the most accurate function.
        let acc = [0.97, 0.8, 0.75, 0.6];
        let bits: Vec<LfId> = lfs
            .iter()
            .zip(acc)
            .filter_map(|(&lf, a)| (rng.random_bool(a) == y).then_some(lf))
            .collect();
        votes.insert(Pmid::from(pmid.as_str()), "A".into(), mask(&bits));
        let pos: &[&str] = if y { &["A"] } else { &[] };
        rows.push(row(&pmid, pos, &["A"]));
    }
    let truth = dataset(rows, &["A"]);
    let report = search_combinations(&votes, &truth, &lfs, &Method::ALL, &LabelModelConfig::default()).unwrap();
    assert_eq!(report.rows.len(), 11);
    for r in &report.rows {
        let matrix = VoteMatrix::from_votes(&votes, &r.lfs).unwrap();
        assert_eq!(r.scores.contains_key(&Method::Lm), r.lfs.len() >= 3);
        for (&m, &(ma, _)) in &r.scores {
            let labels = combine(&matrix, m, &LabelModelConfig::default()).unwrap();
            assert!((naive_macro_f1(&labels.positives, &truth) - ma).abs() < 1e-12);
        }
        let xs: Vec<f64> = r.scores.values().map(|s| s.0).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((r.macro_f1_var - var).abs() < 1e-12);
    }
    for w in report.rows.windows(2) {
        assert!(w[0].best_macro_f1() >= w[1].best_macro_f1());
    }
    let tsv = report.to_tsv();
    assert!(tsv.starts_with("lfs\tmaF1_MV\tmaF1_ALO\tmaF1_LM\tmaF1_var\tmiF1_MV"));
    assert!(tsv.lines().any(|l| l.starts_with("CO,NL\t") && l.contains("\t-\t")));
}

#[test]
fn search_breaks_ties_by_subset_order() {
    // Identical columns give identical scores for every subset.
    let lfs = [LfId::Co, LfId::Nl, LfId::Sl];
    let mut votes = VoteSet::new(lfs.to_vec());
    let mut rows = Vec::new();
    for i in 0..20 {
        let pmid = format!("{}", i + 1);
        let hit = i % 3 == 0;
        let bits: &[LfId] = if hit { &lfs } else { &[] };
        votes.insert(Pmid::from(pmid.as_str()), "A".into(), mask(bits));
        let pos: &[&str] = if i % 2 == 0 { &["A"] } else { &[] };
        rows.push(row(&pmid, pos, &["A"]));
    }
    let truth = dataset(rows, &["A"]);
    let report = search_combinations(&votes, &truth, &lfs, &[Method::Mv, Method::Alo], &LabelModelConfig::default()).unwrap();
    let order: Vec<Vec<LfId>> = report.rows.iter().map(|r| r.lfs.clone()).collect();
    assert_eq!(
        order,
        vec![
            vec![LfId::Co, LfId::Nl],
            vec![LfId::Co, LfId::Nl, LfId::Sl],
            vec![LfId::Co, LfId::Sl],
            vec![LfId::Nl, LfId::Sl],
        ]
    );
}

#[test]
fn enhanced_labels_round_trip() {
    let lfs = [LfId::Co, LfId::Nl, LfId::Sl];
    let matrix = VoteMatrix::new(lfs.to_vec(), keys(3), vec![1, 0, 0, 0, 0, 0, 1, 1, 0]).unwrap();
    let alo = combine_alo(&matrix).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("weak.jsonl");
    alo.write_jsonl(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().all(|l| l.contains("\"method\":\"ALO\"")));
    assert_eq!(granum::ensembles::EnhancedLabels::read_jsonl(&path).unwrap(), alo);
}
