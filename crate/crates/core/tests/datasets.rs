mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{dataset, descriptor, doc, promoted, row, set, use_case};
use granum::corpus::Corpus;
use granum::datasets::{
    build_dev, build_test, manifest_path, split_90_10, undersample, undersample_traced,
    BalanceConfig, LabeledDataset, Source,
};
use granum::ensembles::Method;
use granum::labelers::LfId;
use granum::thesaurus::Thesaurus;
use granum::Pmid;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_world() -> (Thesaurus, Corpus) {
    let t = Thesaurus::from_descriptors(vec![
        descriptor("H", &[]),
        descriptor("G", &["H"]),
        descriptor("X", &[]),
        promoted("F", "H", 2006, &["Fine term"]),
    ])
    .unwrap();
    let c = Corpus::from_documents(vec![
        doc("1", 2004, &["H"], &[]),
        doc("2", 2005, &["G"], &[]),
        doc("3", 2005, &["X"], &[]),
        doc("4", 2006, &["F"], &[]),
        doc("5", 2007, &["H"], &[]),
        doc("6", 2006, &["G", "F"], &[]),
    ])
    .unwrap();
    (t, c)
}

fn pmids(ds: &LabeledDataset) -> Vec<&str> {
    ds.rows.iter().map(|r| r.pmid.as_str()).collect()
}

#[test]
fn dev_set_from_weak_positives() {
    let (t, c) = small_world();
    let ucs = [use_case("F", "H")];
    let weak: BTreeSet<(Pmid, String)> = [("1", "F"), ("3", "F"), ("2", "Q")]
        .iter()
        .map(|(p, l)| (Pmid::from(*p), l.to_string()))
        .collect();
    let source = Source::Weak {
        method: Some(Method::Alo),
        lfs: vec![LfId::Co, LfId::Nl, LfId::Sl],
    };
    let dev = build_dev(&ucs, &c, &t, source, &weak).unwrap();
    assert_eq!(pmids(&dev), ["1", "2"]);
    assert_eq!(dev.rows[0].positive_labels, set(&["F"]));
    assert!(dev.rows[1].positive_labels.is_empty());
    assert_eq!(dev.rows[1].valid_labels, set(&["F"]));
    assert_eq!(dev.manifest().source.to_string(), "weak_ALO3");
    dev.check().unwrap();
}

#[test]
fn test_set_from_annotations() {
    let (t, c) = small_world();
    let test = build_test(&[use_case("F", "H")], &c, &t).unwrap();
    assert_eq!(pmids(&test), ["4", "5", "6"]);
    let positive: Vec<bool> = test.rows.iter().map(|r| r.positive_labels.contains("F")).collect();
    assert_eq!(positive, [true, false, true]);
    assert_eq!(test.source, Source::GroundTruth);
    assert_eq!(test.rows[0].text, "\n");
}

#[test]
fn no_qualifying_documents_is_an_error() {
    let (t, c) = small_world();
    assert!(build_test(&[use_case("X", "X")], &c, &t).is_err());
    assert!(build_test(&[], &c, &t).is_err());
}

#[test]
fn write_read_round_trip() {
    let (t, c) = small_world();
    let test = build_test(&[use_case("F", "H")], &c, &t).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("test_2006.jsonl");
    test.write(&path).unwrap();
    assert!(manifest_path(&path).ends_with("test_2006.manifest.json"));
    assert_eq!(LabeledDataset::read(&path).unwrap(), test);

    let mut bad = test.clone();
    bad.rows[1].positive_labels.insert("F".into());
    bad.rows[1].valid_labels.clear();
    assert!(bad.write(dir.path().join("bad.jsonl")).is_err());
}

fn numbered(n: usize) -> LabeledDataset {
    dataset(
        (0..n).map(|i| row(&format!("{}", i + 1), &[], &["A"])).collect(),
        &["A"],
    )
}

#[test]
fn split_sizes_and_partition() {
    let ds = numbered(100);
    let s = split_90_10(&ds, 7).unwrap();
    assert_eq!((s.train.len(), s.val.len()), (90, 10));
    let all: BTreeSet<_> = pmids(&s.train).into_iter().chain(pmids(&s.val)).collect();
    assert_eq!(all.len(), 100);
    assert_eq!(split_90_10(&ds, 7).unwrap(), s);

    let s = split_90_10(&numbered(10), 1).unwrap();
    assert_eq!((s.train.len(), s.val.len()), (9, 1));
    assert!(split_90_10(&numbered(9), 1).is_err());

    for n in 10..300 {
        let s = split_90_10(&numbered(n), n as u64).unwrap();
        assert_eq!(s.val.len(), ((n as f64) / 10.0).round() as usize);
        assert_eq!(s.train.len() + s.val.len(), n);
    }
}

#[test]
fn split_depends_on_seed() {
    let ds = numbered(1000);
    let a = split_90_10(&ds, 1).unwrap();
    let b = split_90_10(&ds, 2).unwrap();
    assert_ne!(pmids(&a.val), pmids(&b.val));
    a.train.check().unwrap();
    a.val.check().unwrap();
}

fn random_dataset(rng: &mut ChaCha8Rng) -> LabeledDataset {
    let n_labels = rng.random_range(1..=5);
    let labels: Vec<String> = (0..n_labels).map(|i| format!("L{i}")).collect();
    let n = rng.random_range(50..=2000);
    let pos_rate = rng.random_range(0.005..0.2);
    let rows = (0..n)
        .map(|i| {
            let valid: Vec<&str> = labels
                .iter()
                .filter(|_| rng.random_bool(0.6))
                .map(String::as_str)
                .collect();
            let valid = if valid.is_empty() { vec![labels[0].as_str()] } else { valid };
            let pos: Vec<&str> = valid.iter().copied().filter(|_| rng.random_bool(pos_rate)).collect();
            row(&format!("{}", i + 1), &pos, &valid)
        })
        .collect();
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    dataset(rows, &refs)
}

/// Direct transcription of the undersampling loop over label counts kept in
/// maps, returning the removed pmids in removal order.
fn oracle(ds: &LabeledDataset, n: f64, seed: u64) -> Vec<Pmid> {
    let mut pos: BTreeMap<&str, f64> = BTreeMap::new();
    let mut neg: BTreeMap<&str, f64> = BTreeMap::new();
    for l in ds.labels() {
        let l = ds.use_cases.iter().find(|u| u.fine_ui == l).unwrap().fine_ui.as_str();
        pos.insert(l, 0.0);
        neg.insert(l, 0.0);
    }
    for r in &ds.rows {
        for l in &r.valid_labels {
            if r.positive_labels.contains(l) {
                *pos.get_mut(l.as_str()).unwrap() += 1.0;
            } else {
                *neg.get_mut(l.as_str()).unwrap() += 1.0;
            }
        }
    }
    let mut negatives: Vec<usize> = (0..ds.rows.len()).filter(|&i| ds.rows[i].positive_labels.is_empty()).collect();
    negatives.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut removed = Vec::new();
    for i in negatives {
        if neg.iter().all(|(l, v)| *v <= n * pos[l]) {
            break;
        }
        let r = &ds.rows[i];
        let superfluous = r.valid_labels.iter().all(|l| neg[l.as_str()] > n * pos[l.as_str()]);
        if superfluous {
            for l in &r.valid_labels {
                *neg.get_mut(l.as_str()).unwrap() -= 1.0;
            }
            removed.push(r.pmid.clone());
        }
    }
    removed
}

#[test]
fn undersampling_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..50 {
        let ds = random_dataset(&mut rng);
        let n = [1.0, 2.5, 10.0][case % 3];
        let cfg = BalanceConfig { balance_n: n, seed: case as u64 };
        let (out, trace) = undersample_traced(&ds, &cfg).unwrap();
        assert_eq!(trace.removed, oracle(&ds, n, case as u64), "case {case}");
        assert_eq!(out.len() + trace.removed.len(), ds.len());
        out.check().unwrap();

        let before: BTreeSet<&Pmid> = ds.rows.iter().filter(|r| !r.positive_labels.is_empty()).map(|r| &r.pmid).collect();
        let after: BTreeSet<&Pmid> = out.rows.iter().filter(|r| !r.positive_labels.is_empty()).map(|r| &r.pmid).collect();
        assert_eq!(before, after);

        let balanced = out.labels().iter().all(|l| {
            let p = out.rows.iter().filter(|r| r.positive_labels.contains(l)).count() as f64;
            let v = out
                .rows
                .iter()
                .filter(|r| r.valid_labels.contains(l) && !r.positive_labels.contains(l))
                .count() as f64;
            v <= n * p
        });
        assert!(balanced || trace.all_checked(), "case {case}");
        if balanced {
            assert!(undersample(&out, &cfg).unwrap().rows == out.rows);
        }
        assert_eq!(undersample(&ds, &cfg).unwrap(), out);
    }
}

#[test]
fn undersampling_rejects_bad_ratio() {
    let ds = numbered(20);
    for n in [0.5, f64::NAN, -1.0] {
        assert!(undersample(&ds, &BalanceConfig { balance_n: n, seed: 1 }).is_err());
    }
}

#[test]
fn undersampling_keeps_rows_a_label_still_needs() {
    // A has 1 positive and 4 negatives (rows 2, 3, 4, 6); B has 1 positive
    // and 1 negative (row 6). Row 6 is needed by B, so A sheds rows 2-4.
    let ds = dataset(
        vec![
            row("1", &["A"], &["A"]),
            row("2", &[], &["A"]),
            row("3", &[], &["A"]),
            row("4", &[], &["A"]),
            row("5", &["B"], &["B"]),
            row("6", &[], &["A", "B"]),
        ],
        &["A", "B"],
    );
    let out = undersample(&ds, &BalanceConfig { balance_n: 1.0, seed: 3 }).unwrap();
    assert_eq!(pmids(&out), ["1", "5", "6"]);
    assert_eq!(out.balance_n, Some(1.0));
}
