mod common;

use std::collections::BTreeMap;
use std::fs;

use common::{descriptor, doc};
use granum::corpus::{compute_stats, ingest, Corpus, YearFilter};
use granum::thesaurus::Thesaurus;
use granum::{Error, Pmid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const THREE: &str = r#"{"pmid": "3", "title": "Gamma", "abstract": "", "year": 2005, "descriptor_uis": ["D1"], "occurrences": []}
{"pmid": "1", "title": "Alpha", "abstract": "First.", "year": 2004, "descriptor_uis": ["D1", "D2"], "occurrences": ["C1"]}
{"pmid": "2", "title": "", "abstract": "Beta", "year": 2006, "descriptor_uis": [], "occurrences": ["C2"]}
"#;

#[test]
fn ingests_three_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    fs::write(&path, THREE).unwrap();
    let c = ingest(&path).unwrap();
    assert_eq!(c.len(), 3);
    let order: Vec<&str> = c.documents().map(|d| d.pmid.as_str()).collect();
    assert_eq!(order, ["1", "2", "3"]);
}

#[test]
fn missing_pmid_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let bad = THREE.replacen(r#""pmid": "2", "#, "", 1);
    fs::write(&path, bad).unwrap();
    match ingest(&path) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn duplicate_pmid_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let dup = r#"{"pmid": "42", "title": "", "abstract": "", "year": 2000, "descriptor_uis": [], "occurrences": []}"#;
    fs::write(&path, format!("{dup}\n{dup}\n")).unwrap();
    match ingest(&path) {
        Err(Error::DuplicatePmid(p)) => assert_eq!(p, "42"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn ingest_normalizes_to_nfc() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    fs::write(
        &path,
        "{\"pmid\": \"1\", \"title\": \"Cafe\u{301}\", \"abstract\": \"\", \"year\": 2000, \"descriptor_uis\": [], \"occurrences\": []}\n",
    )
    .unwrap();
    let c = ingest(&path).unwrap();
    assert_eq!(c.get(&Pmid::from("1")).unwrap().title, "Caf\u{e9}");
}

fn hierarchy() -> Thesaurus {
    Thesaurus::from_descriptors(vec![
        descriptor("D", &[]),
        descriptor("Dc", &["D"]),
        descriptor("E", &[]),
    ])
    .unwrap()
}

#[test]
fn query_follows_hierarchy_and_strict_year() {
    let t = hierarchy();
    let c = Corpus::from_documents(vec![doc("1", 2005, &["Dc"], &[]), doc("2", 2006, &["D"], &[])]).unwrap();
    let ids = |f| -> Vec<String> {
        c.query("D", &t, f).unwrap().iter().map(|d| d.pmid.to_string()).collect()
    };
    assert_eq!(ids(YearFilter::Any), ["1", "2"]);
    assert_eq!(ids(YearFilter::Before(2006)), ["1"]);
    assert!(matches!(c.query("Q", &t, YearFilter::Any), Err(Error::UnknownDescriptor(_))));
}

#[test]
fn query_ten_document_fixture() {
    let t = hierarchy();
    let docs = vec![
        doc("10", 2001, &["D"], &[]),
        doc("9", 2001, &["E"], &[]),
        doc("8", 2003, &["Dc", "E"], &[]),
        doc("7", 2004, &[], &[]),
        doc("6", 2005, &["D"], &[]),
        doc("5", 2006, &["D"], &[]),
        doc("4", 2007, &["Dc"], &[]),
        doc("3", 2002, &["E"], &[]),
        doc("2", 2000, &["Dc"], &[]),
        doc("1", 2008, &["X"], &[]),
    ];
    let c = Corpus::from_documents(docs).unwrap();
    let got: Vec<String> = c
        .query("D", &t, YearFilter::Before(2006))
        .unwrap()
        .iter()
        .map(|d| d.pmid.to_string())
        .collect();
    // Numeric pmid order.
    assert_eq!(got, ["2", "6", "8", "10"]);
}

fn random_corpus(seed: u64, n: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uis = ["D", "Dc", "E", "X"];
    let cuis = ["C1", "C2", "C3"];
    let docs = (0..n).map(|i| {
        let ds: Vec<&str> = uis.iter().copied().filter(|_| rng.random_bool(0.3)).collect();
        let occ: Vec<&str> = cuis.iter().copied().filter(|_| rng.random_bool(0.3)).collect();
        doc(&(i * 7 + 1).to_string(), rng.random_range(2000..2010), &ds, &occ)
    });
    Corpus::from_documents(docs.collect::<Vec<_>>()).unwrap()
}

#[test]
fn year_partition() {
    let t = hierarchy();
    let c = random_corpus(1, 500);
    for ui in ["D", "Dc", "E"] {
        for y in 2000..2011 {
            let all: Vec<_> = c.query(ui, &t, YearFilter::Any).unwrap();
            let mut parts = c.query(ui, &t, YearFilter::Before(y)).unwrap();
            let after = c.query(ui, &t, YearFilter::AtOrAfter(y)).unwrap();
            assert!(parts.iter().all(|d| !after.iter().any(|a| a.pmid == d.pmid)));
            parts.extend(after);
            parts.sort_by(|a, b| a.pmid.cmp(&b.pmid));
            assert_eq!(parts, all);
        }
    }
}

#[test]
fn stats_match_full_scan() {
    let t = hierarchy();
    for seed in 0..5 {
        let c = random_corpus(seed, 1000);
        let year = 2005;
        let stats = compute_stats(&c, &t, year);
        let under = |root: &str, d: &granum::corpus::Document| {
            d.descriptor_uis.iter().any(|u| u == root || (root == "D" && u == "Dc"))
        };
        for ui in ["D", "Dc", "E"] {
            let dev = c.documents().filter(|d| d.year < year && under(ui, d)).count() as u64;
            let test = c.documents().filter(|d| d.year >= year && under(ui, d)).count() as u64;
            let total = c.documents().filter(|d| under(ui, d)).count() as u64;
            assert_eq!(stats.dev_count(ui), dev);
            assert_eq!(stats.test_count(ui), test);
            assert_eq!(dev + test, total);
        }
    }
}

#[test]
fn empty_corpus_has_zero_counts() {
    let t = hierarchy();
    let c = Corpus::from_documents(Vec::new()).unwrap();
    let s = compute_stats(&c, &t, 2006);
    assert_eq!((s.dev_count("D"), s.test_count("D")), (0, 0));
}

#[test]
fn concept_positive_dev_count() {
    let t = Thesaurus::from_descriptors(vec![
        descriptor("D", &[]),
        common::promoted("Dc", "D", 2006, &["term"]),
    ])
    .unwrap();
    let docs = vec![
        doc("1", 2001, &["D"], &["CDc"]),
        doc("2", 2002, &["D"], &[]),
        doc("3", 2003, &["D"], &["CDc", "C9"]),
        doc("4", 2004, &["D"], &["C9"]),
        doc("5", 2005, &["D"], &[]),
        doc("6", 2006, &["D"], &["CDc"]),
        doc("7", 2003, &["E"], &["CDc"]),
    ];
    let c = Corpus::from_documents(docs).unwrap();
    let s = compute_stats(&c, &t, 2006);
    assert_eq!(s.dev_count("D"), 5);
    assert_eq!(s.dev_concept_positive("D", "CDc"), 2);
}

#[test]
fn export_round_trip_and_store() {
    let dir = tempfile::tempdir().unwrap();
    let c = random_corpus(3, 300);
    let a = dir.path().join("a.jsonl");
    c.export(&a).unwrap();
    let b = dir.path().join("b.jsonl");
    ingest(&a).unwrap().export(&b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    // Shuffled input lines export to the same canonical bytes.
    let text = fs::read_to_string(&a).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.reverse();
    let shuffled = dir.path().join("s.jsonl");
    fs::write(&shuffled, lines.join("\n") + "\n").unwrap();
    let s = dir.path().join("s_out.jsonl");
    ingest(&shuffled).unwrap().export(&s).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&s).unwrap());

    let store = dir.path().join("store");
    c.save(&store).unwrap();
    let reopened = Corpus::load(&store).unwrap();
    let years: BTreeMap<i32, usize> = reopened.years().collect();
    assert_eq!(years, c.years().collect());
    let e = dir.path().join("e.jsonl");
    reopened.export(&e).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&e).unwrap());
}
