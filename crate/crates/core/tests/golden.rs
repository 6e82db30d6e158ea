use std::path::PathBuf;

use cicero_core::fixtures::{bless, load_corpus, run_fixture};

fn corpus_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Set CICERO_BLESS=1 to rewrite the golden files from the current output.
#[test]
fn every_fixture_matches_its_golden_file() {
    let cases = load_corpus(&corpus_root()).expect("fixture corpus");
    assert!(cases.len() >= 10, "expected at least ten fixtures, found {}", cases.len());
    if std::env::var("CICERO_BLESS").is_ok_and(|v| v == "1") {
        for case in &cases {
            bless(case).unwrap_or_else(|e| panic!("{}: {e}", case.name));
        }
    }
    let failures: Vec<String> = cases
        .iter()
        .map(run_fixture)
        .filter(|r| !r.pass)
        .map(|r| format!("{}: {} {:?}", r.name, r.error.unwrap_or_default(), r.diff.map(|d| d.to_value())))
        .collect();
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}
