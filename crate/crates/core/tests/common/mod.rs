#![allow(dead_code)]

use std::path::PathBuf;

use cicero_core::fixtures::{load_corpus, FixtureCase};
use cicero_core::rules::{cicero_from_value, CiceroSpec};
use cicero_core::vis::VisSpec;
use serde_json::{json, Value};

pub fn corpus_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn corpus() -> Vec<FixtureCase> {
    load_corpus(&corpus_root()).expect("fixture corpus loads")
}

pub fn case(name: &str) -> FixtureCase {
    corpus().into_iter().find(|c| c.name == name).unwrap_or_else(|| panic!("no fixture named {name}"))
}

pub fn sources() -> Vec<(String, VisSpec)> {
    corpus().into_iter().map(|c| (c.name.clone(), c.source().expect("fixture source parses"))).collect()
}

pub fn rules(list: Value) -> CiceroSpec {
    cicero_from_value(&json!({ "transformations": list })).expect("rule list parses")
}
