use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn fixture(case: &str, file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(case).join(file)
}

fn cicero(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cicero")).args(args).output().expect("binary runs")
}

fn cicero_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_cicero"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().expect("stdin").write_all(input.as_bytes()).expect("write stdin");
    child.wait_with_output().expect("binary exits")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write_temp(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).expect("temp file");
    path
}

const CHART: &str = r#"{"width": 200, "height": 120,
  "data": {"schema": [{"field": "cat", "type": "nominal"}, {"field": "n", "type": "quantitative"}],
           "rows": [{"cat": "a", "n": 1}, {"cat": "b", "n": 3}]},
  "layers": [{"id": "bars", "mark": "bar", "encoding": {"x": {"field": "cat"}, "y": {"field": "n"}}}]}"#;

#[test]
fn compile_matches_the_golden_file() {
    let (src, rules, golden) =
        (fixture("bond-yields", "source.vis.json"), fixture("bond-yields", "rules.cicero.json"), fixture("bond-yields", "golden.vis.json"));
    let out = cicero(&["compile", src.to_str().unwrap(), rules.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert_eq!(text(&out.stdout), std::fs::read_to_string(golden).unwrap());
}

#[test]
fn compile_writes_to_a_file_and_traces_rules() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.json");
    let (src, rules) = (fixture("mobile", "source.vis.json"), fixture("mobile", "rules.cicero.json"));
    let out = cicero(&["compile", src.to_str().unwrap(), rules.to_str().unwrap(), "--out", target.to_str().unwrap(), "--trace"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&target).unwrap(), std::fs::read_to_string(fixture("mobile", "golden.vis.json")).unwrap());
    let traces: Vec<serde_json::Value> = text(&out.stderr).lines().filter_map(|l| serde_json::from_str(l).ok()).collect();
    assert_eq!(traces.len(), 6);
    assert_eq!(traces[0]["action"], "modify");
}

#[test]
fn compile_reads_the_chart_from_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let rules = write_temp(
        &dir,
        "r.json",
        r#"{"transformations": [{"specifier": {"role": "view"}, "action": "modify", "option": {"width": 100}}]}"#,
    );
    let out = cicero_stdin(&["compile", "-", rules.to_str().unwrap()], CHART);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&text(&out.stdout)).unwrap();
    assert_eq!(v["width"], 100);
}

#[test]
fn compile_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let chart = write_temp(&dir, "c.json", CHART);
    let rules = write_temp(
        &dir,
        "r.json",
        r#"{"transformations": [{"specifier": {"role": "layer"}, "action": "replace", "option": {"from": {"channel": "x"}, "to": {"channel": "y"}}}]}"#,
    );
    let out = cicero(&["compile", chart.to_str().unwrap(), rules.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("rule 0"), "{}", text(&out.stderr));
}

#[test]
fn grid_dump_is_a_bitmap() {
    let (src, rules) = (fixture("disaster-cost", "source.vis.json"), fixture("disaster-cost", "rules.cicero.json"));
    let out = cicero(&["compile", src.to_str().unwrap(), rules.to_str().unwrap(), "--grid-dump", "--grid-resolution", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stderr).starts_with("P1"), "{}", text(&out.stderr));
}

#[test]
fn validate_reports_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_temp(&dir, "good.json", CHART);
    assert_eq!(cicero(&["validate", good.to_str().unwrap()]).status.code(), Some(0));

    let bad = write_temp(&dir, "bad.json", &CHART.replace("\"field\": \"n\"}}", "\"field\": \"prize\"}}"));
    let out = cicero(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("prize"));

    let broken = write_temp(&dir, "broken.json", "{");
    assert_eq!(cicero(&["validate", broken.to_str().unwrap()]).status.code(), Some(1));

    let rules = fixture("overview", "rules.cicero.json");
    assert_eq!(cicero(&["validate", rules.to_str().unwrap()]).status.code(), Some(0));

    let no_option = write_temp(&dir, "r.json", r#"{"transformations": [{"specifier": {"role": "view"}, "action": "add"}]}"#);
    assert_eq!(cicero(&["validate", no_option.to_str().unwrap()]).status.code(), Some(1));

    let missing = dir.path().join("nope.json");
    assert_eq!(cicero(&["validate", missing.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn query_prints_one_path_per_line() {
    let src = fixture("specificity-generic-first", "source.vis.json");
    let out = cicero(&["query", src.to_str().unwrap(), r#"{"role": "mark", "data": {"category": "Apparel"}}"#]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(text(&out.stdout), "\"layer[bars].mark{\\\"category\\\":\\\"Apparel\\\",\\\"sales\\\":30}\"\n");
    let bad = cicero(&["query", src.to_str().unwrap(), r#"{"role": "nonsense"}"#]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn diff_exits_zero_only_when_equal() {
    let (src, golden) = (fixture("mobile", "source.vis.json"), fixture("mobile", "golden.vis.json"));
    let same = cicero(&["diff", src.to_str().unwrap(), src.to_str().unwrap()]);
    assert_eq!(same.status.code(), Some(0));
    let differ = cicero(&["diff", src.to_str().unwrap(), golden.to_str().unwrap()]);
    assert_eq!(differ.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&text(&differ.stdout)).unwrap();
    assert!(report["changed"].as_array().unwrap().iter().any(|c| c["path"] == "view" && c["attribute"] == "width"));
}
