//! Acceptance checks. Runs without the libtest harness so every criterion
//! prints one PASS or FAIL line; the process fails if any criterion does.

mod common;

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use serde_json::{json, Value};

use cicero_core::layout::{largest_empty_cells, Grid};
use cicero_core::query::resolve;
use cicero_core::rules::{Action, Specifier};
use cicero_core::transform::{compile, replace_channel, swap_channels};
use cicero_core::vis::{canonical_serialize, enumerate_elements, to_canonical_value, Element, VisSpec, CHANNELS};

use common::{case, corpus, rules, sources};

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn element<'a>(els: &'a [Element], path: &str) -> Result<&'a Element, String> {
    els.iter().find(|e| e.path == path).ok_or_else(|| format!("no element {path}"))
}

fn prop(e: &Element, key: &str) -> Value {
    e.properties.get(key).cloned().unwrap_or(Value::Null)
}

fn marks(spec: &VisSpec) -> Vec<Element> {
    enumerate_elements(spec).into_iter().filter(|e| e.role == "layer.mark").collect()
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn bond_yields() -> Check {
    let case = case("bond-yields");
    let (source, rules) = (case.source().map_err(|e| e.to_string())?, case.rules().map_err(|e| e.to_string())?);
    let start = Instant::now();
    let out = compile(&source, &rules).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    ensure(out.width == 365.0 && out.height == 450.0, || format!("view is {}x{}", out.width, out.height))?;
    let num = |r: &BTreeMap<String, Value>, f: &str| r.get(f).and_then(Value::as_f64);
    let stale = out
        .data
        .rows
        .iter()
        .filter(|r| num(r, "year").is_some_and(|y| y <= 2011.0) || num(r, "forecasted_year").is_some_and(|y| y <= 2011.0));
    ensure(stale.count() == 0, || "rows up to 2011 survive".into())?;
    let expected_rows = source
        .data
        .rows
        .iter()
        .filter(|r| !(num(r, "year").is_some_and(|y| y <= 2011.0) || num(r, "forecasted_year").is_some_and(|y| y <= 2011.0)))
        .count();
    ensure(out.data.rows.len() == expected_rows, || format!("{} rows left, expected {expected_rows}", out.data.rows.len()))?;
    ensure(out.layer("actual-area").is_none(), || "area layer survives".into())?;
    let axis = out.axes.iter().find(|a| a.field == "growth").ok_or("growth axis missing")?;
    let scale = out.axis_scale(axis).ok_or("growth axis has no scale")?;
    ensure(scale.domain == vec![json!(3), json!(5)], || format!("growth domain {:?}", scale.domain))?;
    ensure(!out.axis_ticks(axis).contains(&json!(5.5)), || "5.5 tick survives".into())?;
    let before = source.annotations.iter().find(|a| a.id == "note-2016").ok_or("note-2016 missing in source")?;
    let after = out.annotations.iter().find(|a| a.id == "note-2016").ok_or("note-2016 missing in output")?;
    let shift = (
        after.placement.dx.unwrap_or(0.0) - before.placement.dx.unwrap_or(0.0),
        after.placement.dy.unwrap_or(0.0) - before.placement.dy.unwrap_or(0.0),
    );
    ensure(shift == (-10.0, -40.0), || format!("note moved by {shift:?}"))?;
    let golden = case.golden_text().map_err(|e| e.to_string())?;
    ensure(canonical_serialize(&out) == golden, || "output differs from the golden file".into())
}

fn add_values() -> Check {
    let out = compile(
        &case("disaster-cost").source().map_err(|e| e.to_string())?,
        &rules(json!([
            {"specifier": {"role": "vAxis"}, "action": "add", "option": {"values": [100, 200, 300]}}
        ])),
    )
    .map_err(|e| e.to_string())?;
    let axis = out.axes.iter().find(|a| a.field == "cost").ok_or("cost axis missing")?;
    let values = axis.values.clone().unwrap_or_default();
    ensure(values == [50, 100, 150, 200, 250, 300].map(|v| json!(v)).to_vec(), || format!("values {values:?}"))?;
    let els = enumerate_elements(&out);
    let style = |e: &Element| {
        e.properties
            .iter()
            .filter(|(k, _)| !matches!(k.as_str(), "text" | "value"))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect::<BTreeMap<_, _>>()
    };
    let model = style(element(&els, "vAxis[cost].label[50]")?);
    for v in [100, 200, 300] {
        for part in ["label", "tick"] {
            let e = element(&els, &format!("vAxis[cost].{part}[{v}]"))?;
            let reference = style(element(&els, &format!("vAxis[cost].{part}[50]"))?);
            ensure(style(e) == reference, || format!("{} differs from the existing {part}s", e.path))?;
        }
    }
    ensure(!model.is_empty(), || "labels carry no style".into())
}

fn mobile() -> Check {
    let case = case("mobile");
    let out = compile(&case.source().map_err(|e| e.to_string())?, &case.rules().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(out.width == 375.0, || format!("width {}", out.width))?;
    let size = |role: &str| -> Option<f64> {
        out.texts.iter().find(|t| t.role.name() == role && t.index == 0)?.segments[0].style.get("fontSize")?.as_f64()
    };
    ensure(size("title") == Some(12.0), || format!("title fontSize {:?}", size("title")))?;
    ensure(size("subtitle") == Some(10.4), || format!("subtitle fontSize {:?}", size("subtitle")))?;
    ensure(canonical_serialize(&out).contains("\"fontSize\": 10.4"), || "10.4 is not written as 10.4".into())
}

fn specificity() -> Check {
    for name in ["specificity-generic-first", "specificity-specific-first"] {
        let case = case(name);
        let out =
            compile(&case.source().map_err(|e| e.to_string())?, &case.rules().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        for m in marks(&out) {
            let apparel =
                matches!(&m.reference, cicero_core::vis::ElementRef::Mark { key, .. } if key.get("category") == Some(&json!("Apparel")));
            let want = if apparel { "#e45756" } else { "#bbbbbb" };
            ensure(prop(&m, "color") == json!(want), || format!("{name}: {} is {}", m.path, prop(&m, "color")))?;
        }
    }
    Ok(())
}

fn write_pair() -> impl Strategy<Value = (usize, usize, usize, u32, u32)> {
    (0usize..64, 0usize..3, 0usize..3, 0u32..0xffffff, 0u32..0xffffff)
}

fn last_wins() -> Check {
    let specs = sources();
    let count = Cell::new(0u32);
    let mut runner = runner(1000);
    runner
        .run(&write_pair(), |(pick, f1, f2, c1, c2)| {
            let candidates: Vec<(&VisSpec, Element)> = specs.iter().flat_map(|(_, s)| marks(s).into_iter().map(move |m| (s, m))).collect();
            let (spec, mark) = &candidates[pick % candidates.len()];
            let cicero_core::vis::ElementRef::Mark { key, .. } = &mark.reference else { unreachable!() };
            // Three single-slot specifiers that all select this mark.
            let forms = [
                json!({"role": "mark", "mark": mark.mark_type.map(|m| m.name())}),
                json!({"role": "mark", "field": mark.fields[0]}),
                match key.iter().next() {
                    Some((k, v)) => json!({"role": "mark", "data": {k: v}}),
                    None => json!({"role": "mark", "mark": mark.mark_type.map(|m| m.name())}),
                },
            ];
            let (a, b) = (format!("#{c1:06x}"), format!("#{c2:06x}"));
            let list = json!([
                {"specifier": forms[f1], "action": "modify", "option": {"color": a}},
                {"specifier": forms[f2], "action": "modify", "option": {"color": b}},
            ]);
            let out = compile(spec, &rules(list)).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let els = enumerate_elements(&out);
            let after = els.iter().find(|e| e.path == mark.path).ok_or_else(|| TestCaseError::fail("mark vanished"))?;
            prop_assert_eq!(prop(after, "color"), json!(b));
            count.set(count.get() + 1);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    ensure(count.get() >= 1000, || format!("only {} cases ran", count.get()))
}

fn important() -> Check {
    let source = case("disaster-cost").source().map_err(|e| e.to_string())?;
    let generic = json!({"specifier": {"role": "mark"}, "action": "modify", "option": {"color": "#d62728"}, "important": true});
    let specific = json!({"specifier": {"role": "mark", "data": {"kind": "Storm"}}, "action": "modify", "option": {"color": "#1f77b4"}});
    for list in [json!([generic, specific]), json!([specific, generic])] {
        let out = compile(&source, &rules(list)).map_err(|e| e.to_string())?;
        for m in marks(&out) {
            ensure(prop(&m, "color") == json!("#d62728"), || format!("{} is {}", m.path, prop(&m, "color")))?;
        }
    }
    Ok(())
}

fn has_xy(spec: &VisSpec) -> bool {
    spec.layers.iter().any(|l| l.encoding.contains_key("x") && l.encoding.contains_key("y"))
}

fn transpose_swap() -> Check {
    let transpose = rules(json!([{"specifier": {"role": "view"}, "action": "transpose"}]));
    let swap =
        rules(json!([{"specifier": {"role": "view"}, "action": "swap", "option": {"from": {"channel": "x"}, "to": {"channel": "y"}}}]));
    let mut checked = 0;
    for (name, spec) in sources().into_iter().filter(|(_, s)| has_xy(s)) {
        let a = compile(&spec, &transpose).map_err(|e| format!("{name}: {e}"))?;
        let b = compile(&spec, &swap).map_err(|e| format!("{name}: {e}"))?;
        ensure(canonical_serialize(&a) == canonical_serialize(&b), || format!("{name}: outputs differ"))?;
        checked += 1;
    }
    ensure(checked > 0, || "no fixture has both x and y".into())
}

fn swap_replace() -> Check {
    let mut checked = 0;
    for (name, spec) in sources() {
        let layers: Vec<String> = spec.layers.iter().map(|l| l.id.clone()).collect();
        let used: BTreeSet<&str> = spec.layers.iter().flat_map(|l| l.encoding.keys().map(String::as_str)).collect();
        for (a, b) in [("x", "y"), ("color", "size"), ("color", "shape"), ("x", "color")] {
            if !used.contains(a) && !used.contains(b) {
                continue;
            }
            let Some(tmp) = CHANNELS.iter().find(|c| !used.contains(*c) && **c != a && **c != b) else { continue };
            let mut swapped = spec.clone();
            swap_channels(&mut swapped, &layers, a, b).map_err(|e| format!("{name}: {e}"))?;
            let mut replaced = spec.clone();
            for (from, to) in [(a, *tmp), (b, a), (*tmp, b)] {
                replace_channel(&mut replaced, &layers, from, to).map_err(|e| format!("{name}: {e}"))?;
            }
            ensure(to_canonical_value(&swapped) == to_canonical_value(&replaced), || format!("{name}: swap {a}/{b} differs"))?;
            checked += 1;
        }
    }
    ensure(checked > 0, || "nothing to swap".into())
}

fn without_data(spec: &VisSpec) -> Value {
    let mut v = to_canonical_value(spec);
    v.as_object_mut().expect("object").remove("data");
    v
}

fn downstream_removal() -> Check {
    let drop_rows = rules(json!([
        {"specifier": {"role": "data", "data": [{"year": {"lte": 2011}}, {"forecasted_year": {"lte": 2011}}]}, "action": "remove"}
    ]));
    for (name, keeps) in [("bond-yields", false), ("bond-yields-independent", true)] {
        let source = case(name).source().map_err(|e| e.to_string())?;
        let out = compile(&source, &drop_rows).map_err(|e| e.to_string())?;
        let has = out.annotations.iter().any(|a| a.id == "note-2010");
        ensure(has == keeps, || format!("{name}: note-2010 present = {has}"))?;
        // Everything but the data and the dropped note is untouched.
        let mut expected = source.clone();
        expected.annotations.retain(|a| keeps || a.id != "note-2010");
        ensure(without_data(&out) == without_data(&expected), || format!("{name}: a surviving element changed"))?;
        for a in &out.annotations {
            for item in a.anchor.items() {
                let field = a.anchor.field().unwrap_or_default();
                ensure(out.data.rows.iter().any(|r| r.get(field) == Some(item)), || format!("{name}: {} anchors a removed datum", a.id))?;
            }
        }
    }
    Ok(())
}

/// Exhaustive search over every cell rectangle, using prefix sums.
fn brute_force_area(grid: &Grid, xs: &[f64], ys: &[f64]) -> f64 {
    let (rows, cols) = (grid.rows, grid.cols);
    let mut sum = vec![vec![0usize; cols + 1]; rows + 1];
    for r in 0..rows {
        for c in 0..cols {
            sum[r + 1][c + 1] = sum[r][c + 1] + sum[r + 1][c] - sum[r][c] + usize::from(grid.occupied(r, c));
        }
    }
    let mut best = 0.0f64;
    for r0 in 0..rows {
        for r1 in r0..rows {
            for c0 in 0..cols {
                for c1 in c0..cols {
                    let filled = sum[r1 + 1][c1 + 1] + sum[r0][c0] - sum[r0][c1 + 1] - sum[r1 + 1][c0];
                    if filled > 0 {
                        break;
                    }
                    best = best.max((xs[c1 + 1] - xs[c0]) * (ys[r1 + 1] - ys[r0]));
                }
            }
        }
    }
    best
}

fn edges(sizes: &[u8]) -> Vec<f64> {
    std::iter::once(0.0)
        .chain(sizes.iter().scan(0.0, |acc, s| {
            *acc += f64::from(*s);
            Some(*acc)
        }))
        .collect()
}

/// Column sizes, row sizes and occupied blocks `(row, col, height, width)`.
type Frame = (Vec<u8>, Vec<u8>, Vec<(usize, usize, usize, usize)>);

fn frame_strategy() -> impl Strategy<Value = Frame> {
    (1usize..=80, 1usize..=80).prop_flat_map(|(rows, cols)| {
        (
            proptest::collection::vec(1u8..=4, cols),
            proptest::collection::vec(1u8..=4, rows),
            proptest::collection::vec((0..rows, 0..cols, 1usize..=20, 1usize..=20), 0..25),
        )
    })
}

fn empty_rect_oracle() -> Check {
    let start = Instant::now();
    let count = Cell::new(0u32);
    let mut runner = runner(50);
    runner
        .run(&frame_strategy(), |(col_sizes, row_sizes, boxes)| {
            let (xs, ys) = (edges(&col_sizes), edges(&row_sizes));
            let mut grid = Grid::new(row_sizes.len(), col_sizes.len());
            for (r, c, h, w) in boxes {
                for rr in r..(r + h).min(grid.rows) {
                    for cc in c..(c + w).min(grid.cols) {
                        grid.set(rr, cc, true);
                    }
                }
            }
            let oracle = brute_force_area(&grid, &xs, &ys);
            let got = largest_empty_cells(&grid, &xs, &ys);
            match got {
                None => prop_assert_eq!(oracle, 0.0),
                Some(c) => {
                    for r in c.r0..=c.r1 {
                        for col in c.c0..=c.c1 {
                            prop_assert!(!grid.occupied(r, col), "answer covers an occupied cell");
                        }
                    }
                    let area = (xs[c.c1 + 1] - xs[c.c0]) * (ys[c.r1 + 1] - ys[c.r0]);
                    prop_assert!((area - oracle).abs() < 1e-9, "area {} vs oracle {}", area, oracle);
                }
            }
            count.set(count.get() + 1);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(count.get() >= 50, || format!("only {} frames", count.get()))?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))
}

const SPECIFIER_KEYS: [&str; 14] = [
    "role",
    "mark",
    "index",
    "id",
    "data",
    "field",
    "values",
    "datatype",
    "channel",
    "operation",
    "interaction",
    "important",
    "action",
    "option",
];

/// Single-axis specifier fragments that each match `e`.
fn axes_matching(spec: &VisSpec, e: &Element) -> Vec<(String, Value)> {
    let mut out = vec![("index".to_string(), json!(e.ordinal))];
    if let Some(m) = e.mark_type {
        out.push(("mark".into(), json!(m.name())));
    }
    if let Some(id) = &e.id {
        out.push(("id".into(), json!(id)));
    }
    if let Some(f) = e.fields.first() {
        out.push(("field".into(), json!(f)));
    }
    if let Some(c) = e.channels.first() {
        out.push(("channel".into(), json!(c)));
    }
    let row = e.synthetic_row().or_else(|| e.rows.first().map(|i| spec.data.rows[*i].clone()));
    if let Some((k, v)) = row.and_then(|r| r.into_iter().find(|(_, v)| !v.is_null())) {
        out.push(("data".into(), json!({ k: v })));
    }
    for (k, v) in &e.properties {
        if !SPECIFIER_KEYS.contains(&k.as_str()) && (v.is_string() || v.is_number() || v.is_boolean()) {
            out.push((k.clone(), v.clone()));
            break;
        }
    }
    out
}

fn selection(spec: &VisSpec, value: &Value) -> Result<BTreeSet<String>, TestCaseError> {
    let s = Specifier::from_value(value).map_err(TestCaseError::fail)?;
    let sel = resolve(&s, spec).map_err(|e| TestCaseError::fail(e.to_string()))?;
    Ok(sel.paths().into_iter().collect())
}

fn query_properties() -> Check {
    let specs = sources();
    let count = Cell::new(0u32);
    let mut runner = runner(1000);
    runner
        .run(&(0usize..10_000, 0usize..1000, any::<u16>(), any::<u16>(), 0usize..5), |(s, pick, ma, mb, foreign)| {
            let spec = &specs[s % specs.len()].1;
            let els = enumerate_elements(spec);
            let e = &els[pick % els.len()];
            let mut axes = axes_matching(spec, e);
            // Sometimes borrow an axis from another element so selections can shrink to nothing.
            if foreign == 0 {
                let other = &els[(pick * 7 + 3) % els.len()];
                let extra: Vec<_> = axes_matching(spec, other).into_iter().filter(|(k, _)| !axes.iter().any(|(a, _)| a == k)).collect();
                axes.extend(extra);
            }
            let build = |mask: u16| {
                let mut m = serde_json::Map::new();
                m.insert("role".into(), json!(e.role));
                for (i, (k, v)) in axes.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        m.insert(k.clone(), v.clone());
                    }
                }
                Value::Object(m)
            };
            let (a, b) = (build(ma), build(mb));
            let both = build(ma | mb);
            let (sa, sb, sab) = (selection(spec, &a)?, selection(spec, &b)?, selection(spec, &both)?);
            let meet: BTreeSet<String> = sa.intersection(&sb).cloned().collect();
            prop_assert_eq!(&sab, &meet, "A = {}, B = {}", a, b);
            prop_assert_eq!(selection(spec, &both)?, sab);
            count.set(count.get() + 1);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    ensure(count.get() >= 1000, || format!("only {} cases ran", count.get()))
}

fn identity() -> Check {
    for (name, spec) in sources() {
        let out = compile(&spec, &rules(json!([]))).map_err(|e| format!("{name}: {e}"))?;
        ensure(canonical_serialize(&out) == canonical_serialize(&spec), || format!("{name}: output differs"))?;
    }
    Ok(())
}

pub const PRINCIPLES: [&str; 10] = [
    "association-detection",
    "downstream-layout",
    "series-mimicry",
    "similar-role",
    "structure-similarity",
    "grammar-defaults",
    "sequential",
    "last-wins",
    "specificity",
    "important",
];

fn coverage_matrix() -> Check {
    let cases = corpus();
    let mut actions: BTreeMap<&str, usize> = BTreeMap::new();
    let mut principles: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &cases {
        let used: BTreeSet<&str> = c.rules().map_err(|e| e.to_string())?.transformations.iter().map(|r| r.action.name()).collect();
        for a in used {
            *actions.entry(a).or_default() += 1;
        }
        for tag in &c.exercises {
            let known = PRINCIPLES.iter().find(|p| **p == tag.as_str()).ok_or_else(|| format!("{}: unknown tag {tag}", c.name))?;
            *principles.entry(known).or_default() += 1;
        }
    }
    for a in Action::ALL {
        let n = actions.get(a.name()).copied().unwrap_or(0);
        ensure(n >= 2, || format!("action {} is used by {n} fixture(s)", a.name()))?;
    }
    for p in PRINCIPLES {
        ensure(principles.contains_key(p), || format!("no fixture exercises {p}"))?;
    }
    Ok(())
}

fn main() {
    type Criterion = (&'static str, fn() -> Check);
    let criteria: [Criterion; 13] = [
        ("bond yields walkthrough", bond_yields),
        ("added axis values merge and mimic", add_values),
        ("mobile sizes", mobile),
        ("specificity in both orders", specificity),
        ("last rule wins on equal specificity", last_wins),
        ("important beats specific", important),
        ("transpose equals x/y swap", transpose_swap),
        ("swap equals three replaces", swap_replace),
        ("downstream removal", downstream_removal),
        ("largest empty rectangle oracle", empty_rect_oracle),
        ("query conjunction and determinism", query_properties),
        ("empty rule list is the identity", identity),
        ("corpus coverage matrix", coverage_matrix),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(check) {
            Ok(Ok(())) => println!("criterion {:>2} {name}: PASS", i + 1),
            Ok(Err(why)) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({why})", i + 1);
            }
            Err(_) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL (panicked)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
