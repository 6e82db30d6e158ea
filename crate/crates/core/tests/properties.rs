mod common;

use proptest::prelude::*;
use serde_json::{json, Value};

use cicero_core::rules::cicero_from_value;
use cicero_core::transform::compile;
use cicero_core::vis::{canonical_serialize, enumerate_elements, parse_vis_spec, validation_errors, Anchor, ElementRef, VisSpec};

use common::{rules, sources};

fn bar_chart(values: &[(u8, f64)]) -> VisSpec {
    let mut seen = std::collections::BTreeSet::new();
    let rows: Vec<Value> = values.iter().filter(|(c, _)| seen.insert(*c)).map(|(c, v)| json!({"cat": format!("c{c}"), "n": v})).collect();
    let first = rows[0]["cat"].clone();
    let doc = json!({
        "width": 300, "height": 200,
        "data": {"schema": [{"field": "cat", "type": "nominal"}, {"field": "n", "type": "quantitative"}], "rows": rows},
        "layers": [{"id": "bars", "mark": "bar", "encoding": {"x": {"field": "cat"}, "y": {"field": "n"}}, "style": {"color": "#4c78a8"}}],
        "axes": [{"orient": "horizontal", "field": "cat"}, {"orient": "vertical", "field": "n", "title": "Count"}],
        "texts": [{"role": "title", "index": 0, "segments": [{"text": "Counts", "style": {"fontSize": 16}}]}],
        "annotations": [{"id": "first", "type": "on-mark", "layer": "bars", "field": "cat", "items": [first], "segments": [{"text": "first"}]}],
    });
    parse_vis_spec(&doc.to_string()).expect("generated chart is valid")
}

fn chart() -> impl Strategy<Value = VisSpec> {
    proptest::collection::vec((0u8..12, 0.0f64..1000.0), 1..10).prop_map(|v| bar_chart(&v))
}

fn fixture() -> impl Strategy<Value = VisSpec> {
    let specs: Vec<VisSpec> = sources().into_iter().map(|(_, s)| s).collect();
    (0..specs.len()).prop_map(move |i| specs[i].clone())
}

/// Rules that apply to most charts.
fn pool_rule(i: usize, n: u32) -> Value {
    let color = format!("#{:06x}", n & 0xffffff);
    let w = 200 + (n % 400);
    match i % 12 {
        0 => json!({"specifier": {"role": "view"}, "action": "modify", "option": {"width": w}}),
        1 => json!({"specifier": {"role": "mark"}, "action": "modify", "option": {"color": color}}),
        2 => json!({"specifier": {"role": "mark", "index": n % 3}, "action": "modify", "option": {"color": color}}),
        3 => json!({"specifier": {"role": "vAxis"}, "action": "modify", "option": {"fontSize": 8 + n % 8}}),
        4 => json!({"specifier": {"role": "title"}, "action": "modify", "option": {"fontSize": {"prod": 0.8}}}),
        5 => json!({"specifier": {"role": "view"}, "action": "transpose"}),
        6 => json!({"specifier": {"role": "layer"}, "action": "swap", "option": {"from": {"channel": "x"}, "to": {"channel": "y"}}}),
        7 => json!({"specifier": {"role": "hAxis"}, "action": "add", "option": {"grid": true}}),
        8 => json!({"specifier": {"role": "legend"}, "action": "remove"}),
        9 => json!({"specifier": {"role": "view"}, "action": "modify", "option": {"height": {"by": 10 + n % 50}}}),
        10 => json!({"specifier": {"role": "annotation"}, "action": "reposition", "option": {"external": true}}),
        _ => json!({"specifier": {"role": "mark", "index": n % 4}, "action": "remove"}),
    }
}

fn outcome(spec: &VisSpec, list: Value) -> Result<String, String> {
    compile(spec, &rules(list)).map(|s| canonical_serialize(&s)).map_err(|e| e.to_string())
}

fn color_of(spec: &VisSpec, path: &str) -> Value {
    enumerate_elements(spec).into_iter().find(|e| e.path == path).and_then(|e| e.properties.get("color").cloned()).unwrap_or(Value::Null)
}

fn first_mark(spec: &VisSpec) -> Option<(String, String, Value)> {
    enumerate_elements(spec).into_iter().find_map(|e| match &e.reference {
        ElementRef::Mark { key, .. } => key.iter().next().map(|(k, v)| (e.path.clone(), k.clone(), v.clone())),
        _ => None,
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn serialization_round_trips(spec in prop_oneof![chart(), fixture()]) {
        let text = canonical_serialize(&spec);
        let back = parse_vis_spec(&text).expect("canonical output parses");
        prop_assert_eq!(canonical_serialize(&back), text);
    }

    #[test]
    fn rule_documents_round_trip(picks in proptest::collection::vec((0usize..12, any::<u32>()), 0..6)) {
        let list: Vec<Value> = picks.iter().map(|(i, n)| pool_rule(*i, *n)).collect();
        let doc = json!({"name": "generated", "transformations": list});
        let parsed = cicero_from_value(&doc).expect("pool rules parse");
        prop_assert_eq!(cicero_from_value(&parsed.to_value()).expect("reparse"), parsed);
    }

    #[test]
    fn rules_apply_in_sequence(spec in prop_oneof![chart(), fixture()], (i, a) in (0usize..12, any::<u32>()), (j, b) in (0usize..12, any::<u32>())) {
        let (r1, r2) = (pool_rule(i, a), pool_rule(j, b));
        let s1 = rules(json!([r1.clone()])).transformations[0].specificity();
        let s2 = rules(json!([r2.clone()])).transformations[0].specificity();
        // A more specific first rule keeps its claim inside one compilation.
        prop_assume!(s1 <= s2);
        let together = outcome(&spec, json!([r1.clone(), r2.clone()]));
        let stepwise = compile(&spec, &rules(json!([r1])))
            .map_err(|e| e.to_string())
            .and_then(|mid| outcome(&mid, json!([r2])));
        prop_assert_eq!(together.is_ok(), stepwise.is_ok());
        if let (Ok(x), Ok(y)) = (together, stepwise) {
            prop_assert_eq!(x, y);
        }
    }

    #[test]
    fn specific_rule_wins_in_either_order(spec in chart(), c1 in 0u32..0xffffff, c2 in 0u32..0xffffff, flip: bool) {
        let (path, field, value) = first_mark(&spec).expect("chart has marks");
        let generic = json!({"specifier": {"role": "mark"}, "action": "modify", "option": {"color": format!("#{c1:06x}")}});
        let specific = json!({"specifier": {"role": "mark", "data": {field: value}}, "action": "modify", "option": {"color": format!("#{c2:06x}")}});
        let list = if flip { json!([specific, generic]) } else { json!([generic, specific]) };
        let out = compile(&spec, &rules(list)).expect("recolor compiles");
        prop_assert_eq!(color_of(&out, &path), json!(format!("#{c2:06x}")));
    }

    #[test]
    fn important_rule_wins_in_either_order(spec in chart(), c1 in 0u32..0xffffff, c2 in 0u32..0xffffff, flip: bool) {
        let (path, field, value) = first_mark(&spec).expect("chart has marks");
        let generic = json!({"specifier": {"role": "mark"}, "action": "modify", "option": {"color": format!("#{c1:06x}")}, "important": true});
        let specific = json!({"specifier": {"role": "mark", "data": {field: value}}, "action": "modify", "option": {"color": format!("#{c2:06x}")}});
        let list = if flip { json!([specific, generic]) } else { json!([generic, specific]) };
        let out = compile(&spec, &rules(list)).expect("recolor compiles");
        for m in enumerate_elements(&out).into_iter().filter(|e| e.role == "layer.mark") {
            prop_assert_eq!(m.properties.get("color"), Some(&json!(format!("#{c1:06x}"))), "{}", path);
        }
    }

    #[test]
    fn swapping_twice_is_the_identity(spec in prop_oneof![chart(), fixture()]) {
        let swap = json!({"specifier": {"role": "view"}, "action": "swap", "option": {"from": {"channel": "x"}, "to": {"channel": "y"}}});
        if let Ok(out) = outcome(&spec, json!([swap.clone(), swap])) {
            prop_assert_eq!(out, canonical_serialize(&spec));
        }
    }

    #[test]
    fn empty_rule_list_changes_nothing(spec in prop_oneof![chart(), fixture()]) {
        prop_assert_eq!(outcome(&spec, json!([])).expect("identity compiles"), canonical_serialize(&spec));
    }

    #[test]
    fn removal_leaves_nothing_dangling(spec in chart(), cut in 0.0f64..1000.0) {
        let list = json!([{"specifier": {"role": "data", "data": {"n": {"lt": cut}}}, "action": "remove"}]);
        let Ok(out) = compile(&spec, &rules(list)) else { return Ok(()) };
        prop_assert!(validation_errors(&out).is_empty());
        for a in &out.annotations {
            if let Anchor::OnMark { field, items, .. } = &a.anchor {
                for item in items {
                    prop_assert!(out.data.rows.iter().any(|r| r.get(field) == Some(item)));
                }
            }
        }
    }

    #[test]
    fn outputs_stay_valid(spec in prop_oneof![chart(), fixture()], picks in proptest::collection::vec((0usize..12, any::<u32>()), 1..5)) {
        let list: Vec<Value> = picks.iter().map(|(i, n)| pool_rule(*i, *n)).collect();
        if let Ok(out) = compile(&spec, &rules(Value::Array(list))) {
            prop_assert!(validation_errors(&out).is_empty());
            prop_assert!(parse_vis_spec(&canonical_serialize(&out)).is_ok());
        }
    }
}
