//! Semantic checks beyond what deserialization enforces.

use std::collections::BTreeSet;

use serde_json::Value;

use super::{Anchor, Datatype, Operation, Orientation, PlacementMode, ScaleType, TextRole, VisError, VisSpec, CHANNELS};
use crate::value::{as_number, compare, values_equal};

/// Every violation in `spec`, in a stable order. Empty means valid.
pub fn validation_errors(spec: &VisSpec) -> Vec<VisError> {
    let mut errs = Vec::new();
    let invalid = |errs: &mut Vec<VisError>, msg: String| errs.push(VisError::Invalid(msg));
    let reference = |errs: &mut Vec<VisError>, field: &str, context: String| {
        if !spec.data.has_field(field) {
            errs.push(VisError::Reference { field: field.to_string(), context });
        }
    };

    if !(spec.width.is_finite() && spec.width > 0.0) || !(spec.height.is_finite() && spec.height > 0.0) {
        invalid(&mut errs, format!("width and height must be positive, got {}x{}", spec.width, spec.height));
    }

    let mut names = BTreeSet::new();
    for f in &spec.data.schema {
        if !names.insert(f.field.as_str()) {
            invalid(&mut errs, format!("field \"{}\" is declared twice in the schema", f.field));
        }
    }
    for (i, row) in spec.data.rows.iter().enumerate() {
        let keys: BTreeSet<&str> = row.keys().map(String::as_str).collect();
        if keys != names {
            invalid(&mut errs, format!("data row {i} does not have exactly the schema's fields"));
            continue;
        }
        for f in &spec.data.schema {
            let v = &row[&f.field];
            let ok = match f.datatype {
                _ if v.is_null() => true,
                Datatype::Quantitative => v.is_number(),
                Datatype::Temporal => v.is_string() || v.is_number(),
                _ => v.is_string() || v.is_number() || v.is_boolean(),
            };
            if !ok {
                invalid(&mut errs, format!("data row {i}: value {v} does not fit field \"{}\"", f.field));
            }
        }
    }

    let mut ids = BTreeSet::new();
    for layer in &spec.layers {
        let ctx = format!("layer \"{}\"", layer.id);
        if !ids.insert(layer.id.as_str()) {
            invalid(&mut errs, format!("layer id \"{}\" is used twice", layer.id));
        }
        for (channel, enc) in &layer.encoding {
            if !CHANNELS.contains(&channel.as_str()) {
                invalid(&mut errs, format!("{ctx}: unknown channel \"{channel}\""));
            }
            reference(&mut errs, &enc.field, format!("{ctx}, channel {channel}"));
            for op in &enc.operations {
                if let Operation::Filter(p) = op {
                    for f in p.fields() {
                        reference(&mut errs, &f, format!("{ctx}, filter"));
                    }
                }
            }
            if let (Some(ScaleType::Linear | ScaleType::Time), Some(d)) = (enc.scale.scale_type, &enc.scale.domain) {
                check_ordered_domain(&mut errs, d, &ctx);
            } else if enc.scale.scale_type.is_none() && matches!(spec.data.datatype(&enc.field), Some(Datatype::Quantitative)) {
                if let Some(d) = &enc.scale.domain {
                    check_ordered_domain(&mut errs, d, &ctx);
                }
            }
        }
        for ov in &layer.overrides {
            for f in ov.when.keys() {
                reference(&mut errs, f, format!("{ctx}, style override"));
            }
        }
        if let Some(label) = &layer.label {
            reference(&mut errs, &label.field, format!("{ctx}, mark label"));
        }
    }

    for (field, what) in [(&spec.row_field, "rowField"), (&spec.column_field, "columnField")] {
        if let Some(f) = field {
            reference(&mut errs, f, what.to_string());
        }
    }

    let mut axis_keys = BTreeSet::new();
    for axis in &spec.axes {
        let ctx = format!("{} axis", axis.orient.name());
        reference(&mut errs, &axis.field, ctx.clone());
        let bound = match axis.orient {
            Orientation::Row => spec.row_field.as_deref() == Some(axis.field.as_str()),
            Orientation::Column => spec.column_field.as_deref() == Some(axis.field.as_str()),
            _ => encodes(spec, axis.channel(), &axis.field),
        };
        if spec.data.has_field(&axis.field) && !bound {
            invalid(&mut errs, format!("{ctx} for \"{}\" has no encoding on {}", axis.field, axis.channel()));
        }
        if !axis_keys.insert(axis.key()) {
            invalid(&mut errs, format!("two {ctx}s for field \"{}\"", axis.field));
        }
        if let (Some(values), Some(scale)) = (&axis.values, spec.axis_scale(axis)) {
            if scale.is_continuous() || scale.scale_type == ScaleType::Time {
                for v in values {
                    if !scale.contains(v) {
                        invalid(&mut errs, format!("{ctx} for \"{}\": value {v} is outside the scale domain", axis.field));
                    }
                }
            }
        }
    }
    for legend in &spec.legends {
        reference(&mut errs, &legend.field, format!("{} legend", legend.channel));
        if !CHANNELS.contains(&legend.channel.as_str()) {
            invalid(&mut errs, format!("legend: unknown channel \"{}\"", legend.channel));
        } else if spec.data.has_field(&legend.field) && !encodes(spec, &legend.channel, &legend.field) {
            invalid(&mut errs, format!("{} legend for \"{}\" has no matching encoding", legend.channel, legend.field));
        }
    }

    for role in [TextRole::Title, TextRole::Subtitle, TextRole::Caption] {
        let idx: Vec<usize> = spec.texts_of(role).iter().map(|t| t.index).collect();
        if idx.iter().enumerate().any(|(i, &x)| i != x) {
            invalid(&mut errs, format!("{} indices must be contiguous from 0, got {idx:?}", role.name()));
        }
    }

    let mut ann_ids = BTreeSet::new();
    for ann in &spec.annotations {
        let ctx = format!("annotation \"{}\"", ann.id);
        if !ann_ids.insert(ann.id.as_str()) {
            invalid(&mut errs, format!("{ctx} is declared twice"));
        }
        if let Anchor::OnMark { layer: Some(l), .. } = &ann.anchor {
            if spec.layer(l).is_none() {
                invalid(&mut errs, format!("{ctx}: layer \"{l}\" does not exist"));
            }
        }
        if let Anchor::OnAxis { field, .. } = &ann.anchor {
            if !spec.axes.iter().any(|a| a.field == *field) {
                invalid(&mut errs, format!("{ctx}: no axis shows \"{field}\""));
            }
        }
        if let Some(field) = ann.anchor.field() {
            reference(&mut errs, field, ctx.clone());
            for item in ann.anchor.items() {
                if spec.data.has_field(field) && !spec.data.rows.iter().any(|r| r.get(field).is_some_and(|v| values_equal(v, item))) {
                    invalid(&mut errs, format!("{ctx}: item {item} is not a value of \"{field}\""));
                }
            }
        }
        let p = &ann.placement;
        if matches!(p.mode, PlacementMode::Absolute | PlacementMode::Internal) {
            let inside = |c: Option<f64>, max: f64| c.is_none_or(|c| (0.0..=max).contains(&c));
            if !inside(p.x, spec.width) || !inside(p.y, spec.height) {
                invalid(&mut errs, format!("{ctx}: position lies outside the chart"));
            }
        }
    }
    errs
}

/// Whether some layer encodes `field` on `channel`.
pub fn encodes(spec: &VisSpec, channel: &str, field: &str) -> bool {
    spec.layers.iter().any(|l| l.encoding.get(channel).is_some_and(|e| e.field == field))
}

fn check_ordered_domain(errs: &mut Vec<VisError>, domain: &[Value], ctx: &str) {
    if domain.len() != 2 || domain.iter().any(|v| as_number(v).is_none() && !v.is_string()) {
        errs.push(VisError::Invalid(format!("{ctx}: a continuous domain needs two endpoints")));
    } else if compare(&domain[0], &domain[1]).is_none_or(|o| o.is_gt()) {
        errs.push(VisError::Invalid(format!("{ctx}: domain endpoints are out of order")));
    }
}
