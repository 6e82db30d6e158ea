//! Keeping dependent elements consistent after a rule.
//!
//! Removing data, marks or encodings can leave annotations pointing at
//! nothing, guides without an encoding and tick values outside their domain.
//! [`reconcile`] drops exactly those and never edits a surviving element's
//! static style. On a valid chart it changes nothing.

use crate::value::values_equal;
use crate::vis::{encodes, Anchor, Orientation, ScaleType, VisSpec, CHANNELS};

/// Points guides whose encoding moved at the channel their field moved to,
/// when that channel is unambiguous.
pub fn rebind_guides(spec: &mut VisSpec) {
    for i in 0..spec.axes.len() {
        let axis = &spec.axes[i];
        if !matches!(axis.orient, Orientation::Horizontal | Orientation::Vertical) || encodes(spec, axis.channel(), &axis.field) {
            continue;
        }
        let homes: Vec<&str> = ["x", "y"].into_iter().filter(|c| encodes(spec, c, &axis.field)).collect();
        if let [c] = homes[..] {
            spec.axes[i].orient = if c == "x" { Orientation::Horizontal } else { Orientation::Vertical };
        }
    }
    for i in 0..spec.legends.len() {
        let legend = &spec.legends[i];
        if encodes(spec, &legend.channel, &legend.field) {
            continue;
        }
        let homes: Vec<&str> = CHANNELS.iter().copied().filter(|c| !matches!(*c, "x" | "y") && encodes(spec, c, &legend.field)).collect();
        if let [c] = homes[..] {
            spec.legends[i].channel = c.to_string();
        }
    }
}

fn axis_bound(spec: &VisSpec, orient: Orientation, field: &str) -> bool {
    match orient {
        Orientation::Row => spec.row_field.as_deref() == Some(field),
        Orientation::Column => spec.column_field.as_deref() == Some(field),
        Orientation::Horizontal => encodes(spec, "x", field),
        Orientation::Vertical => encodes(spec, "y", field),
    }
}

/// Drops whatever lost its referent. Returns one note per dropped element.
pub fn reconcile(spec: &mut VisSpec) -> Vec<String> {
    let mut notes = Vec::new();

    let before = spec.axes.len();
    let axes = std::mem::take(&mut spec.axes);
    spec.axes = axes.into_iter().filter(|a| axis_bound(spec, a.orient, &a.field)).collect();
    if spec.axes.len() != before {
        notes.push(format!("dropped {} axis(es) whose encoding is gone", before - spec.axes.len()));
    }
    let before = spec.legends.len();
    let legends = std::mem::take(&mut spec.legends);
    spec.legends = legends.into_iter().filter(|l| encodes(spec, &l.channel, &l.field)).collect();
    if spec.legends.len() != before {
        notes.push(format!("dropped {} legend(s) whose encoding is gone", before - spec.legends.len()));
    }

    for i in 0..spec.axes.len() {
        let Some(values) = spec.axes[i].values.clone() else { continue };
        let Some(scale) = spec.axis_scale(&spec.axes[i]) else { continue };
        if !(scale.is_continuous() || scale.scale_type == ScaleType::Time) {
            continue;
        }
        let kept: Vec<_> = values.iter().filter(|v| scale.contains(v)).cloned().collect();
        if kept.len() != values.len() {
            notes.push(format!(
                "dropped {} tick value(s) of the {} axis outside its domain",
                values.len() - kept.len(),
                spec.axes[i].field
            ));
            spec.axes[i].values = Some(kept);
        }
    }

    let has_value = |spec: &VisSpec, field: &str, item: &serde_json::Value| {
        spec.data.rows.iter().any(|r| r.get(field).is_some_and(|v| values_equal(v, item)))
    };
    let anns = std::mem::take(&mut spec.annotations);
    let mut kept = Vec::new();
    for mut a in anns {
        let keep = match &mut a.anchor {
            Anchor::Independent => true,
            Anchor::OnMark { layer, field, items } => {
                let layer_ok = layer.as_ref().is_none_or(|l| spec.layer(l).is_some());
                let had = items.len();
                items.retain(|it| has_value(spec, field, it));
                layer_ok && (had == 0 || !items.is_empty())
            }
            Anchor::OnAxis { field, items } => {
                let axis_ok = spec.axes.iter().any(|x| x.field == *field);
                let had = items.len();
                items.retain(|it| has_value(spec, field, it));
                axis_ok && (had == 0 || !items.is_empty())
            }
        };
        if keep {
            kept.push(a);
        } else {
            notes.push(format!("dropped annotation \"{}\" whose anchor is gone", a.id));
        }
    }
    spec.annotations = kept;
    spec.reindex_texts();
    notes
}
