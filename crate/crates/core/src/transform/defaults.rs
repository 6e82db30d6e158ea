//! Styles for elements a rule creates.
//!
//! A new element first copies a series it joins ([`mimic_series`]), then an
//! element of a similar role elsewhere in the chart
//! ([`similar_role_fallback`]), and only then the built-in defaults
//! ([`grammar_default`]).

use serde_json::Value;

use crate::layout::default_text_font;
use crate::value::number;
use crate::vis::{default_label_style, Segment, Style, TextRole, VisSpec};

/// Styles `new` after the member of `series` whose segment count is closest
/// (ties go to the earliest member). Explicit styles on `new` win. `None`
/// when the series is empty.
pub fn mimic_series(new: &[Segment], series: &[Vec<Segment>]) -> Option<Vec<Segment>> {
    let model = series.iter().filter(|s| !s.is_empty()).min_by_key(|s| s.len().abs_diff(new.len()))?;
    Some(
        new.iter()
            .enumerate()
            .map(|(i, seg)| {
                let mut style = model[i.min(model.len() - 1)].style.clone();
                style.extend(seg.style.clone());
                Segment { text: seg.text.clone(), style }
            })
            .collect(),
    )
}

/// Style of an existing element with a similar role, or the default.
pub fn similar_role_fallback(role: &str, spec: &VisSpec) -> Style {
    let leaf = role.rsplit('.').next().unwrap_or(role);
    let found = match (role, leaf) {
        (_, "grid") => spec.axes.iter().find(|a| a.grid && !a.grid_style.is_empty()).map(|a| a.grid_style.clone()),
        ("layer.mark.label", _) => spec
            .layers
            .iter()
            .find_map(|l| l.label.as_ref().map(|x| x.style.clone()))
            .or_else(|| spec.axes.iter().find(|a| a.label).map(|a| a.label_style.clone())),
        (_, "label") => spec
            .axes
            .iter()
            .find(|a| a.label)
            .map(|a| a.label_style.clone())
            .or_else(|| spec.legends.iter().find(|l| l.label).map(|l| l.label_style.clone())),
        (_, "title") if role != "title" => {
            spec.axes.iter().find(|a| a.title.is_some() && !a.title_style.is_empty()).map(|a| a.title_style.clone())
        }
        ("annotation", _) => spec.annotations.iter().find_map(|a| a.segments.first()).map(|s| s.style.clone()),
        _ => TextRole::parse(role).and_then(|r| {
            [TextRole::Title, TextRole::Subtitle, TextRole::Caption]
                .into_iter()
                .filter(|&o| o != r)
                .find_map(|o| spec.texts_of(o).first().and_then(|t| t.segments.first()).map(|s| s.style.clone()))
                .map(|mut s| {
                    s.insert("fontSize".into(), number(default_text_font(r)));
                    s
                })
        }),
    };
    found.filter(|s| !s.is_empty()).unwrap_or_else(|| grammar_default(role))
}

/// Built-in style for a role.
pub fn grammar_default(role: &str) -> Style {
    let leaf = role.rsplit('.').next().unwrap_or(role);
    let mut s = Style::new();
    match (role, leaf) {
        (_, "grid") => {
            s.insert("color".into(), Value::from("#dddddd"));
            s.insert("strokeWidth".into(), Value::from(1));
        }
        (_, "label") => return default_label_style(),
        ("title" | "subtitle" | "caption", _) => {
            let r = TextRole::parse(role).expect("text role");
            s.insert("fontSize".into(), number(default_text_font(r)));
        }
        (_, "title") => {
            s.insert("fontSize".into(), Value::from(11));
            s.insert("fontWeight".into(), Value::from("bold"));
        }
        ("annotation", _) => {
            s.insert("fontSize".into(), Value::from(11));
        }
        _ => {}
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(text: &str, color: &str) -> Segment {
        let mut style = Style::new();
        style.insert("color".into(), Value::from(color));
        Segment { text: text.into(), style }
    }

    #[test]
    fn mimics_the_closest_segment_count() {
        let one = vec![seg("a", "red")];
        let two = vec![seg("a", "blue"), seg("b", "green")];
        let new = vec![Segment { text: "x".into(), style: Style::new() }, Segment { text: "y".into(), style: Style::new() }];
        let out = mimic_series(&new, &[one.clone(), two]).unwrap();
        assert_eq!(out[0].style["color"], "blue");
        assert_eq!(out[1].style["color"], "green");

        let single = vec![Segment { text: "x".into(), style: Style::new() }];
        let out = mimic_series(&single, &[one, vec![seg("c", "black")]]).unwrap();
        assert_eq!(out[0].style["color"], "red", "ties go to the first member");
        assert!(mimic_series(&single, &[]).is_none());
    }
}
