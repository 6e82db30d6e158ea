//! Derived views over a spec: which rows a layer draws, how rows group into
//! marks, and the effective scale and tick values behind each guide.

use serde_json::Value;

use super::{AxisDef, Datatype, Layer, LegendDef, Operation, Orientation, Row, ScaleType, StyleOverride, VisSpec};
use crate::value::{compare, number, values_equal};

pub fn axis_channel(orient: Orientation) -> &'static str {
    match orient {
        Orientation::Horizontal => "x",
        Orientation::Vertical => "y",
        Orientation::Row => "row",
        Orientation::Column => "column",
    }
}

/// Indices of the rows a layer draws: rows passing every filter operation and
/// carrying a value for each encoded field.
pub fn layer_rows(spec: &VisSpec, layer: &Layer) -> Vec<usize> {
    let fields = layer.fields();
    let filters: Vec<_> = layer
        .operations()
        .filter_map(|op| match op {
            Operation::Filter(p) => Some(p),
            _ => None,
        })
        .collect();
    let dt = |f: &str| spec.data.datatype(f);
    spec.data
        .rows
        .iter()
        .enumerate()
        .filter(|(_, row)| fields.iter().all(|f| row.get(*f).is_some_and(|v| !v.is_null())))
        .filter(|(_, row)| filters.iter().all(|p| p.eval(row, &dt).unwrap_or(false)))
        .map(|(i, _)| i)
        .collect()
}

/// One drawn mark: the data values that identify it and the rows behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkInfo {
    pub key: Row,
    pub rows: Vec<usize>,
}

/// Fields that tell one mark of the layer from another.
pub fn mark_key_fields(layer: &Layer) -> Vec<String> {
    let aggregated = layer.operations().any(|op| matches!(op, Operation::Aggregate(_)));
    let mut out: Vec<String> = Vec::new();
    for (channel, enc) in &layer.encoding {
        let keep = if layer.mark.is_series() {
            !matches!(channel.as_str(), "x" | "y" | "text")
        } else if aggregated {
            !enc.operations.iter().any(|op| matches!(op, Operation::Aggregate(_)))
        } else {
            true
        };
        if keep && !out.contains(&enc.field) {
            out.push(enc.field.clone());
        }
    }
    out
}

/// Groups a layer's rows into marks, in order of first appearance.
pub fn layer_marks(spec: &VisSpec, layer: &Layer) -> Vec<MarkInfo> {
    let key_fields = mark_key_fields(layer);
    let mut marks: Vec<MarkInfo> = Vec::new();
    for i in layer_rows(spec, layer) {
        let row = &spec.data.rows[i];
        let key: Row = key_fields.iter().map(|f| (f.clone(), row.get(f).cloned().unwrap_or(Value::Null))).collect();
        match marks.iter_mut().find(|m| m.key == key) {
            Some(m) => m.rows.push(i),
            None => marks.push(MarkInfo { key, rows: vec![i] }),
        }
    }
    marks
}

/// True when every row of the mark agrees with `when`.
pub fn override_applies(spec: &VisSpec, mark: &MarkInfo, ov: &StyleOverride) -> bool {
    ov.when.iter().all(|(f, v)| match mark.key.get(f) {
        Some(k) => values_equal(k, v),
        None => !mark.rows.is_empty() && mark.rows.iter().all(|&r| spec.data.rows[r].get(f).is_some_and(|x| values_equal(x, v))),
    })
}

/// Scale behind one (channel, field) pair after defaults are applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScale {
    pub scale_type: ScaleType,
    pub domain: Vec<Value>,
}

impl ResolvedScale {
    pub fn is_continuous(&self) -> bool {
        matches!(self.scale_type, ScaleType::Linear)
    }

    /// Whether a value lies inside the domain.
    pub fn contains(&self, v: &Value) -> bool {
        match self.scale_type {
            ScaleType::Linear => match (self.domain.first(), self.domain.last()) {
                (Some(lo), Some(hi)) => {
                    let lo_ok = compare(v, lo).is_some_and(|o| o.is_ge());
                    let hi_ok = compare(v, hi).is_some_and(|o| o.is_le());
                    lo_ok && hi_ok
                }
                _ => false,
            },
            ScaleType::Time => match (self.domain.first(), self.domain.last()) {
                (Some(lo), Some(hi)) if self.domain.len() == 2 => {
                    compare(v, lo).is_some_and(|o| o.is_ge()) && compare(v, hi).is_some_and(|o| o.is_le())
                }
                _ => self.domain.iter().any(|d| values_equal(d, v)),
            },
            _ => self.domain.iter().any(|d| values_equal(d, v)),
        }
    }
}

pub fn default_scale_type(channel: &str, datatype: Datatype) -> ScaleType {
    match datatype {
        Datatype::Quantitative => ScaleType::Linear,
        Datatype::Temporal => ScaleType::Time,
        _ if matches!(channel, "x" | "y") => ScaleType::Band,
        _ => ScaleType::Ordinal,
    }
}

/// Distinct non-null values of a field over the given rows, in row order.
pub fn distinct_values<'a>(rows: impl Iterator<Item = &'a Row>, field: &str) -> Vec<Value> {
    let mut out: Vec<Value> = Vec::new();
    for row in rows {
        if let Some(v) = row.get(field) {
            if !v.is_null() && !out.iter().any(|o| values_equal(o, v)) {
                out.push(v.clone());
            }
        }
    }
    out
}

impl VisSpec {
    /// Resolves the scale of `field` on `channel` from the first layer that
    /// encodes it. Trellis channels (`row`, `column`) resolve to the distinct
    /// field values.
    pub fn resolved_scale(&self, channel: &str, field: &str) -> Option<ResolvedScale> {
        let datatype = self.data.datatype(field)?;
        if matches!(channel, "row" | "column") {
            return Some(ResolvedScale { scale_type: ScaleType::Band, domain: distinct_values(self.data.rows.iter(), field) });
        }
        let enc = self.layers.iter().filter_map(|l| l.encoding.get(channel)).find(|e| e.field == field)?;
        let scale_type = enc.scale.scale_type.unwrap_or_else(|| default_scale_type(channel, datatype));
        let domain = match &enc.scale.domain {
            Some(d) => d.clone(),
            None => self.derived_domain(field, scale_type),
        };
        Some(ResolvedScale { scale_type, domain })
    }

    fn derived_domain(&self, field: &str, scale_type: ScaleType) -> Vec<Value> {
        let values = distinct_values(self.data.rows.iter(), field);
        match scale_type {
            ScaleType::Linear => {
                let nums: Vec<f64> = values.iter().filter_map(crate::value::as_number).collect();
                if nums.is_empty() {
                    return Vec::new();
                }
                let lo = nums.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = nums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                vec![number(lo), number(hi)]
            }
            ScaleType::Time => {
                let mut v = values;
                v.sort_by(|a, b| compare(a, b).unwrap_or(std::cmp::Ordering::Equal));
                v
            }
            _ => values,
        }
    }

    pub fn axis_scale(&self, axis: &AxisDef) -> Option<ResolvedScale> {
        self.resolved_scale(axis.channel(), &axis.field)
    }

    /// Tick values of an axis: the explicit list, or values derived from its scale.
    pub fn axis_ticks(&self, axis: &AxisDef) -> Vec<Value> {
        if let Some(v) = &axis.values {
            return v.clone();
        }
        match self.axis_scale(axis) {
            Some(s) => ticks_for(&s),
            None => distinct_values(self.data.rows.iter(), &axis.field),
        }
    }

    pub fn legend_values(&self, legend: &LegendDef) -> Vec<Value> {
        if let Some(v) = &legend.values {
            return v.clone();
        }
        match self.resolved_scale(&legend.channel, &legend.field) {
            Some(s) => ticks_for(&s),
            None => distinct_values(self.data.rows.iter(), &legend.field),
        }
    }
}

fn ticks_for(scale: &ResolvedScale) -> Vec<Value> {
    match scale.scale_type {
        ScaleType::Linear => {
            match (scale.domain.first().and_then(crate::value::as_number), scale.domain.last().and_then(crate::value::as_number)) {
                (Some(lo), Some(hi)) => nice_ticks(lo, hi).into_iter().map(number).collect(),
                _ => Vec::new(),
            }
        }
        _ => scale.domain.clone(),
    }
}

/// Round tick values covering `[lo, hi]` with steps of 1, 2 or 5 times a
/// power of ten, aiming for about five ticks.
pub fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let span = hi - lo;
    if span == 0.0 {
        return vec![lo];
    }
    let raw = span / 5.0;
    let power = 10f64.powf(raw.log10().floor());
    let err = raw / power;
    let mult = if err >= 50f64.sqrt() {
        10.0
    } else if err >= 10f64.sqrt() {
        5.0
    } else if err >= 2f64.sqrt() {
        2.0
    } else {
        1.0
    };
    let step = mult * power;
    let start = (lo / step).ceil() as i64;
    let stop = (hi / step + 1e-9).floor() as i64;
    (start..=stop).map(|i| round12(i as f64 * step)).collect()
}

fn round12(x: f64) -> f64 {
    let s = format!("{x:.12}");
    s.parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nice_ticks_cover_domain() {
        assert_eq!(nice_ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(nice_ticks(3.0, 5.5), vec![3.0, 3.5, 4.0, 4.5, 5.0, 5.5]);
        assert_eq!(nice_ticks(0.0, 300.0), vec![0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0]);
        assert_eq!(nice_ticks(7.0, 7.0), vec![7.0]);
    }
}
