//! The visualization dialect that rules transform: data, layers, guides,
//! text and annotations.
//!
//! A [`VisSpec`] is both the compiler's input and its output. Documents are
//! JSON (`.vis.json`); [`parse_vis_spec`] validates them and
//! [`canonical_serialize`] writes the byte-stable form used by golden tests.

mod elements;
mod scale;
mod serialize;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::predicate::DataPredicate;

pub(crate) use elements::axis_role;
pub use elements::{
    annotation_rows, effective_style, enumerate_elements, guide_label_segments, guide_label_style, AxisKey, AxisPart, Element, ElementRef,
    LegendKey, LegendPart,
};
pub use scale::{
    axis_channel, default_scale_type, distinct_values, layer_marks, layer_rows, mark_key_fields, nice_ticks, override_applies, MarkInfo,
    ResolvedScale,
};
pub use serialize::{canonical_serialize, to_canonical_value};
pub use validate::{encodes, validation_errors};

/// Free-form style attributes (`color`, `fontSize`, `strokeWidth`, ...).
pub type Style = BTreeMap<String, Value>;

/// One data record, keyed by field name.
pub type Row = BTreeMap<String, Value>;

/// Channels a layer may encode.
pub const CHANNELS: &[&str] = &["x", "y", "color", "size", "arc", "opacity", "shape", "detail", "text"];

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum VisError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("reference error: field \"{field}\" is not in the data schema ({context})")]
    Reference { field: String, context: String },
    #[error("invalid spec: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Datatype {
    Nominal,
    Ordinal,
    Quantitative,
    Temporal,
}

impl Datatype {
    pub fn is_ordered(self) -> bool {
        !matches!(self, Datatype::Nominal)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nominal" => Some(Self::Nominal),
            "ordinal" => Some(Self::Ordinal),
            "quantitative" => Some(Self::Quantitative),
            "temporal" => Some(Self::Temporal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDef {
    pub field: String,
    #[serde(rename = "type")]
    pub datatype: Datatype,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataTable {
    pub schema: Vec<FieldDef>,
    #[serde(default)]
    pub rows: Vec<Row>,
}

impl DataTable {
    pub fn datatype(&self, field: &str) -> Option<Datatype> {
        self.schema.iter().find(|f| f.field == field).map(|f| f.datatype)
    }

    pub fn has_field(&self, field: &str) -> bool {
        self.datatype(field).is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkType {
    Point,
    Circle,
    Rect,
    Bar,
    Line,
    Area,
    Text,
}

impl MarkType {
    pub fn parse(s: &str) -> Option<Self> {
        serde_json::from_value(Value::String(s.to_string())).ok()
    }

    pub fn name(self) -> &'static str {
        match self {
            MarkType::Point => "point",
            MarkType::Circle => "circle",
            MarkType::Rect => "rect",
            MarkType::Bar => "bar",
            MarkType::Line => "line",
            MarkType::Area => "area",
            MarkType::Text => "text",
        }
    }

    /// Line and area marks draw one shape per series rather than per row.
    pub fn is_series(self) -> bool {
        matches!(self, MarkType::Line | MarkType::Area)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleType {
    Linear,
    Band,
    Ordinal,
    Time,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleDef {
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub scale_type: Option<ScaleType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Vec<Value>>,
}

impl ScaleDef {
    fn is_empty(&self) -> bool {
        self.scale_type.is_none() && self.domain.is_none() && self.range.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateOp {
    Sum,
    Mean,
    Count,
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Operation {
    Filter(DataPredicate),
    Aggregate(AggregateOp),
    Bin(Value),
}

impl Operation {
    pub fn kind(&self) -> &'static str {
        match self {
            Operation::Filter(_) => "filter",
            Operation::Aggregate(_) => "aggregate",
            Operation::Bin(_) => "bin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingDef {
    pub field: String,
    #[serde(default, skip_serializing_if = "ScaleDef::is_empty")]
    pub scale: ScaleDef,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub operations: Vec<Operation>,
}

/// Style applied to the marks (or labels) whose data matches `when`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StyleOverride {
    pub when: Row,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub style: Style,
    #[serde(default, skip_serializing_if = "is_false")]
    pub hidden: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkLabelDef {
    pub field: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub style: Style,
    #[serde(default, skip_serializing_if = "Placement::is_auto")]
    pub position: Placement,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<StyleOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub id: String,
    pub mark: MarkType,
    #[serde(default)]
    pub encoding: BTreeMap<String, EncodingDef>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub style: Style,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<StyleOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<MarkLabelDef>,
}

impl Layer {
    /// Fields encoded by this layer, in channel order, without duplicates.
    pub fn fields(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for enc in self.encoding.values() {
            if !out.contains(&enc.field.as_str()) {
                out.push(&enc.field);
            }
        }
        out
    }

    pub fn operations(&self) -> impl Iterator<Item = &Operation> {
        self.encoding.values().flat_map(|e| e.operations.iter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
    Row,
    Column,
}

impl Orientation {
    pub fn name(self) -> &'static str {
        match self {
            Orientation::Horizontal => "horizontal",
            Orientation::Vertical => "vertical",
            Orientation::Row => "row",
            Orientation::Column => "column",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub style: Style,
}

/// Per-value label customization on an axis or legend: a style override and
/// optionally custom text segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuideLabel {
    pub value: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<Segment>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub style: Style,
    #[serde(default, skip_serializing_if = "is_false")]
    pub hidden: bool,
}

impl GuideLabel {
    pub fn new(value: Value) -> Self {
        GuideLabel { value, segments: None, style: Style::new(), hidden: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AxisDef {
    pub orient: Orientation,
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<GuideLabel>,
    /// Whether tick labels are shown.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub label: bool,
    #[serde(default = "default_label_style", skip_serializing_if = "is_default_label_style")]
    pub label_style: Style,
    #[serde(default, skip_serializing_if = "Placement::is_auto")]
    pub label_position: Placement,
    #[serde(default, skip_serializing_if = "is_false")]
    pub grid: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub grid_style: Style,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub domain: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub domain_style: Style,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub ticks: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tick_style: Style,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub title_style: Style,
}

impl AxisDef {
    pub fn new(orient: Orientation, field: impl Into<String>) -> Self {
        AxisDef {
            orient,
            field: field.into(),
            side: None,
            values: None,
            labels: Vec::new(),
            label: true,
            label_style: default_label_style(),
            label_position: Placement::default(),
            grid: false,
            grid_style: Style::new(),
            domain: true,
            domain_style: Style::new(),
            ticks: true,
            tick_style: Style::new(),
            title: None,
            title_style: Style::new(),
        }
    }

    pub fn key(&self) -> AxisKey {
        AxisKey { orient: self.orient, field: self.field.clone(), side: self.side.clone() }
    }

    /// Channel this axis is a guide for.
    pub fn channel(&self) -> &'static str {
        axis_channel(self.orient)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LegendDef {
    pub channel: String,
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<GuideLabel>,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub label: bool,
    #[serde(default = "default_label_style", skip_serializing_if = "is_default_label_style")]
    pub label_style: Style,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub symbols: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub symbol_style: Style,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub title_style: Style,
    #[serde(default, skip_serializing_if = "Placement::is_auto")]
    pub position: Placement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextRole {
    Title,
    Subtitle,
    Caption,
}

impl TextRole {
    pub fn name(self) -> &'static str {
        match self {
            TextRole::Title => "title",
            TextRole::Subtitle => "subtitle",
            TextRole::Caption => "caption",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "title" => Some(Self::Title),
            "subtitle" => Some(Self::Subtitle),
            "caption" => Some(Self::Caption),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextBlock {
    pub role: TextRole,
    pub index: usize,
    pub segments: Vec<Segment>,
    #[serde(default, skip_serializing_if = "Placement::is_auto")]
    pub position: Placement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlacementMode {
    #[default]
    Auto,
    Absolute,
    Relative,
    External,
    Internal,
    Fixed,
    Serial,
    Parallel,
}

impl PlacementMode {
    pub fn name(self) -> &'static str {
        match self {
            PlacementMode::Auto => "auto",
            PlacementMode::Absolute => "absolute",
            PlacementMode::Relative => "relative",
            PlacementMode::External => "external",
            PlacementMode::Internal => "internal",
            PlacementMode::Fixed => "fixed",
            PlacementMode::Serial => "serial",
            PlacementMode::Parallel => "parallel",
        }
    }
}

/// Where a text element sits. `x`/`y` are the center of the element's box;
/// `dx`/`dy` shift it from its anchor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    #[serde(default)]
    pub mode: PlacementMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dy: Option<f64>,
}

impl Placement {
    pub fn is_auto(&self) -> bool {
        *self == Placement::default()
    }

    pub fn at(mode: PlacementMode, x: f64, y: f64) -> Self {
        Placement { mode, x: Some(x), y: Some(y), dx: None, dy: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Anchor {
    /// Attached to the marks that encode `items` of `field` (optionally in one layer).
    OnMark {
        layer: Option<String>,
        field: String,
        items: Vec<Value>,
    },
    /// Attached to the axis positions of `items` of `field`.
    OnAxis {
        field: String,
        items: Vec<Value>,
    },
    Independent,
}

impl Anchor {
    pub fn kind(&self) -> &'static str {
        match self {
            Anchor::OnMark { .. } => "on-mark",
            Anchor::OnAxis { .. } => "on-axis",
            Anchor::Independent => "independent",
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            Anchor::OnMark { field, .. } | Anchor::OnAxis { field, .. } => Some(field),
            Anchor::Independent => None,
        }
    }

    pub fn items(&self) -> &[Value] {
        match self {
            Anchor::OnMark { items, .. } | Anchor::OnAxis { items, .. } => items,
            Anchor::Independent => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AnnotationRepr", into = "AnnotationRepr")]
pub struct Annotation {
    pub id: String,
    pub anchor: Anchor,
    pub segments: Vec<Segment>,
    pub placement: Placement,
    pub numbered: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationRepr {
    id: String,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    items: Option<Vec<Value>>,
    segments: Vec<Segment>,
    #[serde(default, skip_serializing_if = "Placement::is_auto")]
    placement: Placement,
    #[serde(default, skip_serializing_if = "is_false")]
    numbered: bool,
}

impl TryFrom<AnnotationRepr> for Annotation {
    type Error = String;

    fn try_from(r: AnnotationRepr) -> Result<Self, Self::Error> {
        let anchor = match r.kind.as_str() {
            "on-mark" | "on-axis" => {
                let field = r.field.ok_or_else(|| format!("annotation \"{}\": {} anchor needs a field", r.id, r.kind))?;
                let items = r.items.unwrap_or_default();
                if r.kind == "on-mark" {
                    Anchor::OnMark { layer: r.layer, field, items }
                } else {
                    if r.layer.is_some() {
                        return Err(format!("annotation \"{}\": on-axis anchor has no layer", r.id));
                    }
                    Anchor::OnAxis { field, items }
                }
            }
            "independent" => {
                if r.field.is_some() || r.items.is_some() || r.layer.is_some() {
                    return Err(format!("annotation \"{}\": independent annotations take no field, items or layer", r.id));
                }
                Anchor::Independent
            }
            other => return Err(format!("annotation \"{}\": unknown anchor type \"{other}\"", r.id)),
        };
        Ok(Annotation { id: r.id, anchor, segments: r.segments, placement: r.placement, numbered: r.numbered })
    }
}

impl From<Annotation> for AnnotationRepr {
    fn from(a: Annotation) -> Self {
        let kind = a.anchor.kind();
        let (layer, field, items) = match a.anchor {
            Anchor::OnMark { layer, field, items } => (layer, Some(field), Some(items)),
            Anchor::OnAxis { field, items } => (None, Some(field), Some(items)),
            Anchor::Independent => (None, None, None),
        };
        AnnotationRepr {
            id: a.id,
            kind: kind.to_string(),
            layer,
            field,
            items,
            segments: a.segments,
            placement: a.placement,
            numbered: a.numbered,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    Zoom,
    Context,
    Tooltip,
    Filter,
}

impl InteractionKind {
    pub fn name(self) -> &'static str {
        match self {
            InteractionKind::Zoom => "zoom",
            InteractionKind::Context => "context",
            InteractionKind::Tooltip => "tooltip",
            InteractionKind::Filter => "filter",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionDef {
    pub kind: InteractionKind,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct VisSpec {
    pub width: f64,
    pub height: f64,
    pub data: DataTable,
    #[serde(default)]
    pub layers: Vec<Layer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_field: Option<String>,
    /// Always serialized: an absent key means "derive from encodings".
    #[serde(default)]
    pub axes: Vec<AxisDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub legends: Vec<LegendDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub texts: Vec<TextBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<Annotation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interactions: Vec<InteractionDef>,
}

impl VisSpec {
    pub fn layer(&self, id: &str) -> Option<&Layer> {
        self.layers.iter().find(|l| l.id == id)
    }

    pub fn layer_mut(&mut self, id: &str) -> Option<&mut Layer> {
        self.layers.iter_mut().find(|l| l.id == id)
    }

    pub fn axis_index(&self, key: &AxisKey) -> Option<usize> {
        self.axes.iter().position(|a| a.key() == *key)
    }

    /// Texts of one role ordered by index.
    pub fn texts_of(&self, role: TextRole) -> Vec<&TextBlock> {
        let mut out: Vec<&TextBlock> = self.texts.iter().filter(|t| t.role == role).collect();
        out.sort_by_key(|t| t.index);
        out
    }

    /// Renumbers text blocks so indices within each role are contiguous from 0,
    /// keeping their relative order.
    pub fn reindex_texts(&mut self) {
        for role in [TextRole::Title, TextRole::Subtitle, TextRole::Caption] {
            let mut idx: Vec<usize> = (0..self.texts.len()).filter(|&i| self.texts[i].role == role).collect();
            idx.sort_by_key(|&i| (self.texts[i].index, i));
            for (n, i) in idx.into_iter().enumerate() {
                self.texts[i].index = n;
            }
        }
    }

    /// Axes implied by the x/y encodings of every layer, one per (channel, field).
    pub fn derived_axes(&self) -> Vec<AxisDef> {
        let mut out: Vec<AxisDef> = Vec::new();
        for (channel, orient) in [("x", Orientation::Horizontal), ("y", Orientation::Vertical)] {
            for layer in &self.layers {
                if let Some(enc) = layer.encoding.get(channel) {
                    if !out.iter().any(|a| a.orient == orient && a.field == enc.field) {
                        out.push(AxisDef::new(orient, enc.field.clone()));
                    }
                }
            }
        }
        out
    }
}

/// Label style used when nothing else in the chart suggests one.
pub fn default_label_style() -> Style {
    let mut s = Style::new();
    s.insert("fontSize".into(), Value::from(11));
    s.insert("color".into(), Value::from("#333333"));
    s
}

/// Parses and validates a `.vis.json` document.
pub fn parse_vis_spec(text: &str) -> Result<VisSpec, VisError> {
    let spec = parse_unchecked(text)?;
    match validation_errors(&spec).into_iter().next() {
        Some(err) => Err(err),
        None => Ok(spec),
    }
}

/// Parses a document without running the semantic checks, deriving axes when
/// the `axes` key is absent.
pub fn parse_unchecked(text: &str) -> Result<VisSpec, VisError> {
    let value: Value = serde_json::from_str(text).map_err(|e| VisError::Syntax(e.to_string()))?;
    from_value(value)
}

pub fn from_value(value: Value) -> Result<VisSpec, VisError> {
    let has_axes = value.as_object().is_some_and(|m| m.contains_key("axes"));
    let mut spec: VisSpec = serde_json::from_value(value).map_err(|e| VisError::Schema(e.to_string()))?;
    if !has_axes {
        spec.axes = spec.derived_axes();
    }
    Ok(spec)
}

fn is_default_label_style(s: &Style) -> bool {
    *s == default_label_style()
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_true(b: &bool) -> bool {
    *b
}

fn yes() -> bool {
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "width": 200, "height": 120,
        "data": {"schema": [{"field": "cat", "type": "nominal"}, {"field": "n", "type": "quantitative"}],
                 "rows": [{"cat": "a", "n": 1}, {"cat": "b", "n": 3}]},
        "layers": [{"id": "bars", "mark": "bar",
                    "encoding": {"x": {"field": "cat"}, "y": {"field": "n"}}}]
    }"#;

    #[test]
    fn minimal_bar_spec_derives_two_axes() {
        let spec = parse_vis_spec(MINIMAL).unwrap();
        assert_eq!(spec.layers.len(), 1);
        assert_eq!(spec.axes.len(), 2);
        assert_eq!(spec.axes[0].orient, Orientation::Horizontal);
        assert_eq!(spec.axes[0].field, "cat");
        assert_eq!(spec.axes[1].orient, Orientation::Vertical);
    }

    #[test]
    fn explicit_empty_axes_are_kept() {
        let text = MINIMAL.replace(r#""layers""#, r#""axes": [], "layers""#);
        assert!(parse_vis_spec(&text).unwrap().axes.is_empty());
    }

    #[test]
    fn on_mark_annotation_parses() {
        let text = r#"{
            "width": 300, "height": 200,
            "data": {"schema": [{"field": "year", "type": "quantitative"},
                                {"field": "forecasted_year", "type": "quantitative"},
                                {"field": "growth", "type": "quantitative"}],
                     "rows": [{"year": 2011, "forecasted_year": 2010, "growth": 4}]},
            "layers": [{"id": "f", "mark": "line", "encoding": {"x": {"field": "year"}, "y": {"field": "growth"}, "detail": {"field": "forecasted_year"}}}],
            "annotations": [{"id": "a", "type": "on-mark", "field": "forecasted_year", "items": [2010],
                             "segments": [{"text": "Forecast"}]}]
        }"#;
        let spec = parse_vis_spec(text).unwrap();
        match &spec.annotations[0].anchor {
            Anchor::OnMark { field, items, layer } => {
                assert_eq!(field, "forecasted_year");
                assert_eq!(items, &vec![Value::from(2010)]);
                assert!(layer.is_none());
            }
            other => panic!("unexpected anchor {other:?}"),
        }
    }

    #[test]
    fn unknown_field_is_a_reference_error() {
        let text = MINIMAL.replace(r#""y": {"field": "n"}"#, r#""y": {"field": "prize"}"#);
        match parse_vis_spec(&text) {
            Err(VisError::Reference { field, .. }) => assert_eq!(field, "prize"),
            other => panic!("expected reference error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_top_level_key_is_rejected() {
        let text = MINIMAL.replacen('{', r#"{"colour": "red","#, 1);
        assert!(matches!(parse_vis_spec(&text), Err(VisError::Schema(_))));
        assert!(matches!(parse_vis_spec("{ nope"), Err(VisError::Syntax(_))));
    }
}
