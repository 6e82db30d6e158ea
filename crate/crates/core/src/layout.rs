//! Approximate chart geometry used to place text where the rules leave it to
//! the compiler: below the chart, in the largest empty part of the plot, or
//! next to a mark.
//!
//! Text is measured as `chars * 0.6 * fontSize` wide and
//! `lines * 1.2 * fontSize` tall. Empty space is searched on an occupancy grid
//! whose cells are `resolution` pixels wide (5 by default).

use std::collections::BTreeMap;

use serde_json::Value;

use crate::value::{as_number, compare, display, values_equal};
use crate::vis::{
    annotation_rows, layer_marks, Anchor, AxisDef, Layer, MarkType, Operation, Orientation, Placement, PlacementMode, ResolvedScale,
    ScaleType, Segment, Style, TextRole, VisSpec,
};

pub const PADDING: f64 = 10.0;
pub const DEFAULT_RESOLUTION: f64 = 5.0;
pub const PARALLEL_GAP: f64 = 4.0;
const AXIS_GAP: f64 = 8.0;
const DEFAULT_FONT_SIZE: f64 = 11.0;
const DEFAULT_POINT_SIZE: f64 = 30.0;
const SIZE_RANGE: (f64, f64) = (20.0, 400.0);

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("cannot resolve the {channel} scale of field \"{field}\"")]
    UnresolvableScale { channel: String, field: String },
    #[error("the plot area is empty ({width}x{height})")]
    DegeneratePlot { width: f64, height: f64 },
    #[error("no empty space is left in the plot")]
    NoEmptySpace,
    #[error("grid resolution must be positive, got {0}")]
    BadResolution(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Rect { x, y, w, h }
    }

    /// Rectangle spanning two corners in any order.
    pub fn spanning(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x: x0.min(x1), y: y0.min(y1), w: (x1 - x0).abs(), h: (y1 - y0).abs() }
    }

    pub fn centered(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Rect { x: cx - w / 2.0, y: cy - h / 2.0, w, h }
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// True when the interiors overlap.
    pub fn intersects(&self, o: &Rect) -> bool {
        self.x < o.right() && o.x < self.right() && self.y < o.bottom() && o.y < self.bottom()
    }

    pub fn union(&self, o: &Rect) -> Rect {
        let x = self.x.min(o.x);
        let y = self.y.min(o.y);
        Rect { x, y, w: self.right().max(o.right()) - x, h: self.bottom().max(o.bottom()) - y }
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Rect {
        Rect { x: self.x + dx, y: self.y + dy, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutBox {
    /// Element path of the element that produced the box.
    pub path: String,
    pub rect: Rect,
    /// Whether the box blocks empty-space search.
    pub obstacle: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutFrame {
    pub width: f64,
    pub height: f64,
    pub plot: Rect,
    pub boxes: Vec<LayoutBox>,
    pub resolution: f64,
}

impl LayoutFrame {
    /// Union of the boxes of the element at `path` and its sub-elements.
    pub fn box_of(&self, path: &str) -> Option<Rect> {
        self.boxes
            .iter()
            .filter(|b| b.path == path || b.path.starts_with(&format!("{path}.")) || b.path.starts_with(&format!("{path}#")))
            .map(|b| b.rect)
            .reduce(|a, b| a.union(&b))
    }
}

/// Width and height of a block of text lines.
pub fn text_size(lines: &[String], font_size: f64) -> (f64, f64) {
    let chars = lines.iter().map(|l| l.chars().count()).max().unwrap_or(0) as f64;
    (chars * 0.6 * font_size, lines.len().max(1) as f64 * 1.2 * font_size)
}

fn font_size(style: &Style, default: f64) -> f64 {
    style.get("fontSize").and_then(as_number).unwrap_or(default)
}

/// Size of a list of segments, each segment one line.
pub fn segments_size(segments: &[Segment], base: &Style, default_font: f64) -> (f64, f64) {
    let mut w: f64 = 0.0;
    let mut h: f64 = 0.0;
    for seg in segments {
        let fs = seg.style.get("fontSize").and_then(as_number).unwrap_or_else(|| font_size(base, default_font));
        let (sw, sh) = text_size(std::slice::from_ref(&seg.text), fs);
        w = w.max(sw);
        h += sh;
    }
    if segments.is_empty() {
        h = 1.2 * font_size(base, default_font);
    }
    (w, h)
}

pub fn default_text_font(role: TextRole) -> f64 {
    match role {
        TextRole::Title => 16.0,
        TextRole::Subtitle => 13.0,
        TextRole::Caption => 11.0,
    }
}

/// Placement kinds the compiler decides by itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementKind {
    ExternalizedAnnotation,
    MarkLabel,
    NonDataAnnotation,
}

#[derive(Debug, Clone, Copy)]
enum Mapper {
    Linear { d0: f64, d1: f64, r0: f64, r1: f64 },
    Band { n: usize, r0: f64, r1: f64 },
}

struct ChannelScale {
    mapper: Mapper,
    domain: Vec<Value>,
}

impl ChannelScale {
    fn position(&self, v: &Value) -> Option<f64> {
        match self.mapper {
            Mapper::Linear { d0, d1, r0, r1 } => {
                let x = as_number(v)?;
                if d1 == d0 {
                    return Some((r0 + r1) / 2.0);
                }
                Some(r0 + (x - d0) / (d1 - d0) * (r1 - r0))
            }
            Mapper::Band { n, r0, r1 } => {
                let i = self.domain.iter().position(|d| values_equal(d, v))?;
                let bw = (r1 - r0) / n as f64;
                Some(r0 + bw * (i as f64 + 0.5))
            }
        }
    }

    fn band_width(&self) -> Option<f64> {
        match self.mapper {
            Mapper::Band { n, r0, r1 } => Some(((r1 - r0) / n as f64).abs()),
            Mapper::Linear { .. } => None,
        }
    }

    /// Pixel position of the baseline a bar or area grows from.
    fn baseline(&self) -> f64 {
        match self.mapper {
            Mapper::Linear { d0, d1, r0, r1 } => {
                let zero = 0.0f64.clamp(d0.min(d1), d0.max(d1));
                if d1 == d0 {
                    r0
                } else {
                    r0 + (zero - d0) / (d1 - d0) * (r1 - r0)
                }
            }
            Mapper::Band { r0, .. } => r0,
        }
    }
}

fn channel_scale(spec: &VisSpec, channel: &str, field: &str, r0: f64, r1: f64) -> Result<ChannelScale, LayoutError> {
    let err = || LayoutError::UnresolvableScale { channel: channel.to_string(), field: field.to_string() };
    let scale: ResolvedScale = spec.resolved_scale(channel, field).ok_or_else(err)?;
    match scale.scale_type {
        ScaleType::Linear => {
            if scale.domain.is_empty() {
                return Ok(ChannelScale { mapper: Mapper::Linear { d0: 0.0, d1: 0.0, r0, r1 }, domain: Vec::new() });
            }
            let d0 = scale.domain.first().and_then(as_number).ok_or_else(err)?;
            let d1 = scale.domain.last().and_then(as_number).ok_or_else(err)?;
            Ok(ChannelScale { mapper: Mapper::Linear { d0, d1, r0, r1 }, domain: scale.domain })
        }
        ScaleType::Time => {
            let mut values: Vec<Value> =
                crate::vis::distinct_values(spec.data.rows.iter(), field).into_iter().filter(|v| scale.contains(v)).collect();
            values.sort_by(|a, b| compare(a, b).unwrap_or(std::cmp::Ordering::Equal));
            let n = values.len().max(1);
            Ok(ChannelScale { mapper: Mapper::Band { n, r0, r1 }, domain: values })
        }
        ScaleType::Band | ScaleType::Ordinal => {
            let n = scale.domain.len().max(1);
            Ok(ChannelScale { mapper: Mapper::Band { n, r0, r1 }, domain: scale.domain })
        }
    }
}

/// Value of one channel for a mark, aggregating when the encoding asks for it.
fn mark_value(spec: &VisSpec, layer: &Layer, channel: &str, rows: &[usize]) -> Option<Value> {
    let enc = layer.encoding.get(channel)?;
    let values: Vec<&Value> = rows.iter().filter_map(|&r| spec.data.rows[r].get(&enc.field)).filter(|v| !v.is_null()).collect();
    let agg = enc.operations.iter().find_map(|op| match op {
        Operation::Aggregate(a) => Some(*a),
        _ => None,
    });
    match agg {
        None => values.first().map(|v| (*v).clone()),
        Some(a) => {
            let nums: Vec<f64> = values.iter().filter_map(|v| as_number(v)).collect();
            let out = match a {
                crate::vis::AggregateOp::Count => values.len() as f64,
                crate::vis::AggregateOp::Sum => nums.iter().sum(),
                crate::vis::AggregateOp::Mean if !nums.is_empty() => nums.iter().sum::<f64>() / nums.len() as f64,
                crate::vis::AggregateOp::Min => nums.iter().cloned().fold(f64::INFINITY, f64::min),
                crate::vis::AggregateOp::Max => nums.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                _ => return None,
            };
            out.is_finite().then(|| crate::value::number(out))
        }
    }
}

struct Facet {
    rect: Rect,
    row_value: Option<Value>,
    column_value: Option<Value>,
}

fn facets(spec: &VisSpec, plot: Rect) -> Vec<Facet> {
    let rows = spec.row_field.as_ref().map(|f| crate::vis::distinct_values(spec.data.rows.iter(), f)).filter(|v| !v.is_empty());
    let cols = spec.column_field.as_ref().map(|f| crate::vis::distinct_values(spec.data.rows.iter(), f)).filter(|v| !v.is_empty());
    let nr = rows.as_ref().map_or(1, Vec::len);
    let nc = cols.as_ref().map_or(1, Vec::len);
    let fw = plot.w / nc as f64;
    let fh = plot.h / nr as f64;
    let mut out = Vec::new();
    for i in 0..nr {
        for j in 0..nc {
            out.push(Facet {
                rect: Rect::new(plot.x + j as f64 * fw, plot.y + i as f64 * fh, fw, fh),
                row_value: rows.as_ref().map(|r| r[i].clone()),
                column_value: cols.as_ref().map(|c| c[j].clone()),
            });
        }
    }
    out
}

fn in_facet(spec: &VisSpec, facet: &Facet, row: usize) -> bool {
    let r = &spec.data.rows[row];
    let ok = |field: &Option<String>, v: &Option<Value>| match (field, v) {
        (Some(f), Some(v)) => r.get(f).is_some_and(|x| values_equal(x, v)),
        _ => true,
    };
    ok(&spec.row_field, &facet.row_value) && ok(&spec.column_field, &facet.column_value)
}

fn axis_label_extent(spec: &VisSpec, axis: &AxisDef) -> (f64, f64) {
    if !axis.label {
        return (0.0, 0.0);
    }
    let fs = font_size(&axis.label_style, DEFAULT_FONT_SIZE);
    let mut w: f64 = 0.0;
    let mut h: f64 = 0.0;
    for v in spec.axis_ticks(axis) {
        let segs = crate::vis::guide_label_segments(&axis.labels, &v);
        let (sw, sh) = segments_size(&segs, &axis.label_style, fs);
        w = w.max(sw);
        h = h.max(sh);
    }
    (w, h)
}

fn is_flow(p: &Placement) -> bool {
    matches!(p.mode, PlacementMode::Auto | PlacementMode::Relative | PlacementMode::Fixed)
}

/// Resolves geometry at the default grid resolution.
pub fn resolve_layout(spec: &VisSpec) -> Result<LayoutFrame, LayoutError> {
    resolve_layout_with(spec, DEFAULT_RESOLUTION)
}

pub fn resolve_layout_with(spec: &VisSpec, resolution: f64) -> Result<LayoutFrame, LayoutError> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(LayoutError::BadResolution(resolution));
    }
    let mut boxes: Vec<LayoutBox> = Vec::new();
    let (w, h) = (spec.width, spec.height);

    // Space taken around the plot, side by side.
    let mut top = PADDING;
    let mut flow_texts: Vec<(String, Rect)> = Vec::new();
    for role in [TextRole::Title, TextRole::Subtitle] {
        for t in spec.texts_of(role) {
            if is_flow(&t.position) {
                let (tw, th) = segments_size(&t.segments, &Style::new(), default_text_font(role));
                let r = Rect::new(PADDING, top, tw, th).translate(t.position.dx.unwrap_or(0.0), t.position.dy.unwrap_or(0.0));
                flow_texts.push((format!("{}[{}]", role.name(), t.index), r));
                top += th + 4.0;
            }
        }
    }
    if spec.column_field.is_some() {
        top += 1.2 * DEFAULT_FONT_SIZE + 4.0;
    }
    let mut bottom = PADDING;
    let mut captions: Vec<(String, f64, f64, Placement)> = Vec::new();
    for t in spec.texts_of(TextRole::Caption) {
        if is_flow(&t.position) {
            let (tw, th) = segments_size(&t.segments, &Style::new(), default_text_font(TextRole::Caption));
            captions.push((format!("caption[{}]", t.index), tw, th, t.position));
            bottom += th + 4.0;
        }
    }
    let mut left = PADDING;
    let mut right = PADDING;
    if let Some(f) = &spec.row_field {
        let longest = crate::vis::distinct_values(spec.data.rows.iter(), f).iter().map(|v| display(v).chars().count()).max().unwrap_or(0);
        left += longest as f64 * 0.6 * DEFAULT_FONT_SIZE + 4.0;
    }
    let mut axis_extents = Vec::new();
    for axis in &spec.axes {
        let (lw, lh) = axis_label_extent(spec, axis);
        let title_h = if axis.title.is_some() { 1.2 * font_size(&axis.title_style, DEFAULT_FONT_SIZE) } else { 0.0 };
        let far = matches!(axis.side.as_deref(), Some("top" | "right"));
        match axis.orient {
            Orientation::Horizontal => {
                let extent = lh + AXIS_GAP + title_h;
                if far {
                    top += extent
                } else {
                    bottom += extent
                }
                axis_extents.push(extent);
            }
            Orientation::Vertical => {
                let extent = lw + AXIS_GAP + title_h;
                if far {
                    right += extent
                } else {
                    left += extent
                }
                axis_extents.push(extent);
            }
            _ => axis_extents.push(0.0),
        }
    }
    let mut legend_sizes = Vec::new();
    for legend in &spec.legends {
        let fs = font_size(&legend.label_style, DEFAULT_FONT_SIZE);
        let values = spec.legend_values(legend);
        let longest = values.iter().map(|v| display(v).chars().count()).max().unwrap_or(0) as f64;
        let title_len = legend.title.as_ref().map_or(0, |t| t.chars().count()) as f64;
        let lw = (longest * 0.6 * fs + 16.0).max(title_len * 0.6 * fs);
        let lh = values.len() as f64 * 1.2 * fs + if legend.title.is_some() { 1.2 * fs } else { 0.0 };
        legend_sizes.push((lw, lh));
        if is_flow(&legend.position) {
            right += lw + 6.0;
        }
    }

    let plot = Rect::new(left, top, w - left - right, h - top - bottom);
    if plot.w <= 0.0 || plot.h <= 0.0 {
        return Err(LayoutError::DegeneratePlot { width: plot.w, height: plot.h });
    }
    for (path, r) in flow_texts {
        boxes.push(LayoutBox { path, rect: r, obstacle: true });
    }
    let mut y = h - PADDING;
    for (path, tw, th, p) in captions.into_iter().rev() {
        y -= th;
        let r = Rect::new(PADDING, y, tw, th).translate(p.dx.unwrap_or(0.0), p.dy.unwrap_or(0.0));
        boxes.push(LayoutBox { path, rect: r, obstacle: true });
        y -= 4.0;
    }

    // Axis labels, ticks and titles sit outside the plot.
    let mut near = (plot.bottom(), plot.x);
    let mut far = (plot.y, plot.right());
    for (axis, extent) in spec.axes.iter().zip(&axis_extents) {
        let path = crate::vis::ElementRef::Axis(axis.key()).path();
        let is_far = matches!(axis.side.as_deref(), Some("top" | "right"));
        let rect = match (axis.orient, is_far) {
            (Orientation::Horizontal, false) => {
                let r = Rect::new(plot.x, near.0, plot.w, *extent);
                near.0 += extent;
                r
            }
            (Orientation::Horizontal, true) => {
                let r = Rect::new(plot.x, far.0 - extent, plot.w, *extent);
                far.0 -= extent;
                r
            }
            (Orientation::Vertical, false) => {
                let r = Rect::new(near.1 - extent, plot.y, *extent, plot.h);
                near.1 -= extent;
                r
            }
            (Orientation::Vertical, true) => {
                let r = Rect::new(far.1, plot.y, *extent, plot.h);
                far.1 += extent;
                r
            }
            _ => continue,
        };
        boxes.push(LayoutBox { path, rect, obstacle: true });
    }
    let mut ly = plot.y;
    for (legend, (lw, lh)) in spec.legends.iter().zip(&legend_sizes) {
        let path = format!("legend[{}:{}]", legend.channel, legend.field);
        let rect = match legend.position.mode {
            PlacementMode::Absolute | PlacementMode::Internal if legend.position.x.is_some() => {
                Rect::centered(legend.position.x.unwrap_or(0.0), legend.position.y.unwrap_or(0.0), *lw, *lh)
            }
            _ => {
                let r = Rect::new(far.1 + 6.0, ly, *lw, *lh);
                ly += lh + 8.0;
                r
            }
        };
        boxes.push(LayoutBox { path, rect, obstacle: true });
    }

    // Marks.
    let facet_list = facets(spec, plot);
    let mut mark_boxes: BTreeMap<String, Rect> = BTreeMap::new();
    let mut mark_types: BTreeMap<String, MarkType> = BTreeMap::new();
    for layer in &spec.layers {
        let marks = layer_marks(spec, layer);
        for facet in &facet_list {
            let xs = match layer.encoding.get("x") {
                Some(e) => Some(channel_scale(spec, "x", &e.field, facet.rect.x, facet.rect.right())?),
                None => None,
            };
            let ys = match layer.encoding.get("y") {
                Some(e) => Some(channel_scale(spec, "y", &e.field, facet.rect.bottom(), facet.rect.y)?),
                None => None,
            };
            for mark in &marks {
                let rows: Vec<usize> = mark.rows.iter().copied().filter(|&r| in_facet(spec, facet, r)).collect();
                if rows.is_empty() {
                    continue;
                }
                let mark_path = crate::vis::ElementRef::Mark { layer: layer.id.clone(), key: mark.key.clone() }.path();
                let rects = mark_rects(spec, layer, &rows, facet.rect, xs.as_ref(), ys.as_ref());
                for r in rects {
                    mark_boxes.entry(mark_path.clone()).and_modify(|u| *u = u.union(&r)).or_insert(r);
                    boxes.push(LayoutBox { path: mark_path.clone(), rect: r, obstacle: true });
                }
                mark_types.insert(mark_path, layer.mark);
            }
        }
    }

    // Mark labels.
    for layer in &spec.layers {
        let Some(label) = &layer.label else { continue };
        let fs = font_size(&label.style, DEFAULT_FONT_SIZE);
        for mark in layer_marks(spec, layer) {
            if label.overrides.iter().any(|o| o.hidden && crate::vis::override_applies(spec, &mark, o)) {
                continue;
            }
            let mark_path = crate::vis::ElementRef::Mark { layer: layer.id.clone(), key: mark.key.clone() }.path();
            let Some(anchor) = mark_boxes.get(&mark_path) else { continue };
            let value = mark.rows.first().and_then(|&r| spec.data.rows[r].get(&label.field)).cloned().unwrap_or(Value::Null);
            let (tw, th) = text_size(&[display(&value)], fs);
            let rect = label_rect(*anchor, layer.mark, &label.position, tw, th);
            boxes.push(LayoutBox { path: format!("{mark_path}.label"), rect, obstacle: true });
        }
    }

    // Titles and other texts placed explicitly.
    for t in &spec.texts {
        if matches!(t.position.mode, PlacementMode::Absolute | PlacementMode::Internal) {
            if let (Some(x), Some(y)) = (t.position.x, t.position.y) {
                let (tw, th) = segments_size(&t.segments, &Style::new(), default_text_font(t.role));
                boxes.push(LayoutBox {
                    path: format!("{}[{}]", t.role.name(), t.index),
                    rect: Rect::centered(x, y, tw, th),
                    obstacle: true,
                });
            }
        }
    }

    // Annotations.
    let mut external_y = h + PADDING;
    for ann in &spec.annotations {
        let (tw, th) = segments_size(&ann.segments, &Style::new(), DEFAULT_FONT_SIZE);
        let path = format!("annotation[{}]", ann.id);
        let p = &ann.placement;
        let rect = match p.mode {
            PlacementMode::External => {
                let r = Rect::new((w - tw) / 2.0, external_y, tw, th);
                external_y += th + 4.0;
                Some(r)
            }
            PlacementMode::Absolute | PlacementMode::Internal if p.x.is_some() && p.y.is_some() => {
                Some(Rect::centered(p.x.unwrap_or(0.0), p.y.unwrap_or(0.0), tw, th))
            }
            _ => match &ann.anchor {
                Anchor::OnMark { layer, .. } => {
                    let rows = annotation_rows(spec, &ann.anchor);
                    let anchor = anchored_box(spec, &mark_boxes, layer.as_deref(), &rows);
                    anchor.map(|a| {
                        let mt =
                            mark_types.iter().find(|(k, _)| a_contains(&mark_boxes, k, &a)).map(|(_, m)| *m).unwrap_or(MarkType::Point);
                        label_rect(a, mt, p, tw, th)
                    })
                }
                Anchor::OnAxis { field, items } => on_axis_box(spec, plot, field, items)
                    .map(|(cx, cy)| Rect::centered(cx, cy, tw, th).translate(p.dx.unwrap_or(0.0), p.dy.unwrap_or(0.0))),
                Anchor::Independent => None,
            },
        };
        if let Some(rect) = rect {
            boxes.push(LayoutBox { path, rect, obstacle: p.mode != PlacementMode::External });
        }
    }

    Ok(LayoutFrame { width: w, height: h, plot, boxes, resolution })
}

fn a_contains(mark_boxes: &BTreeMap<String, Rect>, key: &str, a: &Rect) -> bool {
    mark_boxes
        .get(key)
        .is_some_and(|r| r.x >= a.x - 1e-9 && r.right() <= a.right() + 1e-9 && r.y >= a.y - 1e-9 && r.bottom() <= a.bottom() + 1e-9)
}

/// Union of the boxes of the marks drawing any of `rows`.
fn anchored_box(spec: &VisSpec, mark_boxes: &BTreeMap<String, Rect>, layer: Option<&str>, rows: &[usize]) -> Option<Rect> {
    let mut out: Option<Rect> = None;
    for l in &spec.layers {
        if layer.is_some_and(|id| id != l.id) {
            continue;
        }
        for m in layer_marks(spec, l) {
            if m.rows.iter().any(|r| rows.contains(r)) {
                let path = crate::vis::ElementRef::Mark { layer: l.id.clone(), key: m.key.clone() }.path();
                if let Some(r) = mark_boxes.get(&path) {
                    out = Some(out.map_or(*r, |o| o.union(r)));
                }
            }
        }
        if out.is_some() && layer.is_none() {
            break;
        }
    }
    out
}

fn on_axis_box(spec: &VisSpec, plot: Rect, field: &str, items: &[Value]) -> Option<(f64, f64)> {
    let axis = spec.axes.iter().find(|a| a.field == field)?;
    let item = items.first()?;
    match axis.orient {
        Orientation::Horizontal => {
            let s = channel_scale(spec, "x", field, plot.x, plot.right()).ok()?;
            Some((s.position(item)?, plot.bottom() - 8.0))
        }
        Orientation::Vertical => {
            let s = channel_scale(spec, "y", field, plot.bottom(), plot.y).ok()?;
            Some((plot.x + 8.0, s.position(item)?))
        }
        _ => None,
    }
}

/// Box of a label attached to a mark box.
fn label_rect(anchor: Rect, mark: MarkType, position: &Placement, tw: f64, th: f64) -> Rect {
    let dx = position.dx.unwrap_or(0.0);
    let dy = position.dy.unwrap_or(0.0);
    let (cx, cy) = anchor.center();
    let rect = match position.mode {
        PlacementMode::Serial => Rect::new(cx - tw / 2.0, anchor.y - th, tw, th),
        PlacementMode::Parallel => Rect::new(anchor.right() + PARALLEL_GAP, cy - th / 2.0, tw, th),
        PlacementMode::Absolute | PlacementMode::Internal if position.x.is_some() && position.y.is_some() => {
            return Rect::centered(position.x.unwrap_or(0.0), position.y.unwrap_or(0.0), tw, th);
        }
        _ => {
            let (x, y) = mark_label_point(anchor, mark);
            Rect::new(x - tw / 2.0, y - th, tw, th)
        }
    };
    rect.translate(dx, dy)
}

/// Anchor point for a mark label: the center of area-like marks, the bottom
/// center of the others. The label's bottom edge sits on this point for
/// bottom anchors, and its center on it for center anchors.
pub fn mark_label_point(anchor: Rect, mark: MarkType) -> (f64, f64) {
    let (cx, cy) = anchor.center();
    match mark {
        MarkType::Area | MarkType::Text => (cx, cy + 0.6 * DEFAULT_FONT_SIZE),
        _ => (cx, anchor.bottom()),
    }
}

fn mark_rects(
    spec: &VisSpec,
    layer: &Layer,
    rows: &[usize],
    facet: Rect,
    xs: Option<&ChannelScale>,
    ys: Option<&ChannelScale>,
) -> Vec<Rect> {
    let stroke = layer.style.get("strokeWidth").and_then(as_number).unwrap_or(2.0).max(1.0);
    let center_x = facet.x + facet.w / 2.0;
    let center_y = facet.y + facet.h / 2.0;
    let pos = |scale: Option<&ChannelScale>, channel: &str, rows: &[usize], fallback: f64| -> f64 {
        match (scale, mark_value(spec, layer, channel, rows)) {
            (Some(s), Some(v)) => s.position(&v).unwrap_or(fallback),
            _ => fallback,
        }
    };
    match layer.mark {
        MarkType::Line | MarkType::Area => {
            let mut pts: Vec<(f64, f64)> = rows.iter().map(|&r| (pos(xs, "x", &[r], center_x), pos(ys, "y", &[r], center_y))).collect();
            pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
            let half = stroke / 2.0;
            let base = ys.map_or(facet.bottom(), ChannelScale::baseline);
            if pts.len() == 1 {
                let (x, y) = pts[0];
                return vec![Rect::new(x - half, y - half, stroke, stroke)];
            }
            pts.windows(2)
                .map(|w| {
                    let (x0, y0) = w[0];
                    let (x1, y1) = w[1];
                    if layer.mark == MarkType::Area {
                        Rect::spanning(x0, y0.min(y1), x1, base)
                    } else {
                        let r = Rect::spanning(x0, y0, x1, y1);
                        Rect::new(r.x - half, r.y - half, r.w + stroke, r.h + stroke)
                    }
                })
                .collect()
        }
        MarkType::Bar | MarkType::Rect => {
            let xband = xs.and_then(ChannelScale::band_width);
            let yband = ys.and_then(ChannelScale::band_width);
            let x = pos(xs, "x", rows, center_x);
            let y = pos(ys, "y", rows, center_y);
            let rect = match (xband, yband) {
                (Some(bw), Some(bh)) => Rect::centered(x, y, bw, bh),
                (Some(bw), None) => {
                    let base = ys.map_or(facet.bottom(), ChannelScale::baseline);
                    Rect::spanning(x - bw * 0.4, base, x + bw * 0.4, y)
                }
                (None, Some(bh)) => {
                    let base = xs.map_or(facet.x, ChannelScale::baseline);
                    Rect::spanning(base, y - bh * 0.4, x, y + bh * 0.4)
                }
                (None, None) => {
                    let base = ys.map_or(facet.bottom(), ChannelScale::baseline);
                    Rect::spanning(x - 2.0, base, x + 2.0, y)
                }
            };
            vec![rect]
        }
        MarkType::Text => {
            let x = pos(xs, "x", rows, center_x);
            let y = pos(ys, "y", rows, center_y);
            let text = mark_value(spec, layer, "text", rows).map(|v| display(&v)).unwrap_or_default();
            let (tw, th) = text_size(&[text], font_size(&layer.style, DEFAULT_FONT_SIZE));
            vec![Rect::centered(x, y, tw, th)]
        }
        MarkType::Point | MarkType::Circle => {
            let x = pos(xs, "x", rows, center_x);
            let y = pos(ys, "y", rows, center_y);
            let size = point_size(spec, layer, rows);
            let r = size.max(0.0).sqrt() / 2.0;
            vec![Rect::new(x - r, y - r, 2.0 * r, 2.0 * r)]
        }
    }
}

fn point_size(spec: &VisSpec, layer: &Layer, rows: &[usize]) -> f64 {
    if let (Some(enc), Some(v)) = (layer.encoding.get("size"), mark_value(spec, layer, "size", rows)) {
        let (r0, r1) = enc.scale.range.as_ref().and_then(|r| Some((as_number(r.first()?)?, as_number(r.last()?)?))).unwrap_or(SIZE_RANGE);
        if let Ok(s) = channel_scale(spec, "size", &enc.field, r0, r1) {
            if let Some(p) = s.position(&v) {
                return p;
            }
        }
    }
    layer.style.get("size").and_then(as_number).unwrap_or(DEFAULT_POINT_SIZE)
}

/// Occupancy grid over the plot area.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    /// Row-major; `true` is occupied.
    pub cells: Vec<bool>,
}

impl Grid {
    pub fn new(rows: usize, cols: usize) -> Self {
        Grid { rows, cols, cells: vec![false; rows * cols] }
    }

    pub fn occupied(&self, r: usize, c: usize) -> bool {
        self.cells[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.cells[r * self.cols + c] = v;
    }
}

/// Cell bounds `[r0, r1] x [c0, c1]`, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRect {
    pub r0: usize,
    pub c0: usize,
    pub r1: usize,
    pub c1: usize,
}

fn cell_edges(start: f64, extent: f64, res: f64) -> Vec<f64> {
    let n = (extent / res - 1e-9).ceil().max(1.0) as usize;
    (0..=n).map(|i| if i == n { start + extent } else { start + i as f64 * res }).collect()
}

/// Occupancy of the plot, ignoring boxes whose path starts with `exclude`.
pub fn occupancy_grid(frame: &LayoutFrame, exclude: Option<&str>) -> (Grid, Vec<f64>, Vec<f64>) {
    let xs = cell_edges(frame.plot.x, frame.plot.w, frame.resolution);
    let ys = cell_edges(frame.plot.y, frame.plot.h, frame.resolution);
    let mut grid = Grid::new(ys.len() - 1, xs.len() - 1);
    for b in &frame.boxes {
        if !b.obstacle || exclude.is_some_and(|p| b.path == p || b.path.starts_with(&format!("{p}."))) {
            continue;
        }
        if !b.rect.intersects(&frame.plot) {
            continue;
        }
        for r in 0..grid.rows {
            if !(ys[r] < b.rect.bottom() && b.rect.y < ys[r + 1]) {
                continue;
            }
            for c in 0..grid.cols {
                if xs[c] < b.rect.right() && b.rect.x < xs[c + 1] {
                    grid.set(r, c, true);
                }
            }
        }
    }
    (grid, xs, ys)
}

/// Largest empty cell rectangle by area, with cell sizes given by edge lists.
/// Ties go to the topmost, then leftmost origin.
pub fn largest_empty_cells(grid: &Grid, xs: &[f64], ys: &[f64]) -> Option<CellRect> {
    let mut heights = vec![0usize; grid.cols];
    let mut best: Option<(f64, CellRect)> = None;
    for rb in 0..grid.rows {
        for (c, h) in heights.iter_mut().enumerate() {
            *h = if grid.occupied(rb, c) { 0 } else { *h + 1 };
        }
        for c0 in 0..grid.cols {
            let mut min_h = usize::MAX;
            for c1 in c0..grid.cols {
                min_h = min_h.min(heights[c1]);
                if min_h == 0 {
                    break;
                }
                let r0 = rb + 1 - min_h;
                let area = (xs[c1 + 1] - xs[c0]) * (ys[rb + 1] - ys[r0]);
                let cand = CellRect { r0, c0, r1: rb, c1 };
                if better(area, cand, best) {
                    best = Some((area, cand));
                }
            }
        }
    }
    best.map(|(_, r)| r)
}

fn better(area: f64, cand: CellRect, best: Option<(f64, CellRect)>) -> bool {
    match best {
        None => true,
        Some((a, b)) => {
            if (area - a).abs() > 1e-9 {
                area > a
            } else {
                (cand.r0, cand.c0) < (b.r0, b.c0)
            }
        }
    }
}

/// Largest axis-aligned rectangle of the plot that no box overlaps.
pub fn largest_empty_rect(frame: &LayoutFrame) -> Result<Rect, LayoutError> {
    largest_empty_rect_excluding(frame, None)
}

pub fn largest_empty_rect_excluding(frame: &LayoutFrame, exclude: Option<&str>) -> Result<Rect, LayoutError> {
    let (grid, xs, ys) = occupancy_grid(frame, exclude);
    let c = largest_empty_cells(&grid, &xs, &ys).ok_or(LayoutError::NoEmptySpace)?;
    Ok(Rect::spanning(xs[c.c0], ys[c.r0], xs[c.c1 + 1], ys[c.r1 + 1]))
}

/// Where the compiler puts an element it places by itself.
///
/// `anchor` is the box of the associated mark for mark labels and `order` the
/// position among externalized annotations.
pub fn default_placement(
    kind: PlacementKind,
    frame: &LayoutFrame,
    size: (f64, f64),
    anchor: Option<(Rect, MarkType)>,
    order: usize,
    exclude: Option<&str>,
) -> Result<Placement, LayoutError> {
    let th = size.1;
    match kind {
        PlacementKind::ExternalizedAnnotation => {
            let y = frame.height + PADDING + order as f64 * (th + 4.0) + th / 2.0;
            Ok(Placement::at(PlacementMode::External, frame.width / 2.0, y))
        }
        PlacementKind::MarkLabel => {
            let (rect, mark) = anchor.unwrap_or((frame.plot, MarkType::Point));
            let (x, y) = mark_label_point(rect, mark);
            Ok(Placement::at(PlacementMode::Auto, x, y - th / 2.0))
        }
        PlacementKind::NonDataAnnotation => {
            let r = largest_empty_rect_excluding(frame, exclude)?;
            let (cx, cy) = r.center();
            Ok(Placement::at(PlacementMode::Internal, round2(cx), round2(cy)))
        }
    }
}

/// Rounds to hundredths so stored coordinates stay readable.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// The occupancy grid as plain PBM (`P1`): one row per line, `1` occupied.
pub fn grid_dump(frame: &LayoutFrame) -> String {
    let (grid, _, _) = occupancy_grid(frame, None);
    let mut s = format!("P1\n{} {}\n", grid.cols, grid.rows);
    for r in 0..grid.rows {
        let line: Vec<&str> = (0..grid.cols).map(|c| if grid.occupied(r, c) { "1" } else { "0" }).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vis::parse_vis_spec;

    fn frame_with(plot: Rect, boxes: Vec<Rect>) -> LayoutFrame {
        LayoutFrame {
            width: plot.right() + 10.0,
            height: plot.bottom() + 10.0,
            plot,
            boxes: boxes.into_iter().enumerate().map(|(i, rect)| LayoutBox { path: format!("b{i}"), rect, obstacle: true }).collect(),
            resolution: 5.0,
        }
    }

    #[test]
    fn empty_plot_is_its_own_largest_gap() {
        let plot = Rect::new(10.0, 10.0, 100.0, 60.0);
        assert_eq!(largest_empty_rect(&frame_with(plot, vec![])).unwrap(), plot);
    }

    #[test]
    fn centered_box_leaves_top_slab() {
        let plot = Rect::new(0.0, 0.0, 100.0, 100.0);
        let r = largest_empty_rect(&frame_with(plot, vec![Rect::new(40.0, 40.0, 20.0, 20.0)])).unwrap();
        assert_eq!(r, Rect::new(0.0, 0.0, 100.0, 40.0));
    }

    #[test]
    fn full_plot_has_no_space() {
        let plot = Rect::new(0.0, 0.0, 50.0, 50.0);
        assert_eq!(largest_empty_rect(&frame_with(plot, vec![plot])), Err(LayoutError::NoEmptySpace));
    }

    #[test]
    fn bar_height_follows_linear_scale() {
        let spec = parse_vis_spec(
            r#"{"width": 300, "height": 200, "data": {"schema": [{"field": "c", "type": "nominal"}, {"field": "v", "type": "quantitative"}],
                "rows": [{"c": "a", "v": 5}]}, "axes": [],
                "layers": [{"id": "b", "mark": "bar", "encoding": {"x": {"field": "c"}, "y": {"field": "v", "scale": {"domain": [0, 10]}}}}]}"#,
        )
        .unwrap();
        let f = resolve_layout(&spec).unwrap();
        let bar = f.boxes.iter().find(|b| b.path.starts_with("layer[b].mark")).unwrap();
        assert!((bar.rect.h - f.plot.h / 2.0).abs() < 1e-9);
    }

    #[test]
    fn band_scale_partitions_equally() {
        let s = ChannelScale {
            mapper: Mapper::Band { n: 4, r0: 0.0, r1: 400.0 },
            domain: vec!["a".into(), "b".into(), "c".into(), "d".into()],
        };
        assert_eq!(s.band_width(), Some(100.0));
        assert_eq!(s.position(&"c".into()), Some(250.0));
    }

    #[test]
    fn externalized_annotations_stack_downward() {
        let f = frame_with(Rect::new(0.0, 0.0, 100.0, 100.0), vec![]);
        let a = default_placement(PlacementKind::ExternalizedAnnotation, &f, (50.0, 13.2), None, 0, None).unwrap();
        let b = default_placement(PlacementKind::ExternalizedAnnotation, &f, (50.0, 13.2), None, 1, None).unwrap();
        assert!(a.y.unwrap() > f.height && b.y.unwrap() > a.y.unwrap());
        let n = default_placement(PlacementKind::NonDataAnnotation, &f, (50.0, 13.2), None, 0, None).unwrap();
        assert_eq!((n.x, n.y), (Some(50.0), Some(50.0)));
        let bar = Rect::new(10.0, 20.0, 20.0, 60.0);
        let l = default_placement(PlacementKind::MarkLabel, &f, (10.0, 12.0), Some((bar, MarkType::Bar)), 0, None).unwrap();
        assert_eq!((l.x, l.y), (Some(20.0), Some(74.0)));
    }

    #[test]
    fn pbm_dump_has_header() {
        let f = frame_with(Rect::new(0.0, 0.0, 10.0, 5.0), vec![Rect::new(0.0, 0.0, 5.0, 5.0)]);
        assert_eq!(grid_dump(&f), "P1\n2 1\n1 0\n");
    }
}
