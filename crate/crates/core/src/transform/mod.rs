//! Applying transformation rules to a chart.
//!
//! Rules run in order, except that `important` rules are held back and run
//! after all others. Every attribute write is recorded as a claim on
//! `(element, attribute)`; a later rule may only overwrite a claim it at
//! least matches in importance and specificity. After each rule the chart is
//! reconciled (see [`propagate`]) and must validate.

mod actions;
pub mod defaults;
pub mod propagate;
pub mod write;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::Value;

use crate::layout::{LayoutError, DEFAULT_RESOLUTION};
use crate::query::{resolve_indices, QueryError};
use crate::rules::{Action, CiceroSpec, OptionValue, Rule};
use crate::vis::{enumerate_elements, validation_errors, Element, ElementRef, VisError, VisSpec};

pub use actions::{replace_channel, swap_channels};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ActionError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("type mismatch: \"{attribute}\" of {element} has no numeric value to update")]
    TypeMismatch { attribute: String, element: String },
    #[error("\"{attribute}\" is not an attribute of {element}")]
    UnsupportedAttribute { attribute: String, element: String },
    #[error("{role} has no pair relation to transpose")]
    NoPairRelation { role: String },
    #[error("invalid replacement: {0}")]
    InvalidReplacement(String),
    #[error("{action} does not apply to {element}")]
    Unsupported { action: String, element: String },
    #[error("element {0} no longer exists")]
    Dangling(String),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("the rule leaves the chart invalid: {0}")]
    Invalid(VisError),
}

/// A failed rule, by its position in the rule list.
#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("rule {rule}: {source}")]
pub struct CompileError {
    pub rule: usize,
    pub source: ActionError,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompileOptions {
    /// Cell size of the occupancy grid used for automatic placement.
    pub resolution: f64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { resolution: DEFAULT_RESOLUTION }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WriteRecord {
    pub path: String,
    pub attribute: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Suppressed {
    pub path: String,
    pub attribute: String,
    /// The rule whose earlier write won.
    pub held_by: usize,
}

/// What one rule did.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub rule: usize,
    pub action: String,
    pub important: bool,
    pub specificity: usize,
    pub selected: Vec<String>,
    pub writes: Vec<WriteRecord>,
    pub suppressed: Vec<Suppressed>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompileOutput {
    pub spec: VisSpec,
    pub trace: Vec<TraceEntry>,
}

impl CompileOutput {
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out: Vec<String> =
            self.trace.iter().flat_map(|t| t.diagnostics.iter().map(move |d| format!("rule {}: {d}", t.rule))).collect();
        out.sort();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Claim {
    rule: usize,
    specificity: usize,
    important: bool,
}

impl Claim {
    /// Whether `self` may overwrite a value written under `held`.
    fn beats(&self, held: &Claim) -> bool {
        self.important & !held.important || (self.important == held.important && self.specificity >= held.specificity)
    }
}

/// State threaded through the rules of one compilation.
pub struct CompileContext {
    pub spec: VisSpec,
    pub resolution: f64,
    claims: BTreeMap<(String, String), Claim>,
    current: Option<Claim>,
    entry: Option<TraceEntry>,
    touched_layers: BTreeSet<String>,
    pub trace: Vec<TraceEntry>,
}

impl CompileContext {
    pub fn new(spec: VisSpec, resolution: f64) -> Self {
        CompileContext {
            spec,
            resolution,
            claims: BTreeMap::new(),
            current: None,
            entry: None,
            touched_layers: BTreeSet::new(),
            trace: Vec::new(),
        }
    }

    /// Applies rule number `index`.
    pub fn apply(&mut self, index: usize, rule: &Rule) -> Result<(), ActionError> {
        let elements = enumerate_elements(&self.spec);
        let selected = resolve_indices(&rule.specifier, &self.spec, &elements)?;
        let claim = Claim { rule: index, specificity: rule.specificity(), important: rule.important };
        self.current = Some(claim);
        self.entry = Some(TraceEntry {
            rule: index,
            action: rule.action.name().to_string(),
            important: rule.important,
            specificity: claim.specificity,
            selected: selected.iter().map(|&i| elements[i].path.clone()).collect(),
            writes: Vec::new(),
            suppressed: Vec::new(),
            diagnostics: Vec::new(),
        });
        self.touched_layers.clear();

        if !selected.is_empty() {
            match rule.action {
                Action::Modify => actions::modify(self, rule, &elements, &selected)?,
                Action::Reposition => actions::reposition(self, rule, &elements, &selected)?,
                Action::Transpose => actions::transpose(self, rule, &elements, &selected)?,
                Action::Add => actions::add(self, rule, &elements, &selected)?,
                Action::Duplicate => actions::duplicate(self, rule, &elements, &selected)?,
                Action::Remove => actions::remove(self, rule, &elements, &selected)?,
                Action::Replace => actions::replace(self, rule, &elements, &selected)?,
                Action::Swap => actions::swap(self, rule, &elements, &selected)?,
            }
            self.settle();
            if let Some(err) = validation_errors(&self.spec).into_iter().next() {
                return Err(ActionError::Invalid(err));
            }
        }
        let entry = self.entry.take().expect("entry set above");
        self.trace.push(entry);
        Ok(())
    }

    fn settle(&mut self) {
        for id in std::mem::take(&mut self.touched_layers) {
            write::compact_marks(&mut self.spec, &id);
        }
        for i in 0..self.spec.axes.len() {
            write::compact_axis(&mut self.spec, i);
        }
        for i in 0..self.spec.legends.len() {
            write::compact_legend(&mut self.spec, i);
        }
        let notes = propagate::reconcile(&mut self.spec);
        for n in notes {
            self.diagnostic(n);
        }
    }

    pub(crate) fn diagnostic(&mut self, msg: impl Into<String>) {
        if let Some(e) = self.entry.as_mut() {
            e.diagnostics.push(msg.into());
        }
    }

    pub(crate) fn record(&mut self, path: &str, attribute: &str, value: Value) {
        if let Some(e) = self.entry.as_mut() {
            e.writes.push(WriteRecord { path: path.to_string(), attribute: attribute.to_string(), value });
        }
    }

    /// Takes the claim on `(path, attribute)` for the running rule. Returns
    /// false, and traces the suppression, when an earlier write holds it.
    pub(crate) fn claim(&mut self, path: &str, attribute: &str) -> bool {
        let me = self.current.expect("claim outside a rule");
        let key = (path.to_string(), attribute.to_string());
        if let Some(held) = self.claims.get(&key) {
            if !me.beats(held) {
                let held_by = held.rule;
                if let Some(e) = self.entry.as_mut() {
                    e.suppressed.push(Suppressed { path: key.0, attribute: key.1, held_by });
                }
                return false;
            }
        }
        self.claims.insert(key, me);
        true
    }

    /// Writes one attribute of one element, subject to claims.
    pub(crate) fn write(&mut self, e: &Element, attr: &str, v: &OptionValue) -> Result<(), ActionError> {
        let claim_path = match &e.reference {
            ElementRef::Mark { layer, .. } if write::is_encoding_write(&self.spec, attr, v) || attr == "mark" => format!("layer[{layer}]"),
            _ => e.path.clone(),
        };
        if !self.claim(&claim_path, attr) {
            return Ok(());
        }
        let written = write::write_attr(&mut self.spec, e, attr, v)?;
        if let ElementRef::Mark { layer, .. } | ElementRef::MarkLabel { layer, .. } = &e.reference {
            self.touched_layers.insert(layer.clone());
        }
        self.record(&claim_path, attr, written);
        Ok(())
    }
}

/// Applies `rules` to `spec`.
pub fn compile(spec: &VisSpec, rules: &CiceroSpec) -> Result<VisSpec, CompileError> {
    compile_with(spec, rules, CompileOptions::default()).map(|o| o.spec)
}

/// Like [`compile`], also returning what each rule did.
pub fn compile_with(spec: &VisSpec, rules: &CiceroSpec, options: CompileOptions) -> Result<CompileOutput, CompileError> {
    let mut ctx = CompileContext::new(spec.clone(), options.resolution);
    let rules = &rules.transformations;
    let order = (0..rules.len()).filter(|&i| !rules[i].important).chain((0..rules.len()).filter(|&i| rules[i].important));
    for i in order {
        ctx.apply(i, &rules[i]).map_err(|source| CompileError { rule: i, source })?;
    }
    Ok(CompileOutput { spec: ctx.spec, trace: ctx.trace })
}
