//! The closed role vocabulary and its short forms.

/// Roles a specifier may name once short forms are expanded.
pub const CANONICAL_ROLES: &[&str] = &[
    "view",
    "view.layout",
    "view.row",
    "view.column",
    "layer",
    "layer.mark",
    "layer.mark.label",
    "axis",
    "axis.label",
    "axis.domain",
    "axis.grid",
    "axis.tick",
    "axis.title",
    "hAxis",
    "hAxis.label",
    "hAxis.domain",
    "hAxis.grid",
    "hAxis.tick",
    "hAxis.title",
    "vAxis",
    "vAxis.label",
    "vAxis.domain",
    "vAxis.grid",
    "vAxis.tick",
    "vAxis.title",
    "legend",
    "legend.mark",
    "legend.label",
    "legend.title",
    "title",
    "subtitle",
    "caption",
    "annotation",
    "text",
    "label",
    "data",
    "interaction",
];

const SHORT_FORMS: &[(&str, &str)] = &[
    ("layout", "view.layout"),
    ("row", "view.row"),
    ("column", "view.column"),
    ("mark", "layer.mark"),
    ("mark.label", "layer.mark.label"),
    ("emphasis", "annotation"),
    ("domain", "axis.domain"),
    ("grid", "axis.grid"),
    ("tick", "axis.tick"),
];

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("unknown role \"{0}\"")]
pub struct UnknownRole(pub String);

/// Expands statically unambiguous short forms (`mark` to `layer.mark`).
/// Ambiguous roles such as `label` are returned unchanged and resolved
/// against the target spec at query time.
pub fn normalize_role(role: &str) -> Result<String, UnknownRole> {
    let role = role.trim();
    if CANONICAL_ROLES.contains(&role) {
        return Ok(role.to_string());
    }
    if let Some((_, full)) = SHORT_FORMS.iter().find(|(s, _)| *s == role) {
        return Ok(full.to_string());
    }
    if let Some(rest) = role.strip_prefix("emphasis.") {
        return normalize_role(&format!("annotation.{rest}"));
    }
    Err(UnknownRole(role.to_string()))
}

/// Child role tokens that may key a role-scoped option under `role`.
pub fn child_tokens(role: &str) -> &'static [&'static str] {
    match role {
        "view" => &["layout", "row", "column", "layer", "mark", "label", "axis", "hAxis", "vAxis", "legend"],
        "view.layout" | "view.row" | "view.column" => &["label", "axis"],
        "layer" => &["mark", "label"],
        "layer.mark" => &["label"],
        "axis" | "hAxis" | "vAxis" => &["label", "domain", "grid", "tick", "title"],
        "legend" => &["mark", "label", "title"],
        _ => &[],
    }
}

/// Every token that names a role somewhere in the vocabulary.
pub fn is_role_token(token: &str) -> bool {
    normalize_role(token).is_ok()
        || matches!(token, "label" | "title" | "mark" | "domain" | "grid" | "tick" | "legend" | "axis" | "hAxis" | "vAxis")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_forms_expand() {
        assert_eq!(normalize_role("mark").unwrap(), "layer.mark");
        assert_eq!(normalize_role("row").unwrap(), "view.row");
        assert_eq!(normalize_role("layer.mark").unwrap(), "layer.mark");
        assert_eq!(normalize_role("mark.label").unwrap(), "layer.mark.label");
        assert_eq!(normalize_role("emphasis").unwrap(), "annotation");
        assert_eq!(normalize_role("label").unwrap(), "label");
        assert!(normalize_role("marks").is_err());
    }

    #[test]
    fn normalization_is_idempotent() {
        for r in CANONICAL_ROLES.iter().chain(SHORT_FORMS.iter().map(|(s, _)| s)) {
            let once = normalize_role(r).unwrap();
            assert_eq!(normalize_role(&once).unwrap(), once);
        }
    }
}
